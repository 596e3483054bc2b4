#include "dgzsl/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "dgzsl/error.hpp"

namespace dgzsl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

using Setter = std::function<void(const std::string&)>;

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long n = std::stoull(v, &used);
      if (used == v.size()) return n;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(to_u64(key, item)));
  }
  return out;
}

void apply_lines(const std::string& text, const std::map<std::string, Setter>& setters) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen_keys;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(where + ": unknown config key '" + key + "'");
    if (!seen_keys.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    it->second(value);
  }
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kInductive: return "inductive";
    case Regime::kTransductive: return "transductive";
    case Regime::kFewShot: return "fewshot";
  }
  return "?";
}

Regime parse_regime(const std::string& text) {
  if (text == "inductive") return Regime::kInductive;
  if (text == "transductive") return Regime::kTransductive;
  if (text == "fewshot") return Regime::kFewShot;
  throw ConfigError("regime must be inductive, transductive or fewshot, got '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("hidden sizes must be positive");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ConfigError("keep_prob must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (regime == Regime::kTransductive && transductive_epochs == 0) {
    throw ConfigError("transductive regime needs transductive_epochs > 0");
  }
}

Architecture TrainConfig::architecture(std::size_t input_dim, std::size_t attribute_dim) const {
  Architecture a;
  a.input_dim = input_dim;
  a.attribute_dim = attribute_dim;
  a.latent_dim = latent_dim;
  a.hidden = hidden;
  a.keep_prob = keep_prob;
  return a;
}

InductiveOptions TrainConfig::inductive_options() const {
  InductiveOptions o;
  o.lambda = lambda;
  o.use_reconstruction = !no_recon;
  o.exclude_true_class = exclude_true_class;
  return o;
}

TransductiveOptions TrainConfig::transductive_options() const {
  TransductiveOptions o;
  o.inductive = inductive_options();
  o.recon_only_unlabeled = recon_only_unlabeled;
  return o;
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "regime = " << to_string(regime) << '\n'
     << "lambda = " << format_double(lambda) << '\n'
     << "latent_dim = " << latent_dim << '\n'
     << "hidden = " << join_sizes(hidden) << '\n'
     << "keep_prob = " << format_double(keep_prob) << '\n'
     << "learning_rate = " << format_double(learning_rate) << '\n'
     << "adam_beta1 = " << format_double(adam_beta1) << '\n'
     << "adam_beta2 = " << format_double(adam_beta2) << '\n'
     << "batch_size = " << batch_size << '\n'
     << "epochs = " << epochs << '\n'
     << "transductive_epochs = " << transductive_epochs << '\n'
     << "fewshot_epochs = " << fewshot_epochs << '\n'
     << "fewshot_k = " << fewshot_k << '\n'
     << "fewshot_include_seen = " << (fewshot_include_seen ? "true" : "false") << '\n'
     << "fewshot_transductive = " << (fewshot_transductive ? "true" : "false") << '\n'
     << "target_refresh = " << (target_refresh == TargetRefresh::kEpoch ? "epoch" : "batch") << '\n'
     << "seed = " << seed << '\n'
     << "no_recon = " << (no_recon ? "true" : "false") << '\n'
     << "recon_only_unlabeled = " << (recon_only_unlabeled ? "true" : "false") << '\n'
     << "exclude_true_class = " << (exclude_true_class ? "true" : "false") << '\n';
  return os.str();
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig c;
  auto size_setter = [](const char* key, std::size_t& dst) {
    return [key, &dst](const std::string& v) { dst = static_cast<std::size_t>(to_u64(key, v)); };
  };
  std::map<std::string, Setter> setters = {
      {"regime", [&](const std::string& v) { c.regime = parse_regime(v); }},
      {"lambda", [&](const std::string& v) { c.lambda = to_double("lambda", v); }},
      {"latent_dim", size_setter("latent_dim", c.latent_dim)},
      {"hidden", [&](const std::string& v) { c.hidden = to_sizes("hidden", v); }},
      {"keep_prob", [&](const std::string& v) { c.keep_prob = to_double("keep_prob", v); }},
      {"learning_rate",
       [&](const std::string& v) { c.learning_rate = to_double("learning_rate", v); }},
      {"adam_beta1", [&](const std::string& v) { c.adam_beta1 = to_double("adam_beta1", v); }},
      {"adam_beta2", [&](const std::string& v) { c.adam_beta2 = to_double("adam_beta2", v); }},
      {"batch_size", size_setter("batch_size", c.batch_size)},
      {"epochs", size_setter("epochs", c.epochs)},
      {"transductive_epochs", size_setter("transductive_epochs", c.transductive_epochs)},
      {"fewshot_epochs", size_setter("fewshot_epochs", c.fewshot_epochs)},
      {"fewshot_k", size_setter("fewshot_k", c.fewshot_k)},
      {"fewshot_include_seen",
       [&](const std::string& v) { c.fewshot_include_seen = to_bool("fewshot_include_seen", v); }},
      {"fewshot_transductive",
       [&](const std::string& v) { c.fewshot_transductive = to_bool("fewshot_transductive", v); }},
      {"target_refresh",
       [&](const std::string& v) {
         if (v == "epoch") c.target_refresh = TargetRefresh::kEpoch;
         else if (v == "batch") c.target_refresh = TargetRefresh::kBatch;
         else throw ConfigError("target_refresh must be epoch or batch, got '" + v + "'");
       }},
      {"seed", [&](const std::string& v) { c.seed = to_u64("seed", v); }},
      {"no_recon", [&](const std::string& v) { c.no_recon = to_bool("no_recon", v); }},
      {"recon_only_unlabeled",
       [&](const std::string& v) { c.recon_only_unlabeled = to_bool("recon_only_unlabeled", v); }},
      {"exclude_true_class",
       [&](const std::string& v) { c.exclude_true_class = to_bool("exclude_true_class", v); }},
  };
  apply_lines(text, setters);
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

SynthSpec parse_synth_spec(const std::string& text) {
  SynthSpec s;
  auto size_setter = [](const char* key, std::size_t& dst) {
    return [key, &dst](const std::string& v) { dst = static_cast<std::size_t>(to_u64(key, v)); };
  };
  std::map<std::string, Setter> setters = {
      {"seen", size_setter("seen", s.seen)},
      {"unseen", size_setter("unseen", s.unseen)},
      {"attribute_dim", size_setter("attribute_dim", s.attribute_dim)},
      {"feature_dim", size_setter("feature_dim", s.feature_dim)},
      {"samples_per_class", size_setter("samples_per_class", s.samples_per_class)},
      {"noise_sd", [&](const std::string& v) { s.noise_sd = to_double("noise_sd", v); }},
      {"seed", [&](const std::string& v) { s.seed = to_u64("seed", v); }},
  };
  apply_lines(text, setters);
  s.validate();
  return s;
}

}  // namespace dgzsl
