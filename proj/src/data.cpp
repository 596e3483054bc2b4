#include "dgzsl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dgzsl/error.hpp"
#include "dgzsl/io.hpp"
#include "dgzsl/networks.hpp"

namespace dgzsl {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

int parse_int(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw DataError(where + ": expected an integer, got '" + text + "'");
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw DataError(where + ": expected a finite number, got '" + text + "'");
}

std::vector<int> parse_id_list(const std::string& text, const std::string& where) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) ids.push_back(parse_int(item, where));
  }
  return ids;
}

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    labels.push_back(parse_int(line, path.string() + ":" + std::to_string(line_no)));
  }
  return labels;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (int y : labels) out << y << '\n';
}

Matrix read_attributes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attribute file " + path.string());
  std::map<int, std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const int id = parse_int(trim(cell), where);
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(parse_double(trim(cell), where));
    if (values.empty()) throw DataError(where + ": no attribute values");
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw DataError(where + ": " + std::to_string(values.size()) + " attributes, expected " +
                      std::to_string(width));
    }
    if (!rows.emplace(id, std::move(values)).second) {
      throw DataError(where + ": duplicate class id " + std::to_string(id));
    }
  }
  if (rows.empty()) throw DataError(path.string() + ": no attribute rows");
  Matrix a(rows.size(), width);
  std::size_t expected = 0;
  for (auto& [id, values] : rows) {
    if (id != static_cast<int>(expected)) {
      throw DataError(path.string() + ": class ids must be 0.." +
                      std::to_string(rows.size() - 1) + ", missing " + std::to_string(expected));
    }
    std::copy(values.begin(), values.end(), a.row(expected).begin());
    ++expected;
  }
  return a;
}

void write_attributes(const fs::path& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (std::size_t c = 0; c < a.rows(); ++c) {
    out << c;
    for (double v : a.row(c)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw DataError("dataset has no examples");
  if (features.rows() != n || split.size() != n) {
    throw DataError("dataset: " + features.shape_string() + " features, " +
                    std::to_string(n) + " labels and " + std::to_string(split.size()) +
                    " split tags disagree");
  }
  if (features.cols() == 0) throw DataError("dataset: zero-width features");
  if (!features.all_finite()) throw DataError("dataset: non-finite feature values");
  if (attributes.rows() == 0 || attributes.cols() == 0) throw DataError("dataset: empty attribute table");
  if (!attributes.all_finite()) throw DataError("dataset: non-finite attribute values");
  if (seen.empty() || unseen.empty()) throw DataError("dataset: seen and unseen sets must be non-empty");

  const std::size_t classes = attributes.rows();
  std::vector<int> role(classes, 0);  // 1 seen, 2 unseen
  auto mark = [&](const std::vector<int>& ids, int tag, const char* name) {
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= classes) {
        throw DataError(std::string("dataset: ") + name + " class " + std::to_string(id) +
                        " outside 0.." + std::to_string(classes - 1));
      }
      if (role[id] != 0) {
        throw DataError("dataset: class " + std::to_string(id) + " listed twice in seen/unseen");
      }
      role[id] = tag;
    }
  };
  mark(seen, 1, "seen");
  mark(unseen, 2, "unseen");
  if (seen.size() + unseen.size() != classes) {
    throw DataError("dataset: " + std::to_string(classes) + " attribute rows but " +
                    std::to_string(seen.size() + unseen.size()) + " seen+unseen classes");
  }

  std::vector<std::size_t> order(classes);
  for (std::size_t c = 0; c < classes; ++c) order[c] = c;
  auto row_less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(attributes.row(a).begin(), attributes.row(a).end(),
                                        attributes.row(b).begin(), attributes.row(b).end());
  };
  std::sort(order.begin(), order.end(), row_less);
  for (std::size_t i = 1; i < classes; ++i) {
    if (std::equal(attributes.row(order[i - 1]).begin(), attributes.row(order[i - 1]).end(),
                   attributes.row(order[i]).begin())) {
      throw DataError("dataset: classes " + std::to_string(order[i - 1]) + " and " +
                      std::to_string(order[i]) + " share an attribute vector");
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("dataset: label " + std::to_string(y) + " at row " + std::to_string(i) +
                      " out of range 0.." + std::to_string(classes - 1));
    }
    if (split[i] == Split::kTrain && role[y] != 1) {
      throw DataError("dataset: train row " + std::to_string(i) + " has unseen class " +
                      std::to_string(y));
    }
  }
}

std::vector<std::size_t> Dataset::rows_in(Split s) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> Dataset::unseen_test_rows() const {
  const std::set<int> u(unseen.begin(), unseen.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == Split::kTest && u.count(labels[i])) rows.push_back(i);
  return rows;
}

Examples Dataset::examples(std::span<const std::size_t> rows) const {
  Examples ex{gather_rows(features, rows), {}};
  ex.labels.reserve(rows.size());
  for (std::size_t r : rows) ex.labels.push_back(labels.at(r));
  return ex;
}

ClassSet Dataset::all_classes() const {
  std::vector<int> ids(seen);
  ids.insert(ids.end(), unseen.begin(), unseen.end());
  return ClassSet::select(attributes, ids);
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.features = gather_rows(ds.features, rows);
  for (std::size_t r : rows) {
    out.labels.push_back(ds.labels.at(r));
    out.split.push_back(ds.split.at(r));
  }
  out.attributes = ds.attributes;
  out.seen = ds.seen;
  out.unseen = ds.unseen;
  out.validate();
  return out;
}

// Synthetic --------------------------------------------------------------

void SynthSpec::validate() const {
  if (seen < 1 || attribute_dim < 1 || feature_dim < 1 || samples_per_class < 1) {
    throw ConfigError("synth: S, M, D and samples per class must be >= 1");
  }
  if (unseen < 2) throw ConfigError("synth: U must be >= 2");
  if (noise_sd && !(*noise_sd >= 0.0 && std::isfinite(*noise_sd))) {
    throw ConfigError("synth: noise standard deviation must be finite and >= 0");
  }
}

namespace {

struct SynthMap {
  Matrix w1;  // H x M
  std::vector<double> b1;
  Matrix w2;  // D x H
  std::vector<double> b2;

  std::vector<double> operator()(std::span<const double> a) const {
    std::vector<double> h(w1.rows());
    for (std::size_t j = 0; j < h.size(); ++j) {
      double acc = b1[j];
      for (std::size_t m = 0; m < a.size(); ++m) acc += w1(j, m) * a[m];
      h[j] = std::tanh(acc);
    }
    std::vector<double> x(w2.rows());
    for (std::size_t d = 0; d < x.size(); ++d) {
      double acc = b2[d];
      for (std::size_t j = 0; j < h.size(); ++j) acc += w2(d, j) * h[j];
      x[d] = acc;
    }
    return x;
  }
};

struct SynthCore {
  Matrix attributes;
  Matrix class_means;  // (S+U) x D, noiseless h(A_c)
};

SynthCore synth_core(const SynthSpec& spec, Rng& rng) {
  const std::size_t classes = spec.seen + spec.unseen;
  SynthCore core{Matrix(classes, spec.attribute_dim), Matrix(classes, spec.feature_dim)};
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (double& v : core.attributes.data()) v = unit(rng);

  const std::size_t hidden = spec.feature_dim;
  std::normal_distribution<double> gauss(0.0, 1.0);
  SynthMap h{Matrix(hidden, spec.attribute_dim), std::vector<double>(hidden),
             Matrix(spec.feature_dim, hidden), std::vector<double>(spec.feature_dim)};
  const double s1 = 1.0 / std::sqrt(static_cast<double>(spec.attribute_dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : h.w1.data()) w = 1.5 * s1 * gauss(rng);
  for (double& b : h.b1) b = 0.1 * gauss(rng);
  for (double& w : h.w2.data()) w = 2.0 * s2 * gauss(rng);
  for (double& b : h.b2) b = 0.1 * gauss(rng);

  for (std::size_t c = 0; c < classes; ++c) {
    const auto x = h(core.attributes.row(c));
    std::copy(x.begin(), x.end(), core.class_means.row(c).begin());
  }
  return core;
}

double mean_pairwise_distance(const Matrix& points) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < points.rows(); ++a) {
    for (std::size_t b = a + 1; b < points.rows(); ++b) {
      double sq = 0.0;
      for (std::size_t d = 0; d < points.cols(); ++d) {
        const double diff = points(a, d) - points(b, d);
        sq += diff * diff;
      }
      total += std::sqrt(sq);
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

}  // namespace

double synth_noise_sd(const SynthSpec& spec) {
  spec.validate();
  if (spec.noise_sd) return *spec.noise_sd;
  Rng rng(spec.seed);
  return 0.1 * mean_pairwise_distance(synth_core(spec, rng).class_means);
}

Dataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SynthCore core = synth_core(spec, rng);
  const double sd =
      spec.noise_sd ? *spec.noise_sd : 0.1 * mean_pairwise_distance(core.class_means);

  const std::size_t classes = spec.seen + spec.unseen;
  const std::size_t n = classes * spec.samples_per_class;
  Dataset ds;
  ds.attributes = std::move(core.attributes);
  ds.features = Matrix(n, spec.feature_dim);
  ds.labels.reserve(n);
  ds.split.reserve(n);
  for (std::size_t c = 0; c < spec.seen; ++c) ds.seen.push_back(static_cast<int>(c));
  for (std::size_t c = spec.seen; c < classes; ++c) ds.unseen.push_back(static_cast<int>(c));

  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const Split s = c < spec.seen ? Split::kTrain : Split::kTest;
    for (std::size_t k = 0; k < spec.samples_per_class; ++k, ++row) {
      for (std::size_t d = 0; d < spec.feature_dim; ++d) {
        ds.features(row, d) = core.class_means(c, d) + (sd > 0.0 ? sd * noise(rng) : 0.0);
      }
      ds.labels.push_back(static_cast<int>(c));
      ds.split.push_back(s);
    }
  }
  ds.validate();
  return ds;
}

// Few-shot ---------------------------------------------------------------

FewShotSplit fewshot_sample(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  FewShotSplit out;
  std::set<std::size_t> labeled;
  for (int c : ds.unseen) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.split[i] == Split::kTest && ds.labels[i] == c) rows.push_back(i);
    if (rows.size() < k) {
      throw DataError("fewshot: class " + std::to_string(c) + " has " +
                      std::to_string(rows.size()) + " test examples, fewer than k = " +
                      std::to_string(k));
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < k; ++j) {
      out.labeled_rows.push_back(rows[j]);
      labeled.insert(rows[j]);
    }
  }
  for (std::size_t r : ds.unseen_test_rows())
    if (!labeled.count(r)) out.unlabeled_rows.push_back(r);
  return out;
}

// Files ------------------------------------------------------------------

Dataset load_dataset(const fs::path& features, const fs::path& attributes,
                     const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open split manifest " + manifest.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  const std::set<std::string> known = {"seen", "unseen", "train_labels", "test_labels",
                                       "attributes"};
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = manifest.string() + ":" + std::to_string(line_no);
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!known.count(key)) throw DataError(where + ": unknown manifest key '" + key + "'");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second) {
      throw DataError(where + ": duplicate key '" + key + "'");
    }
  }
  for (const char* required : {"seen", "unseen", "train_labels", "test_labels"}) {
    if (!kv.count(required)) {
      throw DataError(manifest.string() + ": missing key '" + required + "'");
    }
  }

  const fs::path base = manifest.parent_path();
  Dataset ds;
  ds.seen = parse_id_list(kv["seen"], manifest.string() + " seen");
  ds.unseen = parse_id_list(kv["unseen"], manifest.string() + " unseen");
  const auto train = read_labels(base / kv["train_labels"]);
  const auto test = read_labels(base / kv["test_labels"]);
  ds.attributes = read_attributes(attributes);
  if (kv.count("attributes")) {
    const int declared = parse_int(kv["attributes"], manifest.string() + " attributes");
    if (declared < 0 || static_cast<std::size_t>(declared) != ds.attributes.cols()) {
      throw DataError("manifest declares " + kv["attributes"] + " attributes but " +
                      attributes.string() + " has " + std::to_string(ds.attributes.cols()));
    }
  }
  ds.features = load_matrix(features);
  if (ds.features.rows() != train.size() + test.size()) {
    throw DataError(features.string() + ": " + std::to_string(ds.features.rows()) +
                    " rows but the label files list " + std::to_string(train.size()) +
                    " train + " + std::to_string(test.size()) + " test examples");
  }
  ds.labels = train;
  ds.labels.insert(ds.labels.end(), test.begin(), test.end());
  ds.split.assign(train.size(), Split::kTrain);
  ds.split.resize(ds.labels.size(), Split::kTest);
  ds.validate();
  return ds;
}

Dataset load_dataset_dir(const fs::path& dir) {
  return load_dataset(dir / "features.bin", dir / "attributes.csv", dir / "split.txt");
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  fs::create_directories(dir);
  std::vector<std::size_t> order = ds.rows_in(Split::kTrain);
  const auto test_rows = ds.rows_in(Split::kTest);
  order.insert(order.end(), test_rows.begin(), test_rows.end());
  save_matrix(dir / "features.bin", gather_rows(ds.features, order));

  std::vector<int> train_labels, test_labels;
  for (std::size_t r : ds.rows_in(Split::kTrain)) train_labels.push_back(ds.labels[r]);
  for (std::size_t r : test_rows) test_labels.push_back(ds.labels[r]);
  write_labels(dir / "train_labels.txt", train_labels);
  write_labels(dir / "test_labels.txt", test_labels);
  write_attributes(dir / "attributes.csv", ds.attributes);

  std::ofstream manifest(dir / "split.txt");
  if (!manifest) throw Error("cannot write split manifest in " + dir.string());
  manifest << "attributes = " << ds.attributes.cols() << '\n'
           << "seen = " << join_ids(ds.seen) << '\n'
           << "unseen = " << join_ids(ds.unseen) << '\n'
           << "train_labels = train_labels.txt\n"
           << "test_labels = test_labels.txt\n";
}

}  // namespace dgzsl
