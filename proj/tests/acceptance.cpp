// Acceptance gates. Prints one PASS/FAIL line per criterion and exits
// nonzero if any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dgzsl/gaussian.hpp"
#include "dgzsl/inductive.hpp"
#include "dgzsl/inference.hpp"
#include "dgzsl/pipeline.hpp"
#include "dgzsl/transductive.hpp"

using namespace dgzsl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool pass, double seconds, const std::string& detail) {
  std::printf("criterion %2d: %s  (%.1f s)  %s\n", id, pass ? "PASS" : "FAIL", seconds,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt("%.4f", v[i]);
  return s + "]";
}

// log N(z; mean, diag(exp(logvar))) written out directly.
double log_density(const std::vector<double>& z, const DiagGaussian& g) {
  double s = 0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double d = z[j] - g.mean[j];
    s += -0.5 * (std::log(2 * std::numbers::pi) + g.logvar[j] + d * d / std::exp(g.logvar[j]));
  }
  return s;
}

DiagGaussian random_gaussian(std::size_t dims, Rng& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> lv(-1.5, 1.5);
  DiagGaussian g{std::vector<double>(dims), std::vector<double>(dims)};
  for (std::size_t j = 0; j < dims; ++j) {
    g.mean[j] = n(rng);
    g.logvar[j] = lv(rng);
  }
  return g;
}

void kl_vs_monte_carlo() {
  const auto t = Clock::now();
  Rng rng(101);
  std::uniform_int_distribution<std::size_t> dims(1, 16);
  std::normal_distribution<double> n;
  const int samples = 100000;
  bool ok = true;
  double worst_ratio = 0;  // |err| / allowed
  for (int pair = 0; pair < 50; ++pair) {
    const std::size_t d = dims(rng);
    const DiagGaussian q = random_gaussian(d, rng);
    const DiagGaussian p = random_gaussian(d, rng);
    std::vector<double> z(d);
    double acc = 0;
    for (int s = 0; s < samples; ++s) {
      for (std::size_t j = 0; j < d; ++j)
        z[j] = q.mean[j] + std::exp(0.5 * q.logvar[j]) * n(rng);
      acc += log_density(z, q) - log_density(z, p);
    }
    const double mc = acc / samples;
    const double closed = kl_diag(q, p);
    const double allowed = std::max(0.02 * std::abs(mc), 0.01);
    worst_ratio = std::max(worst_ratio, std::abs(closed - mc) / allowed);
    if (!(std::abs(closed - mc) <= allowed)) ok = false;
  }
  const double secs = since(t);
  report(1, ok && secs < 30, secs,
         fmt("50 pairs, worst |closed - mc| / tolerance = %.3f", worst_ratio));
}

void margin_bounds() {
  const auto t = Clock::now();
  Rng rng(102);
  std::normal_distribution<double> n;
  const std::size_t S = 10, L = 6, M = 5;
  const double ln_s = std::log(static_cast<double>(S));
  bool ok = true;
  double min_slack = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 100; ++inst) {
    PriorParams prior{Matrix(L, M), Matrix(L, M)};
    for (double& v : prior.w_mean.data()) v = n(rng);
    for (double& v : prior.w_logvar.data()) v = 0.3 * n(rng);
    Matrix attrs(S, M);
    for (double& v : attrs.data()) v = n(rng);
    const DiagGaussian q = random_gaussian(L, rng);
    double min_kl = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < S; ++c)
      min_kl = std::min(min_kl, kl_diag(q, class_prior(attrs.row(c), prior)));
    const double r = margin_R(q, attrs, prior);
    if (!(min_kl - ln_s <= r + 1e-9 && r <= min_kl + 1e-9)) ok = false;
    min_slack = std::min({min_slack, r - (min_kl - ln_s), min_kl - r});
  }
  const double secs = since(t);
  report(2, ok && secs < 5, secs, fmt("100 instances, S=10, smallest slack %.3e", min_slack));
}

void gradients() {
  const auto t = Clock::now();
  const GradCheckSummary g = run_gradcheck(103, 1e-5);
  const double secs = since(t);
  const bool ok = g.inductive.max_rel_error < 1e-4 && g.transductive.max_rel_error < 1e-4 &&
                  !g.inductive.saw_nan && !g.transductive.saw_nan;
  report(3, ok && secs < 60, secs,
         fmt("max rel err: supervised %.2e (%g entries), transductive %.2e (%g entries)",
             g.inductive.max_rel_error, static_cast<double>(g.inductive.entries_checked),
             g.transductive.max_rel_error, static_cast<double>(g.transductive.entries_checked)));
}

TrainConfig benchmark_config(std::uint64_t seed) {
  TrainConfig c;
  c.latent_dim = 16;
  c.hidden = {128};
  c.batch_size = 64;
  c.epochs = 100;
  c.transductive_epochs = 30;
  c.fewshot_epochs = 30;
  c.seed = seed;
  return c;
}

Dataset benchmark_data(std::uint64_t seed) {
  SynthSpec s;  // S=15, U=5, M=8, D=32, 100 per class
  s.seed = seed;
  return synth_generate(s);
}

void synthetic_benchmark() {
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> inductive, transductive, recon_only, k0, k5, k20;
  double inductive_secs = 0, rest_secs = 0;
  bool nested = true;
  for (std::uint64_t seed : seeds) {
    const Dataset ds = benchmark_data(seed);
    TrainConfig cfg = benchmark_config(seed);

    auto t = Clock::now();
    const RunResult base = run_pipeline(cfg, ds);
    inductive_secs += since(t);
    inductive.push_back(base.report.accuracy);

    t = Clock::now();
    RunHooks hooks;
    hooks.pretrained = &base.params;
    cfg.regime = Regime::kTransductive;
    transductive.push_back(run_pipeline(cfg, ds, hooks).report.accuracy);
    cfg.recon_only_unlabeled = true;
    recon_only.push_back(run_pipeline(cfg, ds, hooks).report.accuracy);
    cfg.recon_only_unlabeled = false;

    // Every k is scored on the rows left unlabeled at k=20, which the
    // nested sampler keeps unlabeled for smaller k as well.
    const FewShotSplit widest = fewshot_sample(ds, 20, seed);
    const Examples pool = ds.examples(widest.unlabeled_rows);
    const ClassSet unseen = ds.unseen_classes();
    k0.push_back(evaluate(base.params, pool, unseen).accuracy);
    cfg.regime = Regime::kFewShot;
    for (std::size_t k : {5u, 20u}) {
      cfg.fewshot_k = k;
      const FewShotSplit shots = fewshot_sample(ds, k, seed);
      for (std::size_t r : shots.labeled_rows)
        if (std::find(widest.labeled_rows.begin(), widest.labeled_rows.end(), r) ==
            widest.labeled_rows.end())
          nested = false;
      const RunResult few = run_pipeline(cfg, ds, hooks);
      (k == 5 ? k5 : k20).push_back(evaluate(few.params, pool, unseen).accuracy);
    }
    rest_secs += since(t);
  }

  const double ind = mean(inductive);
  report(4, ind >= 0.70 && inductive_secs < 300, inductive_secs,
         fmt("mean unseen top-1 %.4f over 5 seeds (chance 0.20), per seed ", ind) +
             list(inductive));

  std::vector<double> delta;
  for (std::size_t i = 0; i < seeds.size(); ++i) delta.push_back(transductive[i] - inductive[i]);
  report(5, mean(delta) >= 0, rest_secs,
         fmt("mean transductive - inductive %+.4f (transductive %.4f), per seed deltas ",
             mean(delta), mean(transductive)) +
             list(delta));

  report(6, mean(transductive) >= mean(recon_only), 0,
         fmt("full %.4f vs recon-only unlabeled %.4f, recon-only per seed ", mean(transductive),
             mean(recon_only)) +
             list(recon_only));

  report(7, nested && mean(k5) >= mean(k0) && mean(k20) >= mean(k5), 0,
         fmt("k=0 %.4f, k=5 %.4f, k=20 %.4f on the common k=20 pool", mean(k0), mean(k5),
             mean(k20)) +
             (nested ? "" : " (samples not nested)"));
}

void prediction_rules() {
  const auto t = Clock::now();
  const Dataset ds = benchmark_data(7);
  const Examples test = ds.examples(ds.unseen_test_rows());
  const ClassSet unseen = ds.unseen_classes();
  std::size_t agree = 0, total = 0;
  for (std::uint64_t m = 0; m < 10; ++m) {
    Rng rng(200 + m);
    ModelParams params =
        init_model(benchmark_config(m).architecture(ds.feature_dim(), ds.attribute_dim()), rng);
    std::normal_distribution<double> jitter(0.0, 0.2), n;
    for (auto& [name, tensor] : params.tensors())
      for (double& v : tensor->data()) v += jitter(rng);
    std::vector<double> noise(params.latent_dim());
    for (std::size_t i = 0; i < test.size(); ++i) {
      for (double& v : noise) v = n(rng);
      const auto x = test.features.row(i);
      agree += predict_via_bound(x, unseen, params, noise) == predict_zsl(x, unseen, params).label;
      ++total;
    }
  }
  report(8, agree == total, since(t),
         fmt("%g of %g test inputs agree across 10 random models", static_cast<double>(agree),
             static_cast<double>(total)));
}

AssignmentMatrix with_marginals(const Matrix& q) {
  AssignmentMatrix a{q, std::vector<double>(q.cols(), 0.0)};
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t c = 0; c < q.cols(); ++c) a.class_marginals[c] += q(i, c);
  return a;
}

void sharpening_properties() {
  const auto t = Clock::now();
  Rng rng(104);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  std::vector<std::string> broken;

  // Row sums.
  double worst_sum = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix kl(40, 5);
    for (double& v : kl.data()) v = u(rng);
    const AssignmentMatrix q = assignments_from_kl(kl);
    const TargetMatrix p = sharpen(q);
    for (const Matrix* m : {&q.values, &p.values})
      for (std::size_t i = 0; i < m->rows(); ++i) {
        double s = 0;
        for (double v : m->row(i)) s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1));
      }
  }
  if (!(worst_sum <= 1e-9)) broken.push_back("row sums");

  // One-hot rows and a single row map to themselves.
  const Matrix onehot{{1, 0, 0, 0}, {0, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}};
  if (!(sharpen(with_marginals(onehot)).values == onehot)) broken.push_back("one-hot");
  std::uniform_int_distribution<int> units(1, 200);
  for (int trial = 0; trial < 100; ++trial) {
    // Multiples of 1/1024 so the row sums to exactly one.
    Matrix single(1, 4);
    int left = 1024;
    for (std::size_t c = 0; c + 1 < 4; ++c) {
      const int take = std::min(units(rng), left - 1);
      single(0, c) = take / 1024.0;
      left -= take;
    }
    single(0, 3) = left / 1024.0;
    if (!(sharpen(with_marginals(single)).values == single)) {
      broken.push_back("single row");
      break;
    }
  }

  // Flat class marginals: every row gets at least as peaked.
  const std::size_t classes = 4;
  std::size_t rows_checked = 0;
  bool peaked = true;
  for (int block = 0; block < 250; ++block) {
    Matrix kl(1, classes);
    for (double& v : kl.data()) v = u(rng);
    const Matrix row = assignments_from_kl(kl).values;
    Matrix q(classes, classes);
    for (std::size_t s = 0; s < classes; ++s)
      for (std::size_t c = 0; c < classes; ++c) q(s, (c + s) % classes) = row(0, c);
    const TargetMatrix p = sharpen(with_marginals(q));
    for (std::size_t i = 0; i < classes; ++i, ++rows_checked) {
      const auto qr = q.row(i);
      const auto pr = p.values.row(i);
      if (*std::max_element(pr.begin(), pr.end()) <
          *std::max_element(qr.begin(), qr.end()) - 1e-15)
        peaked = false;
    }
  }
  if (!peaked || rows_checked != 1000) broken.push_back("uniform-marginal sharpening");

  // KL(P||Q) >= 0, zero exactly when P == Q.
  double min_kl = std::numeric_limits<double>::infinity();
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 200; ++trial) {
    Matrix a(10, 5), b(10, 5);
    for (double& v : a.data()) v = u(rng);
    const double scale = std::pow(10.0, -4.0 + 4.0 * trial / 200);
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = a.data()[i] + scale * n(rng);
    const AssignmentMatrix q = assignments_from_kl(a);
    const TargetMatrix p{assignments_from_kl(b).values};
    min_kl = std::min(min_kl, kl_P_Q(p, q));
    if (kl_P_Q(TargetMatrix{q.values}, q) != 0.0) broken.push_back("KL(Q||Q) != 0");
  }
  if (!(min_kl > 0)) broken.push_back("KL not positive for P != Q");

  std::string detail = fmt("max |row sum - 1| %.1e, %g uniform-marginal rows, min KL(P||Q) over perturbed P %.3e",
                           worst_sum, static_cast<double>(rows_checked), min_kl);
  for (const auto& b : broken) detail += "; broken: " + b;
  report(9, broken.empty(), since(t), detail);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void reproducibility() {
  const auto t = Clock::now();
  const Dataset ds = benchmark_data(11);
  TrainConfig cfg = benchmark_config(11);
  cfg.regime = Regime::kTransductive;
  cfg.epochs = 40;
  cfg.transductive_epochs = 10;
  const fs::path root = fs::temp_directory_path() / "dgzsl_acceptance_repro";
  fs::remove_all(root);
  run_train(cfg, ds, root / "a");
  run_train(cfg, ds, root / "b");
  const std::string a = slurp(root / "a" / "metrics.jsonl");
  const std::string b = slurp(root / "b" / "metrics.jsonl");
  const bool same = !a.empty() && a == b &&
                    slurp(root / "a" / "checkpoint.bin") == slurp(root / "b" / "checkpoint.bin");
  report(10, same, since(t),
         fmt("metrics.jsonl %g bytes per run, ", static_cast<double>(a.size())) +
             (same ? "identical" : "differs"));
  fs::remove_all(root);
}

}  // namespace

int main() {
  kl_vs_monte_carlo();
  margin_bounds();
  gradients();
  synthetic_benchmark();
  prediction_rules();
  sharpening_properties();
  reproducibility();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
