// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier Monte-Carlo checks live here rather than in the unit
// suites.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "funcclust/funcclust.hpp"

using namespace funcclust;

namespace {

int g_failures = 0;

void report(int criterion, const char* label, bool pass, const std::string& detail) {
  std::printf("%s  criterion %2d  %s: %s\n", pass ? "PASS" : "FAIL", criterion, label,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

double mean_ari_s1(int m, int n, int reps, std::uint64_t seed_base) {
  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    GeneratorConfig gen = s1_config(m, n, seed_base + 97 * static_cast<std::uint64_t>(rep));
    LabeledDataset sim = generate(gen);
    CoefficientMatrix coeffs = project(sim.data, gen.basis);
    EmConfig config;
    config.seed = seed_base + 13 * static_cast<std::uint64_t>(rep) + 1;
    try {
      FitReport report = fit(coeffs, 3, config);
      total += adjusted_rand_index(allocate(report.responsibilities), sim.truth);
    } catch (const Error&) {
      // A failed fit scores zero for this replication.
    }
  }
  return total / reps;
}

void criterion_1() {
  const double start = now_seconds();
  const double easy_1 = mean_ari_s1(50, 150, 100, 10000);
  const double easy_2 = mean_ari_s1(100, 150, 100, 20000);
  const double easy_3 = mean_ari_s1(100, 300, 100, 30000);
  const double hard = mean_ari_s1(10, 30, 100, 40000);
  const double elapsed = now_seconds() - start;
  const bool pass =
      easy_1 >= 0.90 && easy_2 >= 0.90 && easy_3 >= 0.90 && hard >= 0.55 && elapsed < 120.0;
  report(1, "S1 accuracy reproduction", pass,
         fmt("mean ARI m50n150=%.3f m100n150=%.3f m100n300=%.3f (need >=0.90), "
             "hard m10n30=%.3f (need >=0.55), %.1fs (< 120s)",
             easy_1, easy_2, easy_3, hard, elapsed));
}

void criterion_2() {
  const double start = now_seconds();
  struct Scenario {
    int m, n;
    double paper;
    double measured = 0.0;
  };
  std::vector<Scenario> scenarios{{50, 250, 0.75}, {100, 500, 0.82}, {100, 1000, 0.86}};
  const int reps = 50;
  for (Scenario& sc : scenarios) {
    double total = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      GeneratorConfig gen =
          s2_config(sc.m, sc.n, 50000 + 1000 * static_cast<std::uint64_t>(sc.n) +
                                  static_cast<std::uint64_t>(rep));
      LabeledDataset sim = generate(gen);
      CoefficientMatrix coeffs = project(sim.data, gen.basis);
      EmConfig config;
      config.seed = 60000 + static_cast<std::uint64_t>(rep);
      try {
        FitReport report = fit(coeffs, 5, config);
        total += adjusted_rand_index(allocate(report.responsibilities), sim.truth);
      } catch (const Error&) {
      }
    }
    sc.measured = total / reps;
  }
  const double elapsed = now_seconds() - start;
  bool pass = elapsed < 300.0;
  for (const Scenario& sc : scenarios)
    pass = pass && std::abs(sc.measured - sc.paper) <= 0.10;
  report(2, "S2 accuracy reproduction", pass,
         fmt("mean ARI m50n250=%.3f (paper 0.75), m100n500=%.3f (0.82), m100n1000=%.3f "
             "(0.86), all within +/-0.10: %s, %.1fs (< 300s)",
             scenarios[0].measured, scenarios[1].measured, scenarios[2].measured,
             (std::abs(scenarios[0].measured - 0.75) <= 0.10 &&
              std::abs(scenarios[1].measured - 0.82) <= 0.10 &&
              std::abs(scenarios[2].measured - 0.86) <= 0.10)
                 ? "yes"
                 : "no",
             elapsed));
}

void criterion_3() {
  const double start = now_seconds();
  const int n = 20000;
  const double sigma = 0.2;
  const Interval domain{-1.0, 1.0};
  BasisSystem basis(BasisKind::monomial, 3, domain);
  SampleGrid grid = SampleGrid::uniform(domain, 20);

  Eigen::MatrixXd v(3, 3);
  v << 0.05, 0.012, -0.004,
       0.012, 0.08, 0.01,
       -0.004, 0.01, 0.06;
  GeneratorConfig config{basis, grid};
  config.n = n;
  config.component_means.resize(1, 3);
  config.component_means << 0.4, -0.8, 1.5;
  config.component_covs = {v};
  config.weights = Eigen::VectorXd::Ones(1);
  config.noise_sd = sigma;
  config.seed = 987654321;

  LabeledDataset sim = generate(config);
  CoefficientMatrix coeffs = project(sim.data, basis);
  const Eigen::MatrixXd& b = coeffs.coeffs();
  Eigen::RowVectorXd mean = b.colwise().mean();
  Eigen::MatrixXd centered = b.rowwise() - mean;
  Eigen::MatrixXd sample_cov = centered.transpose() * centered / (n - 1);
  Eigen::MatrixXd expected = v + sigma * sigma * build_design(basis, grid).gram_inverse();

  double worst_ratio = 0.0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double se = std::sqrt(
          (expected(r, r) * expected(c, c) + expected(r, c) * expected(r, c)) / (n - 1));
      worst_ratio = std::max(worst_ratio, std::abs(sample_cov(r, c) - expected(r, c)) / se);
    }
  const double elapsed = now_seconds() - start;
  const bool pass = worst_ratio < 5.0 && elapsed < 10.0;
  report(3, "Theorem-1 covariance recovery", pass,
         fmt("max |cov error| = %.2f standard errors (< 5), %.2fs (< 10s)", worst_ratio,
             elapsed));
}

void criterion_4() {
  Rng instance_rng(777);
  int monotone_violations = 0;
  int row_sum_violations = 0;
  int simplex_violations = 0;
  int covariance_violations = 0;
  int fit_failures = 0;
  const int instances = 200;
  for (int t = 0; t < instances; ++t) {
    const int n = 30 + static_cast<int>(instance_rng.index_below(171));
    const int d = 1 + static_cast<int>(instance_rng.index_below(6));
    const int g = 1 + static_cast<int>(instance_rng.index_below(4));
    Eigen::MatrixXd coeffs(n, d);
    Eigen::MatrixXd centers(g, d);
    for (int c = 0; c < g; ++c)
      for (int k = 0; k < d; ++k) centers(c, k) = 2.5 * instance_rng.normal();
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k)
        coeffs(i, k) = centers(i % g, k) + instance_rng.normal() * (0.3 + instance_rng.uniform());

    EmConfig config;
    config.seed = instance_rng.next_u64();
    config.restarts = 3;
    try {
      FitReport report = fit(coeffs, g, config);
      for (std::size_t r = 1; r < report.loglik_trace.size(); ++r) {
        const double prev = report.loglik_trace[r - 1];
        if (report.loglik_trace[r] < prev - 1e-8 * (1.0 + std::abs(prev)))
          ++monotone_violations;
      }
      for (int i = 0; i < n; ++i)
        if (std::abs(report.responsibilities.values.row(i).sum() - 1.0) > 1e-10)
          ++row_sum_violations;
      if (std::abs(report.params.weights.sum() - 1.0) > 1e-12) ++simplex_violations;
      for (const Eigen::MatrixXd& cov : report.params.covariances) {
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov.norm()))
          ++covariance_violations;
        if (Eigen::LLT<Eigen::MatrixXd>(cov).info() != Eigen::Success) ++covariance_violations;
      }
    } catch (const Error&) {
      ++fit_failures;  // failures are allowed; contract violations are not
    }
  }
  const bool pass = monotone_violations == 0 && row_sum_violations == 0 &&
                    simplex_violations == 0 && covariance_violations == 0;
  report(4, "EM contract suite", pass,
         fmt("%d instances: monotonicity %d, row sums %d, simplex %d, covariance %d "
             "violations (all must be 0; %d fits failed cleanly)",
             instances, monotone_violations, row_sum_violations, simplex_violations,
             covariance_violations, fit_failures));
}

void criterion_5() {
  Rng rng(1331);
  double worst = 0.0;
  const int instances = 100;
  for (int t = 0; t < instances; ++t) {
    const int n = 5 + static_cast<int>(rng.index_below(46));
    const int d = 1 + static_cast<int>(rng.index_below(5));
    const int g = 1 + static_cast<int>(rng.index_below(4));
    GmmParams p;
    p.weights.resize(g);
    for (int c = 0; c < g; ++c) p.weights[c] = 0.1 + rng.uniform();
    p.weights /= p.weights.sum();
    p.means.resize(g, d);
    for (int c = 0; c < g; ++c)
      for (int k = 0; k < d; ++k) p.means(c, k) = 2.0 * rng.normal();
    for (int c = 0; c < g; ++c) {
      Eigen::MatrixXd a(d, d);
      for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k) a(r, k) = 0.4 * rng.normal();
      p.covariances.push_back(a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d));
    }
    Eigen::MatrixXd coeffs(n, d);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) coeffs(i, k) = 2.0 * rng.normal();

    auto [resp, loglik] = e_step(coeffs, p);

    // Naive dense-arithmetic evaluation with explicit inverses.
    double naive_loglik = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = coeffs.row(i).transpose();
      Eigen::VectorXd weighted(g);
      for (int c = 0; c < g; ++c) {
        const Eigen::MatrixXd& cov = p.covariances[static_cast<std::size_t>(c)];
        const Eigen::VectorXd diff = x - p.means.row(c).transpose();
        const double quad = diff.dot(cov.inverse() * diff);
        weighted[c] = p.weights[c] * std::pow(2.0 * M_PI, -0.5 * d) /
                      std::sqrt(cov.determinant()) * std::exp(-0.5 * quad);
      }
      const double f = weighted.sum();
      naive_loglik += std::log(f);
      for (int c = 0; c < g; ++c)
        worst = std::max(worst, std::abs(resp.values(i, c) - weighted[c] / f));
    }
    worst = std::max(worst, std::abs(loglik - naive_loglik) / (1.0 + std::abs(naive_loglik)));
  }
  report(5, "E-step oracle equivalence", worst < 1e-10,
         fmt("%d instances, worst deviation %.2e (< 1e-10)", instances, worst));
}

void criterion_6() {
  Rng rng(31415);
  double worst = 0.0;
  const int pairs = 500;
  for (int t = 0; t < pairs; ++t) {
    const int n = 2 + static_cast<int>(rng.index_below(29));
    const int ga = 1 + static_cast<int>(rng.index_below(6));
    const int gb = 1 + static_cast<int>(rng.index_below(6));
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.index_below(ga));
      b[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.index_below(gb));
    }
    const double ours = adjusted_rand_index(Partition(a, ga), Partition(b, gb));

    // Brute force over all item pairs.
    std::int64_t both = 0, only_a = 0, only_b = 0, neither = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const bool sa = a[static_cast<std::size_t>(i)] == a[static_cast<std::size_t>(j)];
        const bool sb = b[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(j)];
        if (sa && sb) ++both;
        else if (sa) ++only_a;
        else if (sb) ++only_b;
        else ++neither;
      }
    const double all = static_cast<double>(both + only_a + only_b + neither);
    const double sum_a = static_cast<double>(both + only_a);
    const double sum_b = static_cast<double>(both + only_b);
    const double expected_index = sum_a * sum_b / all;
    const double max_index = 0.5 * (sum_a + sum_b);
    const double oracle =
        max_index == expected_index ? 1.0 : (both - expected_index) / (max_index - expected_index);
    worst = std::max(worst, std::abs(ours - oracle));
  }
  report(6, "ARI oracle equivalence", worst <= 1e-12,
         fmt("%d random pairs, worst deviation %.2e (<= 1e-12)", pairs, worst));
}

void criterion_7() {
  // Part 1: BIC ought to select g=5 on S2 (n=1000, m=100) in >= 80% of 20
  // seeds. Implemented exactly as stated.
  int wins = 0;
  const int seeds = 20;
  std::vector<int> chosen;
  for (int s = 0; s < seeds; ++s) {
    GeneratorConfig gen = s2_config(100, 1000, 70000 + 13 * static_cast<std::uint64_t>(s));
    LabeledDataset sim = generate(gen);
    CoefficientMatrix coeffs = project(sim.data, gen.basis);
    EmConfig config;
    config.seed = 71000 + static_cast<std::uint64_t>(s);
    SweepResult swept = sweep(coeffs, {1, 2, 3, 4, 5, 6, 7, 8}, config);
    SelectionTable table = bic_criterion(swept.loglik_rows(), coeffs.dim(), coeffs.size());
    chosen.push_back(table.chosen_g);
    if (table.chosen_g == 5) ++wins;
  }
  std::string histogram;
  for (int c : chosen) histogram += std::to_string(c) + " ";

  // Part 2: the slope heuristic on an exactly linear loglik recovers kappa
  // = 2s to 1e-12 and selects the smallest order.
  const int d = 6;
  const int n = 400;
  const double s_true = 7.5e-4;
  std::vector<std::pair<int, double>> rows;
  for (int g = 1; g <= 10; ++g)
    rows.emplace_back(g, n * (-2.0 + s_true * static_cast<double>(penalty_dim(g, d))));
  SelectionTable slope_table = slope_criterion(rows, d, n);
  const bool slope_ok =
      std::abs(slope_table.kappa - 2.0 * s_true) <= 1e-12 * 2.0 * s_true &&
      slope_table.chosen_g == 1;

  const bool bic_ok = wins >= 16;
  report(7, "Model-order selection", bic_ok && slope_ok,
         fmt("BIC picked g=5 in %d/%d seeds (need >= 16; choices: %s); slope kappa "
             "recovery %s (kappa=%.10e vs 2s=%.10e, chose g=%d)",
             wins, seeds, histogram.c_str(), slope_ok ? "exact" : "WRONG", slope_table.kappa,
             2.0 * s_true, slope_table.chosen_g));
}

void criterion_8() {
  const bool pass = penalty_dim(20, 20) == 4619 && penalty_dim(5, 9) == 274;
  report(8, "Pen(g) exactness", pass,
         fmt("penalty_dim(20,20)=%lld (=4619), penalty_dim(5,9)=%lld (=274)",
             static_cast<long long>(penalty_dim(20, 20)),
             static_cast<long long>(penalty_dim(5, 9))));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FUNCCLUST_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_9() {
  namespace fs = std::filesystem;
  const fs::path work = fs::temp_directory_path() / "funcclust_acceptance_speed";
  fs::remove_all(work);
  fs::create_directories(work);
  const auto at = [&](const std::string& name) { return (work / name).string(); };

  // One timed cmd_fit run on S2 (m=100, n=500, g=5, 10 restarts) must finish
  // in under ten seconds.
  if (run_cli("simulate --study s2 --m 100 --n 500 --seed 81 --out " + at("a")) != 0) {
    report(9, "Runtime depends little on m", false, "simulate failed");
    return;
  }
  const double t0 = now_seconds();
  const int rc = run_cli("fit --input " + at("a.data.csv") +
                         " --basis fourier --dim 9 --g 5 --restarts 10 --seed 5 --out " +
                         at("a.json") + " --labels " + at("a.csv"));
  const double single_fit = now_seconds() - t0;
  if (rc != 0) {
    report(9, "Runtime depends little on m", false, "fit failed");
    return;
  }

  // Doubling m: sixty fits per arm with matched data and fit seeds,
  // alternating which arm runs first to cancel drift, comparing total wall
  // time.
  double time_m100 = 0.0;
  double time_m200 = 0.0;
  for (int rep = 0; rep < 60; ++rep) {
    const std::string seed = std::to_string(82 + rep);
    run_cli("simulate --study s2 --m 100 --n 500 --seed " + seed + " --out " + at("m100"));
    run_cli("simulate --study s2 --m 200 --n 500 --seed " + seed + " --out " + at("m200"));
    const std::string fit100 = "fit --input " + at("m100.data.csv") +
                               " --basis fourier --dim 9 --g 5 --restarts 10 --seed " + seed +
                               " --out " + at("b.json") + " --labels " + at("b.csv");
    const std::string fit200 = "fit --input " + at("m200.data.csv") +
                               " --basis fourier --dim 9 --g 5 --restarts 10 --seed " + seed +
                               " --out " + at("c.json") + " --labels " + at("c.csv");
    if (rep % 2 == 0) {
      const double t1 = now_seconds();
      run_cli(fit100);
      const double t2 = now_seconds();
      run_cli(fit200);
      time_m100 += t2 - t1;
      time_m200 += now_seconds() - t2;
    } else {
      const double t1 = now_seconds();
      run_cli(fit200);
      const double t2 = now_seconds();
      run_cli(fit100);
      time_m200 += t2 - t1;
      time_m100 += now_seconds() - t2;
    }
  }
  const double change = std::abs(time_m200 - time_m100) / time_m100;
  const bool pass = single_fit < 10.0 && change < 0.25;
  report(9, "Runtime depends little on m", pass,
         fmt("single fit %.2fs (< 10s); m=100 total %.2fs vs m=200 total %.2fs, change "
             "%.1f%% (< 25%%)",
             single_fit, time_m100, time_m200, 100.0 * change));
  fs::remove_all(work);
}

void criterion_10() {
  namespace fs = std::filesystem;
  const fs::path work = fs::temp_directory_path() / "funcclust_acceptance_det";
  fs::remove_all(work);
  fs::create_directories(work);
  const auto at = [&](const std::string& name) { return (work / name).string(); };
  bool pass = true;
  std::string detail = "simulate+fit+select byte-identical across reruns and thread counts";

  const std::string sim = "simulate --study s2 --m 50 --n 200 --seed 314 --out ";
  const std::string fit_cmd =
      " fit --input %IN% --basis fourier --dim 9 --g 5 --seed 3 --out %OUT%.json --labels "
      "%OUT%.csv";
  for (const std::string threads : {std::string("1"), std::string("2"), std::string("3")}) {
    if (run_cli("--threads " + threads + " " + sim + at("x" + threads)) != 0) pass = false;
  }
  if (run_cli("--threads 2 " + sim + at("x2r")) != 0) pass = false;
  try {
    const std::string reference = read_file_bytes(at("x1.data.csv"));
    pass = pass && read_file_bytes(at("x2.data.csv")) == reference &&
           read_file_bytes(at("x3.data.csv")) == reference &&
           read_file_bytes(at("x2r.data.csv")) == reference &&
           read_file_bytes(at("x1.truth.csv")) == read_file_bytes(at("x2.truth.csv"));

    for (const std::string threads : {std::string("1"), std::string("2"), std::string("3")}) {
      std::string cmd = fit_cmd;
      const std::string in = at("x1.data.csv");
      const std::string out = at("f" + threads);
      for (std::string::size_type p; (p = cmd.find("%IN%")) != std::string::npos;)
        cmd.replace(p, 4, in);
      for (std::string::size_type p; (p = cmd.find("%OUT%")) != std::string::npos;)
        cmd.replace(p, 5, out);
      if (run_cli("--threads " + threads + cmd) != 0) pass = false;
    }
    pass = pass && read_file_bytes(at("f1.json")) == read_file_bytes(at("f2.json")) &&
           read_file_bytes(at("f2.json")) == read_file_bytes(at("f3.json")) &&
           read_file_bytes(at("f1.csv")) == read_file_bytes(at("f2.csv")) &&
           read_file_bytes(at("f2.csv")) == read_file_bytes(at("f3.csv"));

    const std::string select_cmd = " select --input " + at("x1.data.csv") +
                                   " --basis fourier --dim 9 --gmin 1 --gmax 4 --method bic "
                                   "--seed 8 --out ";
    if (run_cli("--threads 1" + select_cmd + at("s1")) != 0) pass = false;
    if (run_cli("--threads 3" + select_cmd + at("s3")) != 0) pass = false;
    pass = pass &&
           read_file_bytes(at("s1.criteria.csv")) == read_file_bytes(at("s3.criteria.csv")) &&
           read_file_bytes(at("s1.model.json")) == read_file_bytes(at("s3.model.json")) &&
           read_file_bytes(at("s1.labels.csv")) == read_file_bytes(at("s3.labels.csv"));
  } catch (const Error& e) {
    pass = false;
    detail = std::string("missing output: ") + e.what();
  }
  report(10, "Determinism across seeds and threads", pass, detail);
  fs::remove_all(work);
}

}  // namespace

int main() {
  std::printf("funcclust acceptance suite (version %s)\n", version());
  const double start = now_seconds();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d of 10 criteria passed in %.1fs\n", 10 - g_failures, now_seconds() - start);
  return g_failures == 0 ? 0 : 1;
}
