// funcclust: simulate, fit, select, and score functional-data clusterings.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "funcclust/funcclust.hpp"

using namespace funcclust;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string manifest_path_for(const std::string& out) {
  const std::string suffix = ".json";
  if (out.size() > suffix.size() && out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0)
    return out.substr(0, out.size() - suffix.size()) + ".manifest.json";
  return out + ".manifest.json";
}

GeneratorConfig config_from_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    const auto& jb = j.at("basis");
    const Interval domain{jb.at("domain").at(0).get<double>(),
                          jb.at("domain").at(1).get<double>()};
    BasisSystem basis(basis_kind_from_string(jb.at("kind").get<std::string>()),
                      jb.at("dim").get<int>(), domain);

    std::optional<SampleGrid> grid;
    const auto& jg = j.at("grid");
    if (jg.contains("points")) {
      grid.emplace(jg.at("points").get<std::vector<double>>(), domain);
    } else {
      grid.emplace(SampleGrid::uniform(domain, jg.at("m").get<int>()));
    }

    GeneratorConfig config{basis, *grid};
    config.n = j.at("n").get<int>();
    const auto means = j.at("means").get<std::vector<std::vector<double>>>();
    const int g = static_cast<int>(means.size());
    const int d = basis.dim();
    config.component_means.resize(g, d);
    for (int c = 0; c < g; ++c) {
      if (static_cast<int>(means[static_cast<std::size_t>(c)].size()) != d)
        throw DataError(path + ": means row " + std::to_string(c + 1) + " has wrong length");
      for (int k = 0; k < d; ++k)
        config.component_means(c, k) = means[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
    }
    const auto covs = j.at("covariances").get<std::vector<std::vector<std::vector<double>>>>();
    if (static_cast<int>(covs.size()) != g)
      throw DataError(path + ": covariances do not match means");
    for (int c = 0; c < g; ++c) {
      Eigen::MatrixXd v(d, d);
      for (int r = 0; r < d; ++r)
        for (int k = 0; k < d; ++k)
          v(r, k) = covs[static_cast<std::size_t>(c)].at(static_cast<std::size_t>(r))
                        .at(static_cast<std::size_t>(k));
      config.component_covs.push_back(v);
    }
    config.equal_count = j.value("equal_count", true);
    if (j.contains("weights")) {
      const auto w = j.at("weights").get<std::vector<double>>();
      config.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    } else {
      config.weights = Eigen::VectorXd::Constant(g, 1.0 / g);
    }
    config.noise_sd = j.at("noise_sd").get<double>();
    config.seed = j.value("seed", std::uint64_t{0});
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed generator config: " + e.what());
  }
}

struct SimulateArgs {
  std::string study;
  int m = 50;
  int n = 150;
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_prefix;
};

int cmd_simulate(const SimulateArgs& args) {
  Stopwatch total;
  GeneratorConfig config =
      !args.config_path.empty() ? config_from_json(args.config_path)
      : args.study == "s1"      ? s1_config(args.m, args.n, args.seed)
      : args.study == "s2"      ? s2_config(args.m, args.n, args.seed)
                                : throw ConfigError("--study must be s1 or s2 (got '" +
                                                    args.study + "')");
  if (!args.config_path.empty()) config.seed = args.seed != 0 ? args.seed : config.seed;

  Stopwatch generate_clock;
  LabeledDataset sim = generate(config);
  const double generate_s = generate_clock.seconds();

  Stopwatch write_clock;
  const std::string data_path = args.out_prefix + ".data.csv";
  const std::string truth_path = args.out_prefix + ".truth.csv";
  write_file_bytes(data_path, dataset_to_csv(sim.data));
  write_file_bytes(truth_path, labels_to_csv(sim.truth));
  const double write_s = write_clock.seconds();

  RunManifest manifest("simulate", config.seed);
  if (!args.config_path.empty())
    manifest.set_config("config", args.config_path);
  else
    manifest.set_config("study", args.study);
  manifest.set_config("m", std::to_string(config.grid.size()));
  manifest.set_config("n", std::to_string(config.n));
  manifest.set_config("g", std::to_string(config.components()));
  manifest.set_config("basis", to_string(config.basis.kind()));
  manifest.set_config("dim", std::to_string(config.basis.dim()));
  manifest.set_config("noise_sd", format_double(config.noise_sd));
  manifest.set_config("threads", std::to_string(max_threads()));
  manifest.set_timing("generate", generate_s);
  manifest.set_timing("write", write_s);
  manifest.add_output(data_path);
  manifest.add_output(truth_path);
  manifest.set_total(total.seconds());
  write_file_bytes(args.out_prefix + ".manifest.json", manifest.to_json());
  return 0;
}

struct FitArgs {
  std::string input;
  std::string basis = "monomial";
  int dim = 5;
  int g = 1;
  EmConfig em;
  std::string out = "model.json";
  std::string labels = "labels.csv";
};

int cmd_fit(const FitArgs& args) {
  Stopwatch total;
  Stopwatch read_clock;
  FunctionalDataset data = read_dataset_csv(args.input);
  const Interval domain = data.layout() == FunctionalDataset::Layout::rectangular
                              ? data.shared_grid().domain()
                              : data.grid_of(0).domain();
  BasisSystem basis(basis_kind_from_string(args.basis), args.dim, domain);
  const double read_s = read_clock.seconds();

  Stopwatch project_clock;
  CoefficientMatrix coeffs = project(data, basis);
  const double project_s = project_clock.seconds();

  Stopwatch fit_clock;
  FitReport report = fit(coeffs, args.g, args.em);
  Partition labels = allocate(report.responsibilities);
  const double fit_s = fit_clock.seconds();

  Stopwatch write_clock;
  write_file_bytes(args.out, model_to_json(report));
  write_file_bytes(args.labels, labels_to_csv(labels));
  const double write_s = write_clock.seconds();

  RunManifest manifest("fit", args.em.seed);
  manifest.set_config("input", args.input);
  manifest.set_config("basis", args.basis);
  manifest.set_config("dim", std::to_string(args.dim));
  manifest.set_config("g", std::to_string(args.g));
  manifest.set_config("restarts", std::to_string(args.em.restarts));
  manifest.set_config("tol", format_double(args.em.tol));
  manifest.set_config("max_iter", std::to_string(args.em.max_iter));
  manifest.set_config("ridge", format_double(args.em.ridge));
  manifest.set_config("threads", std::to_string(max_threads()));
  manifest.set_config("converged", report.converged ? "true" : "false");
  manifest.set_config("iterations", std::to_string(report.iterations));
  manifest.set_timing("read", read_s);
  manifest.set_timing("project", project_s);
  manifest.set_timing("fit", fit_s);
  manifest.set_timing("write", write_s);
  manifest.add_output(args.out);
  manifest.add_output(args.labels);
  manifest.set_total(total.seconds());
  write_file_bytes(manifest_path_for(args.out), manifest.to_json());
  return 0;
}

struct SelectArgs {
  std::string input;
  std::string basis = "monomial";
  int dim = 5;
  int gmin = 1;
  int gmax = 8;
  std::string method = "bic";
  double kappa = 0.0;
  bool kappa_set = false;
  int fit_window = 0;
  EmConfig em;
  std::string out_prefix;
};

int cmd_select(const SelectArgs& args) {
  Stopwatch total;
  Stopwatch read_clock;
  FunctionalDataset data = read_dataset_csv(args.input);
  const Interval domain = data.layout() == FunctionalDataset::Layout::rectangular
                              ? data.shared_grid().domain()
                              : data.grid_of(0).domain();
  BasisSystem basis(basis_kind_from_string(args.basis), args.dim, domain);
  const double read_s = read_clock.seconds();

  Stopwatch project_clock;
  CoefficientMatrix coeffs = project(data, basis);
  const double project_s = project_clock.seconds();

  if (args.gmin < 1 || args.gmax < args.gmin)
    throw ConfigError("order range must satisfy 1 <= gmin <= gmax");
  std::vector<int> g_range;
  for (int g = args.gmin; g <= args.gmax; ++g) g_range.push_back(g);

  Stopwatch sweep_clock;
  SweepResult swept = sweep(coeffs, g_range, args.em);
  const double sweep_s = sweep_clock.seconds();

  SelectionTable table;
  if (args.method == "bic") {
    table = bic_criterion(swept.loglik_rows(), coeffs.dim(), coeffs.size());
  } else if (args.method == "slope") {
    table = slope_criterion(swept.loglik_rows(), coeffs.dim(), coeffs.size(), args.fit_window,
                            args.kappa_set ? std::optional<double>(args.kappa) : std::nullopt);
  } else {
    throw ConfigError("--method must be slope or bic (got '" + args.method + "')");
  }

  const FitReport* chosen = nullptr;
  for (std::size_t k = 0; k < swept.orders.size(); ++k)
    if (swept.orders[k] == table.chosen_g) chosen = &swept.fits[k];
  if (chosen == nullptr) throw SweepFailedError("chosen order has no surviving fit");

  Stopwatch write_clock;
  const std::string criteria_path = args.out_prefix + ".criteria.csv";
  const std::string model_path = args.out_prefix + ".model.json";
  const std::string labels_path = args.out_prefix + ".labels.csv";
  write_file_bytes(criteria_path, selection_to_csv(table));
  write_file_bytes(model_path, model_to_json(*chosen));
  write_file_bytes(labels_path, labels_to_csv(allocate(chosen->responsibilities)));
  const double write_s = write_clock.seconds();

  RunManifest manifest("select", args.em.seed);
  manifest.set_config("input", args.input);
  manifest.set_config("basis", args.basis);
  manifest.set_config("dim", std::to_string(args.dim));
  manifest.set_config("gmin", std::to_string(args.gmin));
  manifest.set_config("gmax", std::to_string(args.gmax));
  manifest.set_config("method", args.method);
  if (args.kappa_set) manifest.set_config("kappa", format_double(args.kappa));
  if (args.method == "slope") manifest.set_config("kappa_used", format_double(table.kappa));
  manifest.set_config("restarts", std::to_string(args.em.restarts));
  manifest.set_config("tol", format_double(args.em.tol));
  manifest.set_config("threads", std::to_string(max_threads()));
  manifest.set_config("chosen_g", std::to_string(table.chosen_g));
  manifest.set_timing("read", read_s);
  manifest.set_timing("project", project_s);
  manifest.set_timing("sweep", sweep_s);
  manifest.set_timing("write", write_s);
  manifest.add_output(criteria_path);
  manifest.add_output(model_path);
  manifest.add_output(labels_path);
  manifest.set_total(total.seconds());
  write_file_bytes(args.out_prefix + ".manifest.json", manifest.to_json());
  return 0;
}

int cmd_ari(const std::string& pred_path, const std::string& truth_path) {
  Partition pred = read_labels_csv(pred_path);
  Partition truth = read_labels_csv(truth_path);
  const double value = adjusted_rand_index(pred, truth);
  std::printf("%.6f\n", value);
  return 0;
}

int guarded(const std::function<int()>& action) {
  try {
    return action();
  } catch (const FitFailedError& e) {
    std::cerr << "funcclust: fit failed: " << e.what() << "\n";
    for (const std::string& line : e.diagnostics()) std::cerr << "  " << line << "\n";
    return 1;
  } catch (const SweepFailedError& e) {
    std::cerr << "funcclust: selection failed: " << e.what() << "\n";
    return 1;
  } catch (const SlopeEstimationError& e) {
    std::cerr << "funcclust: selection failed: " << e.what() << "\n";
    return 1;
  } catch (const SingularCovarianceError& e) {
    std::cerr << "funcclust: fit failed: " << e.what() << "\n";
    return 1;
  } catch (const StarvedComponentError& e) {
    std::cerr << "funcclust: fit failed: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "funcclust: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "funcclust: error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based clustering of functional data via basis projection and "
               "Gaussian mixtures"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  int threads = 0;
  if (const char* env = std::getenv("FUNCCLUST_THREADS")) threads = std::atoi(env);
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)")->capture_default_str();

  std::function<int()> action;

  auto* sim = app.add_subcommand("simulate", "simulate a labeled functional dataset");
  auto sim_args = std::make_shared<SimulateArgs>();
  sim->add_option("--study", sim_args->study, "built-in study design (s1 or s2)");
  sim->add_option("--m", sim_args->m, "grid size");
  sim->add_option("--n", sim_args->n, "number of functions");
  sim->add_option("--seed", sim_args->seed, "generator seed");
  sim->add_option("--config", sim_args->config_path, "generator config JSON (overrides --study)");
  sim->add_option("--out", sim_args->out_prefix, "output prefix")->required();
  sim->callback([&action, sim_args] { action = [sim_args] { return cmd_simulate(*sim_args); }; });

  auto* fit_cmd = app.add_subcommand("fit", "project a dataset and fit a Gaussian mixture");
  auto fit_args = std::make_shared<FitArgs>();
  fit_cmd->add_option("--input", fit_args->input, "dataset CSV")->required();
  fit_cmd->add_option("--basis", fit_args->basis, "basis kind (monomial|fourier|bspline)");
  fit_cmd->add_option("--dim", fit_args->dim, "basis dimension")->required();
  fit_cmd->add_option("--g", fit_args->g, "number of mixture components")->required();
  fit_cmd->add_option("--restarts", fit_args->em.restarts, "EM restarts")->capture_default_str();
  fit_cmd->add_option("--tol", fit_args->em.tol, "log-likelihood stopping increment")
      ->capture_default_str();
  fit_cmd->add_option("--max-iter", fit_args->em.max_iter, "EM iteration cap")
      ->capture_default_str();
  fit_cmd->add_option("--ridge", fit_args->em.ridge, "covariance repair ridge")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit_args->em.seed, "restart seed");
  fit_cmd->add_option("--out", fit_args->out, "model JSON path")->required();
  fit_cmd->add_option("--labels", fit_args->labels, "labels CSV path")->required();
  fit_cmd->callback([&action, fit_args] { action = [fit_args] { return cmd_fit(*fit_args); }; });

  auto* sel = app.add_subcommand("select", "sweep mixture orders and pick one by criterion");
  auto sel_args = std::make_shared<SelectArgs>();
  sel->add_option("--input", sel_args->input, "dataset CSV")->required();
  sel->add_option("--basis", sel_args->basis, "basis kind (monomial|fourier|bspline)");
  sel->add_option("--dim", sel_args->dim, "basis dimension")->required();
  sel->add_option("--gmin", sel_args->gmin, "smallest order")->required();
  sel->add_option("--gmax", sel_args->gmax, "largest order")->required();
  sel->add_option("--method", sel_args->method, "criterion (slope|bic)")->capture_default_str();
  auto* kappa_opt = sel->add_option("--kappa", sel_args->kappa,
                                    "inject a slope multiplier instead of estimating it");
  sel->add_option("--fit-window", sel_args->fit_window,
                  "orders used for slope estimation (0 = largest half)");
  sel->add_option("--restarts", sel_args->em.restarts, "EM restarts")->capture_default_str();
  sel->add_option("--tol", sel_args->em.tol, "log-likelihood stopping increment")
      ->capture_default_str();
  sel->add_option("--max-iter", sel_args->em.max_iter, "EM iteration cap")
      ->capture_default_str();
  sel->add_option("--seed", sel_args->em.seed, "sweep seed");
  sel->add_option("--out", sel_args->out_prefix, "output prefix")->required();
  sel->callback([&action, sel_args, kappa_opt] {
    sel_args->kappa_set = kappa_opt->count() > 0;
    action = [sel_args] { return cmd_select(*sel_args); };
  });

  auto* ari = app.add_subcommand("ari", "adjusted Rand index of two label files");
  auto pred = std::make_shared<std::string>();
  auto truth = std::make_shared<std::string>();
  ari->add_option("--pred", *pred, "predicted labels CSV")->required();
  ari->add_option("--truth", *truth, "reference labels CSV")->required();
  ari->callback([&action, pred, truth] {
    action = [pred, truth] { return cmd_ari(*pred, *truth); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  set_max_threads(threads);
  return guarded(action);
}
