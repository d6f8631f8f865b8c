#include "adrf/cli.hpp"

#include "adrf/deconv_kernel.hpp"
#include "adrf/inference.hpp"
#include "adrf/io.hpp"
#include "adrf/simlab.hpp"
#include "adrf/tuning.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace adrf::cli {

namespace {

constexpr int kSchemaVersion = 1;

enum class Stage
{
  Input,
  Config,
  Tuning,
  Estimation,
};

struct StageError : std::runtime_error
{
  StageError(Stage s, const std::string& what)
    : std::runtime_error(what)
    , stage(s)
  {}
  Stage stage;
};

// Runs fn, tagging any library error with the stage it came from.
template<class Fn>
auto
in_stage(Stage stage, Fn&& fn)
{
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedInput) {
      throw StageError(Stage::Input, e.what());
    }
    throw StageError(stage, e.what());
  }
}

int
exit_code(Stage stage)
{
  switch (stage) {
    case Stage::Input:
      return kInputError;
    case Stage::Config:
    case Stage::Tuning:
      return kConfigError;
    case Stage::Estimation:
      return kNumericalFailure;
  }
  return kNumericalFailure;
}

struct Common
{
  std::string input;
  std::string output_dir = ".";
  std::string error_kind;
  std::optional<double> error_variance;
  std::optional<double> error_ratio;
  std::string error_model_path;
  std::string criterion = "et";
  std::string basis = "power";
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Index grid_n = 201;
  std::optional<int> K;
  std::optional<double> h0;
  std::optional<double> h;
  std::string simex_config;
};

void
add_common(CLI::App* cmd, Common& c)
{
  cmd->set_help_flag("--help", "print this help message");
  cmd->add_option("--input", c.input, "CSV with columns s, y, x1..xr")->required();
  cmd->add_option("--output-dir", c.output_dir, "directory for output files");
  cmd->add_option("--error-kind", c.error_kind, "laplace, gaussian or none");
  cmd->add_option("--error-variance", c.error_variance, "error variance");
  cmd->add_option("--error-ratio", c.error_ratio, "error variance as a fraction of var(S)");
  cmd->add_option("--error-model", c.error_model_path, "error model JSON written by replicate-phi");
  cmd->add_option("--criterion", c.criterion, "et, el, cue or ilog");
  cmd->add_option("--basis", c.basis, "power or bspline");
  cmd->add_option("--seed", c.seed, "seed for the SIMEX simulations");
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  cmd->add_option("--grid-n", c.grid_n, "number of grid points");
  cmd->add_option("--K", c.K, "sieve dimension (with --h0 and --h skips tuning)");
  cmd->add_option("--h0", c.h0, "weight bandwidth");
  cmd->add_option("--h", c.h, "regression bandwidth");
  cmd->add_option("--simex-config", c.simex_config, "key = value SIMEX configuration file");
}

double
sample_variance(const Vector& s)
{
  return (s.array() - s.mean()).square().sum() / static_cast<double>(s.size() - 1);
}

ErrorModel
resolve_error(const Common& c, const Vector& s)
{
  const int sources = static_cast<int>(!c.error_kind.empty()) + static_cast<int>(!c.error_model_path.empty());
  require(sources == 1, "declare the error model with exactly one of --error-kind or --error-model");
  if (!c.error_model_path.empty()) {
    require(!c.error_variance && !c.error_ratio, "--error-model takes no variance flags");
    return error_model_from_json(read_json(c.error_model_path));
  }
  const ErrorKind kind = error_kind_from_string(c.error_kind);
  if (kind == ErrorKind::None) {
    require(!c.error_variance && !c.error_ratio, "--error-kind none takes no variance");
    return ErrorModel::none();
  }
  require(kind != ErrorKind::ReplicateEstimated, "use --error-model for replicate-estimated errors");
  require(c.error_variance.has_value() != c.error_ratio.has_value(),
          "give exactly one of --error-variance or --error-ratio");
  const double var = c.error_variance ? *c.error_variance : *c.error_ratio * sample_variance(s);
  return kind == ErrorKind::Laplace ? ErrorModel::laplace(var) : ErrorModel::gaussian(var);
}

struct Prepared
{
  ObservedSample sample;
  EstimatorOptions options;
  TuneConfig tune;
  Vector grid;
};

Prepared
prepare(const Common& c)
{
  Prepared p;
  in_stage(Stage::Input, [&] {
    require(c.grid_n >= 2, "--grid-n must be at least 2");
    const CsvTable table = read_csv(c.input);
    p.sample = sample_from_table(table, ErrorModel::none());
    p.options.criterion = GelCriterion(criterion_from_string(c.criterion));
    p.options.basis = basis_family_from_string(c.basis);
    p.options.threads = c.threads;
    require(c.K.has_value() == c.h0.has_value() && c.K.has_value() == c.h.has_value(),
            "give all of --K, --h0 and --h or none of them");
    return 0;
  });
  in_stage(Stage::Config, [&] {
    p.sample.error = resolve_error(c, p.sample.s);
    p.sample.validate();
    if (!c.simex_config.empty()) {
      p.tune.simex = read_simex_config(c.simex_config);
    }
    p.tune.simex.seed = c.seed;
    p.tune.simex.validate();
    p.grid = linspace(quantile(p.sample.s, p.tune.simex.trim_lo), quantile(p.sample.s, p.tune.simex.trim_hi), c.grid_n);
    return 0;
  });
  return p;
}

SmoothingParams
resolve_params(const Common& c, const Prepared& p)
{
  if (c.K) {
    return in_stage(Stage::Config, [&] {
      SmoothingParams params;
      params.K = *c.K;
      params.h0 = *c.h0;
      params.h = *c.h;
      params.validate();
      BasisSpec spec;
      spec.family = p.options.basis;
      spec.K = params.K;
      spec.spline_degree = p.options.spline_degree;
      spec.covariate_dim = static_cast<int>(p.sample.x.cols());
      spec.validate();
      return params;
    });
  }
  return in_stage(Stage::Tuning, [&] { return two_step_tune(p.sample, p.options, p.tune); });
}

Json
provenance(const std::string& command, const Common& c, const Prepared& p, const SmoothingParams& params)
{
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["input"] = std::filesystem::path(c.input).filename().string();
  j["n"] = p.sample.size();
  j["covariates"] = p.sample.covariate_dim();
  j["seed"] = c.seed;
  j["error_model"] = to_json(p.sample.error);
  j["options"] = to_json(p.options);
  Json simex;
  simex["D"] = p.tune.simex.D;
  simex["h_grid"] = p.tune.simex.h_grid;
  simex["trim_lo"] = p.tune.simex.trim_lo;
  simex["trim_hi"] = p.tune.simex.trim_hi;
  simex["b_grid"] = p.tune.simex.b_grid;
  j["simex_config"] = simex;
  j["grid"] = { { "n", p.grid.size() }, { "lo", p.grid(0) }, { "hi", p.grid(p.grid.size() - 1) } };
  j["params"] = to_json(params);
  return j;
}

std::string
out_path(const std::string& dir, const std::string& name)
{
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

int
cmd_estimate(const Common& c)
{
  const Prepared p = prepare(c);
  const SmoothingParams params = resolve_params(c, p);
  const AdrfCurve curve = in_stage(Stage::Estimation, [&] { return mu_hat(p.sample, params, p.options, p.grid); });
  if (static_cast<Index>(curve.skipped.size()) == curve.grid.size()) {
    throw StageError(Stage::Estimation, "AllWeightsZero: every grid point was skipped");
  }
  Vector flag = Vector::Zero(curve.grid.size());
  for (Index i : curve.skipped) {
    flag(i) = 1.0;
  }
  write_csv(out_path(c.output_dir, "curve.csv"), { "t", "mu", "skipped" }, { curve.grid, curve.mu, flag });
  Json j = provenance("estimate", c, p, params);
  j["skipped"] = curve.skipped;
  j["converged"] = std::count(curve.converged.begin(), curve.converged.end(), true);
  write_json(out_path(c.output_dir, "estimate.json"), j);
  std::cout << "estimate: K=" << params.K << " h0=" << params.h0 << " h=" << params.h << ", "
            << curve.skipped.size() << " skipped grid points\n";
  return kSuccess;
}

int
cmd_tune(const Common& c)
{
  const Prepared p = prepare(c);
  const SmoothingParams params = resolve_params(c, p);
  write_json(out_path(c.output_dir, "params.json"), provenance("tune", c, p, params));
  std::cout << "tune: K=" << params.K << " h0=" << params.h0 << " h=" << params.h << "\n";
  return kSuccess;
}

int
cmd_ci(const Common& c, double alpha)
{
  in_stage(Stage::Input, [&] {
    require(alpha > 0.0 && alpha < 1.0, "--alpha must lie in (0, 1)");
    return 0;
  });
  const Prepared p = prepare(c);
  const SmoothingParams params = resolve_params(c, p);
  const CiBand band = in_stage(Stage::Estimation, [&] { return ci_pointwise(p.sample, params, p.options, p.grid, alpha); });
  write_csv(out_path(c.output_dir, "ci.csv"), { "t", "mu", "lo", "hi" }, { band.grid, band.mu, band.lo, band.hi });
  Json j = provenance("ci", c, p, params);
  j["alpha"] = alpha;
  j["critical_value"] = normal_critical_value(alpha);
  j["undersmooth_factor"] = band.undersmooth_factor;
  j["skipped"] = band.skipped;
  Json warnings = Json::array();
  for (Index i : band.degenerate) {
    warnings.push_back("DegenerateVariance at t = " + format_double(band.grid(i)));
  }
  j["warnings"] = warnings;
  write_json(out_path(c.output_dir, "ci.json"), j);
  std::cout << "ci: alpha=" << alpha << ", " << band.skipped.size() << " skipped, " << band.degenerate.size()
            << " degenerate\n";
  return kSuccess;
}

struct SimulateArgs
{
  std::string preset;
  std::vector<int> models;
  std::vector<Index> sizes;
  std::string error_kind;
  std::vector<std::string> estimators;
  int reps = 0;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  Index grid_n = 201;
  std::string criterion = "et";
  std::string basis = "power";
  std::string output_dir = ".";
  std::optional<int> simex_d;
};

MonteCarloConfig
simulate_config(const SimulateArgs& a)
{
  MonteCarloConfig config;
  if (a.preset == "fig1") {
    config.models = { 1, 2 };
    config.sizes = { 500 };
    config.error_kind = ErrorKind::Laplace;
    config.reps = 200;
    config.estimators = { EstimatorKind::NvOptimal, EstimatorKind::CmOptimal };
  } else if (a.preset == "fig2") {
    config.models = { 3 };
    config.sizes = { 250, 500 };
    config.error_kind = ErrorKind::Laplace;
    config.reps = 200;
    config.estimators = { EstimatorKind::CmOptimal, EstimatorKind::CmTuned };
  } else if (a.preset == "fig3") {
    config.models = { 4 };
    config.sizes = { 250 };
    config.error_kind = ErrorKind::Gaussian;
    config.reps = 200;
    config.estimators = { EstimatorKind::CmOptimal, EstimatorKind::CmTilde, EstimatorKind::CmTuned };
  } else if (!a.preset.empty()) {
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + a.preset + "' (fig1, fig2, fig3)");
  }
  if (!a.models.empty()) {
    config.models = a.models;
  }
  if (!a.sizes.empty()) {
    config.sizes = a.sizes;
  }
  if (!a.error_kind.empty()) {
    config.error_kind = error_kind_from_string(a.error_kind);
  }
  if (!a.estimators.empty()) {
    config.estimators.clear();
    for (const auto& e : a.estimators) {
      config.estimators.push_back(estimator_from_string(e));
    }
  }
  if (a.reps > 0) {
    config.reps = a.reps;
  }
  config.seed = a.seed;
  config.threads = a.threads;
  config.grid_n = a.grid_n;
  config.options.criterion = GelCriterion(criterion_from_string(a.criterion));
  config.options.basis = basis_family_from_string(a.basis);
  if (a.simex_d) {
    config.tune.simex.D = *a.simex_d;
  }
  config.validate();
  return config;
}

void
write_long_csv(const std::string& path, const MonteCarloReport& report)
{
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::MalformedInput, "cannot write " + path);
  }
  out << "model,estimator,N,rep,ise\n";
  for (const auto& cell : report.cells) {
    for (std::size_t r = 0; r < cell.ise.size(); ++r) {
      out << cell.model << ',' << to_string(cell.estimator) << ',' << cell.n << ',' << r << ','
          << format_double(cell.ise[r]) << '\n';
    }
  }
}

int
cmd_simulate(const SimulateArgs& a)
{
  const MonteCarloConfig config = in_stage(Stage::Config, [&] { return simulate_config(a); });
  const MonteCarloReport report = in_stage(Stage::Estimation, [&] { return run_monte_carlo(config); });
  write_json(out_path(a.output_dir, "report.json"), to_json(report));
  write_long_csv(out_path(a.output_dir, "ise.csv"), report);
  std::cout << "simulate: " << report.cells.size() << " cells, " << config.reps << " reps, "
            << report.runtime_seconds << " s\n";
  for (const auto& cell : report.cells) {
    std::cout << "  model " << cell.model << " N=" << cell.n << " " << to_string(cell.estimator)
              << " median ISE " << cell.median << " (failures " << cell.failure_rate << ")\n";
  }
  return kSuccess;
}

int
cmd_replicate_phi(const std::string& input, const std::string& output_dir)
{
  const Matrix pairs = in_stage(Stage::Input, [&] { return replicate_pairs_from_table(read_csv(input)); });
  const ErrorModel model = in_stage(Stage::Config, [&] { return estimate_cf_from_replicates(pairs); });
  write_csv(out_path(output_dir, "phi.csv"), { "w", "phi" }, { model.cf_grid(), model.cf_values() });
  Json j = to_json(model);
  j["schema_version"] = kSchemaVersion;
  j["input"] = std::filesystem::path(input).filename().string();
  j["pairs"] = pairs.rows();
  write_json(out_path(output_dir, "error_model.json"), j);
  std::cout << "replicate-phi: " << pairs.rows() << " pairs, variance " << model.variance()
            << (model.floor_applied() ? ", ridge floor applied" : "") << "\n";
  return kSuccess;
}

int
cmd_report(const std::string& input, const std::string& output_dir)
{
  const Json j = in_stage(Stage::Input, [&] { return read_json(input); });
  std::ofstream out;
  const std::string path = out_path(output_dir, "summary.csv");
  out.open(path);
  out << "model,N,estimator,q1,median,q3,failure_rate\n";
  try {
    for (const auto& cell : j.at("cells")) {
      auto num = [](const Json& v) { return v.is_null() ? std::string("nan") : format_double(v.get<double>()); };
      out << cell.at("model").get<int>() << ',' << cell.at("n").get<long long>() << ','
          << cell.at("estimator").get<std::string>() << ',' << num(cell.at("q1")) << ','
          << num(cell.at("median")) << ',' << num(cell.at("q3")) << ','
          << format_double(cell.at("failure_rate").get<double>()) << '\n';
      std::cout << "model " << cell.at("model") << " N=" << cell.at("n") << " "
                << cell.at("estimator").get<std::string>() << ": median ISE " << num(cell.at("median")) << "\n";
    }
  } catch (const nlohmann::json::exception& e) {
    throw StageError(Stage::Input, std::string("MalformedInput: ") + input + ": " + e.what());
  }
  return kSuccess;
}

} // namespace

int
run(const std::vector<std::string>& args)
{
  CLI::App app{ "Average dose-response estimation with a mismeasured treatment" };
  app.require_subcommand(1);

  Common estimate_args;
  Common ci_args;
  Common tune_args;
  double alpha = 0.05;
  auto* estimate = app.add_subcommand("estimate", "tune (unless K, h0, h given) and estimate the curve");
  add_common(estimate, estimate_args);
  auto* ci = app.add_subcommand("ci", "undersmoothed pointwise confidence band");
  add_common(ci, ci_args);
  ci->add_option("--alpha", alpha, "one minus the nominal coverage");
  auto* tune = app.add_subcommand("tune", "select K, h0 and h");
  add_common(tune, tune_args);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study on the simulation models");
  simulate->add_option("--preset", sim.preset, "fig1, fig2 or fig3");
  simulate->add_option("--models", sim.models, "model ids")->delimiter(',');
  simulate->add_option("--sizes", sim.sizes, "sample sizes")->delimiter(',');
  simulate->add_option("--error-kind", sim.error_kind, "laplace, gaussian or none");
  simulate->add_option("--estimators", sim.estimators, "nv, nv-tuned, cm, cm-tilde, cm-tuned, oracle-pi")
    ->delimiter(',');
  simulate->add_option("--reps", sim.reps, "replications");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--threads", sim.threads, "worker threads (0 = all cores)");
  simulate->add_option("--grid-n", sim.grid_n, "evaluation grid points");
  simulate->add_option("--criterion", sim.criterion, "et, el, cue or ilog");
  simulate->add_option("--basis", sim.basis, "power or bspline");
  simulate->add_option("--simex-d", sim.simex_d, "SIMEX replicates");
  simulate->add_option("--output-dir", sim.output_dir, "directory for output files");

  std::string phi_input;
  std::string phi_out = ".";
  auto* phi = app.add_subcommand("replicate-phi", "estimate the error characteristic function from replicates");
  phi->add_option("--input", phi_input, "CSV with columns s1, s2")->required();
  phi->add_option("--output-dir", phi_out, "directory for output files");

  std::string report_input;
  std::string report_out = ".";
  auto* report = app.add_subcommand("report", "summarise a simulate report");
  report->add_option("--input", report_input, "report.json from simulate")->required();
  report->add_option("--output-dir", report_out, "directory for output files");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (estimate->parsed()) {
      return cmd_estimate(estimate_args);
    }
    if (ci->parsed()) {
      return cmd_ci(ci_args, alpha);
    }
    if (tune->parsed()) {
      return cmd_tune(tune_args);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim);
    }
    if (phi->parsed()) {
      return cmd_replicate_phi(phi_input, phi_out);
    }
    if (report->parsed()) {
      return cmd_report(report_input, report_out);
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.stage);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::MalformedInput ? kInputError : kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kInputError;
}

} // namespace adrf::cli
