#include "rkbayes/cli.hpp"

#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkbayes/dataset.hpp"
#include "rkbayes/errors.hpp"
#include "rkbayes/experiment.hpp"
#include "rkbayes/gauss.hpp"
#include "rkbayes/oracle.hpp"
#include "rkbayes/solver.hpp"

namespace rkbayes {

namespace {

// Expand a flat JSON config file into synthetic command-line arguments for
// one subcommand. The caller inserts them before the user's own flags, which
// therefore take precedence (all options use a take-last policy).
std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw UsageError("config files cannot nest another config");
    std::string text;
    if (value.is_string())
      text = value.get<std::string>();
    else if (value.is_boolean())
      text = value.get<bool>() ? "true" : "false";
    else if (value.is_number())
      text = value.dump();
    else
      throw UsageError("config key '" + key + "' must be a scalar");
    args.push_back("--" + key + "=" + text);
  }
  return args;
}

struct ChainFlags {
  std::size_t length = 20000;
  double burn_in = 0.2;
  double prop_lambda = 0.35;
  double prop_tau = -1.0;  // <= 0 means "use the default log step"
  std::size_t thin = 10;
  bool adapt = true;

  ChainConfig to_config(std::uint64_t seed) const {
    ChainConfig cc;
    cc.length = length;
    cc.burn_in_fraction = burn_in;
    cc.proposal_std_lambda = prop_lambda;
    if (prop_tau > 0.0) cc.proposal_std_tau = prop_tau;
    cc.thin = thin;
    cc.adapt = adapt;
    cc.seed = seed;
    return cc;
  }
};

struct FitOptions {
  std::string data;
  std::string kernel = "cubic-spline-shifted";
  std::string loss = "l2";
  double gamma = 0.0;
  double sigma2 = 0.09;
  std::string method;
  int grid = 200;
  std::string out;
  std::uint64_t seed = 0;
  std::string config;
  ChainFlags chain;
};

struct ExperimentOptions {
  int runs = 30;
  bool outliers = false;
  double outlier_prob = 0.1;
  double outlier_mag = 3.0;
  double noise_var = 0.09;
  int grid_size = 64;
  std::string methods = "l2-oml,l1-bayes";
  std::uint64_t seed = 0;
  std::string out;
  double sigma2_override = 0.0;  // 0 means unset
  std::string estimator = "map";
  std::string config;
  ChainFlags chain;
};

// Config-file values are injected as leading synthetic flags, so every option
// takes the last occurrence: explicit command-line flags win.
CLI::Option* last_wins(CLI::Option* option) {
  return option->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void add_chain_flags(CLI::App* cmd, ChainFlags& chain) {
  last_wins(cmd->add_option("--chain-length", chain.length, "Metropolis chain length")
                ->capture_default_str());
  last_wins(cmd->add_option("--burn-in", chain.burn_in, "burn-in fraction in [0, 1)")
                ->capture_default_str());
  last_wins(cmd->add_option("--prop-lambda", chain.prop_lambda,
                            "proposal std for log(lambda)")
                ->check(CLI::PositiveNumber)
                ->capture_default_str());
  last_wins(cmd->add_option("--prop-tau", chain.prop_tau,
                            "proposal std for each log(tau), default 0.15")
                ->check(CLI::PositiveNumber));
  last_wins(cmd->add_option("--thin", chain.thin, "Metropolis steps per stored realization")
                ->capture_default_str());
  last_wins(cmd->add_flag("--adapt,!--no-adapt", chain.adapt, "rescale proposals during burn-in")
                ->capture_default_str());
}

struct Parsed {
  CLI::App app{"kernel-based function estimation with Bayesian hyperparameter selection", "rkbayes"};
  FitOptions fit;
  ExperimentOptions exp;
  CLI::App* fit_cmd = nullptr;
  CLI::App* exp_cmd = nullptr;
  CLI::App* example_cmd = nullptr;

  Parsed() {
    app.require_subcommand(1);

    fit_cmd = app.add_subcommand("fit", "fit a function to x,y data");
    last_wins(fit_cmd->add_option("--data", fit.data, "input CSV with header x,y"));
    last_wins(fit_cmd->add_option("--kernel", fit.kernel, "cubic-spline-shifted | rbf:<width> | linear")
                  ->capture_default_str());
    last_wins(fit_cmd->add_option("--loss", fit.loss, "l2 | l1 | vapnik:<eps> | huber:<delta>")
                  ->capture_default_str());
    last_wins(fit_cmd->add_option("--gamma", fit.gamma,
                                  "regularization weight (omit when --method is given)"));
    last_wins(fit_cmd->add_option("--sigma2", fit.sigma2, "noise variance")->capture_default_str());
    last_wins(fit_cmd->add_option("--method", fit.method, "l2-oml | l1-bayes (estimates gamma from data)"));
    last_wins(fit_cmd->add_option("--grid", fit.grid, "number of output grid points on [0, 1]")
                  ->capture_default_str());
    last_wins(fit_cmd->add_option("--out", fit.out, "output CSV with columns x,fhat"));
    last_wins(fit_cmd->add_option("--seed", fit.seed, "chain seed for --method l1-bayes")
                  ->capture_default_str());
    add_chain_flags(fit_cmd, fit.chain);
    last_wins(fit_cmd->add_option("--config", fit.config,
                                  "JSON file mirroring the flags of this subcommand"));

    exp_cmd = app.add_subcommand("experiment", "Monte Carlo reconstruction study");
    last_wins(exp_cmd->add_option("--runs", exp.runs, "number of reconstructions")->capture_default_str());
    last_wins(exp_cmd->add_flag("--outliers", exp.outliers,
                                "shift measurements by +-magnitude with given probability"));
    last_wins(exp_cmd->add_option("--outlier-prob", exp.outlier_prob, "outlier probability")
                  ->capture_default_str());
    last_wins(exp_cmd->add_option("--outlier-mag", exp.outlier_mag, "outlier magnitude")
                  ->capture_default_str());
    last_wins(exp_cmd->add_option("--noise-var", exp.noise_var, "measurement noise variance")
                  ->capture_default_str());
    last_wins(exp_cmd->add_option("--grid-size", exp.grid_size, "number of sampling locations")
                  ->capture_default_str());
    last_wins(exp_cmd->add_option("--methods", exp.methods, "comma-separated subset of l2-oml,l1-bayes")
                  ->capture_default_str());
    last_wins(exp_cmd->add_option("--seed", exp.seed, "master seed")->capture_default_str());
    last_wins(exp_cmd->add_option("--out", exp.out, "output CSV with columns run,method,rel_error"));
    last_wins(exp_cmd->add_option("--sigma2-override", exp.sigma2_override,
                                  "noise variance handed to the estimators instead of the generating one"));
    last_wins(exp_cmd->add_option("--estimator", exp.estimator,
                                  "map | minvar (point estimate for l1-bayes)")
                  ->capture_default_str());
    add_chain_flags(exp_cmd, exp.chain);
    last_wins(exp_cmd->add_option("--config", exp.config,
                                  "JSON file mirroring the flags of this subcommand"));

    example_cmd = app.add_subcommand("example", "verify the scalar worked example");
  }
};

int run_fit(const FitOptions& opt, std::ostream& out, std::ostream& err);
int run_experiment_cmd(const ExperimentOptions& opt, std::ostream& out, std::ostream& err);

int run_example_cmd(std::ostream& out) {
  const ExampleReport r = example_check();
  nlohmann::ordered_json j;
  j["f_hat"] = r.f_hat;
  j["e_f_given_y"] = r.e_f_given_y;
  j["difference"] = r.lhs;
  j["identity_residual"] = r.identity_residual;
  out << j.dump(2) << "\n";
  return 0;
}

int run_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.data.empty()) throw UsageError("fit requires --data");
  if (opt.out.empty()) throw UsageError("fit requires --out");
  if (!opt.method.empty() && opt.method != "l2-oml" && opt.method != "l1-bayes")
    throw UsageError("fit: --method must be l2-oml or l1-bayes");
  if (opt.method.empty() && !(opt.gamma > 0.0))
    throw UsageError("fit requires --gamma (positive) or --method");
  if (!opt.method.empty() && opt.gamma > 0.0)
    throw UsageError("fit: --gamma conflicts with --method");
  if (opt.method == "l2-oml" && opt.loss != "l2")
    throw UsageError("fit: --method l2-oml implies --loss l2");
  if (opt.method == "l1-bayes" && !(opt.loss == "l2" || opt.loss == "l1"))
    throw UsageError("fit: --method l1-bayes implies --loss l1");
  if (opt.grid < 2) throw UsageError("fit: --grid must be at least 2");
  if (!(opt.sigma2 > 0.0)) throw UsageError("fit: --sigma2 must be positive");

  const Dataset data = read_dataset_csv(std::filesystem::path(opt.data));
  const KernelSpec kernel = parse_kernel(opt.kernel);
  const GramMatrix g = gram(kernel, data.x);

  nlohmann::ordered_json info;
  info["subcommand"] = "fit";
  info["n"] = data.size();
  info["kernel"] = opt.kernel;

  RepresenterEstimate est;
  if (opt.method == "l2-oml") {
    const OmlEstimate oml = oml_lambda(g, data.y, opt.sigma2);
    const double gamma = opt.sigma2 / oml.lambda;
    est = solve_quadratic(g, data.y, gamma);
    info["method"] = "l2-oml";
    info["lambda"] = oml.lambda;
    info["lambda_at_boundary"] = oml.at_boundary;
    info["gamma"] = gamma;
    info["sigma2"] = opt.sigma2;
  } else if (opt.method == "l1-bayes") {
    const ChainConfig cc = opt.chain.to_config(opt.seed);
    const PosteriorChain chain = run_chain(cc, g, data.y, opt.sigma2);
    const LambdaSummary lam = posterior_lambda(chain);
    const double gamma = opt.sigma2 / lam.mean;
    const std::vector<LossSpec> losses(static_cast<std::size_t>(data.size()),
                                       calibrated_absolute(std::sqrt(opt.sigma2)));
    est = solve_general(g, data.y, losses, gamma);
    info["method"] = "l1-bayes";
    info["lambda_mean"] = lam.mean;
    info["lambda_ci"] = {lam.lo95, lam.hi95};
    info["acceptance"] = chain.acceptance_rate;
    info["ess"] = chain.ess_lambda;
    info["skipped"] = 0;
    info["seed"] = chain.seed;
    info["gamma"] = gamma;
    info["sigma2"] = opt.sigma2;
  } else {
    const LossSpec loss = parse_loss(opt.loss);
    if (loss.kind == LossKind::quadratic) {
      est = solve_quadratic(g, data.y, opt.gamma);
    } else {
      const std::vector<LossSpec> losses(static_cast<std::size_t>(data.size()), loss);
      est = solve_general(g, data.y, losses, opt.gamma);
    }
    info["method"] = "fixed-gamma";
    info["loss"] = opt.loss;
    info["gamma"] = opt.gamma;
  }

  std::ofstream file(opt.out);
  if (!file) throw InputError("cannot write '" + opt.out + "'");
  file << "x,fhat\n";
  for (int i = 0; i < opt.grid; ++i) {
    const double x = static_cast<double>(i) / (opt.grid - 1);
    file << format_double(x) << "," << format_double(evaluate(est, x)) << "\n";
  }
  info["out"] = opt.out;
  info["grid"] = opt.grid;
  out << info.dump(2) << "\n";
  (void)err;
  return 0;
}

int run_experiment_cmd(const ExperimentOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.out.empty()) throw UsageError("experiment requires --out");

  ExperimentConfig config;
  config.runs = opt.runs;
  config.noise_variance = opt.noise_var;
  config.outliers = opt.outliers;
  config.outlier_probability = opt.outlier_prob;
  config.outlier_magnitude = opt.outlier_mag;
  config.grid_size = opt.grid_size;
  config.master_seed = opt.seed;
  config.chain = opt.chain.to_config(0);
  if (opt.sigma2_override > 0.0) config.sigma2_override = opt.sigma2_override;
  if (opt.estimator == "map")
    config.estimator = PointEstimator::map;
  else if (opt.estimator == "minvar")
    config.estimator = PointEstimator::min_variance;
  else
    throw UsageError("experiment: --estimator must be map or minvar");

  config.methods.clear();
  std::stringstream tokens(opt.methods);
  std::string token;
  while (std::getline(tokens, token, ',')) {
    if (!token.empty()) config.methods.push_back(parse_method(token));
  }
  if (config.methods.empty()) throw UsageError("experiment: --methods must name at least one method");

  const RunReport report = run_experiment(config);
  std::ofstream file(opt.out);
  if (!file) throw InputError("cannot write '" + opt.out + "'");
  export_csv(report, file);
  out << summary_json(report) << "\n";
  (void)err;
  return 0;
}

int error_json(std::ostream& err, const std::string& type, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = {{"type", type}, {"message", message}};
  err << j.dump(2) << "\n";
  return code;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    Parsed parsed;
    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      parsed.app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << parsed.app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      return error_json(err, "usage", e.what(), 2);
    }

    // A config file supplies defaults: splice its values in as synthetic
    // flags ahead of the user's own and reparse (take-last keeps the
    // command line authoritative).
    const std::string config_path =
        parsed.fit_cmd->parsed() ? parsed.fit.config
                                 : (parsed.exp_cmd->parsed() ? parsed.exp.config : std::string());
    Parsed effective;
    Parsed* active = &parsed;
    if (!config_path.empty()) {
      const std::string sub = parsed.fit_cmd->parsed() ? "fit" : "experiment";
      std::vector<std::string> merged;
      merged.push_back(sub);
      for (std::string& extra : config_file_args(config_path)) merged.push_back(std::move(extra));
      bool seen_sub = false;
      for (const std::string& a : args) {
        if (!seen_sub && a == sub) {
          seen_sub = true;
          continue;
        }
        merged.push_back(a);
      }
      try {
        std::vector<std::string> reversed(merged.rbegin(), merged.rend());
        effective.app.parse(reversed);
      } catch (const CLI::ParseError& e) {
        return error_json(err, "usage", std::string("config file: ") + e.what(), 2);
      }
      active = &effective;
    }

    if (active->example_cmd->parsed()) return run_example_cmd(out);
    if (active->fit_cmd->parsed()) return run_fit(active->fit, out, err);
    if (active->exp_cmd->parsed()) return run_experiment_cmd(active->exp, out, err);
    return error_json(err, "usage", "expected a subcommand (fit, experiment, example)", 2);
  } catch (const UsageError& e) {
    return error_json(err, "usage", e.what(), 2);
  } catch (const InputError& e) {
    return error_json(err, "input", e.what(), 3);
  } catch (const ConvergenceError& e) {
    return error_json(err, "convergence", e.what(), 5);
  } catch (const NumericalError& e) {
    return error_json(err, "numerical", e.what(), 4);
  } catch (const std::exception& e) {
    return error_json(err, "internal", e.what(), 1);
  }
}

std::string cli_help(const std::string& subcommand) {
  Parsed parsed;
  if (subcommand.empty()) return parsed.app.help();
  return parsed.app.get_subcommand(subcommand)->help();
}

std::vector<std::string> cli_flags(const std::string& subcommand) {
  Parsed parsed;
  const CLI::App* target = subcommand.empty() ? &parsed.app : parsed.app.get_subcommand(subcommand);
  std::vector<std::string> names;
  for (const CLI::Option* option : target->get_options()) names.push_back(option->get_name());
  return names;
}

}  // namespace rkbayes
