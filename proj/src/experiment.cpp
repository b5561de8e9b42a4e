#include "rkbayes/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rkbayes/gauss.hpp"
#include "rkbayes/rng.hpp"
#include "rkbayes/solver.hpp"

namespace rkbayes {

std::string to_string(Method m) { return m == Method::l2_oml ? "l2-oml" : "l1-bayes"; }

Method parse_method(const std::string& text) {
  if (text == "l2-oml") return Method::l2_oml;
  if (text == "l1-bayes") return Method::l1_bayes;
  throw InputError("unknown method '" + text + "' (expected l2-oml or l1-bayes)");
}

double true_function(double x) { return std::exp(std::sin(8.0 * x)); }

namespace {

void validate(const ExperimentConfig& config) {
  if (config.runs < 1) throw InputError("experiment: runs must be >= 1");
  if (!(config.noise_variance > 0.0)) throw InputError("experiment: noise variance must be positive");
  if (config.outlier_probability < 0.0 || config.outlier_probability > 1.0)
    throw InputError("experiment: outlier probability must lie in [0, 1]");
  if (!(config.outlier_magnitude > 0.0)) throw InputError("experiment: outlier magnitude must be positive");
  if (config.grid_size < 2) throw InputError("experiment: grid size must be >= 2");
  if (config.methods.empty()) throw InputError("experiment: no methods selected");
  if (config.sigma2_override && !(*config.sigma2_override > 0.0))
    throw InputError("experiment: sigma2 override must be positive");
}

std::vector<double> sample_grid(int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return xs;
}

double quantile(const std::vector<double>& sorted, double p) {
  const double idx = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

}  // namespace

Dataset generate(const ExperimentConfig& config, int run_index) {
  validate(config);
  if (run_index < 0 || run_index >= config.runs) throw InputError("generate: run index out of range");

  Dataset data;
  data.x = sample_grid(config.grid_size);
  data.y.resize(config.grid_size);

  const double noise_std = std::sqrt(config.noise_variance);
  Rng noise(derive_seed(config.master_seed, static_cast<std::uint64_t>(run_index), 0));
  for (int i = 0; i < config.grid_size; ++i)
    data.y(i) = true_function(data.x[static_cast<std::size_t>(i)]) + noise_std * noise.normal();

  if (config.outliers) {
    Rng offsets(derive_seed(config.master_seed, static_cast<std::uint64_t>(run_index), 1));
    for (int i = 0; i < config.grid_size; ++i) {
      const double hit = offsets.uniform();
      const double sign = offsets.uniform() < 0.5 ? 1.0 : -1.0;
      if (hit < config.outlier_probability) data.y(i) += sign * config.outlier_magnitude;
    }
  }
  return data;
}

double relative_error(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
  if (truth.size() != estimate.size()) throw InputError("relative_error: size mismatch");
  const double denom = truth.squaredNorm();
  if (!(denom > 0.0)) throw InputError("relative_error: truth vector is zero");
  return std::sqrt((truth - estimate).squaredNorm() / denom);
}

RunReport run_experiment(const ExperimentConfig& config) {
  validate(config);

  const std::vector<double> xs = sample_grid(config.grid_size);
  const GramMatrix g = gram(KernelSpec::cubic_spline_shifted(), xs);
  Eigen::VectorXd truth(config.grid_size);
  for (int i = 0; i < config.grid_size; ++i) truth(i) = true_function(xs[static_cast<std::size_t>(i)]);

  const double sigma2 = config.sigma2_override.value_or(config.noise_variance);
  const double sigma = std::sqrt(sigma2);

  RunReport report;
  report.master_seed = config.master_seed;
  report.outliers = config.outliers;
  report.runs = config.runs;
  report.sigma2_used = sigma2;

  for (int run = 0; run < config.runs; ++run) {
    const Dataset data = generate(config, run);
    for (Method method : config.methods) {
      try {
        Eigen::VectorXd fitted;
        if (method == Method::l2_oml) {
          const OmlEstimate oml = oml_lambda(g, data.y, sigma2);
          const RepresenterEstimate est = solve_quadratic(g, data.y, sigma2 / oml.lambda);
          fitted = evaluate(est, xs);
        } else {
          ChainConfig cc = config.chain;
          cc.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(run), 2);
          const PosteriorChain chain = run_chain(cc, g, data.y, sigma2);
          const double lambda_hat = posterior_lambda(chain).mean;
          const double gamma = sigma2 / lambda_hat;
          ChainStats stats;
          stats.run = run;
          stats.acceptance = chain.acceptance_rate;
          stats.ess = chain.ess_lambda;
          stats.lambda_mean = lambda_hat;
          if (config.estimator == PointEstimator::map) {
            const std::vector<LossSpec> losses(static_cast<std::size_t>(config.grid_size),
                                               calibrated_absolute(sigma));
            const RepresenterEstimate est = solve_general(g, data.y, losses, gamma);
            fitted = evaluate(est, xs);
          } else {
            const MinVarianceEstimate mv = min_variance_g(chain, g, data.y);
            stats.skipped = mv.skipped;
            const MinVarianceFunction fn = min_variance_function(mv.g_mean, g);
            fitted.resize(config.grid_size);
            for (int i = 0; i < config.grid_size; ++i)
              fitted(i) = fn(xs[static_cast<std::size_t>(i)]);
          }
          report.chains.push_back(stats);
        }
        report.records.push_back({run, method, relative_error(truth, fitted)});
      } catch (const NumericalError&) {
        report.failures.emplace_back(run, method);
      } catch (const ConvergenceError&) {
        report.failures.emplace_back(run, method);
      }
    }
  }

  const std::size_t attempts = static_cast<std::size_t>(config.runs) * config.methods.size();
  if (report.failures.size() * 10 > attempts)
    throw NumericalError("experiment: more than 10% of fits failed (" +
                         std::to_string(report.failures.size()) + " of " +
                         std::to_string(attempts) + ")");

  for (Method method : config.methods) {
    std::vector<double> errs;
    for (const RunRecord& r : report.records)
      if (r.method == method) errs.push_back(r.rel_error);
    MethodSummary s = summarize(std::move(errs));
    s.failures = static_cast<int>(
        std::count_if(report.failures.begin(), report.failures.end(),
                      [&](const auto& f) { return f.second == method; }));
    report.summary[method] = s;
  }
  return report;
}

MethodSummary summarize(std::vector<double> errors) {
  MethodSummary s;
  if (errors.empty()) return s;
  double acc = 0.0;
  for (double e : errors) acc += e;
  s.mean = acc / static_cast<double>(errors.size());
  std::sort(errors.begin(), errors.end());
  s.q1 = quantile(errors, 0.25);
  s.median = quantile(errors, 0.5);
  s.q3 = quantile(errors, 0.75);
  return s;
}

void export_csv(const RunReport& report, std::ostream& out) {
  out << "run,method,rel_error\n";
  for (const RunRecord& r : report.records)
    out << r.run << "," << to_string(r.method) << "," << format_double(r.rel_error) << "\n";
}

std::string export_csv(const RunReport& report) {
  std::ostringstream out;
  export_csv(report, out);
  return out.str();
}

std::vector<RunRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "run,method,rel_error")
    throw InputError("experiment csv: expected header 'run,method,rel_error'");
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw InputError("experiment csv: malformed row on line " + std::to_string(line_no));
    RunRecord r;
    try {
      r.run = std::stoi(line.substr(0, c1));
      r.method = parse_method(line.substr(c1 + 1, c2 - c1 - 1));
      r.rel_error = std::stod(line.substr(c2 + 1));
    } catch (const std::logic_error&) {
      throw InputError("experiment csv: malformed row on line " + std::to_string(line_no));
    }
    records.push_back(r);
  }
  return records;
}

std::string summary_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["seed"] = report.master_seed;
  j["runs"] = report.runs;
  j["outliers"] = report.outliers;
  j["sigma2"] = report.sigma2_used;
  nlohmann::ordered_json methods;
  for (const auto& [method, s] : report.summary) {
    methods[to_string(method)] = {
        {"mean", s.mean}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"failures", s.failures}};
  }
  j["methods"] = methods;
  if (!report.chains.empty()) {
    double acc_min = 1.0;
    double acc_mean = 0.0;
    double ess_min = std::numeric_limits<double>::infinity();
    double ess_mean = 0.0;
    std::size_t skipped = 0;
    for (const ChainStats& c : report.chains) {
      acc_min = std::min(acc_min, c.acceptance);
      acc_mean += c.acceptance;
      ess_min = std::min(ess_min, c.ess);
      ess_mean += c.ess;
      skipped += c.skipped;
    }
    const double n = static_cast<double>(report.chains.size());
    j["chains"] = {{"acceptance_min", acc_min},
                   {"acceptance_mean", acc_mean / n},
                   {"ess_min", ess_min},
                   {"ess_mean", ess_mean / n},
                   {"skipped", skipped}};
  }
  return j.dump(2);
}

}  // namespace rkbayes
