#include "rkbayes/loss.hpp"

#include <cmath>

namespace rkbayes {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
}  // namespace

LossSpec LossSpec::vapnik(double epsilon) {
  if (epsilon < 0.0) throw InputError("vapnik epsilon must be nonnegative");
  return {LossKind::vapnik, epsilon, 1.0, 1.0, 1.0};
}

LossSpec LossSpec::huber(double delta) {
  if (!(delta > 0.0)) throw InputError("huber delta must be positive");
  return {LossKind::huber, 0.0, delta, 1.0, 1.0};
}

LossSpec parse_loss(const std::string& text) {
  if (text == "l2") return LossSpec::quadratic();
  if (text == "l1") return LossSpec::absolute();
  if (text.rfind("vapnik:", 0) == 0) {
    try {
      return LossSpec::vapnik(std::stod(text.substr(7)));
    } catch (const std::logic_error&) {
      throw InputError("malformed vapnik epsilon in loss spec '" + text + "'");
    }
  }
  if (text.rfind("huber:", 0) == 0) {
    try {
      return LossSpec::huber(std::stod(text.substr(6)));
    } catch (const std::logic_error&) {
      throw InputError("malformed huber delta in loss spec '" + text + "'");
    }
  }
  throw InputError("unknown loss '" + text + "' (expected l2, l1, vapnik:<eps> or huber:<delta>)");
}

std::string to_string(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::quadratic: return "l2";
    case LossKind::absolute: return "l1";
    case LossKind::vapnik: return "vapnik:" + std::to_string(spec.epsilon);
    case LossKind::huber: return "huber:" + std::to_string(spec.delta);
  }
  return "?";
}

double loss_value(const LossSpec& spec, double r) {
  switch (spec.kind) {
    case LossKind::quadratic:
      return spec.scale * r * r;
    case LossKind::absolute:
      return spec.scale * std::abs(r);
    case LossKind::vapnik:
      return spec.scale * std::max(0.0, std::abs(r) - spec.epsilon);
    case LossKind::huber: {
      const double a = std::abs(r);
      return spec.scale * (a <= spec.delta ? 0.5 * r * r : spec.delta * a - 0.5 * spec.delta * spec.delta);
    }
  }
  throw InputError("unhandled loss kind");
}

namespace {
inline double sign_of(double r) { return r < 0.0 ? -1.0 : 1.0; }
}  // namespace

double smoothed_loss_value(const LossSpec& spec, double r, double mu) {
  switch (spec.kind) {
    case LossKind::quadratic:
    case LossKind::huber:
      return loss_value(spec, r);
    case LossKind::absolute: {
      const double a = std::abs(r);
      if (mu <= 0.0 || a > mu) return spec.scale * (mu <= 0.0 ? a : a - 0.5 * mu);
      return spec.scale * (r * r / (2.0 * mu));
    }
    case LossKind::vapnik: {
      const double a = std::abs(r) - spec.epsilon;
      if (a <= 0.0) return 0.0;
      if (mu <= 0.0 || a > mu) return spec.scale * (mu <= 0.0 ? a : a - 0.5 * mu);
      return spec.scale * (a * a / (2.0 * mu));
    }
  }
  throw InputError("unhandled loss kind");
}

double smoothed_loss_derivative(const LossSpec& spec, double r, double mu) {
  switch (spec.kind) {
    case LossKind::quadratic:
      return spec.scale * 2.0 * r;
    case LossKind::huber: {
      const double a = std::abs(r);
      return spec.scale * (a <= spec.delta ? r : spec.delta * sign_of(r));
    }
    case LossKind::absolute: {
      const double a = std::abs(r);
      if (mu > 0.0 && a <= mu) return spec.scale * r / mu;
      return spec.scale * sign_of(r);
    }
    case LossKind::vapnik: {
      const double a = std::abs(r) - spec.epsilon;
      if (a <= 0.0) return 0.0;
      if (mu > 0.0 && a <= mu) return spec.scale * sign_of(r) * a / mu;
      return spec.scale * sign_of(r);
    }
  }
  throw InputError("unhandled loss kind");
}

double smoothed_loss_curvature(const LossSpec& spec, double r, double mu) {
  switch (spec.kind) {
    case LossKind::quadratic:
      return spec.scale * 2.0;
    case LossKind::huber:
      return spec.scale * (std::abs(r) <= spec.delta ? 1.0 : 0.0);
    case LossKind::absolute:
      return (mu > 0.0 && std::abs(r) <= mu) ? spec.scale / mu : 0.0;
    case LossKind::vapnik: {
      const double a = std::abs(r) - spec.epsilon;
      return (mu > 0.0 && a > 0.0 && a <= mu) ? spec.scale / mu : 0.0;
    }
  }
  throw InputError("unhandled loss kind");
}

LossSpec calibrated_absolute(double sigma) {
  if (!(sigma > 0.0)) throw InputError("calibrated_absolute: sigma must be positive");
  LossSpec spec = LossSpec::absolute();
  spec.scale = 2.0 * kSqrt2 * sigma;
  spec.sigma = sigma;
  return spec;
}

double laplace_density(double e, double sigma) {
  if (!(sigma > 0.0)) throw InputError("laplace_density: sigma must be positive");
  return std::exp(-kSqrt2 * std::abs(e) / sigma) / (kSqrt2 * sigma);
}

double mixture_integrand(double e, double tau, double sigma) {
  if (!(tau > 0.0)) throw InputError("mixture_integrand: tau must be positive");
  if (!(sigma > 0.0)) throw InputError("mixture_integrand: sigma must be positive");
  const double sigma2 = sigma * sigma;
  const double gauss = std::exp(-e * e / (2.0 * tau)) / std::sqrt(2.0 * kPi * tau);
  const double expo = std::exp(-tau / sigma2) / sigma2;
  return gauss * expo;
}

}  // namespace rkbayes
