#pragma once

#include <string>

#include "rkbayes/errors.hpp"

namespace rkbayes {

enum class LossKind { quadratic, absolute, vapnik, huber };

// A per-measurement loss V(r) with its noise-density reading: the density of
// the measurement error is proportional to exp(-V(r) / (2 sigma^2)).
struct LossSpec {
  LossKind kind = LossKind::quadratic;
  double epsilon = 0.0;  // vapnik insensitivity half-width
  double delta = 1.0;    // huber quadratic/linear transition
  double scale = 1.0;    // multiplies the raw loss
  double sigma = 1.0;    // noise scale the spec was calibrated against

  static LossSpec quadratic() { return {LossKind::quadratic, 0.0, 1.0, 1.0, 1.0}; }
  static LossSpec absolute() { return {LossKind::absolute, 0.0, 1.0, 1.0, 1.0}; }
  static LossSpec vapnik(double epsilon);
  static LossSpec huber(double delta);
};

// Parse a CLI loss description: l2 | l1 | vapnik:<eps> | huber:<delta>.
LossSpec parse_loss(const std::string& text);
std::string to_string(const LossSpec& spec);

// V(r): quadratic r^2, absolute |r|, vapnik max(0, |r|-eps),
// huber r^2/2 (|r|<=delta) else delta|r|-delta^2/2; all times spec.scale.
double loss_value(const LossSpec& spec, double r);

// Smoothed loss used by the continuation solver: the |.| kink (absolute) and
// the tube edges (vapnik) are replaced by quadratic caps of width mu.
// Quadratic and huber losses ignore mu.
double smoothed_loss_value(const LossSpec& spec, double r, double mu);
double smoothed_loss_derivative(const LossSpec& spec, double r, double mu);
double smoothed_loss_curvature(const LossSpec& spec, double r, double mu);

// The absolute loss scaled by 2*sqrt(2)*sigma, so that
// exp(-V(r)/(2 sigma^2)) is a Laplace density with variance sigma^2.
LossSpec calibrated_absolute(double sigma);

// Laplace density with variance sigma^2: exp(-sqrt(2)|e|/sigma) / (sqrt(2) sigma).
double laplace_density(double e, double sigma);

// Integrand of the scale-mixture representation: a zero mean Gaussian density
// with variance tau at e, times an exponential density with mean sigma^2 at tau.
// Integrating over tau in (0, inf) recovers laplace_density(e, sigma).
double mixture_integrand(double e, double tau, double sigma);

}  // namespace rkbayes
