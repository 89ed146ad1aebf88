// Log-linear least squares for exponential decay rates.
#pragma once

#include <span>

namespace affinelab {

struct DecayFit {
  double rate = 0.0;       // slope of log s against tau
  double intercept = 0.0;  // log s at tau = 0
  double r_squared = 1.0;
  int points = 0;
};

/// Fit over the samples with tau in [tau_lo, tau_hi]. Throws ConfigError on
/// fewer than two points or a nonpositive value inside the window.
DecayFit log_linear_fit(std::span<const double> tau, std::span<const double> values, double tau_lo,
                        double tau_hi);

/// Fit over the final half of the tau range.
DecayFit decay_fit(std::span<const double> tau, std::span<const double> values);

}  // namespace affinelab
