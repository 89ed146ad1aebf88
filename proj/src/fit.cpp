#include "affinelab/fit.hpp"

#include "affinelab/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace affinelab {

DecayFit log_linear_fit(std::span<const double> tau, std::span<const double> values, double tau_lo,
                        double tau_hi) {
  if (tau.size() != values.size()) throw ConfigError("decay fit: tau and value series differ in length");
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    if (tau[k] < tau_lo || tau[k] > tau_hi) continue;
    if (!(values[k] > 0.0)) {
      std::ostringstream msg;
      msg << "decay fit: nonpositive value " << values[k] << " at tau = " << tau[k];
      throw ConfigError(msg.str());
    }
    const double y = std::log(values[k]);
    n += 1.0;
    sx += tau[k];
    sy += y;
    sxx += tau[k] * tau[k];
    sxy += tau[k] * y;
  }
  if (n < 2.0) throw ConfigError("decay fit: fewer than two samples in the fit window");
  const double cov = sxy - sx * sy / n;
  const double var = sxx - sx * sx / n;
  if (!(var > 0.0)) throw ConfigError("decay fit: degenerate tau window");

  DecayFit fit;
  fit.rate = cov / var;
  fit.intercept = (sy - fit.rate * sx) / n;
  fit.points = static_cast<int>(n);

  const double mean_y = sy / n;
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    if (tau[k] < tau_lo || tau[k] > tau_hi) continue;
    const double y = std::log(values[k]);
    const double model = fit.intercept + fit.rate * tau[k];
    ss_tot += (y - mean_y) * (y - mean_y);
    ss_res += (y - model) * (y - model);
  }
  // A constant series is fitted perfectly by a zero slope.
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

DecayFit decay_fit(std::span<const double> tau, std::span<const double> values) {
  if (tau.empty()) throw ConfigError("decay fit: empty series");
  const auto [lo, hi] = std::minmax_element(tau.begin(), tau.end());
  const double mid = *lo + 0.5 * (*hi - *lo);
  return log_linear_fit(tau, values, mid, *hi);
}

}  // namespace affinelab
