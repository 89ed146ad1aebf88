#include "affinelab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace affinelab {

GammaParams GammaParams::make(double gamma, double delta) {
  if (!(std::isfinite(gamma) && gamma > 1.0)) {
    std::ostringstream msg;
    msg << "gamma must exceed 1 (got " << gamma << ")";
    throw ConfigError(msg.str());
  }
  if (!(std::isfinite(delta) && delta > 0.0)) {
    std::ostringstream msg;
    msg << "delta must be positive (got " << delta << ")";
    throw ConfigError(msg.str());
  }
  return GammaParams(gamma, delta, 1.0 / (gamma - 1.0));
}

double enthalpy_weight(const GammaParams& params, double r2) {
  return r2 >= 1.0 ? 0.0 : params.enthalpy_scale() * (1.0 - r2);
}

double cutoff(double r) {
  const double x = std::clamp((r - 0.25) / 0.5, 0.0, 1.0);
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double hs_norm(const Mat3& m) { return m.norm(); }

Mat3 from_row_major(const std::array<double, 9>& v) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[static_cast<std::size_t>(3 * i + j)];
  return m;
}

std::array<double, 9> to_row_major(const Mat3& m) {
  std::array<double, 9> v{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[static_cast<std::size_t>(3 * i + j)] = m(i, j);
  return v;
}

namespace {

void fix_sign(Mat3& P, int row) {
  for (int j = 0; j < 3; ++j) {
    if (P(row, j) != 0.0) {
      if (P(row, j) < 0.0) P.row(row) *= -1.0;
      return;
    }
  }
}

}  // namespace

SymEigen sym_eigen_desc(const Mat3& sym) {
  const Eigen::SelfAdjointEigenSolver<Mat3> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver did not converge");
  // Eigen returns ascending eigenvalues with eigenvectors as columns.
  SymEigen out;
  for (int k = 0; k < 3; ++k) {
    out.d(k) = solver.eigenvalues()(2 - k);
    out.P.row(k) = solver.eigenvectors().col(2 - k).transpose();
    fix_sign(out.P, k);
  }
  return out;
}

SymEigen match_frame(const SymEigen& reference, const SymEigen& next) {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int k = 0; k < 3; ++k) score += std::abs(reference.P.row(k).dot(next.P.row(perm[static_cast<std::size_t>(k)])));
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  SymEigen out;
  for (int k = 0; k < 3; ++k) {
    const int src = best[static_cast<std::size_t>(k)];
    out.P.row(k) = next.P.row(src);
    out.d(k) = next.d(src);
    if (reference.P.row(k).dot(out.P.row(k)) < 0.0) out.P.row(k) *= -1.0;
  }
  return out;
}

}  // namespace affinelab
