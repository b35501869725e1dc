#pragma once

// Deterministic sigma-point sets: 2d+1 weighted points reproducing a
// Gaussian's first two moments exactly. Spread parameter m = 3, so
// k = max(0, 3 - d) and the center point carries weight k/(d+k).

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "xokde/gaussian.hpp"

namespace xokde {

struct SigmaPointSet {
  std::vector<Vector> points;
  std::vector<double> weights;
  int origin = -1;  // index of the source component, when taken from a mixture
};

template <class Cov>
SigmaPointSet sigma_points(const GaussianComponent<Cov>& g) {
  const Eigen::Index d = g.dim();
  const double k = std::max(0.0, 3.0 - static_cast<double>(d));
  const double dk = static_cast<double>(d) + k;
  const double axis_weight = 1.0 / (2.0 * dk);

  SigmaPointSet out;
  out.points.reserve(static_cast<std::size_t>(2 * d + 1));
  out.weights.reserve(static_cast<std::size_t>(2 * d + 1));
  out.points.push_back(g.mean());
  out.weights.push_back(k / dk);

  if constexpr (Cov::kDiagonal) {
    const Vector& lambda = g.covariance().entries();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double step = std::sqrt(dk * std::max(lambda[j], 0.0));
      Vector p = g.mean();
      p[j] += step;
      out.points.push_back(p);
      out.weights.push_back(axis_weight);
      p[j] -= 2.0 * step;
      out.points.push_back(std::move(p));
      out.weights.push_back(axis_weight);
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g.covariance().matrix());
    const Vector& lambda = eig.eigenvalues();
    const Matrix& u = eig.eigenvectors();
    for (Eigen::Index j = 0; j < d; ++j) {
      const Vector step =
          std::sqrt(dk * std::max(lambda[j], 0.0)) * u.col(j);
      out.points.push_back(g.mean() + step);
      out.weights.push_back(axis_weight);
      out.points.push_back(g.mean() - step);
      out.weights.push_back(axis_weight);
    }
  }
  return out;
}

}  // namespace xokde
