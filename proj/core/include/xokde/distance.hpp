#pragma once

// Distances between mixtures and between Gaussians: the unscented Hellinger
// distance (sigma-point quadrature importance-sampled from the combined
// mixture) and the closed-form Gaussian Kullback-Leibler divergence.

#include <algorithm>
#include <cmath>

#include "xokde/mixture.hpp"
#include "xokde/sigma_points.hpp"

namespace xokde {

// Unscented estimate of the Hellinger distance between two normalized
// mixtures. Sigma points are drawn from the equal-weight combined mixture
// p_c = (p1 + p2)/2 and every density is evaluated in the log domain, so
// the integrand terms are bounded by 2 and nothing overflows:
//   g(x) = (sqrt(p1) - sqrt(p2))^2 / p_c
//        = e^(l1-lc) + e^(l2-lc) - 2 e^((l1+l2)/2 - lc).
// Callers convolve point-mass components with a bandwidth first.
template <class Cov>
double hellinger(const Mixture<Cov>& p1, const Mixture<Cov>& p2) {
  if (p1.dim() != p2.dim()) throw DimensionError("mixture dim mismatch");
  const double log_half = -std::log(2.0);

  double d2 = 0.0;
  auto accumulate_from = [&](const Mixture<Cov>& source) {
    for (const auto& comp : source) {
      const double w_c = 0.5 * comp.weight();
      if (!(w_c > 0.0)) continue;
      const SigmaPointSet set = sigma_points(comp);
      double inner = 0.0;
      for (std::size_t j = 0; j < set.points.size(); ++j) {
        if (set.weights[j] == 0.0) continue;
        const double l1 = p1.log_density(set.points[j]);
        const double l2 = p2.log_density(set.points[j]);
        const double mx = std::max(l1, l2);
        if (!std::isfinite(mx)) continue;  // both densities vanished
        const double lc =
            log_half + mx + std::log(std::exp(l1 - mx) + std::exp(l2 - mx));
        const double g = std::exp(l1 - lc) + std::exp(l2 - lc) -
                         2.0 * std::exp(0.5 * (l1 + l2) - lc);
        inner += set.weights[j] * g;
      }
      d2 += 0.5 * w_c * inner;
    }
  };
  accumulate_from(p1);
  accumulate_from(p2);

  // Quadrature noise can push the estimate slightly outside [0, 1].
  d2 = std::clamp(d2, 0.0, 1.0);
  return std::sqrt(d2);
}

// KL(a || b) for Gaussians, log-domain determinants throughout:
//   1/2 [ tr(Sb^-1 Sa) + (mb-ma)^T Sb^-1 (mb-ma) - d + ln|Sb| - ln|Sa| ]
template <class Cov>
double kl_divergence(const GaussianComponent<Cov>& a,
                     const GaussianComponent<Cov>& b) {
  if (a.dim() != b.dim()) throw DimensionError("component dim mismatch");
  const auto fb = factorize(b.covariance());
  const auto fa = factorize(a.covariance());
  const Vector delta = b.mean() - a.mean();
  double trace_term;
  if constexpr (Cov::kDiagonal) {
    trace_term = fb.inverse.entries().dot(a.covariance().entries());
  } else {
    trace_term = (fb.inverse.matrix() * a.covariance().matrix()).trace();
  }
  return 0.5 * (trace_term + quadratic_form(fb.inverse, delta) -
                static_cast<double>(a.dim()) + fb.log_det - fa.log_det);
}

}  // namespace xokde
