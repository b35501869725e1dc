#pragma once

// Plug-in optimal bandwidth selection. The pipeline whitens the model so
// the bandwidth structure F becomes the identity, estimates the density
// roughness through a pilot-smoothed pairwise functional, converts it to
// the optimal scale, and maps the resulting isotropic bandwidth back to
// data space. A zero or non-finite scale falls back to the whitened
// identity so point masses always receive some smoothing.

#include <cmath>
#include <numbers>
#include <utility>

#include "xokde/covariance.hpp"
#include "xokde/errors.hpp"
#include "xokde/mixture.hpp"
#include "xokde/whitening.hpp"

namespace xokde {

template <class Cov>
struct BandwidthState {
  Cov h_opt;
  bool fallback_used = false;
};

// (4 / ((d+2) N))^(2/(d+4)); strictly decreasing in N for fixed d.
inline double pilot_factor(Eigen::Index d, double n_eff) {
  const double dd = static_cast<double>(d);
  return std::pow(4.0 / ((dd + 2.0) * n_eff), 2.0 / (dd + 4.0));
}

// Pilot bandwidth G: the model covariance shrunk by the pilot factor.
template <class Cov>
Cov pilot_bandwidth(const Cov& sample_cov, double n_eff) {
  if (!(n_eff >= 1.0)) {
    throw InvalidArgumentError("pilot bandwidth needs n_eff >= 1");
  }
  return sample_cov.scaled(pilot_factor(sample_cov.dim(), n_eff));
}

// Roughness functional R^ of a whitened mixture (structure F = I) under an
// isotropic pilot bandwidth G = g I. For every component pair, with
// S_gi = G + S_i and A = (S_gi + S_gj)^-1, D = m_i - m_j, m = D^T A D:
//   R^ = sum_ij w_i w_j N(D; 0, A^-1) [2 tr(A^2)(1 - 2m) + tr(A)^2 (1 - m)^2]
// The Gaussian factor is evaluated in the log domain.
template <class Cov>
double roughness(const Mixture<Cov>& whitened, double pilot_scale) {
  const Eigen::Index d = whitened.dim();
  const std::size_t n = whitened.size();
  const double log_norm_base = static_cast<double>(d) * kLogTwoPi;

  if constexpr (Cov::kDiagonal) {
    std::vector<Vector> smoothed(n);
    for (std::size_t i = 0; i < n; ++i) {
      smoothed[i] =
          (whitened[i].covariance().entries().array() + pilot_scale).matrix();
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        double log_det = 0.0, tr_a = 0.0, tr_a2 = 0.0, m = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) {
          const double s = smoothed[i][c] + smoothed[j][c];
          const double a = 1.0 / s;
          const double delta =
              whitened[i].mean()[c] - whitened[j].mean()[c];
          log_det += std::log(s);
          tr_a += a;
          tr_a2 += a * a;
          m += delta * delta * a;
        }
        const double log_phi = -0.5 * (log_norm_base + log_det + m);
        const double bracket =
            2.0 * tr_a2 * (1.0 - 2.0 * m) + tr_a * tr_a * (1.0 - m) * (1.0 - m);
        const double term = whitened[i].weight() * whitened[j].weight() *
                            std::exp(log_phi) * bracket;
        total += (i == j) ? term : 2.0 * term;
      }
    }
    return total;
  } else {
    std::vector<Matrix> smoothed(n);
    for (std::size_t i = 0; i < n; ++i) {
      smoothed[i] = whitened[i].covariance().matrix() +
                    pilot_scale * Matrix::Identity(d, d);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const auto f = factorize(FullCovariance(smoothed[i] + smoothed[j]));
        const Matrix& a = f.inverse.matrix();
        const Vector delta = whitened[i].mean() - whitened[j].mean();
        const double m = delta.dot(a * delta);
        const double tr_a = a.trace();
        const double tr_a2 = a.squaredNorm();  // tr(A^2) for symmetric A
        const double log_phi = -0.5 * (log_norm_base + f.log_det + m);
        const double bracket =
            2.0 * tr_a2 * (1.0 - 2.0 * m) + tr_a * tr_a * (1.0 - m) * (1.0 - m);
        const double term = whitened[i].weight() * whitened[j].weight() *
                            std::exp(log_phi) * bracket;
        total += (i == j) ? term : 2.0 * term;
      }
    }
    return total;
  }
}

// beta_opt = [d (4 pi)^(d/2) N R]^(-1/(d+4)); 0 signals the caller to take
// the identity-bandwidth fallback.
inline double optimal_scale(Eigen::Index d, double n_eff, double rough) {
  const double dd = static_cast<double>(d);
  const double product =
      dd * std::pow(4.0 * std::numbers::pi, dd / 2.0) * n_eff * rough;
  if (!(product > 0.0) || !std::isfinite(product)) return 0.0;
  return std::pow(product, -1.0 / (dd + 4.0));
}

// Final pipeline step, separated so a forced roughness (e.g. zero) can be
// injected: converts a roughness value into the dewhitened bandwidth.
template <class Cov>
BandwidthState<Cov> bandwidth_from_roughness(
    const WhiteningTransform<Cov>& whitening, double n_eff, double rough) {
  const Eigen::Index d = whitening.dim();
  const double beta = optimal_scale(d, n_eff, rough);
  BandwidthState<Cov> out;
  out.fallback_used = !(beta > 0.0) || !std::isfinite(beta);
  const double scale = out.fallback_used ? 1.0 : beta * beta;
  out.h_opt = whitening.inverse_cov(Cov::Identity(d).scaled(scale));
  return out;
}

// Whiten, estimate roughness with F = I, scale, dewhiten.
template <class Cov>
BandwidthState<Cov> estimate_bandwidth(const Mixture<Cov>& sample_mixture,
                                       double n_eff) {
  if (!(n_eff >= 2.0)) {
    throw InsufficientSamplesError(
        "bandwidth estimation needs at least two effective samples");
  }
  const auto whole = whole_model_gaussian(sample_mixture);
  const Cov reference = correct_covariance(whole.covariance()).covariance;
  const WhiteningTransform<Cov> whitening(whole.mean(), reference);
  const Mixture<Cov> whitened = forward_mixture(whitening, sample_mixture);
  const double g = pilot_factor(sample_mixture.dim(), n_eff);
  const double rough = roughness(whitened, g);
  return bandwidth_from_roughness(whitening, n_eff, rough);
}

}  // namespace xokde
