#pragma once

// Gaussian mixtures: the common currency of every operation in the library.
// Provides normalization, stable log-density via log-sum-exp, kernel
// convolution, sub-mixture extraction, and two-moment matching.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "xokde/covariance.hpp"
#include "xokde/errors.hpp"
#include "xokde/gaussian.hpp"
#include "xokde/whitening.hpp"

namespace xokde {

template <class Cov>
class Mixture {
 public:
  Mixture() = default;
  explicit Mixture(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  bool empty() const { return components_.empty(); }

  const GaussianComponent<Cov>& operator[](std::size_t i) const {
    return components_[i];
  }
  GaussianComponent<Cov>& operator[](std::size_t i) { return components_[i]; }

  const std::vector<GaussianComponent<Cov>>& components() const {
    return components_;
  }

  auto begin() const { return components_.begin(); }
  auto end() const { return components_.end(); }

  void add(GaussianComponent<Cov> c) {
    if (dim_ == 0 && components_.empty()) dim_ = c.dim();
    if (c.dim() != dim_) throw DimensionError("component dim mismatch");
    components_.push_back(std::move(c));
  }

  void remove(std::size_t i) {
    components_.erase(components_.begin() + static_cast<std::ptrdiff_t>(i));
  }

  double weight_sum() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.weight();
    return s;
  }

  void normalize() {
    const double s = weight_sum();
    if (!(s > 0.0)) {
      throw InvalidArgumentError("cannot normalize zero-mass mixture");
    }
    for (auto& c : components_) c.scale_weight(1.0 / s);
  }

  Mixture normalized() const {
    Mixture m = *this;
    m.normalize();
    return m;
  }

  // ln sum_i w_i N(x; m_i, S_i), max-shifted so nothing underflows.
  double log_density(const Vector& x) const {
    std::vector<double> terms;
    terms.reserve(components_.size());
    for (const auto& c : components_) {
      if (c.weight() <= 0.0) continue;
      terms.push_back(std::log(c.weight()) + c.log_density(x));
    }
    return log_sum_exp(terms);
  }

  // Same, with every component convolved by an extra kernel covariance.
  double log_density(const Vector& x, const Cov& extra) const {
    std::vector<double> terms;
    terms.reserve(components_.size());
    for (const auto& c : components_) {
      if (c.weight() <= 0.0) continue;
      terms.push_back(std::log(c.weight()) + c.log_density(x, extra));
    }
    return log_sum_exp(terms);
  }

  // Convolution with a kernel: covariances shift by h, weights unchanged.
  Mixture convolved(const Cov& h) const {
    Mixture out(dim_);
    out.components_.reserve(components_.size());
    for (const auto& c : components_) {
      out.components_.emplace_back(c.weight(), c.mean(), c.covariance() + h);
    }
    return out;
  }

  Mixture sub_mixture(std::span<const std::size_t> indices) const {
    Mixture out(dim_);
    out.components_.reserve(indices.size());
    for (std::size_t i : indices) out.components_.push_back(components_[i]);
    return out;
  }

  void warm_caches() const {
    for (const auto& c : components_) c.warm_cache();
  }

  static double log_sum_exp(std::span<const double> terms) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;  // empty or all -inf
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
  }

 private:
  Eigen::Index dim_ = 0;
  std::vector<GaussianComponent<Cov>> components_;
};

namespace detail {

// Spread contribution of one component about the pooled mean. Centered form:
// w * (S_i + (m_i - mu)(m_i - mu)^T), diagonal keeps only the diagonal.
inline void add_spread(Matrix& acc, double w, const FullCovariance& cov,
                       const Vector& centered_mean) {
  acc += w * (cov.matrix() +
              centered_mean * centered_mean.transpose());
}

inline void add_spread(Vector& acc, double w, const DiagonalCovariance& cov,
                       const Vector& centered_mean) {
  acc += w * (cov.entries() +
              centered_mean.cwiseProduct(centered_mean));
}

}  // namespace detail

// Single Gaussian matching the first two moments of the selected components.
template <class Cov>
GaussianComponent<Cov> moment_match(const Mixture<Cov>& m,
                                    std::span<const std::size_t> indices) {
  if (indices.empty()) {
    throw InvalidArgumentError("moment_match over empty index set");
  }
  const Eigen::Index d = m.dim();
  double w_hat = 0.0;
  Vector mu_hat = Vector::Zero(d);
  for (std::size_t i : indices) {
    w_hat += m[i].weight();
    mu_hat += m[i].weight() * m[i].mean();
  }
  if (!(w_hat > 0.0)) {
    throw InvalidArgumentError("moment_match over zero total weight");
  }
  mu_hat /= w_hat;

  if constexpr (Cov::kDiagonal) {
    Vector spread = Vector::Zero(d);
    for (std::size_t i : indices) {
      detail::add_spread(spread, m[i].weight(), m[i].covariance(),
                         Vector(m[i].mean() - mu_hat));
    }
    return {w_hat, std::move(mu_hat), Cov(spread / w_hat)};
  } else {
    Matrix spread = Matrix::Zero(d, d);
    for (std::size_t i : indices) {
      detail::add_spread(spread, m[i].weight(), m[i].covariance(),
                         Vector(m[i].mean() - mu_hat));
    }
    return {w_hat, std::move(mu_hat), Cov(spread / w_hat)};
  }
}

template <class Cov>
GaussianComponent<Cov> moment_match(const Mixture<Cov>& m) {
  std::vector<std::size_t> all(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) all[i] = i;
  return moment_match(m, all);
}

// Single Gaussian approximating the entire model; supplies the bandwidth
// structure and the whitening reference.
template <class Cov>
GaussianComponent<Cov> whole_model_gaussian(const Mixture<Cov>& m) {
  if (m.empty()) {
    throw InvalidArgumentError("whole_model_gaussian of empty mixture");
  }
  return moment_match(m);
}

template <class Cov>
Mixture<Cov> forward_mixture(const WhiteningTransform<Cov>& t,
                             const Mixture<Cov>& m) {
  Mixture<Cov> out(m.dim());
  for (const auto& c : m) out.add(t.forward_gaussian(c));
  return out;
}

template <class Cov>
Mixture<Cov> inverse_mixture(const WhiteningTransform<Cov>& t,
                             const Mixture<Cov>& m) {
  Mixture<Cov> out(m.dim());
  for (const auto& c : m) out.add(t.inverse_gaussian(c));
  return out;
}

using FullMixture = Mixture<FullCovariance>;
using DiagonalMixture = Mixture<DiagonalCovariance>;

}  // namespace xokde
