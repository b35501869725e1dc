#pragma once

// A weighted Gaussian component with a lazily filled factorization cache.
// Density evaluation happens entirely in the log domain.

#include <cmath>
#include <mutex>
#include <optional>
#include <utility>

#include "xokde/covariance.hpp"
#include "xokde/errors.hpp"

namespace xokde {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

template <class Cov>
class GaussianComponent {
 public:
  GaussianComponent() = default;
  GaussianComponent(double weight, Vector mean, Cov covariance)
      : weight_(weight), mean_(std::move(mean)), cov_(std::move(covariance)) {
    if (cov_.dim() != mean_.size()) {
      throw DimensionError("component mean/covariance dim mismatch");
    }
  }

  GaussianComponent(const GaussianComponent& o)
      : weight_(o.weight_), mean_(o.mean_), cov_(o.cov_) {
    std::lock_guard<std::mutex> lock(o.cache_mutex_);
    cache_ = o.cache_;
  }
  GaussianComponent& operator=(const GaussianComponent& o) {
    if (this != &o) {
      weight_ = o.weight_;
      mean_ = o.mean_;
      cov_ = o.cov_;
      std::scoped_lock lock(cache_mutex_, o.cache_mutex_);
      cache_ = o.cache_;
    }
    return *this;
  }
  GaussianComponent(GaussianComponent&& o) noexcept
      : weight_(o.weight_),
        mean_(std::move(o.mean_)),
        cov_(std::move(o.cov_)),
        cache_(std::move(o.cache_)) {}
  GaussianComponent& operator=(GaussianComponent&& o) noexcept {
    weight_ = o.weight_;
    mean_ = std::move(o.mean_);
    cov_ = std::move(o.cov_);
    cache_ = std::move(o.cache_);
    return *this;
  }

  Eigen::Index dim() const { return mean_.size(); }

  double weight() const { return weight_; }
  void set_weight(double w) { weight_ = w; }
  void scale_weight(double s) { weight_ *= s; }

  const Vector& mean() const { return mean_; }
  // The cache depends only on the covariance; moving the mean keeps it.
  void set_mean(Vector m) {
    if (m.size() != mean_.size()) throw DimensionError("mean dim mismatch");
    mean_ = std::move(m);
  }

  const Cov& covariance() const { return cov_; }
  void set_covariance(Cov c) {
    if (c.dim() != mean_.size()) {
      throw DimensionError("covariance dim mismatch");
    }
    cov_ = std::move(c);
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_.reset();
  }

  // Exact-zero covariance marks a raw data point. Degeneracy is never
  // decided through a floating determinant.
  bool is_dirac() const { return cov_.is_zero(); }

  double log_det() const { return factorization().log_det; }
  const Cov& inverse() const { return factorization().inverse; }

  // ln N(x; mean, cov) = -d/2 ln(2 pi) - 1/2 ln|cov| - 1/2 (x-m)^T cov^-1 (x-m)
  double log_density(const Vector& x) const {
    const auto& f = factorization();
    const Vector delta = x - mean_;
    return -0.5 * (static_cast<double>(dim()) * kLogTwoPi + f.log_det +
                   quadratic_form(f.inverse, delta));
  }

  // Density under cov + extra (kernel convolution); bypasses the cache.
  double log_density(const Vector& x, const Cov& extra) const {
    const auto f = factorize(cov_ + extra);
    const Vector delta = x - mean_;
    return -0.5 * (static_cast<double>(dim()) * kLogTwoPi + f.log_det +
                   quadratic_form(f.inverse, delta));
  }

  // Fills the cache eagerly so the component can be shared read-only.
  void warm_cache() const { factorization(); }

 private:
  const Factorization<Cov>& factorization() const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    if (!cache_) {
      if (cov_.is_zero()) {
        throw SingularityError(
            "point-mass component evaluated without a kernel");
      }
      cache_ = factorize(cov_);
    }
    return *cache_;
  }

  double weight_ = 0.0;
  Vector mean_;
  Cov cov_;
  mutable std::mutex cache_mutex_;
  mutable std::optional<Factorization<Cov>> cache_;
};

using FullGaussian = GaussianComponent<FullCovariance>;
using DiagonalGaussian = GaussianComponent<DiagonalCovariance>;

}  // namespace xokde
