#pragma once

// Whitening transform built from a reference Gaussian (mean, covariance):
// maps the reference to (0, I) so bandwidth estimation and compression can
// work on spherized data, then maps results back.
//
// Points map as w = L^(-1/2) P^T (x - mu) with P, L the eigenvectors and
// eigenvalues of the reference covariance. The diagonal representation keeps
// P = I implicitly, so diagonal models stay diagonal under the transform.

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "xokde/covariance.hpp"
#include "xokde/errors.hpp"
#include "xokde/gaussian.hpp"

namespace xokde {

template <class Cov>
class WhiteningTransform {
 public:
  // Reference covariance must be corrected (strictly positive definite).
  WhiteningTransform(Vector center, const Cov& reference)
      : center_(std::move(center)) {
    if (reference.dim() != center_.size()) {
      throw DimensionError("whitening center/covariance dim mismatch");
    }
    if constexpr (Cov::kDiagonal) {
      eigenvalues_ = reference.entries();
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(reference.matrix());
      if (eig.info() != Eigen::Success) {
        throw SingularityError("whitening eigendecomposition failed");
      }
      eigenvalues_ = eig.eigenvalues();
      rotation_ = eig.eigenvectors();
    }
    if (!(eigenvalues_.minCoeff() > 0.0)) {
      throw SingularityError("whitening reference is not positive definite");
    }
    inv_sqrt_ = eigenvalues_.cwiseSqrt().cwiseInverse();
    sqrt_ = eigenvalues_.cwiseSqrt();
  }

  Eigen::Index dim() const { return center_.size(); }
  const Vector& center() const { return center_; }

  Vector forward_point(const Vector& x) const {
    if constexpr (Cov::kDiagonal) {
      return inv_sqrt_.cwiseProduct(x - center_);
    } else {
      return inv_sqrt_.cwiseProduct(rotation_.transpose() * (x - center_));
    }
  }

  Vector inverse_point(const Vector& w) const {
    if constexpr (Cov::kDiagonal) {
      return center_ + sqrt_.cwiseProduct(w);
    } else {
      return center_ + rotation_ * sqrt_.cwiseProduct(w);
    }
  }

  Cov forward_cov(const Cov& c) const {
    if constexpr (Cov::kDiagonal) {
      return Cov(c.entries().cwiseProduct(
          inv_sqrt_.cwiseProduct(inv_sqrt_)));
    } else {
      const Matrix t = inv_sqrt_.asDiagonal() * rotation_.transpose();
      return Cov(t * c.matrix() * t.transpose());
    }
  }

  Cov inverse_cov(const Cov& c) const {
    if constexpr (Cov::kDiagonal) {
      return Cov(c.entries().cwiseProduct(sqrt_.cwiseProduct(sqrt_)));
    } else {
      const Matrix t = rotation_ * sqrt_.asDiagonal();
      return Cov(t * c.matrix() * t.transpose());
    }
  }

  GaussianComponent<Cov> forward_gaussian(const GaussianComponent<Cov>& g)
      const {
    return {g.weight(), forward_point(g.mean()), forward_cov(g.covariance())};
  }

  GaussianComponent<Cov> inverse_gaussian(const GaussianComponent<Cov>& g)
      const {
    return {g.weight(), inverse_point(g.mean()), inverse_cov(g.covariance())};
  }

 private:
  Vector center_;
  Vector eigenvalues_;
  Vector inv_sqrt_;
  Vector sqrt_;
  Matrix rotation_;  // unused in the diagonal representation
};

template <class Cov>
WhiteningTransform<Cov> whitening_from(Vector center, const Cov& reference) {
  return WhiteningTransform<Cov>(std::move(center), reference);
}

}  // namespace xokde
