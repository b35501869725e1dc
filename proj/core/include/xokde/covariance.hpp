#pragma once

// Covariance representations and the numeric kernels that everything else
// builds on: eigenvalue repair of degenerate matrices and log-domain
// factorization (log-determinant + inverse, never a raw determinant).

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>

#include "xokde/errors.hpp"

namespace xokde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Eigenvalues whose max-normalized value falls below this are considered
// degenerate and are repaired by correct_covariance.
inline constexpr double kDegenerateEigenvalueRatio = 1e-9;

// Absolute floor used when every eigenvalue of a matrix is degenerate
// (constant-feature streams); keeps the model usable instead of failing.
inline constexpr double kAllDegenerateFloor = 1e-9;

// Dense symmetric d x d covariance.
class FullCovariance {
 public:
  static constexpr bool kDiagonal = false;

  FullCovariance() = default;
  explicit FullCovariance(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) {
      throw DimensionError("full covariance must be square");
    }
  }

  static FullCovariance Zero(Eigen::Index d) {
    return FullCovariance(Matrix::Zero(d, d));
  }
  static FullCovariance Identity(Eigen::Index d) {
    return FullCovariance(Matrix::Identity(d, d));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Matrix& matrix() { return m_; }

  // Dense view; identical representation here, diagonal expands.
  Matrix dense() const { return m_; }

  bool is_zero() const { return m_.isZero(0.0); }
  double trace() const { return m_.trace(); }

  FullCovariance operator+(const FullCovariance& o) const {
    if (o.dim() != dim()) throw DimensionError("covariance dim mismatch");
    return FullCovariance(m_ + o.m_);
  }
  FullCovariance scaled(double s) const { return FullCovariance(s * m_); }

  // Number of stored scalars; the analytic footprint model counts these.
  std::size_t scalar_count() const {
    return static_cast<std::size_t>(m_.size());
  }

 private:
  Matrix m_;
};

// Diagonal covariance stored as its d variances.
class DiagonalCovariance {
 public:
  static constexpr bool kDiagonal = true;

  DiagonalCovariance() = default;
  explicit DiagonalCovariance(Vector v) : v_(std::move(v)) {}

  static DiagonalCovariance Zero(Eigen::Index d) {
    return DiagonalCovariance(Vector::Zero(d));
  }
  static DiagonalCovariance Identity(Eigen::Index d) {
    return DiagonalCovariance(Vector::Ones(d));
  }

  Eigen::Index dim() const { return v_.size(); }
  const Vector& entries() const { return v_; }
  Vector& entries() { return v_; }

  Matrix dense() const { return v_.asDiagonal(); }

  bool is_zero() const { return v_.isZero(0.0); }
  double trace() const { return v_.sum(); }

  DiagonalCovariance operator+(const DiagonalCovariance& o) const {
    if (o.dim() != dim()) throw DimensionError("covariance dim mismatch");
    return DiagonalCovariance(v_ + o.v_);
  }
  DiagonalCovariance scaled(double s) const {
    return DiagonalCovariance(s * v_);
  }

  std::size_t scalar_count() const {
    return static_cast<std::size_t>(v_.size());
  }

 private:
  Vector v_;
};

template <class Cov>
struct CorrectionResult {
  Cov covariance;
  bool changed = false;         // at least one eigenvalue was repaired
  bool all_degenerate = false;  // nothing to average over; absolute floor used
};

namespace detail {

// Shared eigenvalue repair rule. Normalizes by the largest eigenvalue,
// replaces entries below the degeneracy ratio with 1% of the mean of the
// surviving ones; if nothing survives, floors everything.
inline bool repair_eigenvalues(Vector& lambda, bool* all_degenerate) {
  const Eigen::Index d = lambda.size();
  const double lmax = lambda.maxCoeff();
  *all_degenerate = !(lmax > 0.0) || !std::isfinite(lmax);
  if (*all_degenerate) {
    lambda.setConstant(kAllDegenerateFloor);
    return true;
  }
  double healthy_sum = 0.0;
  Eigen::Index healthy_count = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda[i] / lmax >= kDegenerateEigenvalueRatio) {
      healthy_sum += lambda[i];
      ++healthy_count;
    }
  }
  if (healthy_count == d) return false;
  if (healthy_count == 0) {
    // Cannot happen (lmax itself normalizes to 1), kept as a guard.
    lambda.setConstant(kAllDegenerateFloor);
    *all_degenerate = true;
    return true;
  }
  const double alpha = 0.01 * healthy_sum / static_cast<double>(healthy_count);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda[i] / lmax < kDegenerateEigenvalueRatio) lambda[i] = alpha;
  }
  return true;
}

}  // namespace detail

// Repairs near-singular covariances: eigendecompose, replace degenerate
// eigenvalues, reassemble. The result is strictly positive definite.
inline CorrectionResult<FullCovariance> correct_covariance(
    const FullCovariance& cov) {
  if (!cov.matrix().allFinite()) {
    throw InvalidArgumentError("covariance has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov.matrix());
  if (eig.info() != Eigen::Success) {
    throw SingularityError("eigendecomposition failed");
  }
  Vector lambda = eig.eigenvalues();
  CorrectionResult<FullCovariance> out;
  out.changed = detail::repair_eigenvalues(lambda, &out.all_degenerate);
  if (!out.changed) {
    out.covariance = cov;
  } else {
    const Matrix& q = eig.eigenvectors();
    out.covariance =
        FullCovariance(q * lambda.asDiagonal() * q.transpose());
  }
  return out;
}

// Diagonal fast path: the entries are the eigenvalues.
inline CorrectionResult<DiagonalCovariance> correct_covariance(
    const DiagonalCovariance& cov) {
  if (!cov.entries().allFinite()) {
    throw InvalidArgumentError("covariance has non-finite entries");
  }
  Vector lambda = cov.entries();
  CorrectionResult<DiagonalCovariance> out;
  out.changed = detail::repair_eigenvalues(lambda, &out.all_degenerate);
  out.covariance =
      out.changed ? DiagonalCovariance(std::move(lambda)) : cov;
  return out;
}

// Log-determinant plus verified inverse of a positive definite covariance.
template <class Cov>
struct Factorization {
  double log_det = 0.0;
  Cov inverse;
};

inline Factorization<FullCovariance> factorize(const FullCovariance& cov) {
  const Eigen::Index d = cov.dim();
  Eigen::LLT<Matrix> llt(cov.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularityError("covariance is not positive definite");
  }
  double log_det = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double pivot = l(i, i);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw SingularityError("non-positive pivot in covariance factorization");
    }
    log_det += 2.0 * std::log(pivot);
  }
  Factorization<FullCovariance> out;
  out.log_det = log_det;
  out.inverse = FullCovariance(llt.solve(Matrix::Identity(d, d)));
  return out;
}

inline Factorization<DiagonalCovariance> factorize(
    const DiagonalCovariance& cov) {
  const Eigen::Index d = cov.dim();
  double log_det = 0.0;
  Vector inv(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v = cov.entries()[i];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw SingularityError("non-positive diagonal covariance entry");
    }
    log_det += std::log(v);
    inv[i] = 1.0 / v;
  }
  return {log_det, DiagonalCovariance(std::move(inv))};
}

// x^T (cov^-1) x given a precomputed inverse.
inline double quadratic_form(const FullCovariance& inverse, const Vector& x) {
  return x.dot(inverse.matrix() * x);
}

inline double quadratic_form(const DiagonalCovariance& inverse,
                             const Vector& x) {
  return x.cwiseProduct(x).dot(inverse.entries());
}

}  // namespace xokde
