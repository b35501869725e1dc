#pragma once

// Shared test helpers: seeded random model generators and the independent
// oracles the unit and acceptance suites check against (closed-form
// two-Gaussian Hellinger, quadrature, brute-force partitioning, and the
// general-structure roughness functional).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "xokde/clustering.hpp"
#include "xokde/mixture.hpp"
#include "xokde/sample_model.hpp"

namespace testsupport {

using xokde::DiagonalCovariance;
using xokde::FullCovariance;
using xokde::Matrix;
using xokde::Vector;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Vector random_vector(std::mt19937_64& gen, Eigen::Index d,
                            double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(gen);
  return v;
}

// Random symmetric positive definite matrix with eigenvalues in
// [lambda_min, lambda_max].
inline Matrix random_spd(std::mt19937_64& gen, Eigen::Index d,
                         double lambda_min = 0.2, double lambda_max = 2.0) {
  Matrix a(d, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = normal(gen);
  }
  const Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  std::uniform_real_distribution<double> unif(lambda_min, lambda_max);
  Vector lambda(d);
  for (Eigen::Index i = 0; i < d; ++i) lambda[i] = unif(gen);
  return q * lambda.asDiagonal() * q.transpose();
}

template <class Cov>
Cov random_covariance(std::mt19937_64& gen, Eigen::Index d,
                      double lambda_min = 0.2, double lambda_max = 2.0) {
  if constexpr (Cov::kDiagonal) {
    std::uniform_real_distribution<double> unif(lambda_min, lambda_max);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = unif(gen);
    return Cov(std::move(v));
  } else {
    return Cov(random_spd(gen, d, lambda_min, lambda_max));
  }
}

template <class Cov>
xokde::Mixture<Cov> random_mixture(std::mt19937_64& gen, Eigen::Index d,
                                   std::size_t components,
                                   double mean_scale = 2.0) {
  xokde::Mixture<Cov> m(d);
  std::uniform_real_distribution<double> wdist(0.2, 1.0);
  for (std::size_t i = 0; i < components; ++i) {
    m.add({wdist(gen), random_vector(gen, d, mean_scale),
           random_covariance<Cov>(gen, d)});
  }
  m.normalize();
  return m;
}

// Exact Hellinger distance between two Gaussians via the Bhattacharyya
// coefficient:
//   BC = |S1|^(1/4) |S2|^(1/4) / |S|^(1/2) * exp(-delta^T S^-1 delta / 8),
//   S = (S1 + S2)/2,  D = sqrt(1 - BC).
inline double closed_form_hellinger(const Vector& m1, const Matrix& s1,
                                    const Vector& m2, const Matrix& s2) {
  const Matrix s = 0.5 * (s1 + s2);
  const Eigen::LLT<Matrix> llt(s);
  const Vector delta = m1 - m2;
  const double maha = delta.dot(llt.solve(delta));
  const double log_det_s = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  const double log_det_1 = std::log(Matrix(s1).determinant());
  const double log_det_2 = std::log(Matrix(s2).determinant());
  const double log_bc =
      0.25 * log_det_1 + 0.25 * log_det_2 - 0.5 * log_det_s - maha / 8.0;
  const double bc = std::exp(log_bc);
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

// Trapezoid quadrature on a uniform 1-D grid.
inline double integrate_1d(const std::function<double(double)>& f, double lo,
                           double hi, int n = 200001) {
  const double h = (hi - lo) / (n - 1);
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i + 1 < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

inline double integrate_2d(const std::function<double(double, double)>& f,
                           double lo, double hi, int n = 801) {
  const double h = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    for (int j = 0; j < n; ++j) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      acc += wi * wj * f(lo + i * h, lo + j * h);
    }
  }
  return acc * h * h;
}

// Hellinger between two 1-D mixture densities by quadrature.
inline double quadrature_hellinger_1d(const std::function<double(double)>& p1,
                                      const std::function<double(double)>& p2,
                                      double lo, double hi) {
  const double d2 = integrate_1d(
      [&](double x) {
        const double a = std::sqrt(p1(x)), b = std::sqrt(p2(x));
        return 0.5 * (a - b) * (a - b);
      },
      lo, hi);
  return std::sqrt(std::min(1.0, std::max(0.0, d2)));
}

// Every bipartition of {0..n-1} into two nonempty sets; first set always
// contains index 0 so each split is enumerated once.
inline std::vector<std::pair<std::vector<std::size_t>,
                             std::vector<std::size_t>>>
all_bipartitions(std::size_t n) {
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
      out;
  const std::size_t limit = std::size_t{1} << (n - 1);
  for (std::size_t mask = 1; mask < limit; ++mask) {
    std::vector<std::size_t> a{0}, b;
    for (std::size_t i = 1; i < n; ++i) {
      if (mask & (std::size_t{1} << (i - 1))) {
        b.push_back(i);
      } else {
        a.push_back(i);
      }
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

// Exhaustive best two-way split under the largest-local-error criterion.
template <class Cov>
xokde::PartitionAssignment brute_force_split(const xokde::Mixture<Cov>& m,
                                             const Cov& h) {
  xokde::PartitionAssignment best;
  double best_score = std::numeric_limits<double>::infinity();
  for (auto& [a, b] : all_bipartitions(m.size())) {
    const double score =
        std::max(xokde::local_error(m.sub_mixture(a).normalized(), h),
                 xokde::local_error(m.sub_mixture(b).normalized(), h));
    if (score < best_score) {
      best_score = score;
      best = {a, b};
    }
  }
  return best;
}

inline bool same_partition(const xokde::PartitionAssignment& p,
                           const xokde::PartitionAssignment& q) {
  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto pf = sorted(p.first), ps = sorted(p.second);
  const auto qf = sorted(q.first), qs = sorted(q.second);
  return (pf == qf && ps == qs) || (pf == qs && ps == qf);
}

// General-structure roughness functional over an unwhitened full-covariance
// mixture; the production path always runs the whitened F = I special case,
// so this serves as its independent check. Uses the pairwise closed form
//   sum_ij w_i w_j N(D_ij; 0, A_ij^-1)
//          [2 tr(F A F A)(1 - 2m) + tr(F A)^2 (1 - m)^2]
// with A_ij = (G + S_i + G + S_j)^-1.
inline double roughness_general(const xokde::Mixture<FullCovariance>& m,
                                const Matrix& structure, const Matrix& pilot) {
  const Eigen::Index d = m.dim();
  const std::size_t n = m.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix gi = pilot + m[i].covariance().matrix();
    for (std::size_t j = 0; j < n; ++j) {
      const Matrix gj = pilot + m[j].covariance().matrix();
      const Matrix sum = gi + gj;
      const Eigen::LLT<Matrix> llt(sum);
      const Matrix a = llt.solve(Matrix::Identity(d, d));
      const Vector delta = m[i].mean() - m[j].mean();
      const double mm = delta.dot(a * delta);
      const double log_det =
          2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
      const double log_phi =
          -0.5 * (d * std::log(2.0 * M_PI) + log_det + mm);
      const Matrix fa = structure * a;
      const double bracket = 2.0 * (fa * fa).trace() * (1.0 - 2.0 * mm) +
                             fa.trace() * fa.trace() * (1.0 - mm) * (1.0 - mm);
      total += m[i].weight() * m[j].weight() * std::exp(log_phi) * bracket;
    }
  }
  return total;
}

}  // namespace testsupport
