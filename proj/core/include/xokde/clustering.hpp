#pragma once

// Two-way clustering of mixture components (Goldberger-style K-means with
// K = 2, closed-form Gaussian KL as the assignment distance) and the
// moment-preserving principal-axis split used to seed it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "xokde/distance.hpp"
#include "xokde/mixture.hpp"

namespace xokde {

struct PartitionAssignment {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

// Splits one Gaussian along its largest eigenvector into two components of
// half weight. With displacement a*sqrt(l1)*u1 and shared covariance
// S - a^2 l1 u1 u1^T the mixture's first two moments equal the input's
// exactly; a = 0.5 keeps the children well conditioned.
template <class Cov>
Mixture<Cov> principal_split(const GaussianComponent<Cov>& g,
                             double offset = 0.5) {
  const Eigen::Index d = g.dim();
  Vector direction;
  double lambda_max;
  if constexpr (Cov::kDiagonal) {
    Eigen::Index axis;
    lambda_max = g.covariance().entries().maxCoeff(&axis);
    direction = Vector::Zero(d);
    direction[axis] = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g.covariance().matrix());
    lambda_max = eig.eigenvalues()[d - 1];
    direction = eig.eigenvectors().col(d - 1);
  }
  lambda_max = std::max(lambda_max, 0.0);

  const Vector shift = offset * std::sqrt(lambda_max) * direction;
  Cov child_cov = [&] {
    if constexpr (Cov::kDiagonal) {
      Vector e = g.covariance().entries();
      for (Eigen::Index i = 0; i < d; ++i) {
        e[i] -= offset * offset * lambda_max * direction[i] * direction[i];
      }
      return Cov(std::move(e));
    } else {
      return Cov(Matrix(g.covariance().matrix() -
                        offset * offset * lambda_max * direction *
                            direction.transpose()));
    }
  }();

  Mixture<Cov> out(d);
  out.add({0.5 * g.weight(), g.mean() + shift, child_cov});
  out.add({0.5 * g.weight(), g.mean() - shift, std::move(child_cov)});
  return out;
}

// Two-cluster assignment: representatives start as the principal split of
// the whole-mixture Gaussian, then alternate KL reassignment and moment
// matching until stable. Components must have positive definite covariances
// (convolve point masses with the bandwidth first). Both clusters are
// nonempty on return.
template <class Cov>
PartitionAssignment goldberger_split(const Mixture<Cov>& m,
                                     int max_iterations = 20) {
  const std::size_t n = m.size();
  if (n < 2) {
    throw InvalidArgumentError("goldberger_split needs >= 2 components");
  }

  Mixture<Cov> seeds = principal_split(whole_model_gaussian(m));
  GaussianComponent<Cov> rep[2] = {seeds[0], seeds[1]};

  std::vector<int> assign(n, -1);
  std::vector<std::size_t> cluster[2];

  for (int iter = 0; iter < max_iterations; ++iter) {
    cluster[0].clear();
    cluster[1].clear();
    bool changed = false;
    std::vector<double> div_to[2];
    div_to[0].resize(n);
    div_to[1].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      div_to[0][i] = kl_divergence(m[i], rep[0]);
      div_to[1][i] = kl_divergence(m[i], rep[1]);
      const int target = div_to[1][i] < div_to[0][i] ? 1 : 0;
      if (assign[i] != target) {
        assign[i] = target;
        changed = true;
      }
      cluster[target].push_back(i);
    }

    // Re-seed an emptied cluster with the survivor's worst-fitting member.
    for (int side = 0; side < 2; ++side) {
      if (!cluster[side].empty()) continue;
      const int other = 1 - side;
      std::size_t worst = cluster[other][0];
      for (std::size_t i : cluster[other]) {
        if (div_to[other][i] > div_to[other][worst]) worst = i;
      }
      auto& from = cluster[other];
      from.erase(std::find(from.begin(), from.end(), worst));
      cluster[side].push_back(worst);
      assign[worst] = side;
      changed = true;
    }

    if (!changed) break;
    rep[0] = moment_match(m, cluster[0]);
    rep[1] = moment_match(m, cluster[1]);
  }

  return {std::move(cluster[0]), std::move(cluster[1])};
}

}  // namespace xokde
