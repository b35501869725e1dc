#pragma once

// The online estimator. A SampleModel keeps a two-level structure: the
// sample mixture (point masses for raw observations, merged Gaussians after
// compression) plus one detailed model of at most two components per
// mixture component, remembering pre-merge structure so over-compressions
// can be reversed. Adding a sample costs one component append and a weight
// rescale; bandwidth, factorizations, and the smoothed KDE mixture are
// computed lazily on first use and buffered until the model changes.

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "xokde/bandwidth.hpp"
#include "xokde/clustering.hpp"
#include "xokde/covariance.hpp"
#include "xokde/distance.hpp"
#include "xokde/errors.hpp"
#include "xokde/mixture.hpp"
#include "xokde/whitening.hpp"

namespace xokde {

struct EstimatorConfig {
  // Per-sample evidence discount in (0, 1]; 1 accumulates forever.
  double forgetting = 1.0;
  // Largest tolerated local clustering error (Hellinger, in [0, 1]).
  double compression_threshold = 0.1;
  // Compression fires when the component count reaches
  // max(trigger_floor, ceil(trigger_growth * count_after_last_compression)).
  int trigger_floor = 10;
  double trigger_growth = 1.5;
  // Check for over-compressed components right after each compression.
  bool revitalize_after_compress = true;
};

// Hellinger distance between a normalized sub-mixture and its single-
// Gaussian approximation, both smoothed by the bandwidth h.
template <class Cov>
double local_error(const Mixture<Cov>& sub_normalized, const Cov& h) {
  if (sub_normalized.size() <= 1) return 0.0;
  Mixture<Cov> single(sub_normalized.dim());
  single.add(moment_match(sub_normalized));
  return hellinger(sub_normalized.convolved(h), single.convolved(h));
}

struct CompressionResult {
  bool ran = false;
  std::size_t components = 0;       // mixture size after the pass
  double max_leaf_error = 0.0;      // largest surviving cluster error
  std::vector<double> leaf_errors;  // one entry per surviving cluster
  std::size_t revived = 0;          // components restored by revitalization
};

template <class Cov>
class SampleModel {
 public:
  explicit SampleModel(Eigen::Index dim, EstimatorConfig config = {})
      : dim_(dim), config_(config), mixture_(dim) {
    if (dim <= 0) throw InvalidArgumentError("dimension must be positive");
    if (!(config.forgetting > 0.0) || config.forgetting > 1.0) {
      throw InvalidArgumentError("forgetting factor must be in (0, 1]");
    }
    if (!(config.compression_threshold > 0.0)) {
      throw InvalidArgumentError("compression threshold must be positive");
    }
  }

  SampleModel(const SampleModel& o)
      : dim_(o.dim_),
        config_(o.config_),
        mixture_(o.mixture_),
        detailed_(o.detailed_),
        n_eff_(o.n_eff_),
        k_last_(o.k_last_),
        degenerate_events_(o.degenerate_events_),
        compression_count_(o.compression_count_),
        last_compression_(o.last_compression_) {
    std::lock_guard<std::mutex> lock(o.lazy_mutex_);
    bandwidth_ = o.bandwidth_;
    kde_ = o.kde_;
  }

  SampleModel& operator=(const SampleModel& o) {
    if (this != &o) {
      dim_ = o.dim_;
      config_ = o.config_;
      mixture_ = o.mixture_;
      detailed_ = o.detailed_;
      n_eff_ = o.n_eff_;
      k_last_ = o.k_last_;
      degenerate_events_ = o.degenerate_events_;
      compression_count_ = o.compression_count_;
      last_compression_ = o.last_compression_;
      std::scoped_lock lock(lazy_mutex_, o.lazy_mutex_);
      bandwidth_ = o.bandwidth_;
      kde_ = o.kde_;
    }
    return *this;
  }

  SampleModel(SampleModel&& o) noexcept
      : dim_(o.dim_),
        config_(o.config_),
        mixture_(std::move(o.mixture_)),
        detailed_(std::move(o.detailed_)),
        n_eff_(o.n_eff_),
        k_last_(o.k_last_),
        degenerate_events_(o.degenerate_events_),
        compression_count_(o.compression_count_),
        last_compression_(std::move(o.last_compression_)),
        bandwidth_(std::move(o.bandwidth_)),
        kde_(std::move(o.kde_)) {}

  SampleModel& operator=(SampleModel&& o) noexcept {
    dim_ = o.dim_;
    config_ = o.config_;
    mixture_ = std::move(o.mixture_);
    detailed_ = std::move(o.detailed_);
    n_eff_ = o.n_eff_;
    k_last_ = o.k_last_;
    degenerate_events_ = o.degenerate_events_;
    compression_count_ = o.compression_count_;
    last_compression_ = std::move(o.last_compression_);
    bandwidth_ = std::move(o.bandwidth_);
    kde_ = std::move(o.kde_);
    return *this;
  }

  Eigen::Index dim() const { return dim_; }
  const EstimatorConfig& config() const { return config_; }
  double effective_samples() const { return n_eff_; }
  std::size_t size() const { return mixture_.size(); }
  const Mixture<Cov>& sample_mixture() const { return mixture_; }
  const std::vector<Mixture<Cov>>& detailed_models() const {
    return detailed_;
  }
  std::size_t components_after_last_compression() const { return k_last_; }
  // Count of corrections where every eigenvalue was degenerate.
  std::size_t degenerate_corrections() const { return degenerate_events_; }
  // How many compression passes have run (including trigger-driven ones)
  // and what the latest one did.
  std::size_t compression_count() const { return compression_count_; }
  const CompressionResult& last_compression() const {
    return last_compression_;
  }

  // Appends one observation as a point mass. No bandwidth, factorization,
  // or smoothing work happens here; those wait until a query needs them.
  void add_sample(const Vector& x) {
    if (x.size() != dim_) throw DimensionError("sample dim mismatch");
    if (!x.allFinite()) throw InvalidArgumentError("sample has non-finite entries");
    const double f = config_.forgetting;
    const double discounted = n_eff_ * f;
    const double rescale = discounted / (discounted + 1.0);
    for (std::size_t i = 0; i < mixture_.size(); ++i) {
      mixture_[i].scale_weight(rescale);
    }
    mixture_.add({1.0 / (discounted + 1.0), x, Cov::Zero(dim_)});
    Mixture<Cov> own(dim_);
    own.add({1.0, x, Cov::Zero(dim_)});
    detailed_.push_back(std::move(own));
    n_eff_ = discounted + 1.0;
    invalidate();
    if (trigger_fires() && n_eff_ >= 2.0) compress();
  }

  bool trigger_fires() const {
    const auto threshold = static_cast<std::size_t>(std::max<double>(
        config_.trigger_floor,
        std::ceil(config_.trigger_growth * static_cast<double>(k_last_))));
    return mixture_.size() >= threshold;
  }

  bool bandwidth_fresh() const {
    std::lock_guard<std::mutex> lock(lazy_mutex_);
    return bandwidth_.has_value();
  }

  // Estimates the bandwidth if stale; needs at least two effective samples.
  const BandwidthState<Cov>& bandwidth_state() const {
    std::lock_guard<std::mutex> lock(lazy_mutex_);
    return ensure_bandwidth_locked();
  }

  // The smoothed estimate: every component convolved with the bandwidth.
  const Mixture<Cov>& kde() const {
    std::lock_guard<std::mutex> lock(lazy_mutex_);
    return *ensure_kde_locked();
  }

  double log_likelihood(const Vector& x) const {
    if (x.size() != dim_) throw DimensionError("query dim mismatch");
    std::shared_ptr<const Mixture<Cov>> snapshot;
    {
      std::lock_guard<std::mutex> lock(lazy_mutex_);
      snapshot = ensure_kde_locked();
    }
    return snapshot->log_density(x);
  }

  // Replaces clusters of components by single Gaussians until every
  // cluster's local error is inside the threshold. Works on whitened data;
  // detailed models are merged alongside their parents. Runs revitalization
  // afterwards when configured.
  CompressionResult compress() {
    CompressionResult result;
    result.components = mixture_.size();
    if (mixture_.size() <= 1) {
      k_last_ = mixture_.size();
      return result;
    }

    const Cov h_opt = [&] {
      std::lock_guard<std::mutex> lock(lazy_mutex_);
      return ensure_bandwidth_locked().h_opt;
    }();

    const auto whole = whole_model_gaussian(mixture_);
    const auto corrected = correct_covariance(whole.covariance());
    if (corrected.all_degenerate) ++degenerate_events_;
    const WhiteningTransform<Cov> whitening(whole.mean(),
                                            corrected.covariance);
    const Mixture<Cov> white = forward_mixture(whitening, mixture_);
    const Cov h_white = whitening.forward_cov(h_opt);

    struct Cluster {
      std::vector<std::size_t> indices;
      double error;
    };
    auto cluster_error = [&](const std::vector<std::size_t>& idx) {
      if (idx.size() <= 1) return 0.0;
      return local_error(white.sub_mixture(idx).normalized(), h_white);
    };

    std::vector<Cluster> clusters;
    {
      std::vector<std::size_t> all(white.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      const double err = cluster_error(all);
      clusters.push_back({std::move(all), err});
    }
    for (;;) {
      std::size_t worst = 0;
      for (std::size_t c = 1; c < clusters.size(); ++c) {
        if (clusters[c].error > clusters[worst].error) worst = c;
      }
      if (clusters[worst].error <= config_.compression_threshold) break;

      const std::vector<std::size_t> indices =
          std::move(clusters[worst].indices);
      const Mixture<Cov> smoothed =
          white.sub_mixture(indices).normalized().convolved(h_white);
      const PartitionAssignment part = goldberger_split(smoothed);
      std::vector<std::size_t> left, right;
      left.reserve(part.first.size());
      right.reserve(part.second.size());
      for (std::size_t k : part.first) left.push_back(indices[k]);
      for (std::size_t k : part.second) right.push_back(indices[k]);
      const double left_err = cluster_error(left);
      const double right_err = cluster_error(right);
      clusters[worst] = {std::move(left), left_err};
      clusters.push_back({std::move(right), right_err});
    }

    // Leaves become single Gaussians; their detailed models merge into the
    // normalized extended mixture, re-clustered down to two components when
    // it grows past that.
    const std::vector<Mixture<Cov>> white_detailed = [&] {
      std::vector<Mixture<Cov>> wd;
      wd.reserve(detailed_.size());
      for (const auto& q : detailed_) {
        wd.push_back(forward_mixture(whitening, q));
      }
      return wd;
    }();

    Mixture<Cov> new_white(dim_);
    std::vector<Mixture<Cov>> new_detailed;
    new_detailed.reserve(clusters.size());
    for (const auto& cluster : clusters) {
      new_white.add(moment_match(white, cluster.indices));

      Mixture<Cov> extended(dim_);
      for (std::size_t i : cluster.indices) {
        for (const auto& q_comp : white_detailed[i]) {
          extended.add({white[i].weight() * q_comp.weight(), q_comp.mean(),
                        q_comp.covariance()});
        }
      }
      extended.normalize();
      if (extended.size() > 2) {
        const PartitionAssignment part =
            goldberger_split(extended.convolved(h_white));
        Mixture<Cov> merged(dim_);
        merged.add(moment_match(extended, part.first));
        merged.add(moment_match(extended, part.second));
        merged.normalize();
        new_detailed.push_back(std::move(merged));
      } else {
        new_detailed.push_back(std::move(extended));
      }
    }

    mixture_ = inverse_mixture(whitening, new_white);
    detailed_.clear();
    detailed_.reserve(new_detailed.size());
    for (const auto& q : new_detailed) {
      detailed_.push_back(inverse_mixture(whitening, q));
    }
    invalidate_kde();

    result.ran = true;
    result.leaf_errors.reserve(clusters.size());
    for (const auto& c : clusters) {
      result.leaf_errors.push_back(c.error);
      result.max_leaf_error = std::max(result.max_leaf_error, c.error);
    }
    if (config_.revitalize_after_compress) {
      result.revived = revitalize();
    }
    k_last_ = mixture_.size();
    result.components = mixture_.size();
    ++compression_count_;
    last_compression_ = result;
    return result;
  }

  // Replaces every component whose detailed model disagrees with it (local
  // error above the threshold) by the detailed model's components. Each
  // inserted component gets a fresh detailed model: itself when it is a
  // point mass, otherwise its principal-axis split.
  std::size_t revitalize() {
    bool any_candidate = false;
    for (const auto& q : detailed_) any_candidate |= q.size() > 1;
    if (!any_candidate) return 0;

    const Cov h_opt = [&] {
      std::lock_guard<std::mutex> lock(lazy_mutex_);
      return ensure_bandwidth_locked().h_opt;
    }();

    const auto whole = whole_model_gaussian(mixture_);
    const auto corrected = correct_covariance(whole.covariance());
    if (corrected.all_degenerate) ++degenerate_events_;
    const WhiteningTransform<Cov> whitening(whole.mean(),
                                            corrected.covariance);
    const Mixture<Cov> white = forward_mixture(whitening, mixture_);
    const Cov h_white = whitening.forward_cov(h_opt);

    Mixture<Cov> new_white(dim_);
    std::vector<Mixture<Cov>> new_white_detailed;
    std::size_t revived = 0;
    for (std::size_t i = 0; i < white.size(); ++i) {
      const Mixture<Cov> q = forward_mixture(whitening, detailed_[i]);
      const bool split = q.size() > 1 &&
                         local_error(q, h_white) >
                             config_.compression_threshold;
      if (!split) {
        new_white.add(white[i]);
        new_white_detailed.push_back(q);
        continue;
      }
      ++revived;
      for (const auto& child : q) {
        GaussianComponent<Cov> comp{white[i].weight() * child.weight(),
                                    child.mean(), child.covariance()};
        Mixture<Cov> own(dim_);
        if (child.covariance().is_zero()) {
          own.add({1.0, child.mean(), child.covariance()});
        } else {
          own = principal_split(comp).normalized();
        }
        new_white.add(std::move(comp));
        new_white_detailed.push_back(std::move(own));
      }
    }
    if (revived == 0) return 0;

    new_white.normalize();
    mixture_ = inverse_mixture(whitening, new_white);
    detailed_.clear();
    detailed_.reserve(new_white_detailed.size());
    for (const auto& q : new_white_detailed) {
      detailed_.push_back(inverse_mixture(whitening, q));
    }
    invalidate_kde();
    return revived;
  }

  // Analytic model size: every stored scalar (weights, means, covariances,
  // factorization caches, bandwidth) times the scalar width.
  std::size_t footprint_bytes() const {
    const auto cov_scalars = static_cast<std::size_t>(
        Cov::kDiagonal ? dim_ : dim_ * dim_);
    const std::size_t per_component =
        1 + static_cast<std::size_t>(dim_) + cov_scalars  // weight, mean, cov
        + 1 + cov_scalars;                                // cached factorization
    std::size_t scalars = mixture_.size() * per_component;
    for (const auto& q : detailed_) scalars += q.size() * per_component;
    scalars += cov_scalars + 1;  // bandwidth + flag
    return scalars * sizeof(double);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "xokde-model";
    j["version"] = 1;
    j["dim"] = dim_;
    j["covariance"] = Cov::kDiagonal ? "diagonal" : "full";
    j["config"] = {
        {"forgetting", config_.forgetting},
        {"compression_threshold", config_.compression_threshold},
        {"trigger_floor", config_.trigger_floor},
        {"trigger_growth", config_.trigger_growth},
        {"revitalize_after_compress", config_.revitalize_after_compress},
    };
    j["n_eff"] = n_eff_;
    j["k_last"] = k_last_;
    j["components"] = nlohmann::json::array();
    for (const auto& c : mixture_) j["components"].push_back(component_json(c));
    j["detailed"] = nlohmann::json::array();
    for (const auto& q : detailed_) {
      nlohmann::json jq = nlohmann::json::array();
      for (const auto& c : q) jq.push_back(component_json(c));
      j["detailed"].push_back(std::move(jq));
    }
    {
      std::lock_guard<std::mutex> lock(lazy_mutex_);
      if (bandwidth_) {
        j["bandwidth"] = {{"h_opt", cov_json(bandwidth_->h_opt)},
                          {"fallback_used", bandwidth_->fallback_used}};
      } else {
        j["bandwidth"] = nullptr;
      }
    }
    return j;
  }

  static SampleModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "xokde-model") {
      throw InvalidArgumentError("not a model snapshot");
    }
    if (j.value("version", 0) != 1) {
      throw InvalidArgumentError("unsupported model snapshot version");
    }
    const std::string kind = j.at("covariance").get<std::string>();
    const std::string expected = Cov::kDiagonal ? "diagonal" : "full";
    if (kind != expected) {
      throw InvalidArgumentError("snapshot covariance kind is '" + kind +
                                 "', expected '" + expected + "'");
    }
    EstimatorConfig cfg;
    const auto& jc = j.at("config");
    cfg.forgetting = jc.at("forgetting").get<double>();
    cfg.compression_threshold = jc.at("compression_threshold").get<double>();
    cfg.trigger_floor = jc.at("trigger_floor").get<int>();
    cfg.trigger_growth = jc.at("trigger_growth").get<double>();
    cfg.revitalize_after_compress =
        jc.at("revitalize_after_compress").get<bool>();

    SampleModel model(j.at("dim").get<Eigen::Index>(), cfg);
    model.n_eff_ = j.at("n_eff").get<double>();
    model.k_last_ = j.at("k_last").get<std::size_t>();
    for (const auto& jcomp : j.at("components")) {
      model.mixture_.add(component_from_json(jcomp, model.dim_));
    }
    for (const auto& jq : j.at("detailed")) {
      Mixture<Cov> q(model.dim_);
      for (const auto& jcomp : jq) {
        q.add(component_from_json(jcomp, model.dim_));
      }
      model.detailed_.push_back(std::move(q));
    }
    if (model.detailed_.size() != model.mixture_.size()) {
      throw InvalidArgumentError("snapshot detailed/component count mismatch");
    }
    const auto& jb = j.at("bandwidth");
    if (!jb.is_null()) {
      BandwidthState<Cov> state;
      state.h_opt = cov_from_json(jb.at("h_opt"), model.dim_);
      state.fallback_used = jb.at("fallback_used").get<bool>();
      model.bandwidth_ = std::move(state);
    }
    return model;
  }

  void save(std::ostream& os) const { os << to_json().dump(); }

  static SampleModel load(std::istream& is) {
    nlohmann::json j;
    is >> j;
    return from_json(j);
  }

 private:
  void invalidate() {
    std::lock_guard<std::mutex> lock(lazy_mutex_);
    bandwidth_.reset();
    kde_.reset();
  }

  void invalidate_kde() {
    std::lock_guard<std::mutex> lock(lazy_mutex_);
    kde_.reset();
  }

  const BandwidthState<Cov>& ensure_bandwidth_locked() const {
    if (!bandwidth_) {
      bandwidth_ = estimate_bandwidth(mixture_, n_eff_);
    }
    return *bandwidth_;
  }

  std::shared_ptr<const Mixture<Cov>> ensure_kde_locked() const {
    const auto& bw = ensure_bandwidth_locked();
    if (!kde_) {
      auto smoothed =
          std::make_shared<Mixture<Cov>>(mixture_.convolved(bw.h_opt));
      smoothed->warm_caches();  // share read-only, fully materialized
      kde_ = std::move(smoothed);
    }
    return kde_;
  }

  static nlohmann::json component_json(const GaussianComponent<Cov>& c) {
    nlohmann::json j;
    j["weight"] = c.weight();
    j["mean"] = std::vector<double>(c.mean().data(),
                                    c.mean().data() + c.mean().size());
    j["cov"] = cov_json(c.covariance());
    return j;
  }

  static nlohmann::json cov_json(const Cov& cov) {
    if constexpr (Cov::kDiagonal) {
      return std::vector<double>(cov.entries().data(),
                                 cov.entries().data() + cov.dim());
    } else {
      std::vector<double> flat;
      flat.reserve(cov.scalar_count());
      for (Eigen::Index r = 0; r < cov.dim(); ++r) {
        for (Eigen::Index c = 0; c < cov.dim(); ++c) {
          flat.push_back(cov.matrix()(r, c));
        }
      }
      return flat;
    }
  }

  static Cov cov_from_json(const nlohmann::json& j, Eigen::Index d) {
    const auto flat = j.get<std::vector<double>>();
    if constexpr (Cov::kDiagonal) {
      if (flat.size() != static_cast<std::size_t>(d)) {
        throw InvalidArgumentError("snapshot covariance size mismatch");
      }
      return Cov(Eigen::Map<const Vector>(flat.data(), d));
    } else {
      if (flat.size() != static_cast<std::size_t>(d * d)) {
        throw InvalidArgumentError("snapshot covariance size mismatch");
      }
      Matrix m(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
          m(r, c) = flat[static_cast<std::size_t>(r * d + c)];
        }
      }
      return Cov(std::move(m));
    }
  }

  static GaussianComponent<Cov> component_from_json(const nlohmann::json& j,
                                                    Eigen::Index d) {
    const auto mean = j.at("mean").get<std::vector<double>>();
    if (mean.size() != static_cast<std::size_t>(d)) {
      throw InvalidArgumentError("snapshot mean size mismatch");
    }
    return {j.at("weight").get<double>(),
            Vector(Eigen::Map<const Vector>(mean.data(), d)),
            cov_from_json(j.at("cov"), d)};
  }

  Eigen::Index dim_;
  EstimatorConfig config_;
  Mixture<Cov> mixture_;
  std::vector<Mixture<Cov>> detailed_;
  double n_eff_ = 0.0;
  std::size_t k_last_ = 0;
  std::size_t degenerate_events_ = 0;
  std::size_t compression_count_ = 0;
  CompressionResult last_compression_;

  mutable std::mutex lazy_mutex_;
  mutable std::optional<BandwidthState<Cov>> bandwidth_;
  mutable std::shared_ptr<const Mixture<Cov>> kde_;
};

using FullSampleModel = SampleModel<FullCovariance>;
using DiagonalSampleModel = SampleModel<DiagonalCovariance>;

}  // namespace xokde
