#pragma once

// Generative Bayes classifier: one SampleModel per label, empirical priors,
// prediction by largest log-likelihood + log-prior.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xokde/errors.hpp"
#include "xokde/sample_model.hpp"

namespace xokde {

template <class Cov>
class Classifier {
 public:
  explicit Classifier(Eigen::Index dim, EstimatorConfig config = {})
      : dim_(dim), config_(config) {
    if (dim <= 0) throw InvalidArgumentError("dimension must be positive");
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t class_count() const { return models_.size(); }
  std::size_t observed_count() const { return total_count_; }

  const std::map<std::string, SampleModel<Cov>>& models() const {
    return models_;
  }

  void observe(const Vector& x, const std::string& label) {
    if (x.size() != dim_) throw DimensionError("sample dim mismatch");
    auto [it, inserted] = models_.try_emplace(label, dim_, config_);
    it->second.add_sample(x);
    ++counts_[label];
    ++total_count_;
  }

  double prior(const std::string& label) const {
    const auto it = counts_.find(label);
    if (it == counts_.end() || total_count_ == 0) return 0.0;
    return static_cast<double>(it->second) /
           static_cast<double>(total_count_);
  }

  struct Score {
    double log_posterior = -std::numeric_limits<double>::infinity();
    bool available = false;  // false when the class cannot serve likelihoods
  };

  std::map<std::string, Score> scores(const Vector& x) const {
    std::map<std::string, Score> out;
    for (const auto& [label, model] : models_) {
      Score s;
      try {
        s.log_posterior = model.log_likelihood(x) + std::log(prior(label));
        s.available = true;
      } catch (const InsufficientSamplesError&) {
        // scored -inf, reported unavailable
      }
      out.emplace(label, s);
    }
    return out;
  }

  // Largest posterior wins; ties resolve to the first label in order.
  std::string predict(const Vector& x) const {
    if (models_.empty()) {
      throw InvalidArgumentError("classifier has no trained classes");
    }
    const auto all = scores(x);
    const std::string* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [label, score] : all) {
      if (best == nullptr || score.log_posterior > best_score) {
        best = &label;
        best_score = score.log_posterior;
      }
    }
    return *best;
  }

  struct NllReport {
    double mean = 0.0;       // average negative log-likelihood
    std::size_t used = 0;    // samples scored under their own class model
    std::size_t excluded = 0;  // samples whose class model was unavailable
  };

  // Mean of -log p(x | own class) over labeled test samples. Samples whose
  // class model cannot serve likelihoods are excluded and counted.
  NllReport avg_neg_log_likelihood(
      const std::vector<std::pair<Vector, std::string>>& test) const {
    if (test.empty()) {
      throw InvalidArgumentError("empty test set");
    }
    NllReport report;
    double sum = 0.0;
    for (const auto& [x, label] : test) {
      const auto it = models_.find(label);
      if (it == models_.end()) {
        ++report.excluded;
        continue;
      }
      try {
        sum += -it->second.log_likelihood(x);
        ++report.used;
      } catch (const InsufficientSamplesError&) {
        ++report.excluded;
      }
    }
    if (report.used > 0) report.mean = sum / static_cast<double>(report.used);
    return report;
  }

  double mean_component_count() const {
    if (models_.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [label, model] : models_) {
      total += static_cast<double>(model.size());
    }
    return total / static_cast<double>(models_.size());
  }

  std::size_t footprint_bytes() const {
    std::size_t total = 0;
    for (const auto& [label, model] : models_) {
      total += model.footprint_bytes();
    }
    return total;
  }

 private:
  Eigen::Index dim_;
  EstimatorConfig config_;
  std::map<std::string, SampleModel<Cov>> models_;
  std::map<std::string, std::size_t> counts_;
  std::size_t total_count_ = 0;
};

}  // namespace xokde
