#include "doctest.h"

#include <cmath>

#include "test_support.hpp"
#include "xokde/classifier.hpp"

using namespace xokde;
using doctest::Approx;

namespace {

template <class Cov>
Classifier<Cov> two_blob_classifier(Eigen::Index d, int per_class,
                                    std::uint64_t seed) {
  Classifier<Cov> clf(d);
  auto gen = testsupport::rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < per_class; ++i) {
    Vector a(d), b(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      a[k] = noise(gen);
      b[k] = 10.0 + noise(gen);
    }
    clf.observe(a, "near");
    clf.observe(b, "far");
  }
  return clf;
}

}  // namespace

TEST_CASE("first observation of a label creates its model") {
  Classifier<FullCovariance> clf(2);
  clf.observe((Vector(2) << 1.0, 2.0).finished(), "a");
  CHECK(clf.class_count() == 1);
  CHECK(clf.models().at("a").size() == 1);
  CHECK(clf.models().at("a").sample_mixture()[0].is_dirac());
}

TEST_CASE("priors are empirical label frequencies") {
  Classifier<DiagonalCovariance> clf(1);
  for (int i = 0; i < 6; ++i) clf.observe(Vector::Zero(1), "a");
  for (int i = 0; i < 4; ++i) clf.observe(Vector::Ones(1), "b");
  CHECK(clf.prior("a") == Approx(0.6));
  CHECK(clf.prior("b") == Approx(0.4));
  CHECK(clf.prior("unseen") == 0.0);
}

TEST_CASE("training one class never touches another") {
  auto gen = testsupport::rng(191);
  Classifier<FullCovariance> clf(2);
  for (int i = 0; i < 8; ++i) {
    clf.observe(testsupport::random_vector(gen, 2), "a");
  }
  const std::string snapshot = clf.models().at("a").to_json().dump();
  for (int i = 0; i < 20; ++i) {
    clf.observe(testsupport::random_vector(gen, 2, 5.0), "b");
  }
  CHECK(clf.models().at("a").to_json().dump() == snapshot);
}

TEST_CASE("prediction picks the nearby class") {
  const auto clf = two_blob_classifier<FullCovariance>(3, 30, 197);
  CHECK(clf.predict(Vector::Zero(3)) == "near");
  CHECK(clf.predict(Vector::Constant(3, 10.0)) == "far");
}

TEST_CASE("scores are log-likelihood plus log-prior") {
  Classifier<DiagonalCovariance> clf(1);
  auto gen = testsupport::rng(227);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < 18; ++i) clf.observe(Vector::Constant(1, noise(gen)), "common");
  for (int i = 0; i < 2; ++i) clf.observe(Vector::Constant(1, noise(gen)), "rare");
  CHECK(clf.prior("common") == Approx(0.9));
  CHECK(clf.prior("rare") == Approx(0.1));
  const Vector x = Vector::Constant(1, 0.4);
  const auto scores = clf.scores(x);
  for (const auto& label : {std::string("common"), std::string("rare")}) {
    CHECK(scores.at(label).log_posterior ==
          Approx(clf.models().at(label).log_likelihood(x) +
                 std::log(clf.prior(label)))
              .epsilon(1e-14));
  }
}

TEST_CASE("prediction is invariant to a shared log offset") {
  const auto clf = two_blob_classifier<FullCovariance>(2, 20, 199);
  auto gen = testsupport::rng(211);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = testsupport::random_vector(gen, 2, 6.0);
    const auto raw = clf.scores(x);
    const std::string by_scores =
        std::max_element(raw.begin(), raw.end(),
                         [](const auto& a, const auto& b) {
                           return a.second.log_posterior <
                                  b.second.log_posterior;
                         })
            ->first;
    CHECK(clf.predict(x) == by_scores);
  }
}

TEST_CASE("a one-sample class scores minus infinity and is flagged") {
  Classifier<FullCovariance> clf(1);
  for (int i = 0; i < 12; ++i) {
    clf.observe(Vector::Constant(1, i * 0.1), "big");
  }
  clf.observe(Vector::Constant(1, 50.0), "tiny");
  const auto scores = clf.scores(Vector::Constant(1, 50.0));
  CHECK_FALSE(scores.at("tiny").available);
  CHECK(scores.at("tiny").log_posterior ==
        -std::numeric_limits<double>::infinity());
  CHECK(scores.at("big").available);
  CHECK(clf.predict(Vector::Constant(1, 50.0)) == "big");
}

TEST_CASE("average negative log-likelihood") {
  SUBCASE("single test point at a pinned-kernel model mean") {
    // one observation, then force a second far later so the model serves
    Classifier<FullCovariance> clf(1);
    clf.observe(Vector::Zero(1), "a");
    clf.observe(Vector::Zero(1), "a");
    // two stacked point masses: kde is N(0, h) with the corrected floor
    const auto nll =
        clf.avg_neg_log_likelihood({{Vector::Zero(1), "a"}});
    CHECK(nll.used == 1);
    CHECK(nll.mean ==
          Approx(-clf.models().at("a").log_likelihood(Vector::Zero(1)))
              .epsilon(1e-15));
  }
  SUBCASE("a far outlier strictly increases the metric") {
    const auto clf = two_blob_classifier<DiagonalCovariance>(2, 25, 223);
    std::vector<std::pair<Vector, std::string>> base{
        {Vector::Zero(2), "near"}, {Vector::Constant(2, 10.0), "far"}};
    const double plain = clf.avg_neg_log_likelihood(base).mean;
    base.push_back({Vector::Constant(2, -40.0), "near"});
    const double with_outlier = clf.avg_neg_log_likelihood(base).mean;
    CHECK(with_outlier > plain);
  }
  SUBCASE("unavailable classes are excluded and reported") {
    Classifier<FullCovariance> clf(1);
    for (int i = 0; i < 5; ++i) clf.observe(Vector::Constant(1, i), "a");
    clf.observe(Vector::Zero(1), "lonely");
    const auto nll = clf.avg_neg_log_likelihood(
        {{Vector::Zero(1), "a"}, {Vector::Zero(1), "lonely"},
         {Vector::Zero(1), "never-seen"}});
    CHECK(nll.used == 1);
    CHECK(nll.excluded == 2);
  }
  SUBCASE("empty test set is rejected") {
    Classifier<FullCovariance> clf(1);
    CHECK_THROWS_AS(clf.avg_neg_log_likelihood({}), InvalidArgumentError);
  }
}

TEST_CASE("pinned single-mass value: nll is the unit normal constant") {
  // lone point mass with a unit kernel, evaluated at its own mean
  auto j = nlohmann::json{
      {"format", "xokde-model"},
      {"version", 1},
      {"dim", 1},
      {"covariance", "full"},
      {"config",
       {{"forgetting", 1.0},
        {"compression_threshold", 0.02},
        {"trigger_floor", 10},
        {"trigger_growth", 1.5},
        {"revitalize_after_compress", true}}},
      {"n_eff", 2.0},
      {"k_last", 0},
      {"components",
       {{{"weight", 1.0},
         {"mean", std::vector<double>{0.0}},
         {"cov", std::vector<double>{0.0}}}}},
      {"detailed",
       {{{{"weight", 1.0},
          {"mean", std::vector<double>{0.0}},
          {"cov", std::vector<double>{0.0}}}}}},
      {"bandwidth",
       {{"h_opt", std::vector<double>{1.0}}, {"fallback_used", false}}}};
  const auto model = SampleModel<FullCovariance>::from_json(j);
  CHECK(-model.log_likelihood(Vector::Zero(1)) ==
        Approx(0.9189385332046727).epsilon(1e-14));
}

TEST_CASE("dimension mismatches are rejected") {
  Classifier<FullCovariance> clf(2);
  CHECK_THROWS_AS(clf.observe(Vector::Zero(3), "a"), DimensionError);
  clf.observe(Vector::Zero(2), "a");
  CHECK_THROWS_AS(clf.predict(Vector::Zero(1)), DimensionError);
}
