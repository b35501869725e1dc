// Microbenchmarks for the hot paths: sample insertion, likelihood queries,
// and a full compression pass, for both covariance representations.

#include <benchmark/benchmark.h>

#include <random>

#include "xokde/sample_model.hpp"

namespace {

using xokde::DiagonalCovariance;
using xokde::FullCovariance;
using xokde::Vector;

Vector random_point(std::mt19937_64& gen, Eigen::Index d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(d);
  for (Eigen::Index i = 0; i < d; ++i) x[i] = normal(gen);
  return x;
}

template <class Cov>
void BM_AddSample(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  std::mt19937_64 gen(42);
  xokde::SampleModel<Cov> model(d);
  for (auto _ : state) {
    model.add_sample(random_point(gen, d));
  }
  state.SetItemsProcessed(state.iterations());
}

template <class Cov>
void BM_LogLikelihood(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  std::mt19937_64 gen(42);
  xokde::SampleModel<Cov> model(d);
  for (int i = 0; i < 200; ++i) model.add_sample(random_point(gen, d));
  const Vector query = random_point(gen, d);
  model.log_likelihood(query);  // build caches outside the loop
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.log_likelihood(query));
  }
  state.SetItemsProcessed(state.iterations());
}

template <class Cov>
void BM_Compress(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  std::mt19937_64 gen(42);
  xokde::EstimatorConfig cfg;
  cfg.trigger_floor = 1 << 20;  // keep growth manual
  xokde::SampleModel<Cov> base(d, cfg);
  for (int i = 0; i < 64; ++i) base.add_sample(random_point(gen, d));
  for (auto _ : state) {
    state.PauseTiming();
    auto model = base;
    state.ResumeTiming();
    model.compress();
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_AddSample, FullCovariance)->Arg(4)->Arg(16);
BENCHMARK_TEMPLATE(BM_AddSample, DiagonalCovariance)->Arg(4)->Arg(16)->Arg(128);
BENCHMARK_TEMPLATE(BM_LogLikelihood, FullCovariance)->Arg(4)->Arg(16);
BENCHMARK_TEMPLATE(BM_LogLikelihood, DiagonalCovariance)->Arg(16)->Arg(128);
BENCHMARK_TEMPLATE(BM_Compress, FullCovariance)->Arg(4)->Arg(16);
BENCHMARK_TEMPLATE(BM_Compress, DiagonalCovariance)->Arg(16);

BENCHMARK_MAIN();
