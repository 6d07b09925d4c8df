// Microbenchmarks for the per-sample estimator updates, the batch baseline and
// the mean-field evaluation used by the ODE integrator.

#include "omlr/asym_em.hpp"
#include "omlr/baseline_em.hpp"
#include "omlr/datagen.hpp"
#include "omlr/ode_lab.hpp"
#include "omlr/sym_em.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace omlr;

std::vector<Observation> stream(int d, bool symmetric, std::int64_t n) {
  const Vec b1 = Vec::LinSpaced(d, 1.0, 3.0);
  const RegressorProcess regressor = RegressorProcess::iid_gaussian(Mat::Identity(d, d));
  ModelSpec model = make_symmetric_model(b1, 1.0, 0.5, regressor);
  if (!symmetric) model.beta2_star = Vec::Ones(d) - b1;
  StreamGenerator gen(model, 7);
  return gen.take(n);
}

void BM_SymStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto data = stream(d, true, 4096);
  SymState s = SymState::init(Vec::Ones(d), Mat::Identity(d, d), 1.0);
  std::size_t i = 0;
  for (auto _ : state) {
    const Observation& o = data[i++ & 4095];
    s = step(std::move(s), o.phi, o.y);
    benchmark::DoNotOptimize(s.beta.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SymStep)->Arg(3)->Arg(10)->Arg(30);

void BM_AsymStep(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto data = stream(d, false, 4096);
  AsymState s = AsymState::init(Vec::Zero(d), Vec::Ones(d), Mat::Identity(d, d), 1.0);
  std::size_t i = 0;
  for (auto _ : state) {
    const Observation& o = data[i++ & 4095];
    s = step(std::move(s), o.phi, o.y);
    benchmark::DoNotOptimize(s.theta2.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AsymStep)->Arg(3)->Arg(10)->Arg(30);

void BM_PopEmFit(benchmark::State& state) {
  const auto data = stream(3, false, state.range(0));
  const Batch batch = Batch::from(data);
  const PopEmState init{Vec::Ones(3), -Vec::Ones(3), 0};
  for (auto _ : state) {
    const PopEmResult r = fit(batch, init, 20, 1.0);
    benchmark::DoNotOptimize(r.state.beta1.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 20);
}
BENCHMARK(BM_PopEmFit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ConditionalField(benchmark::State& state) {
  const SymmetricInstance instance{(Vec(2) << 1.0, -0.5).finished(), 1.0, 0.5};
  const PhiSampler sampler = [](Engine& e) {
    std::normal_distribution<double> n;
    return Vec((Vec(2) << n(e), n(e)).finished());
  };
  Engine rng(3);
  const ConditionalField field(instance, sampler, rng, state.range(0));
  const Vec beta = (Vec(2) << 0.7, 0.2).finished();
  for (auto _ : state) benchmark::DoNotOptimize(field.evaluate(beta).value.data());
}
BENCHMARK(BM_ConditionalField)->Arg(500)->Arg(2000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
