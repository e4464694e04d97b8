#include <benchmark/benchmark.h>

#include "pwsc/bifurcation.hpp"
#include "pwsc/meanfield.hpp"
#include "pwsc/models.hpp"
#include "pwsc/netsim.hpp"
#include "pwsc/params_io.hpp"

using namespace pwsc;

namespace {

ModelParams izh(double I) {
  auto p = load_preset("izhikevich");
  p.I = I;
  return p;
}

void BM_RateClosedForm(benchmark::State& state) {
  const auto p = izh(0.4260);
  double s = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(firing_rate_full(p, s, 0.05));
    s = s < 0.5 ? s + 1e-6 : 0.1;
  }
}
BENCHMARK(BM_RateClosedForm);

void BM_RateQuadrature(benchmark::State& state) {
  const auto p = izh(0.4260);
  double s = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(firing_rate_quadrature(p, s, 0.05));
    s = s < 0.5 ? s + 1e-6 : 0.1;
  }
}
BENCHMARK(BM_RateQuadrature);

// One period of the bursting orbit of the reduced mean field.
void BM_MeanFieldBurstPeriod(benchmark::State& state) {
  const auto p = izh(0.1893);
  const auto cyc = track_limit_cycle(p, p.g, p.I, true);
  const auto system = state.range(0) == 0 ? MeanFieldSystem::ReducedMF : MeanFieldSystem::FullMF;
  for (auto _ : state) {
    FlowIntegrator flow(p, system, cyc.section_point);
    flow.advance(cyc.period);
    benchmark::DoNotOptimize(flow.state());
  }
  state.SetLabel(std::string(to_string(system)));
}
BENCHMARK(BM_MeanFieldBurstPeriod)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_NetworkSteps(benchmark::State& state) {
  const auto p = izh(0.4260);
  NetworkOptions o;
  o.N = static_cast<std::size_t>(state.range(0));
  o.duration = 10.0;
  o.dt = 0.01;
  o.record_interval = 1.0;
  o.record_spikes = false;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_network(p, o).final_s);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(o.N) * 1000);
}
BENCHMARK(BM_NetworkSteps)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
