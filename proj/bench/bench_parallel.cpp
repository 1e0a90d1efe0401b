// Serial vs OpenMP timing for the stochastic ensemble and the gain sweep.
// Usage: bench_parallel [paths] [grid points]

#include "piac/case_io.hpp"
#include "piac/parallel.hpp"
#include "piac/sim.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>

using namespace piac;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int paths = argc > 1 ? std::atoi(argv[1]) : 16;
  const int points = argc > 2 ? std::atoi(argv[2]) : 16;
  std::printf("workers %d\n", worker_count());

  const auto b = load_case(PIAC_DATA_DIR "/homogeneous10.case");
  std::vector<NoiseSource> noise;
  for (const auto& n : b.net.nodes()) noise.push_back({n.id, 0.01});
  Scenario sc = Scenario::white_noise(noise, 1, 60.0);
  sc.burn_in = 10;
  sc.paths = paths;
  sc.record_stride = 1000;

  Ensemble par, ser;
  const double ts = seconds([&] { ser = simulate_stochastic_serial(b.net, b.comm, Law::Dpiac, b.gains, sc); });
  const double tp = seconds([&] { par = simulate_stochastic(b.net, b.comm, Law::Dpiac, b.gains, sc); });
  std::printf("ensemble %3d paths  serial %8.3f s  parallel %8.3f s  speedup %5.2f  identical %s\n", paths, ts, tp,
              ts / tp, par.metrics.E_S == ser.metrics.E_S ? "yes" : "NO");

  SweepRequest req;
  req.law = Law::Dpiac;
  req.axis = SweepAxis::K3;
  req.base = b.gains;
  for (int i = 0; i < points; ++i) req.grid.push_back(0.5 * (i + 1));
  req.scenario = b.scenario;
  std::vector<SweepPoint> a, s;
  const double ss = seconds([&] { s = run_sweep_serial(b.net, b.comm, req); });
  const double sp = seconds([&] { a = run_sweep(b.net, b.comm, req); });
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].metrics->S == s[i].metrics->S;
  std::printf("sweep    %3d points serial %8.3f s  parallel %8.3f s  speedup %5.2f  identical %s\n", points, ss, sp,
              ss / sp, same ? "yes" : "NO");
  return 0;
}
