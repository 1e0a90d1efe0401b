#pragma once

#include "piac/closedloop.hpp"
#include "piac/controllers.hpp"
#include "piac/netmodel.hpp"
#include "piac/scenario.hpp"
#include "piac/sim.hpp"

#include <exception>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace piac {

/// Worker threads for parallel kernels: PIAC_WORKERS when set to a positive
/// integer, otherwise the OpenMP default.
int worker_count();

namespace detail {
void run_indexed(int count, void (*fn)(void*, int), void* ctx);
}

/// Runs body(i) for i in [0, count) on worker_count() threads. If any call
/// throws, the exception of the lowest failing index is rethrown afterwards.
template <class F>
void parallel_for(int count, F&& body) {
  using Body = std::remove_reference_t<F>;
  auto thunk = [](void* ctx, int i) { (*static_cast<Body*>(ctx))(i); };
  detail::run_indexed(count, thunk, const_cast<void*>(static_cast<const void*>(&body)));
}

enum class SweepAxis { K1, K3 };
SweepAxis parse_axis(const std::string& s);
const char* to_string(SweepAxis a);

struct SweepRequest {
  Law law = Law::Dpiac;
  SweepAxis axis = SweepAxis::K1;
  std::vector<double> grid;
  GainSchedule base;
  // Simulated S/C (step scenario) or E_S/E_C (noise scenario) per point.
  std::optional<Scenario> scenario;
};

struct SweepPoint {
  double param = 0.0;
  GainSchedule gains;
  // Squared H2 norms; NaN when the network has no linear model.
  double omega_norm = 0.0;
  double u_norm = 0.0;
  double spread_norm = 0.0;
  std::optional<Metrics> metrics;
};

/// Gains at one grid value. Moving k1 keeps k2 = 4 k1 in analytic mode.
GainSchedule gains_at(const GainSchedule& base, SweepAxis axis, double value);

/// Grid points in parallel; results come back in grid order and do not
/// depend on the worker count.
std::vector<SweepPoint> run_sweep(const PowerNetwork& net, const CommunicationGraph& comm,
                                  const SweepRequest& request);
/// Serial reference for run_sweep.
std::vector<SweepPoint> run_sweep_serial(const PowerNetwork& net, const CommunicationGraph& comm,
                                         const SweepRequest& request);

/// One grid point, shared by both sweep drivers.
SweepPoint sweep_point(const PowerNetwork& net, const CommunicationGraph& comm,
                       const SweepRequest& request, double value);

/// Controller prices over V_K in node order.
Eigen::VectorXd controller_prices(const PowerNetwork& net);

}  // namespace piac
