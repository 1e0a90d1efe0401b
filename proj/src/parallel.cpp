#include "piac/parallel.hpp"

#include "piac/errors.hpp"
#include "piac/h2.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <limits>

namespace piac {

int worker_count() {
  if (const char* env = std::getenv("PIAC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

namespace detail {

void run_indexed(int count, void (*fn)(void*, int), void* ctx) {
  std::vector<std::exception_ptr> errors(count > 0 ? count : 0);
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (int i = 0; i < count; ++i) {
    try {
      fn(ctx, i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

SweepAxis parse_axis(const std::string& s) {
  if (s == "k1") return SweepAxis::K1;
  if (s == "k3") return SweepAxis::K3;
  throw DomainError("unknown sweep axis '" + s + "'");
}

const char* to_string(SweepAxis a) { return a == SweepAxis::K1 ? "k1" : "k3"; }

GainSchedule gains_at(const GainSchedule& base, SweepAxis axis, double value) {
  GainSchedule g = base;
  if (axis == SweepAxis::K3) {
    g.k3 = value;
  } else {
    if (base.analytic_mode) g.k2 = 4.0 * value;
    g.k1 = value;
  }
  return g;
}

Eigen::VectorXd controller_prices(const PowerNetwork& net) {
  const auto vk = net.controllers();
  Eigen::VectorXd p(vk.size());
  for (std::size_t k = 0; k < vk.size(); ++k) p(k) = net.node(vk[k]).price;
  return p;
}

SweepPoint sweep_point(const PowerNetwork& net, const CommunicationGraph& comm,
                       const SweepRequest& request, double value) {
  SweepPoint pt;
  pt.param = value;
  pt.gains = gains_at(request.base, request.axis, value);
  pt.gains.validate(false);

  const bool linear = net.count(NodeKind::Machine) == net.size();
  if (linear) {
    auto norm = [&](OutputSelector sel) {
      return h2_numeric(assemble(request.law, net, comm, pt.gains, std::nullopt, sel)).value;
    };
    pt.omega_norm = norm(OutputSelector::FrequencyDeviation);
    pt.u_norm = norm(OutputSelector::ControlInput);
    pt.spread_norm = request.law == Law::Gbpiac ? 0.0 : norm(OutputSelector::MarginalCostSpread);
  } else {
    pt.omega_norm = pt.u_norm = pt.spread_norm = std::numeric_limits<double>::quiet_NaN();
  }

  if (request.scenario) {
    const Scenario& sc = *request.scenario;
    if (sc.kind == ScenarioKind::StepLoad) {
      const Trace trace = simulate_deterministic(net, comm, request.law, pt.gains, sc);
      pt.metrics = compute_metrics(trace, controller_prices(net), sc.metrics_window);
    } else {
      // Grid points already run in parallel; paths stay serial here.
      pt.metrics = simulate_stochastic_serial(net, comm, request.law, pt.gains, sc).metrics;
    }
  }
  return pt;
}

std::vector<SweepPoint> run_sweep(const PowerNetwork& net, const CommunicationGraph& comm,
                                  const SweepRequest& request) {
  std::vector<SweepPoint> out(request.grid.size());
  parallel_for(static_cast<int>(request.grid.size()),
               [&](int i) { out[i] = sweep_point(net, comm, request, request.grid[i]); });
  return out;
}

std::vector<SweepPoint> run_sweep_serial(const PowerNetwork& net, const CommunicationGraph& comm,
                                         const SweepRequest& request) {
  std::vector<SweepPoint> out;
  out.reserve(request.grid.size());
  for (double v : request.grid) out.push_back(sweep_point(net, comm, request, v));
  return out;
}

}  // namespace piac
