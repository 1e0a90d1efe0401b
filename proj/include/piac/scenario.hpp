#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace piac {

enum class ScenarioKind { StepLoad, WhiteNoise };

/// Load step ΔP applied at a node (by id) from the onset time on.
struct LoadStep {
  int node_id = 0;
  double delta = 0.0;
  bool operator==(const LoadStep&) const = default;
};

/// Additive white-noise power disturbance w_i ~ N(0, σ_i²) at a node (by id).
struct NoiseSource {
  int node_id = 0;
  double sigma = 0.0;
  bool operator==(const NoiseSource&) const = default;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::StepLoad;
  double horizon = 60.0;        // T_end [s]
  double step = 0.01;           // integrator step (stochastic) / output grid (deterministic) [s]
  int record_stride = 1;        // keep every n-th grid point in the trace
  double metrics_window = 40.0; // T0 for S and C [s]
  bool linearized = false;      // replace sin(θ_ij) by θ_ij

  // StepLoad
  double onset = 5.0;
  std::vector<LoadStep> steps;

  // WhiteNoise
  std::vector<NoiseSource> noise;
  int paths = 20;
  double burn_in = 50.0;
  std::optional<std::uint64_t> seed;

  static Scenario step_load(std::vector<LoadStep> steps, double onset = 5.0, double horizon = 60.0) {
    Scenario s;
    s.kind = ScenarioKind::StepLoad;
    s.steps = std::move(steps);
    s.onset = onset;
    s.horizon = horizon;
    return s;
  }

  static Scenario white_noise(std::vector<NoiseSource> noise, std::uint64_t seed,
                              double horizon = 250.0) {
    Scenario s;
    s.kind = ScenarioKind::WhiteNoise;
    s.noise = std::move(noise);
    s.seed = seed;
    s.horizon = horizon;
    s.step = 1e-3;
    s.record_stride = 100;
    return s;
  }

  bool operator==(const Scenario&) const = default;
};

}  // namespace piac
