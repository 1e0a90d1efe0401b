#pragma once

#include "piac/controllers.hpp"
#include "piac/netmodel.hpp"
#include "piac/scenario.hpp"

#include <filesystem>
#include <string>

namespace piac {

/// Everything a case file describes.
struct CaseBundle {
  PowerNetwork net;
  CommunicationGraph comm;
  GainSchedule gains;
  Scenario scenario;

  bool operator==(const CaseBundle&) const = default;
};

/// Parses case text. Grammar (line oriented, `#` starts a comment):
///
///   [nodes]     id kind inertia damping injection price voltage
///               kind ∈ {machine, freqdep, passive}
///   [edges]     from_id to_id K
///   [comm]      from_id to_id l    | `mirror` (l = K) | `unit` (l = 1)
///   [gains]     k1 = v, k2 = v (default 4 k1), k3 = v (default 0),
///               analytic = true|false (default: k2 == 4 k1)
///   [scenario]  kind = step|noise, horizon, step, record_stride,
///               metrics_window, linearized, onset, load = id delta,
///               noise = id sigma, paths, burn_in, seed
///
/// Syntax errors raise CaseFormatError; model invariant violations raise the
/// netmodel errors (InvalidNetwork, DisconnectedNetwork).
CaseBundle parse_case(const std::string& text);

/// Canonical text form; parse_case(format_case(b)) == b.
std::string format_case(const CaseBundle& bundle);

CaseBundle load_case(const std::filesystem::path& path);
void save_case(const CaseBundle& bundle, const std::filesystem::path& path);

}  // namespace piac
