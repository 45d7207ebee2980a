#ifndef MSORTE_SCENARIO_IO_HPP
#define MSORTE_SCENARIO_IO_HPP

#include <string>
#include <utility>

#include "msorte/types.hpp"

namespace msorte {

/// Reads the scenario CSV: header `scenario,prob,X1,...,XN`, one row per
/// outcome. Reports malformed rows with their location.
std::pair<ScenarioSpace, Allocation> load_scenarios(const std::string& path);

/// Writes the canonical format (%.17g floats) so that load/save round-trips
/// bit-exactly.
void save_scenarios(const std::string& path, const ScenarioSpace& space, const Allocation& X);

}  // namespace msorte

#endif
