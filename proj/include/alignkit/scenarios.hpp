#ifndef ALIGNKIT_SCENARIOS_HPP
#define ALIGNKIT_SCENARIOS_HPP

#include <string>
#include <vector>

#include "alignkit/world_spec.hpp"

namespace alignkit {

std::vector<std::string> builtin_scenario_names();

/// Deterministic, version-pinned desk-scale worlds. Unknown names raise an
/// error listing the available scenarios.
WorldSpec builtin_scenario(const std::string& name);

} // namespace alignkit

#endif
