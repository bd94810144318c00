#pragma once

#include "qfal/mdp.hpp"

namespace qfal::presets {

/// Three-level hydroelectric reservoir (1 = max, 2 = medium, 3 = min level)
/// with actions a1 = turbine valve shut, a2 = open; discount 0.8.
ValidatedMdp reservoir_mdp();

/// True cost [[30,-5],[6,-10],[0,0]].
CostMatrix reservoir_cost();

/// Alternative base cost [[9,-5],[6,-10],[0,0]] used for the derivative study.
CostMatrix reservoir_derivative_base_cost();

} // namespace qfal::presets
