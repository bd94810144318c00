#include "qfal/presets.hpp"

namespace qfal::presets {

ValidatedMdp reservoir_mdp() {
    Mdp mdp;
    mdp.transitions = {
        Matrix{{1.0, 0.0, 0.0}, {0.6, 0.4, 0.0}, {0.1, 0.5, 0.4}},
        Matrix{{0.3, 0.7, 0.0}, {0.1, 0.2, 0.7}, {0.0, 0.0, 1.0}},
    };
    mdp.discount = 0.8;
    return validate_mdp(std::move(mdp));
}

CostMatrix reservoir_cost() { return CostMatrix{{30.0, -5.0}, {6.0, -10.0}, {0.0, 0.0}}; }

CostMatrix reservoir_derivative_base_cost() {
    return CostMatrix{{9.0, -5.0}, {6.0, -10.0}, {0.0, 0.0}};
}

} // namespace qfal::presets
