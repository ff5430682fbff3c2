#pragma once

#include <span>

#include "rtumpc/types.hpp"

namespace rtumpc::control {

/// Staged thermostat. Above the escalation threshold (upper bound minus
/// escalate_margin) the unit climbs one ladder rung per step
/// (off -> fan -> stage 1 -> stage 2); below the re-entry threshold (upper
/// bound minus deadband) it drops one rung per step; in between it holds.
struct GreedyConfig {
    double escalate_margin = 0.0;  // degC below the upper bound
    double deadband = 0.3;         // degC below the upper bound

    void validate() const;
};

/// Next control of one zone. history: applied controls of the zone, oldest
/// first (the last entry is the current one). The result never breaks the
/// ladder or the lock-out rule with period rho.
ControlVector greedy_step(double theta, const ComfortBounds& bounds, std::span<const ControlVector> history, int rho,
                          const GreedyConfig& config = {});

} // namespace rtumpc::control
