#include "rtumpc/control/greedy.hpp"

#include <algorithm>

#include "rtumpc/control/lockout.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::control {

void GreedyConfig::validate() const {
    require(escalate_margin >= 0 && deadband > escalate_margin, ErrorCode::InvalidArgument,
            "greedy thresholds need 0 <= escalate_margin < deadband");
}

ControlVector greedy_step(double theta, const ComfortBounds& bounds, std::span<const ControlVector> history, int rho,
                          const GreedyConfig& config) {
    config.validate();
    const int current = history.empty() ? 0 : history.back().code();
    int target = current;
    if (theta > bounds.upper - config.escalate_margin) {
        target = std::min(current + 1, kLadderSize - 1);
    } else if (theta < bounds.upper - config.deadband) {
        target = std::max(current - 1, 0);
    }
    return ControlVector::from_code(std::min(target, max_allowed_code(history, rho)));
}

} // namespace rtumpc::control
