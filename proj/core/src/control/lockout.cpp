#include "rtumpc/control/lockout.hpp"

#include <algorithm>

#include "rtumpc/error.hpp"

namespace rtumpc::control {

namespace {

int at(std::span<const int> bits, std::ptrdiff_t i) {
    return i < 0 || i >= static_cast<std::ptrdiff_t>(bits.size()) ? 0 : bits[static_cast<std::size_t>(i)];
}

} // namespace

int switch_offs(std::span<const int> bits, std::ptrdiff_t k, int rho) {
    require(rho >= 0, ErrorCode::InvalidArgument, "lock-out period must be >= 0");
    int n = 0;
    for (std::ptrdiff_t tau = k - rho; tau <= k - 1; ++tau) n += std::max(at(bits, tau - 1) - at(bits, tau), 0);
    return n;
}

int lockout_margin(std::span<const int> bits, std::ptrdiff_t k, int rho) {
    return switch_offs(bits, k, rho) - (1 - at(bits, k));
}

int max_allowed_code(std::span<const ControlVector> history, int rho) {
    require(rho >= 0, ErrorCode::InvalidArgument, "lock-out period must be >= 0");
    const auto k = static_cast<std::ptrdiff_t>(history.size());
    // Ladder rungs switch on fan, then stage 1, then stage 2.
    int allowed = kLadderSize - 1;
    for (int j = 0; j < kComponentsPerRtu; ++j) {
        std::vector<int> bits;
        bits.reserve(history.size());
        for (const auto& u : history) bits.push_back(u.bits()[static_cast<std::size_t>(j)]);
        if (switch_offs(bits, k, rho) >= 1) {
            // bits order is [stage2, stage1, fan]; component j is first used at rung 3 - j.
            allowed = std::min(allowed, kLadderSize - 2 - j);
        }
    }
    return std::max(allowed, 0);
}

std::vector<std::vector<int>> component_series(std::span<const ZoneControls> applied, std::size_t zone) {
    std::vector<std::vector<int>> out(kComponentsPerRtu);
    for (const auto& step : applied) {
        require(zone < step.size(), ErrorCode::ShapeMismatch, "zone index outside the trajectory");
        const auto b = step[zone].bits();
        for (std::size_t j = 0; j < kComponentsPerRtu; ++j) out[j].push_back(b[j]);
    }
    return out;
}

int count_lockout_violations(std::span<const ZoneControls> applied, int rho) {
    if (applied.empty()) return 0;
    int violations = 0;
    for (std::size_t z = 0; z < applied.front().size(); ++z) {
        for (const auto& bits : component_series(applied, z)) {
            for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(bits.size()); ++k)
                if (lockout_margin(bits, k, rho) > 0) ++violations;
        }
    }
    return violations;
}

} // namespace rtumpc::control
