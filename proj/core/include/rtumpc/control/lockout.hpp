#pragma once

#include <span>
#include <vector>

#include "rtumpc/types.hpp"

namespace rtumpc::control {

/// Lock-out rule for one component with minimum off period rho: the number of
/// on-to-off switches over the rho transitions ending at step k-1 must not
/// exceed 1 - u^k. A component switched off therefore stays off for rho steps.
///
/// Sequences are oldest first; steps before the first element count as off.

/// Number of on-to-off switches of `bits` over transitions into steps
/// [k - rho, k - 1].
int switch_offs(std::span<const int> bits, std::ptrdiff_t k, int rho);

/// Constraint value for step k: switch_offs - (1 - bits[k]); feasible iff <= 0.
int lockout_margin(std::span<const int> bits, std::ptrdiff_t k, int rho);

/// Highest ladder code that the next step may use given a zone's applied
/// history (oldest first).
int max_allowed_code(std::span<const ControlVector> history, int rho);

/// Lock-out violations of an applied trajectory (oldest first, one
/// ZoneControls per step), counted per zone, component and step.
int count_lockout_violations(std::span<const ZoneControls> applied, int rho);

/// Component bits of zone z over a trajectory: result[j][k].
std::vector<std::vector<int>> component_series(std::span<const ZoneControls> applied, std::size_t zone);

} // namespace rtumpc::control
