#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rtumpc/plant/rc_network.hpp"
#include "rtumpc/plant/weather.hpp"
#include "rtumpc/types.hpp"

namespace rtumpc::plant {

/// One sampled step: exogenous state at the start of the step, controls
/// applied during it, zone air temperature at its end and the change
/// theta^t - theta^{t-1} over it.
struct Record {
    ExogenousState exog;
    ZoneControls controls;
    std::vector<double> theta;
    std::vector<double> dtheta;
};

/// Evenly spaced records; record k starts at clock.time_at(k).
struct RecordSet {
    SimClock clock{};
    int zones = 0;
    std::vector<Record> records;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
};

/// Excitation used to produce identification data: a staged thermostat that
/// follows a randomized cooling set-point, interrupted by random ladder codes
/// held for a random number of steps.
struct ExcitationPolicy {
    double setpoint_min = 21.0;
    double setpoint_max = 27.0;
    int setpoint_hold_min = 12;
    int setpoint_hold_max = 72;
    double deadband = 1.0;
    double random_start_prob = 0.06;  ///< per step and zone, when not already random
    int random_hold_min = 2;
    int random_hold_max = 18;
    std::uint64_t seed = 7;
};

inline constexpr int kDaysPerMonth = 30;

/// Simulates `months` 30-day months from the start of `trace` and records the
/// trajectory. The trace must cover the requested duration.
RecordSet generate_dataset(const RcNetwork& network, const WeatherTrace& trace, const ExcitationPolicy& policy,
                           double months, double initial_temperature = 22.0);

/// CSV columns: timestamp,oat,ghi,tod_sin,tod_cos,dow_sin,dow_cos, then per zone
/// z (1-based) u_c2_zN,u_c1_zN,u_f_zN,theta_zN,dtheta_zN.
void write_records_csv(std::ostream& out, const RecordSet& set);
RecordSet read_records_csv(std::istream& in);

} // namespace rtumpc::plant
