#include "rtumpc/plant/dataset.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "../csv.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::plant {

namespace {

struct ZoneExciter {
    double setpoint = 24.0;
    int setpoint_left = 0;
    int random_left = 0;
    int random_code = 0;
    int code = 0;
};

int thermostat(double theta, double setpoint, double deadband, int previous) {
    if (theta > setpoint + deadband) return 3;
    if (theta > setpoint) return previous >= 3 ? 3 : 2;
    if (theta < setpoint - deadband) return 0;
    return previous >= 2 ? 2 : 0;
}

} // namespace

RecordSet generate_dataset(const RcNetwork& network, const WeatherTrace& trace, const ExcitationPolicy& policy,
                           double months, double initial_temperature) {
    require(months > 0, ErrorCode::InvalidArgument, "months must be positive");
    const RcPlant plant(network, trace.clock.step_seconds);
    const long steps = std::lround(months * kDaysPerMonth * trace.clock.steps_per_day());
    require(static_cast<std::size_t>(steps) <= trace.size(), ErrorCode::InvalidArgument,
            "weather trace covers " + std::to_string(trace.size()) + " steps, need " + std::to_string(steps));

    std::mt19937_64 rng(policy.seed);
    std::uniform_real_distribution<double> setpoint_dist(policy.setpoint_min, policy.setpoint_max);
    std::uniform_int_distribution<int> setpoint_hold(policy.setpoint_hold_min, policy.setpoint_hold_max);
    std::uniform_int_distribution<int> random_hold(policy.random_hold_min, policy.random_hold_max);
    std::uniform_int_distribution<int> code_dist(0, kLadderSize - 1);
    std::bernoulli_distribution start_random(policy.random_start_prob);

    const int n = network.zone_count();
    RecordSet set;
    set.clock = trace.clock;
    set.zones = n;
    set.records.reserve(static_cast<std::size_t>(steps));

    PlantState state = PlantState::uniform(n, initial_temperature, trace.clock.start);
    std::vector<ZoneExciter> exciters(static_cast<std::size_t>(n));
    ZoneControls controls(static_cast<std::size_t>(n));

    for (long k = 0; k < steps; ++k) {
        for (int z = 0; z < n; ++z) {
            auto& ex = exciters[static_cast<std::size_t>(z)];
            if (ex.setpoint_left-- <= 0) {
                ex.setpoint = setpoint_dist(rng);
                ex.setpoint_left = setpoint_hold(rng);
            }
            if (ex.random_left > 0) {
                --ex.random_left;
                ex.code = ex.random_code;
            } else if (start_random(rng)) {
                ex.random_code = code_dist(rng);
                ex.random_left = random_hold(rng) - 1;
                ex.code = ex.random_code;
            } else {
                ex.code = thermostat(state.air[static_cast<std::size_t>(z)], ex.setpoint, policy.deadband, ex.code);
            }
            controls[static_cast<std::size_t>(z)] = ControlVector::from_code(ex.code);
        }
        const WeatherSample w = trace.at(k);
        PlantState next = plant.step(state, controls, w);
        Record r;
        r.exog = ExogenousState::at(state.time, w.oat, w.ghi);
        r.controls = controls;
        r.theta = next.air;
        r.dtheta.resize(static_cast<std::size_t>(n));
        for (int z = 0; z < n; ++z) {
            r.dtheta[static_cast<std::size_t>(z)] =
                next.air[static_cast<std::size_t>(z)] - state.air[static_cast<std::size_t>(z)];
        }
        set.records.push_back(std::move(r));
        state = std::move(next);
    }
    return set;
}

void write_records_csv(std::ostream& out, const RecordSet& set) {
    out << "timestamp,oat,ghi,tod_sin,tod_cos,dow_sin,dow_cos";
    for (int z = 1; z <= set.zones; ++z) {
        const auto s = std::to_string(z);
        out << ",u_c2_z" << s << ",u_c1_z" << s << ",u_f_z" << s << ",theta_z" << s << ",dtheta_z" << s;
    }
    out << '\n';
    for (std::size_t k = 0; k < set.records.size(); ++k) {
        const auto& r = set.records[k];
        out << format_iso8601(set.clock.time_at(static_cast<long>(k)));
        for (double v : r.exog.to_array()) out << ',' << detail::fmt_double(v);
        for (int z = 0; z < set.zones; ++z) {
            const auto zi = static_cast<std::size_t>(z);
            for (int b : r.controls[zi].bits()) out << ',' << b;
            out << ',' << detail::fmt_double(r.theta[zi]) << ',' << detail::fmt_double(r.dtheta[zi]);
        }
        out << '\n';
    }
}

RecordSet read_records_csv(std::istream& in) {
    const auto header = detail::read_header(in);
    require(header.size() >= 7 && (header.size() - 7) % 5 == 0, ErrorCode::Parse, "unexpected dataset CSV header");
    RecordSet set;
    set.zones = static_cast<int>((header.size() - 7) / 5);
    std::string line;
    std::vector<TimePoint> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = detail::split_csv_line(line);
        require(c.size() == header.size(), ErrorCode::Parse, "dataset row width differs from header");
        times.push_back(parse_iso8601(c[0]));
        Record r;
        r.exog = {detail::parse_double(c[1]), detail::parse_double(c[2]), detail::parse_double(c[3]),
                  detail::parse_double(c[4]), detail::parse_double(c[5]), detail::parse_double(c[6])};
        for (int z = 0; z < set.zones; ++z) {
            const std::size_t base = 7 + 5 * static_cast<std::size_t>(z);
            const int bits[3] = {detail::parse_int(c[base]), detail::parse_int(c[base + 1]),
                                 detail::parse_int(c[base + 2])};
            r.controls.push_back(ControlVector::from_bits(bits));
            r.theta.push_back(detail::parse_double(c[base + 3]));
            r.dtheta.push_back(detail::parse_double(c[base + 4]));
        }
        set.records.push_back(std::move(r));
    }
    require(!times.empty(), ErrorCode::Parse, "dataset CSV has no rows");
    set.clock.start = times.front();
    if (times.size() > 1) set.clock.step_seconds = static_cast<int>((times[1] - times[0]).count());
    return set;
}

} // namespace rtumpc::plant
