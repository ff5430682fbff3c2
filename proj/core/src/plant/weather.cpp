#include "rtumpc/plant/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "../csv.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::plant {

WeatherSample WeatherTrace::at(long step) const {
    require(step >= 0 && static_cast<std::size_t>(step) < oat.size(), ErrorCode::InvalidArgument,
            "weather trace does not cover step " + std::to_string(step));
    return {oat[static_cast<std::size_t>(step)], ghi[static_cast<std::size_t>(step)]};
}

ExogenousState WeatherTrace::exogenous(long step) const {
    const auto w = at(step);
    return ExogenousState::at(clock.time_at(step), w.oat, w.ghi);
}

WeatherTrace synthesize_weather(std::uint64_t seed, int days, const SimClock& clock, const WeatherConfig& cfg) {
    require(days >= 1, ErrorCode::InvalidArgument, "weather needs at least one day");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> clearness(cfg.min_clearness, 1.0);

    const long steps = static_cast<long>(days) * clock.steps_per_day();
    WeatherTrace trace;
    trace.clock = clock;
    trace.oat.resize(static_cast<std::size_t>(steps));
    trace.ghi.resize(static_cast<std::size_t>(steps));

    // Two AR(1) processes: a slow one for day-to-day drift (~3.5 days
    // correlation time) and a fast one for sub-hourly fluctuations.
    const double slow_phi = 0.999, fast_phi = 0.95;
    const double slow_innov = cfg.day_to_day_std * std::sqrt(1.0 - slow_phi * slow_phi);
    const double fast_innov = cfg.oat_noise_std * std::sqrt(1.0 - fast_phi * fast_phi);
    double slow = cfg.day_to_day_std * normal(rng);
    double fast = cfg.oat_noise_std * normal(rng);
    double clear = clearness(rng);
    int last_day = -1;

    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (long k = 0; k < steps; ++k) {
        const TimePoint t = clock.time_at(k);
        const double hour = hour_of_day(t);
        const int day = static_cast<int>(k / clock.steps_per_day());
        if (day != last_day) {
            clear = clearness(rng);
            last_day = day;
        }
        slow = slow_phi * slow + slow_innov * normal(rng);
        fast = fast_phi * fast + fast_innov * normal(rng);
        const double diurnal = cfg.oat_amplitude * std::cos(two_pi * (hour - cfg.oat_peak_hour) / 24.0);
        trace.oat[static_cast<std::size_t>(k)] = cfg.oat_mean + slow + diurnal + fast;

        double ghi = 0.0;
        if (hour > cfg.sunrise_hour && hour < cfg.sunset_hour) {
            const double phase = (hour - cfg.sunrise_hour) / (cfg.sunset_hour - cfg.sunrise_hour);
            ghi = clear * cfg.ghi_peak * std::sin(std::numbers::pi * phase) + cfg.ghi_noise_std * normal(rng);
            ghi = std::max(0.0, ghi);
        }
        trace.ghi[static_cast<std::size_t>(k)] = ghi;
    }
    return trace;
}

void write_weather_csv(std::ostream& out, const WeatherTrace& trace) {
    out << "timestamp,oat_c,ghi_w_m2\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << format_iso8601(trace.clock.time_at(static_cast<long>(k))) << ',' << detail::fmt_double(trace.oat[k])
            << ',' << detail::fmt_double(trace.ghi[k]) << '\n';
    }
}

WeatherTrace read_weather_csv(std::istream& in) {
    const auto header = detail::read_header(in);
    require(header.size() == 3, ErrorCode::Parse, "weather CSV needs 3 columns");
    WeatherTrace trace;
    std::string line;
    std::vector<TimePoint> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        require(cells.size() == 3, ErrorCode::Parse, "weather CSV row needs 3 cells");
        times.push_back(parse_iso8601(cells[0]));
        trace.oat.push_back(detail::parse_double(cells[1]));
        trace.ghi.push_back(detail::parse_double(cells[2]));
    }
    require(!times.empty(), ErrorCode::Parse, "weather CSV has no rows");
    trace.clock.start = times.front();
    if (times.size() > 1) trace.clock.step_seconds = static_cast<int>((times[1] - times[0]).count());
    for (std::size_t k = 1; k < times.size(); ++k) {
        require(times[k] - times[k - 1] == times[1] - times[0], ErrorCode::Parse, "weather CSV is not evenly spaced");
    }
    return trace;
}

} // namespace rtumpc::plant
