#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rtumpc/plant/rc_network.hpp"
#include "rtumpc/types.hpp"

namespace rtumpc::plant {

/// Synthetic hot-climate weather generator settings. Defaults are Miami-like.
struct WeatherConfig {
    double oat_mean = 24.0;        ///< degC
    double oat_amplitude = 5.0;    ///< degC, half of the diurnal swing
    double oat_peak_hour = 15.0;
    double day_to_day_std = 1.0;   ///< degC, slow drift of the daily mean
    double oat_noise_std = 0.25;   ///< degC, fast correlated perturbation
    double ghi_peak = 850.0;       ///< W/m2 on a clear day
    double sunrise_hour = 7.0;
    double sunset_hour = 19.0;
    double min_clearness = 0.6;    ///< daily clearness drawn in [min_clearness, 1]
    double ghi_noise_std = 25.0;   ///< W/m2
};

struct WeatherTrace {
    SimClock clock{};
    std::vector<double> oat;
    std::vector<double> ghi;

    [[nodiscard]] std::size_t size() const noexcept { return oat.size(); }
    [[nodiscard]] WeatherSample at(long step) const;
    [[nodiscard]] ExogenousState exogenous(long step) const;
};

/// Reproducible per seed. Covers days * steps_per_day samples starting at clock.start.
WeatherTrace synthesize_weather(std::uint64_t seed, int days, const SimClock& clock = {},
                                const WeatherConfig& config = {});

/// CSV columns: timestamp,oat_c,ghi_w_m2
void write_weather_csv(std::ostream& out, const WeatherTrace& trace);
WeatherTrace read_weather_csv(std::istream& in);

} // namespace rtumpc::plant
