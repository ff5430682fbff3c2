#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rtumpc {

/// Number of on/off components per rooftop unit in cooling mode: [c2, c1, fan].
inline constexpr int kComponentsPerRtu = 3;
/// Number of valid ladder states per rooftop unit.
inline constexpr int kLadderSize = 4;

/// On/off stage vector of one rooftop unit, restricted to the valid ladder
///
///   code 0: [0,0,0] off
///   code 1: [0,0,1] fan only
///   code 2: [0,1,1] stage 1 + fan
///   code 3: [1,1,1] stage 2 + stage 1 + fan
///
/// Higher codes never draw less power than lower ones.
class ControlVector {
public:
    constexpr ControlVector() = default;

    /// Throws Error(InvalidLadder) for codes outside 0..3.
    static ControlVector from_code(int code);
    /// Validates raw bits ordered [c2, c1, fan]. Throws Error(InvalidLadder)
    /// for a cooling stage without the fan or stage 2 without stage 1, and
    /// Error(ShapeMismatch) when the length is not 3.
    static ControlVector from_bits(std::span<const int> bits);

    [[nodiscard]] constexpr int code() const noexcept { return code_; }
    [[nodiscard]] constexpr int stage2() const noexcept { return code_ >= 3 ? 1 : 0; }
    [[nodiscard]] constexpr int stage1() const noexcept { return code_ >= 2 ? 1 : 0; }
    [[nodiscard]] constexpr int fan() const noexcept { return code_ >= 1 ? 1 : 0; }
    [[nodiscard]] constexpr std::array<int, kComponentsPerRtu> bits() const noexcept {
        return {stage2(), stage1(), fan()};
    }

    friend constexpr bool operator==(ControlVector, ControlVector) = default;

private:
    explicit constexpr ControlVector(int code) : code_(static_cast<std::uint8_t>(code)) {}
    std::uint8_t code_ = 0;
};

/// Controls of all zones at one time step, zone-major.
using ZoneControls = std::vector<ControlVector>;

/// Component power ratings of one rooftop unit, kW.
struct RtuRating {
    double p_c2 = 2.272;
    double p_c1 = 2.272;
    double p_f = 0.637;

    void validate() const;
    [[nodiscard]] double power(ControlVector u) const noexcept {
        return u.stage2() * p_c2 + u.stage1() * p_c1 + u.fan() * p_f;
    }
    /// Power of the continuous ladder relaxation, code in [0, 3]. Piecewise
    /// linear with nondecreasing slopes p_f <= p_c1 <= p_c2 for the defaults.
    [[nodiscard]] double relaxed_power(double code) const noexcept;
};

/// [u, -u] over all zones, length 2 * 3 * n_zones.
struct ExtendedControl {
    std::vector<double> values;
};

ExtendedControl extend(std::span<const ControlVector> controls);

/// Instantaneous electrical power of all zones, kW. One rating for every zone.
double total_power(std::span<const ControlVector> controls, const RtuRating& rating) noexcept;
/// Energy drawn during one control round of dt_hours, kWh: (u^T p) dt.
double step_energy(std::span<const ControlVector> controls, const RtuRating& rating, double dt_hours);

using TimePoint = std::chrono::sys_seconds;

/// Fixed-step simulation clock. Step k starts at start + k * step_seconds.
struct SimClock {
    TimePoint start{};
    int step_seconds = 300;

    [[nodiscard]] TimePoint time_at(long step) const {
        return start + std::chrono::seconds(static_cast<long long>(step) * step_seconds);
    }
    [[nodiscard]] double dt_hours() const noexcept { return step_seconds / 3600.0; }
    [[nodiscard]] int steps_per_day() const noexcept { return 86400 / step_seconds; }
};

/// Parses "YYYY-MM-DDTHH:MM:SS" (optionally with a trailing Z) as UTC.
TimePoint parse_iso8601(const std::string& text);
std::string format_iso8601(TimePoint t);
/// Monday = 0 ... Sunday = 6.
int day_of_week(TimePoint t);
double hour_of_day(TimePoint t);

inline constexpr int kExogenousFeatures = 6;

/// Exogenous state s^t: outdoor air temperature, irradiance and clock encodings.
struct ExogenousState {
    double oat = 0.0;  ///< degC
    double ghi = 0.0;  ///< W/m2
    double tod_sin = 0.0;
    double tod_cos = 1.0;
    double dow_sin = 0.0;
    double dow_cos = 1.0;

    static ExogenousState at(TimePoint t, double oat, double ghi);
    [[nodiscard]] std::array<double, kExogenousFeatures> to_array() const noexcept {
        return {oat, ghi, tod_sin, tod_cos, dow_sin, dow_cos};
    }
};

struct ComfortBounds {
    double lower = 20.0;
    double upper = 24.0;
    bool occupied = true;
};

/// Occupancy calendar: occupied on weekdays between open and close hours.
struct OccupancyCalendar {
    double open_hour = 8.0;
    double close_hour = 18.0;
    bool weekends_occupied = false;

    [[nodiscard]] bool occupied(TimePoint t) const;
};

/// Comfort band per time step, identical for every zone.
struct ComfortSchedule {
    OccupancyCalendar calendar{};
    ComfortBounds occupied_bounds{20.0, 24.0, true};
    ComfortBounds unoccupied_bounds{18.0, 28.0, false};

    void validate() const;
    [[nodiscard]] ComfortBounds at(TimePoint t) const {
        return calendar.occupied(t) ? occupied_bounds : unoccupied_bounds;
    }
};

/// Prices indexed by simulation step. A single-entry series is constant.
struct Tariff {
    std::vector<double> energy_price{0.05303};     ///< $/kWh
    double demand_charge = 14.58;                  ///< $/kW on the horizon peak
    std::vector<double> curtailment_price{0.0};    ///< $/kWh
    double cpr_reward = 0.0;                       ///< $/kWh curtailed in events

    void validate() const;
    [[nodiscard]] double energy_price_at(long step) const;
    [[nodiscard]] double curtailment_price_at(long step) const;
};

/// Flat-rate tariff with peak demand charge.
Tariff flat_tariff(double energy_price = 0.05303, double demand_charge = 14.58);

struct TouRates {
    double off_peak = 0.074;
    double mid_peak = 0.102;
    double on_peak = 0.151;
};

/// Summer time-of-use energy prices: on-peak 11-17 on weekdays, mid-peak
/// 7-11 and 17-19 on weekdays, off-peak otherwise. No demand charge.
Tariff tou_tariff(const SimClock& clock, long first_step, long steps, const TouRates& rates = {});

} // namespace rtumpc
