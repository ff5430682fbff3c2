#include "rtumpc/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "rtumpc/error.hpp"

namespace rtumpc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidLadder: return "InvalidLadder";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NumericOverflow: return "NumericOverflow";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::NoEvaluations: return "NoEvaluations";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::NoHistory: return "NoHistory";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

ControlVector ControlVector::from_code(int code) {
    require(code >= 0 && code < kLadderSize, ErrorCode::InvalidLadder,
            "control code " + std::to_string(code) + " outside 0..3");
    return ControlVector(code);
}

ControlVector ControlVector::from_bits(std::span<const int> bits) {
    require(bits.size() == kComponentsPerRtu, ErrorCode::ShapeMismatch,
            "control vector needs 3 bits, got " + std::to_string(bits.size()));
    for (int b : bits) require(b == 0 || b == 1, ErrorCode::InvalidLadder, "control bits must be 0 or 1");
    const int c2 = bits[0], c1 = bits[1], f = bits[2];
    require(!(c1 && !f), ErrorCode::InvalidLadder, "cooling stage 1 active without fan");
    require(!(c2 && !c1), ErrorCode::InvalidLadder, "cooling stage 2 active without stage 1");
    return ControlVector(c2 + c1 + f);
}

void RtuRating::validate() const {
    require(p_c2 > 0 && p_c1 > 0 && p_f > 0, ErrorCode::InvalidArgument, "RTU power ratings must be positive");
}

double RtuRating::relaxed_power(double code) const noexcept {
    return p_f * std::clamp(code, 0.0, 1.0) + p_c1 * std::clamp(code - 1.0, 0.0, 1.0) +
           p_c2 * std::clamp(code - 2.0, 0.0, 1.0);
}

ExtendedControl extend(std::span<const ControlVector> controls) {
    const std::size_t n = controls.size() * kComponentsPerRtu;
    ExtendedControl out;
    out.values.resize(2 * n);
    for (std::size_t z = 0; z < controls.size(); ++z) {
        const auto b = controls[z].bits();
        for (int j = 0; j < kComponentsPerRtu; ++j) {
            out.values[z * kComponentsPerRtu + j] = b[j];
            out.values[n + z * kComponentsPerRtu + j] = -static_cast<double>(b[j]);
        }
    }
    return out;
}

double total_power(std::span<const ControlVector> controls, const RtuRating& rating) noexcept {
    double p = 0.0;
    for (auto u : controls) p += rating.power(u);
    return p;
}

double step_energy(std::span<const ControlVector> controls, const RtuRating& rating, double dt_hours) {
    require(dt_hours > 0, ErrorCode::InvalidArgument, "dt must be positive");
    return total_power(controls, rating) * dt_hours;
}

TimePoint parse_iso8601(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    require(n == 3 || n == 6, ErrorCode::Parse, "bad ISO-8601 timestamp '" + text + "'");
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    require(ymd.ok(), ErrorCode::Parse, "invalid calendar date '" + text + "'");
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_iso8601(TimePoint t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

int day_of_week(TimePoint t) {
    using namespace std::chrono;
    return static_cast<int>(weekday{floor<days>(t)}.iso_encoding()) - 1;
}

double hour_of_day(TimePoint t) {
    using namespace std::chrono;
    return duration<double, std::ratio<3600>>(t - floor<days>(t)).count();
}

ExogenousState ExogenousState::at(TimePoint t, double oat, double ghi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double hour = hour_of_day(t);
    const double tod = two_pi * hour / 24.0;
    const double dow = two_pi * (day_of_week(t) + hour / 24.0) / 7.0;
    return {oat, ghi, std::sin(tod), std::cos(tod), std::sin(dow), std::cos(dow)};
}

bool OccupancyCalendar::occupied(TimePoint t) const {
    if (!weekends_occupied && day_of_week(t) >= 5) return false;
    const double h = hour_of_day(t);
    return h >= open_hour && h < close_hour;
}

void ComfortSchedule::validate() const {
    require(occupied_bounds.lower < occupied_bounds.upper && unoccupied_bounds.lower < unoccupied_bounds.upper,
            ErrorCode::InvalidArgument, "comfort lower bound must be below upper bound");
}

namespace {
double series_at(const std::vector<double>& series, long step, const char* name) {
    if (series.size() == 1) return series.front();
    require(step >= 0 && static_cast<std::size_t>(step) < series.size(), ErrorCode::InvalidArgument,
            std::string(name) + " series does not cover step " + std::to_string(step));
    return series[static_cast<std::size_t>(step)];
}
} // namespace

void Tariff::validate() const {
    require(!energy_price.empty() && !curtailment_price.empty(), ErrorCode::InvalidArgument, "empty price series");
    auto nonneg = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    };
    require(nonneg(energy_price) && nonneg(curtailment_price) && demand_charge >= 0 && cpr_reward >= 0,
            ErrorCode::InvalidArgument, "prices must be nonnegative");
}

double Tariff::energy_price_at(long step) const { return series_at(energy_price, step, "energy price"); }
double Tariff::curtailment_price_at(long step) const {
    return series_at(curtailment_price, step, "curtailment price");
}

Tariff flat_tariff(double energy_price, double demand_charge) {
    Tariff t;
    t.energy_price = {energy_price};
    t.demand_charge = demand_charge;
    t.validate();
    return t;
}

Tariff tou_tariff(const SimClock& clock, long first_step, long steps, const TouRates& rates) {
    Tariff t;
    t.demand_charge = 0.0;
    t.energy_price.resize(static_cast<std::size_t>(first_step + steps));
    for (long k = 0; k < first_step + steps; ++k) {
        const TimePoint tp = clock.time_at(k);
        const double h = hour_of_day(tp);
        double price = rates.off_peak;
        if (day_of_week(tp) < 5) {
            if (h >= 11.0 && h < 17.0)
                price = rates.on_peak;
            else if ((h >= 7.0 && h < 11.0) || (h >= 17.0 && h < 19.0))
                price = rates.mid_peak;
        }
        t.energy_price[static_cast<std::size_t>(k)] = price;
    }
    t.validate();
    return t;
}

} // namespace rtumpc
