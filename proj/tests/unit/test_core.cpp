#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "rtumpc/error.hpp"
#include "rtumpc/types.hpp"

using namespace rtumpc;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected rtumpc::Error");
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST_SUITE("core") {

TEST_CASE("ladder validation from raw bits") {
    const std::array<int, 3> off{0, 0, 0}, full{1, 1, 1}, stage1_no_fan{0, 1, 0};
    CHECK(ControlVector::from_bits(off).code() == 0);
    CHECK(ControlVector::from_bits(full).code() == 3);
    CHECK(code_of([&] { (void)ControlVector::from_bits(stage1_no_fan); }) == ErrorCode::InvalidLadder);

    const std::array<int, 3> c2_without_c1{1, 0, 1};
    CHECK(code_of([&] { (void)ControlVector::from_bits(c2_without_c1); }) == ErrorCode::InvalidLadder);
    const std::array<int, 3> non_binary{0, 0, 2};
    CHECK_THROWS_AS((void)ControlVector::from_bits(non_binary), Error);
    const std::array<int, 2> short_vec{0, 1};
    CHECK(code_of([&] { (void)ControlVector::from_bits(short_vec); }) == ErrorCode::ShapeMismatch);
    CHECK(code_of([] { (void)ControlVector::from_code(4); }) == ErrorCode::InvalidLadder);
    CHECK(code_of([] { (void)ControlVector::from_code(-1); }) == ErrorCode::InvalidLadder);
}

TEST_CASE("code and bits form a bijection on the ladder") {
    std::set<std::array<int, 3>> seen;
    for (int c = 0; c < kLadderSize; ++c) {
        const auto u = ControlVector::from_code(c);
        const auto b = u.bits();
        CHECK(ControlVector::from_bits(b).code() == c);
        seen.insert(b);
    }
    CHECK(seen.size() == 4);
    CHECK(ControlVector::from_code(2).bits() == std::array<int, 3>{0, 1, 1});
    CHECK(ControlVector::from_code(1).bits() == std::array<int, 3>{0, 0, 1});
}

TEST_CASE("extended control is [u, -u]") {
    auto ext = [](int code) { return extend(std::vector{ControlVector::from_code(code)}).values; };
    CHECK(ext(0) == std::vector<double>{0, 0, 0, 0, 0, 0});
    CHECK(ext(3) == std::vector<double>{1, 1, 1, -1, -1, -1});
    CHECK(ext(2) == std::vector<double>{0, 1, 1, 0, -1, -1});
    const auto two = extend(std::vector{ControlVector::from_code(3), ControlVector::from_code(1)}).values;
    CHECK(two == std::vector<double>{1, 1, 1, 0, 0, 1, -1, -1, -1, 0, 0, -1});
}

TEST_CASE("step energy") {
    const RtuRating r;
    const std::vector full{ControlVector::from_code(3)};
    CHECK(step_energy(full, r, 1.0 / 12.0) == doctest::Approx(0.43175).epsilon(1e-12));
    CHECK(step_energy(std::vector{ControlVector::from_code(0)}, r, 1.0 / 12.0) == 0.0);
    CHECK(total_power(std::vector{ControlVector::from_code(3), ControlVector::from_code(3)}, r) ==
          doctest::Approx(10.362));
}

TEST_CASE("step energy is linear in dt and monotone in every bit") {
    const RtuRating r;
    for (int a = 0; a < kLadderSize; ++a) {
        for (int b = 0; b < kLadderSize; ++b) {
            const std::vector u{ControlVector::from_code(a), ControlVector::from_code(b)};
            const double e1 = step_energy(u, r, 0.1);
            CHECK(step_energy(u, r, 0.3) == doctest::Approx(3 * e1));
            if (a + 1 < kLadderSize) {
                const std::vector up{ControlVector::from_code(a + 1), ControlVector::from_code(b)};
                CHECK(step_energy(up, r, 0.1) >= e1);
            }
        }
    }
}

TEST_CASE("relaxed ladder power interpolates the integer ladder") {
    const RtuRating r;
    for (int c = 0; c < kLadderSize; ++c)
        CHECK(r.relaxed_power(c) == doctest::Approx(r.power(ControlVector::from_code(c))));
    CHECK(r.relaxed_power(1.5) == doctest::Approx(r.p_f + 0.5 * r.p_c1));
    CHECK(r.relaxed_power(-1) == 0.0);
    CHECK(r.relaxed_power(7) == doctest::Approx(5.181));
}

TEST_CASE("rating validation") {
    RtuRating r;
    r.p_f = -1;
    CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("time helpers") {
    const auto t = parse_iso8601("2021-07-05T13:30:00Z");
    CHECK(format_iso8601(t) == "2021-07-05T13:30:00Z");
    CHECK(day_of_week(t) == 0);
    CHECK(hour_of_day(t) == doctest::Approx(13.5));
    CHECK(day_of_week(parse_iso8601("2021-07-11T23:55:00")) == 6);
    CHECK_THROWS_AS((void)parse_iso8601("yesterday"), Error);

    SimClock clock{t, 300};
    CHECK(clock.steps_per_day() == 288);
    CHECK(clock.dt_hours() == doctest::Approx(1.0 / 12.0));
    CHECK(format_iso8601(clock.time_at(6)) == "2021-07-05T14:00:00Z");
}

TEST_CASE("clock encodings lie on the unit circle") {
    const SimClock clock{parse_iso8601("2021-07-01T00:00:00Z"), 300};
    for (long k = 0; k < 7 * 288; k += 7) {
        const auto s = ExogenousState::at(clock.time_at(k), 30.0, 100.0);
        CHECK(s.tod_sin * s.tod_sin + s.tod_cos * s.tod_cos == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.dow_sin * s.dow_sin + s.dow_cos * s.dow_cos == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("comfort schedule follows occupancy") {
    const ComfortSchedule c;
    const auto monday_noon = parse_iso8601("2021-07-05T12:00:00Z");
    const auto monday_night = parse_iso8601("2021-07-05T22:00:00Z");
    const auto saturday_noon = parse_iso8601("2021-07-10T12:00:00Z");
    CHECK(c.at(monday_noon).upper == 24.0);
    CHECK(c.at(monday_night).upper == 28.0);
    CHECK(c.at(saturday_noon).upper == 28.0);
    CHECK_FALSE(c.calendar.occupied(parse_iso8601("2021-07-05T18:00:00Z")));
    CHECK(c.calendar.occupied(parse_iso8601("2021-07-05T08:00:00Z")));
}

TEST_CASE("tariffs") {
    const auto flat = flat_tariff();
    CHECK(flat.energy_price_at(12345) == 0.05303);
    CHECK(flat.demand_charge == 14.58);

    const SimClock clock{parse_iso8601("2021-07-05T00:00:00Z"), 300};
    const auto tou = tou_tariff(clock, 0, 7 * 288);
    CHECK(tou.demand_charge == 0.0);
    CHECK(tou.energy_price_at(12 * 12) == 0.151);      // Monday 12:00
    CHECK(tou.energy_price_at(8 * 12) == 0.102);       // Monday 08:00
    CHECK(tou.energy_price_at(18 * 12) == 0.102);      // Monday 18:00
    CHECK(tou.energy_price_at(3 * 12) == 0.074);       // Monday 03:00
    CHECK(tou.energy_price_at(5 * 288 + 144) == 0.074);  // Saturday noon
    CHECK_THROWS_AS((void)tou.energy_price_at(7 * 288), Error);

    Tariff bad;
    bad.energy_price = {-0.1};
    CHECK_THROWS_AS(bad.validate(), Error);
}

}
