#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "rtumpc/error.hpp"
#include "rtumpc/market/market.hpp"

using namespace rtumpc;
using namespace rtumpc::market;

namespace {

// Drives the market the way the closed loop does: close the interval
// t + lead at round t, then let the ISO act.
BidBook run_market(const IsoModel& model, long bids, double quantity = 1.0) {
    BidBook book;
    Iso iso(model);
    for (long t = 0; t < bids + kGateClosureLead; ++t) {
        iso.advance(book, t);
        if (t < bids) book.close(t + kGateClosureLead, quantity, 0.1);
    }
    return book;
}

} // namespace

TEST_SUITE("market") {

TEST_CASE("lifecycle transitions") {
    using S = BidStatus;
    CHECK(valid_transition(S::Submitted, S::Cleared));
    CHECK(valid_transition(S::Submitted, S::Rejected));
    CHECK(valid_transition(S::Cleared, S::Called));
    CHECK(valid_transition(S::Cleared, S::NotCalled));
    CHECK(valid_transition(S::Called, S::SettledPaid));
    CHECK(valid_transition(S::NotCalled, S::SettledPaid));
    CHECK_FALSE(valid_transition(S::Submitted, S::Called));
    CHECK_FALSE(valid_transition(S::Cleared, S::SettledPaid));
    CHECK_FALSE(valid_transition(S::Rejected, S::Cleared));
    for (auto to : {S::Submitted, S::Cleared, S::Rejected, S::Called, S::NotCalled, S::SettledPaid})
        CHECK_FALSE(valid_transition(S::SettledPaid, to));

    BidBook book;
    book.close(10, 2.0, 0.3);
    CHECK_THROWS_AS(book.set_status(10, S::Called), Error);
    book.set_status(10, S::Cleared);
    book.set_status(10, S::Called);
    CHECK(book.find(10)->called);
    CHECK_THROWS_AS(book.set_status(11, S::Cleared), Error);
}

TEST_CASE("closing records the interval with or without a bid") {
    BidBook book;
    book.close(5, 0.0, 0.2);
    book.close(6, 1.5, 0.2);
    CHECK(book.is_closed(5));
    CHECK(book.is_closed(6));
    CHECK_FALSE(book.is_closed(7));
    CHECK(book.find(5) == nullptr);
    CHECK(book.find(6)->quantity == 1.5);
    try {
        book.close(6, 1.0, 0.2);
        FAIL("expected OutOfOrder");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfOrder);
    }
    CHECK_THROWS_AS(book.close(8, -1.0, 0.2), Error);
}

TEST_CASE("timeline: cleared two steps before and called one step before delivery") {
    BidBook book;
    Iso iso(IsoModel{1.0, 1.0, 3});
    iso.advance(book, 0);
    book.close(3, 2.0, 0.3);
    CHECK(book.find(3)->status == BidStatus::Submitted);
    auto ev = iso.advance(book, 1);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].status == BidStatus::Cleared);
    ev = iso.advance(book, 2);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].status == BidStatus::Called);
    CHECK(iso.advance(book, 3).empty());
    const auto s = settle(book, 3, 1.0, 4.0, 1.0 / 12.0);
    CHECK(s.called);
    CHECK(s.delivered);
    CHECK(book.find(3)->status == BidStatus::SettledPaid);
    CHECK_THROWS_AS(iso.advance(book, 3), Error);
}

TEST_CASE("degenerate probabilities") {
    const auto all = run_market(IsoModel{1.0, 1.0, 1}, 50);
    for (const auto& [i, b] : all.bids()) CHECK(b.status == BidStatus::Called);
    const auto none = run_market(IsoModel{0.0, 1.0, 1}, 50);
    for (const auto& [i, b] : none.bids()) CHECK(b.status == BidStatus::Rejected);
    CHECK(none.closed().size() == 50);
    CHECK_THROWS_AS(Iso(IsoModel{1.5, 0.4, 1}), Error);
}

TEST_CASE("clearing and call fractions concentrate around their probabilities") {
    const auto book = run_market(IsoModel{}, 100);
    int cleared = 0, called = 0;
    for (const auto& [i, b] : book.bids()) {
        cleared += b.status != BidStatus::Rejected;
        called += b.called;
    }
    CHECK(cleared >= 80);
    CHECK(cleared <= 98);

    // Larger sample: binomial standard error bounds.
    const auto big = run_market(IsoModel{0.9, 0.4, 99}, 5000);
    int c = 0, k = 0;
    for (const auto& [i, b] : big.bids()) {
        c += b.status != BidStatus::Rejected;
        k += b.called;
    }
    const double pc = c / 5000.0, pk = double(k) / c;
    CHECK(std::abs(pc - 0.9) < 4 * std::sqrt(0.9 * 0.1 / 5000));
    CHECK(std::abs(pk - 0.4) < 4 * std::sqrt(0.4 * 0.6 / c));
}

TEST_CASE("draws depend only on the seed and the interval") {
    const auto a = run_market(IsoModel{0.9, 0.4, 7}, 60);
    BidBook sparse;
    Iso iso(IsoModel{0.9, 0.4, 7});
    for (long t = 0; t < 63; ++t) {
        iso.advance(sparse, t);
        if (t < 60) sparse.close(t + kGateClosureLead, t % 3 == 0 ? 1.0 : 0.0, 0.1);
    }
    for (const auto& [i, b] : sparse.bids()) CHECK(a.find(i)->status == b.status);
}

TEST_CASE("settlement rewards and delivery") {
    CHECK(bid_reward(0.3, 2.0, 1.0 / 12.0) == doctest::Approx(0.05));
    CHECK(delivery_met(4.0, 2.0, 2.0));
    CHECK_FALSE(delivery_met(4.0, 2.1, 2.0));

    BidBook book;
    book.close(1, 2.0, 0.3);
    book.set_status(1, BidStatus::Cleared);
    book.set_status(1, BidStatus::Called);
    const auto short_by = settle(book, 1, 2.1, 4.0, 1.0 / 12.0);  // curtailed 1.9 of 2
    CHECK(short_by.called);
    CHECK_FALSE(short_by.delivered);
    CHECK(short_by.reward == doctest::Approx(0.05));

    book.close(2, 2.0, 0.3);
    book.set_status(2, BidStatus::Cleared);
    book.set_status(2, BidStatus::NotCalled);
    const auto idle = settle(book, 2, 5.0, 4.0, 1.0 / 12.0);
    CHECK_FALSE(idle.called);
    CHECK(idle.reward == 0.0);
    CHECK(book.find(2)->status == BidStatus::SettledPaid);

    book.close(3, 2.0, 0.3);
    book.set_status(3, BidStatus::Rejected);
    CHECK(settle(book, 3, 0.0, 4.0, 1.0 / 12.0).reward == 0.0);
    CHECK(settle(book, 99, 0.0, 4.0, 1.0 / 12.0).reward == 0.0);

    book.close(4, 1.0, 0.3);
    try {
        (void)settle(book, 4, 0.0, 4.0, 1.0 / 12.0);
        FAIL("expected OutOfOrder");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfOrder);
    }
}

TEST_CASE("reward conservation over a market run") {
    const double dt = 1.0 / 12.0;
    BidBook book;
    Iso iso(IsoModel{0.9, 0.4, 5});
    double paid = 0.0;
    for (long t = 0; t < 300; ++t) {
        iso.advance(book, t);
        book.close(t + kGateClosureLead, 0.5 + 0.01 * double(t % 7), 0.05 + 0.001 * double(t % 11));
        if (t >= kGateClosureLead) paid += settle(book, t, 1.0, 4.0, dt).reward;
    }
    double expected = 0.0;
    for (const auto& [i, b] : book.bids())
        if (b.status == BidStatus::SettledPaid && b.called) expected += b.price * b.quantity * dt;
    CHECK(paid == expected);
}

TEST_CASE("baseline is the weekday mean") {
    const std::vector<DayProfile> one{{2, {1.0, 2.0, 3.0}}};
    CHECK(compute_baseline(one, 2) == std::vector<double>{1.0, 2.0, 3.0});
    const std::vector<DayProfile> two{{0, {2.0, 0.0}}, {1, {9.0, 9.0}}, {0, {4.0, 1.0}}};
    CHECK(compute_baseline(two, 0) == std::vector<double>{3.0, 0.5});
    try {
        (void)compute_baseline(two, 4);
        FAIL("expected NoHistory");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoHistory);
    }
    const std::vector<DayProfile> ragged{{0, {1.0}}, {0, {1.0, 2.0}}};
    CHECK_THROWS_AS((void)compute_baseline(ragged, 0), Error);
}

TEST_CASE("synthetic prices hit their configured means and shape") {
    const SimClock clock{rtumpc::testing::kMonday, 300};
    PriceConfig cfg;
    const auto trace = synthesize_prices(4, 120, clock, cfg);
    CHECK(trace.size() == 120 * 288);
    const double e_mean = std::accumulate(trace.energy_price.begin(), trace.energy_price.end(), 0.0) / trace.size();
    const double m_mean = std::accumulate(trace.mcp.begin(), trace.mcp.end(), 0.0) / trace.size();
    CHECK(e_mean == doctest::Approx(cfg.energy_mean).epsilon(0.05));
    CHECK(m_mean == doctest::Approx(cfg.mcp_mean).epsilon(0.08));
    for (double p : trace.energy_price) CHECK(p > 0);

    // Afternoon over night, averaged across days.
    double night = 0, afternoon = 0;
    for (int d = 0; d < 120; ++d) {
        night += trace.energy_price[static_cast<std::size_t>(d * 288 + 4 * 12)];
        afternoon += trace.energy_price[static_cast<std::size_t>(d * 288 + 16 * 12)];
    }
    CHECK(afternoon / night == doctest::Approx(cfg.energy_peak_ratio).epsilon(0.15));

    CHECK(synthesize_prices(4, 2, clock).mcp == synthesize_prices(4, 2, clock).mcp);
    PriceConfig bad;
    bad.ar = 1.0;
    CHECK_THROWS_AS((void)synthesize_prices(4, 2, clock, bad), Error);
}

TEST_CASE("price csv round trip and validation") {
    const auto trace = synthesize_prices(1, 1, SimClock{rtumpc::testing::kMonday, 300});
    std::stringstream ss;
    write_price_csv(ss, trace);
    const auto back = read_price_csv(ss);
    REQUIRE(back.size() == trace.size());
    CHECK(back.clock.step_seconds == 300);
    for (std::size_t i = 0; i < trace.size(); ++i)
        CHECK(back.mcp[i] == doctest::Approx(trace.mcp[i]).epsilon(1e-12));

    std::stringstream uneven("timestamp,energy_price,mcp\n2021-07-05T00:00:00Z,0.1,0.2\n"
                             "2021-07-05T00:05:00Z,0.1,0.2\n2021-07-05T00:15:00Z,0.1,0.2\n");
    CHECK_THROWS_AS((void)read_price_csv(uneven), Error);
    std::stringstream negative("timestamp,energy_price,mcp\n2021-07-05T00:00:00Z,-0.1,0.2\n");
    CHECK_THROWS_AS((void)read_price_csv(negative), Error);
}

TEST_CASE("bid ledger has one line per bid") {
    const auto book = run_market(IsoModel{}, 10);
    std::stringstream ss;
    write_bid_ledger(ss, book, SimClock{rtumpc::testing::kMonday, 300});
    std::string line;
    int lines = 0;
    while (std::getline(ss, line)) {
        CHECK(line.find("\"status\"") != std::string::npos);
        ++lines;
    }
    CHECK(lines == 10);
}

}
