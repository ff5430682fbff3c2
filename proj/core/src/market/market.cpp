#include "rtumpc/market/market.hpp"

#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <ostream>
#include <random>

#include "../csv.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::market {

std::string to_string(BidStatus s) {
    switch (s) {
    case BidStatus::Submitted: return "Submitted";
    case BidStatus::Cleared: return "Cleared";
    case BidStatus::Rejected: return "Rejected";
    case BidStatus::Called: return "Called";
    case BidStatus::NotCalled: return "NotCalled";
    case BidStatus::SettledPaid: return "SettledPaid";
    }
    return "Unknown";
}

bool valid_transition(BidStatus from, BidStatus to) {
    using S = BidStatus;
    switch (from) {
    case S::Submitted: return to == S::Cleared || to == S::Rejected;
    case S::Cleared: return to == S::Called || to == S::NotCalled;
    case S::Called:
    case S::NotCalled: return to == S::SettledPaid;
    case S::Rejected:
    case S::SettledPaid: return false;
    }
    return false;
}

double bid_reward(double price, double quantity, double dt_hours) { return price * quantity * dt_hours; }

bool delivery_met(double baseline, double realized_power, double quantity) {
    return baseline - realized_power >= quantity - 1e-9;
}

void IsoModel::validate() const {
    require(p_clear >= 0 && p_clear <= 1 && p_call >= 0 && p_call <= 1, ErrorCode::InvalidArgument,
            "ISO probabilities must lie in [0, 1]");
}

void BidBook::close(long interval, double quantity, double price) {
    require(!is_closed(interval), ErrorCode::OutOfOrder, "interval " + std::to_string(interval) + " already closed");
    require(std::isfinite(quantity) && quantity >= 0, ErrorCode::InvalidArgument, "bid quantity must be >= 0");
    closed_.insert(interval);
    if (quantity > 0) {
        Bid b;
        b.interval = interval;
        b.quantity = quantity;
        b.price = price;
        bids_.emplace(interval, b);
    }
}

void BidBook::set_status(long interval, BidStatus status) {
    Bid* b = find(interval);
    require(b != nullptr, ErrorCode::InvalidArgument, "no bid for interval " + std::to_string(interval));
    require(valid_transition(b->status, status), ErrorCode::InvalidArgument,
            "illegal bid transition " + to_string(b->status) + " -> " + to_string(status));
    b->status = status;
    if (status == BidStatus::Called) b->called = true;
}

const Bid* BidBook::find(long interval) const {
    auto it = bids_.find(interval);
    return it == bids_.end() ? nullptr : &it->second;
}

Bid* BidBook::find(long interval) {
    auto it = bids_.find(interval);
    return it == bids_.end() ? nullptr : &it->second;
}

Iso::Iso(IsoModel model) : model_(model) { model_.validate(); }

std::vector<MarketEvent> Iso::advance(BidBook& book, long t) {
    require(!last_t_ || t > *last_t_, ErrorCode::OutOfOrder, "market time must increase");
    last_t_ = t;
    std::vector<MarketEvent> events;
    auto draws = [&](long interval) {
        std::seed_seq seq{static_cast<std::uint64_t>(model_.seed), static_cast<std::uint64_t>(interval)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double clear = u(rng);
        const double call = u(rng);
        return std::pair{clear, call};
    };
    // Clearing for the interval that closed one step ago.
    if (Bid* b = book.find(t + kGateClosureLead - 1); b && b->status == BidStatus::Submitted) {
        const auto next = draws(b->interval).first < model_.p_clear ? BidStatus::Cleared : BidStatus::Rejected;
        book.set_status(b->interval, next);
        events.push_back({b->interval, next});
    }
    // Dispatch signal for the interval that closed two steps ago.
    if (Bid* b = book.find(t + kGateClosureLead - 2); b && b->status == BidStatus::Cleared) {
        const auto next = draws(b->interval).second < model_.p_call ? BidStatus::Called : BidStatus::NotCalled;
        book.set_status(b->interval, next);
        events.push_back({b->interval, next});
    }
    return events;
}

Settlement settle(BidBook& book, long interval, double realized_power, double baseline, double dt_hours) {
    Settlement s;
    Bid* b = book.find(interval);
    if (b == nullptr || b->status == BidStatus::Rejected) return s;
    require(b->status == BidStatus::Called || b->status == BidStatus::NotCalled, ErrorCode::OutOfOrder,
            "bid for interval " + std::to_string(interval) + " has no dispatch decision yet");
    b->baseline = baseline;
    b->realized_power = realized_power;
    if (b->status == BidStatus::Called) {
        s.called = true;
        s.reward = bid_reward(b->price, b->quantity, dt_hours);
        s.delivered = delivery_met(baseline, realized_power, b->quantity);
    }
    b->reward = s.reward;
    b->delivered = s.delivered;
    book.set_status(interval, BidStatus::SettledPaid);
    return s;
}

std::vector<double> compute_baseline(const std::vector<DayProfile>& history, int day_of_week) {
    std::vector<double> sum;
    int n = 0;
    for (const auto& d : history) {
        if (d.day_of_week != day_of_week) continue;
        if (n == 0) sum.assign(d.power.size(), 0.0);
        require(d.power.size() == sum.size(), ErrorCode::ShapeMismatch, "history days differ in length");
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += d.power[i];
        ++n;
    }
    require(n > 0, ErrorCode::NoHistory, "no history day for weekday " + std::to_string(day_of_week));
    for (double& v : sum) v /= n;
    return sum;
}

MarketTrace synthesize_prices(std::uint64_t seed, int days, const SimClock& clock, const PriceConfig& config) {
    require(days >= 1, ErrorCode::InvalidArgument, "price trace needs at least one day");
    require(config.energy_mean > 0 && config.mcp_mean > 0 && config.energy_peak_ratio >= 1 &&
                config.mcp_peak_ratio >= 1 && config.energy_sigma >= 0 && config.mcp_sigma >= 0 &&
                config.ar >= 0 && config.ar < 1,
            ErrorCode::InvalidArgument, "invalid price configuration");
    MarketTrace trace;
    trace.clock = clock;
    const long steps = static_cast<long>(days) * clock.steps_per_day();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double innov = std::sqrt(1.0 - config.ar * config.ar);
    double xe = config.energy_sigma * n01(rng);
    double xm = config.mcp_sigma * n01(rng);
    for (long k = 0; k < steps; ++k) {
        const double hour = hour_of_day(clock.time_at(k));
        // Trough around 04:00, peak around 16:00.
        const double bump = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (hour - 4.0) / 24.0));
        const double e_shape = 1.0 + (config.energy_peak_ratio - 1.0) * bump;
        const double m_shape = 1.0 + (config.mcp_peak_ratio - 1.0) * bump;
        const double e_scale = config.energy_mean / ((1.0 + config.energy_peak_ratio) / 2.0);
        const double m_scale = config.mcp_mean / ((1.0 + config.mcp_peak_ratio) / 2.0);
        trace.energy_price.push_back(e_scale * e_shape *
                                     std::exp(xe - 0.5 * config.energy_sigma * config.energy_sigma));
        trace.mcp.push_back(m_scale * m_shape * std::exp(xm - 0.5 * config.mcp_sigma * config.mcp_sigma));
        xe = config.ar * xe + innov * config.energy_sigma * n01(rng);
        xm = config.ar * xm + innov * config.mcp_sigma * n01(rng);
    }
    return trace;
}

MarketTrace read_price_csv(std::istream& in) {
    const auto header = detail::read_header(in);
    require(header.size() == 3, ErrorCode::Parse, "price CSV needs 3 columns");
    MarketTrace trace;
    std::vector<TimePoint> times;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        require(cells.size() == 3, ErrorCode::Parse, "price CSV row needs 3 cells");
        times.push_back(parse_iso8601(cells[0]));
        const double e = detail::parse_double(cells[1]);
        const double m = detail::parse_double(cells[2]);
        require(e >= 0 && m >= 0, ErrorCode::Parse, "prices must be nonnegative");
        trace.energy_price.push_back(e);
        trace.mcp.push_back(m);
    }
    require(!times.empty(), ErrorCode::Parse, "price CSV has no rows");
    trace.clock.start = times.front();
    if (times.size() > 1) trace.clock.step_seconds = static_cast<int>((times[1] - times[0]).count());
    for (std::size_t k = 1; k < times.size(); ++k)
        require(times[k] - times[k - 1] == times[1] - times[0], ErrorCode::Parse, "price CSV is not evenly spaced");
    return trace;
}

void write_price_csv(std::ostream& out, const MarketTrace& trace) {
    out << "timestamp,energy_price,mcp\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << format_iso8601(trace.clock.time_at(static_cast<long>(k))) << ',' << detail::fmt_double(trace.energy_price[k])
            << ',' << detail::fmt_double(trace.mcp[k]) << '\n';
    }
}

void write_bid_ledger(std::ostream& out, const BidBook& book, const SimClock& clock) {
    for (const auto& [interval, b] : book.bids()) {
        nlohmann::json j{{"interval", interval},
                         {"time", format_iso8601(clock.time_at(interval))},
                         {"quantity_kw", b.quantity},
                         {"price", b.price},
                         {"status", to_string(b.status)},
                         {"called", b.called},
                         {"baseline_kw", b.baseline},
                         {"realized_kw", b.realized_power},
                         {"delivered", b.delivered},
                         {"reward", b.reward}};
        out << j.dump() << '\n';
    }
}

} // namespace rtumpc::market
