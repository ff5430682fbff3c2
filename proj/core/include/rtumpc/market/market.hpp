#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtumpc/types.hpp"

namespace rtumpc::market {

/// Intervals between gate closure and delivery: the bid for interval d is
/// fixed at interval d - 3, cleared at d - 2 and called (or not) at d - 1.
inline constexpr int kGateClosureLead = 3;

enum class BidStatus { Submitted, Cleared, Rejected, Called, NotCalled, SettledPaid };

std::string to_string(BidStatus s);
/// Whether `from -> to` is a legal lifecycle transition.
bool valid_transition(BidStatus from, BidStatus to);

struct Bid {
    long interval = 0;      // delivery interval (absolute step)
    double quantity = 0.0;  // curtailment capacity c, kW
    double price = 0.0;     // clearing price at submission, $/kWh
    BidStatus status = BidStatus::Submitted;
    bool called = false;    // kept after settlement
    double baseline = 0.0;  // kW during delivery
    double realized_power = 0.0;
    bool delivered = true;  // meaningful once settled and called
    double reward = 0.0;
};

/// Reward of a called bid on an energy basis: price * quantity * dt.
/// Market settlement and controller accounting both go through here.
double bid_reward(double price, double quantity, double dt_hours);

/// Realized curtailment meets the capacity (with a 1e-9 kW tolerance).
bool delivery_met(double baseline, double realized_power, double quantity);

struct IsoModel {
    double p_clear = 0.9;
    double p_call = 0.4;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Bids keyed by delivery interval plus the set of closed intervals (those
/// past gate closure, whether or not a bid was placed).
class BidBook {
public:
    /// Closes `interval` and records a bid for it when quantity > 0. Throws
    /// Error(OutOfOrder) if the interval is already closed.
    void close(long interval, double quantity, double price);
    void set_status(long interval, BidStatus status);

    [[nodiscard]] bool is_closed(long interval) const { return closed_.count(interval) > 0; }
    [[nodiscard]] const Bid* find(long interval) const;
    [[nodiscard]] Bid* find(long interval);
    [[nodiscard]] const std::map<long, Bid>& bids() const noexcept { return bids_; }
    [[nodiscard]] const std::set<long>& closed() const noexcept { return closed_; }

private:
    std::map<long, Bid> bids_;
    std::set<long> closed_;
};

struct MarketEvent {
    long interval = 0;
    BidStatus status = BidStatus::Submitted;
};

/// Applies the ISO decisions that fall on interval t: clearing draws for bids
/// closing at t - 1 and call draws for bids closing at t - 2. Each bid's draws
/// come from a generator seeded by (iso.seed, delivery interval), so outcomes
/// do not depend on the order of other bids. Throws Error(OutOfOrder) when t
/// does not increase between calls.
class Iso {
public:
    explicit Iso(IsoModel model);
    std::vector<MarketEvent> advance(BidBook& book, long t);
    [[nodiscard]] const IsoModel& model() const noexcept { return model_; }

private:
    IsoModel model_;
    std::optional<long> last_t_;
};

struct Settlement {
    double reward = 0.0;
    bool delivered = true;
    bool called = false;
};

/// Settles the bid of an elapsed delivery interval against realized power.
/// Called and NotCalled bids move to SettledPaid; intervals without a bid or
/// with a rejected bid settle to zero.
Settlement settle(BidBook& book, long interval, double realized_power, double baseline, double dt_hours);

/// One day of HVAC power, tagged by weekday (Monday = 0).
struct DayProfile {
    int day_of_week = 0;
    std::vector<double> power;  // kW per interval
};

/// Pointwise mean of the matching-weekday profiles. Throws Error(NoHistory).
std::vector<double> compute_baseline(const std::vector<DayProfile>& history, int day_of_week);

struct PriceConfig {
    double energy_mean = 0.05;   // $/kWh, daily mean target
    double energy_peak_ratio = 1.8;  // afternoon peak over the night trough
    double energy_sigma = 0.15;  // lognormal spread
    double mcp_mean = 0.12;      // $/kWh
    double mcp_peak_ratio = 2.0;
    double mcp_sigma = 0.3;
    double ar = 0.9;             // step-to-step correlation of the log noise
};

/// Five-minute energy prices and clearing prices.
struct MarketTrace {
    SimClock clock{};
    std::vector<double> energy_price;
    std::vector<double> mcp;

    [[nodiscard]] std::size_t size() const noexcept { return energy_price.size(); }
};

MarketTrace synthesize_prices(std::uint64_t seed, int days, const SimClock& clock = {}, const PriceConfig& config = {});

/// CSV columns: timestamp,energy_price,mcp. Rows must be evenly spaced.
MarketTrace read_price_csv(std::istream& in);
void write_price_csv(std::ostream& out, const MarketTrace& trace);

/// One JSON object per bid, ordered by delivery interval.
void write_bid_ledger(std::ostream& out, const BidBook& book, const SimClock& clock);

} // namespace rtumpc::market
