#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rtumpc/harness/scenario.hpp"
#include "rtumpc/market/market.hpp"
#include "rtumpc/models/thermal_model.hpp"

namespace rtumpc::harness {

/// One controlled step.
struct RoundLog {
    long step = 0;                 // absolute step of the weather clock
    std::string time;
    std::vector<int> codes;        // applied ladder code per zone
    std::vector<double> theta;     // IAT at the end of the step
    std::vector<double> lower;     // comfort band used for metrics
    std::vector<double> upper;
    double oat = 0.0;
    double power = 0.0;            // kW
    double energy = 0.0;           // kWh
    double energy_price = 0.0;     // $/kWh
    double energy_cost = 0.0;      // $
    double baseline = 0.0;         // kW, bidding/CPR only
    bool event = false;            // CPR event step
    double plan_objective = 0.0;
    double plan_violation = 0.0;
    bool plan_feasible = true;
    long evals = 0;
    double bid_quantity = 0.0;     // bid placed at this round for step + lead
    double sigma = 0.0;            // true dispatch of this step's bid (1 if called)
    double committed = 0.0;        // c of this step's bid if called, kW
    double reward = 0.0;           // $ paid for this step's bid
    bool delivered = true;
    int lockout_overrides = 0;
    int delivery_overrides = 0;
};

struct RunSummary {
    std::string scenario;
    std::string controller;
    std::string program;
    int rounds = 0;
    double energy_kwh = 0.0;
    double discomfort_degc_h = 0.0;    // integral over zones and time
    double avg_discomfort_degc = 0.0;  // integral divided by duration
    int toggling = 0;                  // lock-out violations of applied controls
    double peak_kw = 0.0;
    double energy_cost = 0.0;
    double demand_cost = 0.0;
    double rewards = 0.0;
    double cpr_rebate = 0.0;
    double net_cost = 0.0;
    std::optional<double> benchmark_net_cost;
    std::optional<double> savings;
    std::optional<double> savings_pct;
    // Market.
    int bids = 0;
    int bids_cleared = 0;
    int bids_called = 0;
    double bid_kwh = 0.0;
    double delivered_kwh = 0.0;
    int delivery_failures = 0;
    // CPR.
    double event_energy_kwh = 0.0;
    double event_baseline_kwh = 0.0;
    // Controller health.
    int infeasible_rounds = 0;
    int lockout_overrides = 0;
    int delivery_overrides = 0;
    double mean_evals = 0.0;
};

struct RunResult {
    RunSummary summary;
    std::vector<RoundLog> rounds;
    market::BidBook book;
    SimClock clock;
};

/// Closed-loop simulation of a scenario. `model` is required for the linear
/// and convex controllers and ignored for greedy. For bidding scenarios with
/// benchmark enabled the zero-price benchmark runs first and fills the savings.
RunResult run(const Scenario& scenario, const models::ThermalModel* model);

/// Additive Gaussian noise ramping linearly from 0 at index 0 to `std_end`
/// at the last index. Zero std returns the series unchanged.
std::vector<double> inject_noise(std::span<const double> series, double std_end, std::uint64_t seed);

/// Discomfort of one step: positive excursions on both sides summed over
/// zones, times dt (degC h).
double step_discomfort(std::span<const double> theta, std::span<const double> lower, std::span<const double> upper,
                       double dt_hours);

/// Summary metrics recomputed from round logs. Net cost follows the program:
/// flat = energy + demand charge on the run peak, TOU = energy, bidding =
/// energy - rewards, CPR = energy - rebate on event curtailment.
RunSummary summarize(const Scenario& scenario, std::span<const RoundLog> rounds, const market::BidBook& book,
                     int toggling, double dt_hours);

/// Post-run checks: applied codes on the ladder, no lock-out violations when
/// the safety filter is on, net cost and rewards recomputable from the logs,
/// every called bid delivered. One message per failed check.
std::vector<std::string> check_invariants(const Scenario& scenario, const RunResult& result);

struct BudgetRound {
    long step = 0;
    std::vector<double> f;  // per budget
    std::vector<double> h;
    std::vector<bool> feasible;
    std::vector<std::vector<int>> plans;
};

struct BudgetStudy {
    std::vector<long> budgets;  // evaluations per solve
    std::vector<BudgetRound> rounds;
    /// identical[i]: fraction of sampled rounds whose plan under budgets[i+1]
    /// equals the plan under budgets[0].
    std::vector<double> identical;
    /// Rounds in which a larger budget returned a worse point in barrier order.
    int monotonicity_violations = 0;
    std::vector<double> mean_abs_gap;  // |f(budgets[i+1]) - f(budgets[0])| averaged over rounds
};

/// Runs the scenario and, on a seeded sample of `fraction` of its rounds,
/// re-solves each round's instance from the same start under every budget.
/// Budgets must be increasing.
BudgetStudy budget_study(const Scenario& scenario, const models::ThermalModel& model, std::span<const long> budgets,
                         double fraction, std::uint64_t seed);

void write_summary_json(std::ostream& out, const RunSummary& summary);
void write_rounds_csv(std::ostream& out, const RunResult& result);
void write_budget_json(std::ostream& out, const BudgetStudy& study);

} // namespace rtumpc::harness
