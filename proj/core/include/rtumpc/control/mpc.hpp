#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rtumpc/market/market.hpp"
#include "rtumpc/models/thermal_model.hpp"
#include "rtumpc/solver/mads.hpp"
#include "rtumpc/types.hpp"

namespace rtumpc::control {

struct MpcConfig {
    int horizon = 24;  // steps
    int lockout = 3;   // rho, steps
    double dt_hours = 1.0 / 12.0;
    int zones = 2;
    RtuRating rating{};

    void validate() const;
};

/// Everything one control round knows about the present. Per-step series are
/// indexed by horizon step k = 0..T-1; bounds use [k * zones + zone].
struct RoundState {
    std::vector<double> theta;                  // measured IAT at the start of the round, per zone
    std::span<const plant::Record> history;     // recent records for the thermal model, oldest first
    std::vector<ExogenousState> forecast;       // T
    std::vector<double> upper_bound;            // T * zones, degC
    std::vector<double> energy_price;           // T, $/kWh
    double demand_charge = 0.0;                 // $/kW on the horizon peak
    std::vector<ZoneControls> applied;          // applied controls so far (oldest first), for lock-out
};

/// Market information for the bidding objective. Per-step series of length T.
struct BiddingView {
    std::vector<double> baseline;  // kW
    std::vector<double> price;     // clearing price, $/kWh
    std::vector<bool> open;        // not yet past gate closure
    std::vector<double> capacity;  // committed curtailment c on closed steps, kW
    std::vector<double> sigma;     // assumed dispatch on closed steps, 0 or 1
};

/// Decision vector codes[k * zones + z]. Objective:
///   sum_k price_k E_k + demand_charge * max_k P_k
///   - sum_k adjust_k (baseline_k - P_k) dt - reward_constant
/// Constraint order: comfort (T*zones), lock-out (T*zones*3), delivery (one per
/// committed step).
class MpcInstance {
public:
    [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(config_.horizon * config_.zones); }
    [[nodiscard]] const MpcConfig& config() const noexcept { return config_; }
    [[nodiscard]] solver::BoxedIntProblem problem() const;
    [[nodiscard]] solver::Evaluation evaluate(std::span<const int> codes) const;
    [[nodiscard]] double objective(std::span<const int> codes) const;
    /// Objective with each zone-step given as continuous component bits
    /// [k][zone][stage2, stage1, fan] in [0, 1]; convex and piecewise linear.
    [[nodiscard]] double relaxed_objective(std::span<const double> bits) const;
    /// Predicted IAT at the end of every horizon step, [k * zones + z].
    [[nodiscard]] std::vector<double> predict_theta(std::span<const int> codes) const;
    [[nodiscard]] std::vector<double> step_power(std::span<const int> codes) const;
    [[nodiscard]] std::size_t constraint_count() const noexcept;
    /// Lock-out-aware trial points for the solver search: per zone and start
    /// step, lower the codes of a (rho+1)-step block or of the whole remaining
    /// horizon by one rung, or raise the remaining horizon by one rung.
    [[nodiscard]] std::vector<solver::Point> block_moves(const solver::Point& center) const;
    [[nodiscard]] const std::vector<double>& baseline() const noexcept { return baseline_; }

private:
    friend MpcInstance build_base(const MpcConfig&, const models::ThermalModel&, const RoundState&);
    friend MpcInstance build_bidding(const MpcConfig&, const models::ThermalModel&, const RoundState&,
                                     const BiddingView&);
    friend MpcInstance build_cpr(const MpcConfig&, const models::ThermalModel&, const RoundState&,
                                 std::span<const double>, std::span<const bool>, double);

    double objective_from_power(std::span<const double> power) const;

    MpcConfig config_;
    std::shared_ptr<const models::HorizonPredictor> predictor_;
    std::vector<double> theta0_;
    std::vector<double> upper_;
    std::vector<double> price_;
    double demand_charge_ = 0.0;
    std::vector<double> adjust_;        // per step, $/kWh on (baseline - P) dt
    std::vector<double> baseline_;      // per step, kW (zeros without a market)
    double reward_constant_ = 0.0;
    std::vector<std::pair<int, double>> delivery_;  // (step, committed kW)
    // Component bits of the last rho+1 applied steps: [zone][component][i].
    std::vector<std::vector<std::vector<int>>> past_bits_;
};

/// Economic MPC: energy cost plus horizon peak charge, comfort upper bound
/// through the thermal model, lock-out anchored on applied history.
/// Throws Error(InsufficientHistory) via the model.
MpcInstance build_base(const MpcConfig& config, const models::ThermalModel& model, const RoundState& state);

/// Demand-bidding MPC. Open steps trade curtailment at the clearing price,
/// committed steps contribute their expected reward and, when sigma = 1, a
/// delivery constraint. Throws Error(MissingBaseline) on a short baseline.
MpcInstance build_bidding(const MpcConfig& config, const models::ThermalModel& model, const RoundState& state,
                          const BiddingView& market);

/// Critical peak rebate: reward on curtailment below baseline during event steps.
MpcInstance build_cpr(const MpcConfig& config, const models::ThermalModel& model, const RoundState& state,
                      std::span<const double> baseline, std::span<const bool> event, double reward_rate);

struct PlanResult {
    std::vector<int> codes;            // [k * zones + z]
    std::vector<double> theta;         // predicted IAT, same layout
    std::vector<double> energy;        // kWh per step
    double objective = 0.0;
    double violation = 0.0;
    bool feasible = false;
    long evals = 0;

    [[nodiscard]] ZoneControls first_action(int zones) const;
};

PlanResult solve_mpc(const MpcInstance& instance, const solver::Budget& budget, std::span<const int> start,
                     const solver::SolverOptions& options = {});
PlanResult solve_mpc(const MpcInstance& instance, const solver::Budget& budget, std::span<const solver::Point> starts,
                     const solver::SolverOptions& options = {});

/// Curtailment offered for the step `lead` steps into the plan:
/// max(0, baseline - planned power). Zero means no bid.
double extract_bid(const MpcInstance& instance, const PlanResult& plan, int lead);

/// Dispatch assumed by the controller for a closed interval: 1 from gate
/// closure while the bid may still be called, the true signal once known,
/// 0 for rejected bids and intervals without a bid.
double assumed_dispatch(const market::Bid* bid);

} // namespace rtumpc::control
