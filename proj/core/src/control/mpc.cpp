#include "rtumpc/control/mpc.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rtumpc/control/lockout.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::control {

void MpcConfig::validate() const {
    require(horizon >= 1, ErrorCode::InvalidArgument, "MPC horizon must be >= 1");
    require(lockout >= 0 && lockout < horizon, ErrorCode::InvalidArgument, "lock-out must satisfy 0 <= rho < T");
    require(dt_hours > 0, ErrorCode::InvalidArgument, "dt must be > 0");
    require(zones >= 1, ErrorCode::InvalidArgument, "at least one zone");
    rating.validate();
}

namespace {

std::array<double, kLadderSize> power_table(const RtuRating& r) {
    std::array<double, kLadderSize> t{};
    for (int c = 0; c < kLadderSize; ++c) t[static_cast<std::size_t>(c)] = r.power(ControlVector::from_code(c));
    return t;
}

std::shared_ptr<const models::HorizonPredictor> bind_round(const MpcConfig& config,
                                                          const models::ThermalModel& model, const RoundState& s) {
    config.validate();
    const auto T = static_cast<std::size_t>(config.horizon);
    const auto nz = static_cast<std::size_t>(config.zones);
    require(model.zones() == config.zones, ErrorCode::ShapeMismatch, "model and MPC zone counts differ");
    require(s.theta.size() == nz, ErrorCode::ShapeMismatch, "state theta needs one value per zone");
    require(s.forecast.size() == T, ErrorCode::ShapeMismatch, "forecast must cover the horizon");
    require(s.upper_bound.size() == T * nz, ErrorCode::ShapeMismatch, "comfort bounds must cover the horizon");
    require(s.energy_price.size() == T, ErrorCode::ShapeMismatch, "energy prices must cover the horizon");
    std::shared_ptr<const models::HorizonPredictor> predictor = model.bind(s.history, s.forecast);
    require(predictor->horizon() == config.horizon, ErrorCode::ShapeMismatch, "predictor horizon");
    return predictor;
}

} // namespace

solver::BoxedIntProblem MpcInstance::problem() const {
    solver::BoxedIntProblem p;
    p.lower.assign(dimension(), 0);
    p.upper.assign(dimension(), kLadderSize - 1);
    p.evaluate = [this](std::span<const int> x) { return evaluate(x); };
    return p;
}

std::size_t MpcInstance::constraint_count() const noexcept {
    return dimension() * (1 + kComponentsPerRtu) + delivery_.size();
}

std::vector<solver::Point> MpcInstance::block_moves(const solver::Point& center) const {
    const int T = config_.horizon;
    const int nz = config_.zones;
    std::vector<solver::Point> out;
    auto shifted = [&](int z, int from, int to, int delta) {
        solver::Point y = center;
        bool changed = false;
        for (int k = from; k < to; ++k) {
            auto& v = y[static_cast<std::size_t>(k * nz + z)];
            const int w = std::clamp(v + delta, 0, kLadderSize - 1);
            changed |= w != v;
            v = w;
        }
        if (changed) out.push_back(std::move(y));
    };
    for (int z = 0; z < nz; ++z) {
        for (int k = 0; k < T; ++k) {
            const int end = k + config_.lockout + 1;
            if (end < T) shifted(z, k, end, -1);
            shifted(z, k, T, -1);
        }
    }
    for (int z = 0; z < nz; ++z)
        for (int k = 0; k < T; ++k) shifted(z, k, T, +1);
    return out;
}

std::vector<double> MpcInstance::step_power(std::span<const int> codes) const {
    require(codes.size() == dimension(), ErrorCode::ShapeMismatch, "plan length");
    const auto table = power_table(config_.rating);
    std::vector<double> power(static_cast<std::size_t>(config_.horizon), 0.0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        require(codes[i] >= 0 && codes[i] < kLadderSize, ErrorCode::InvalidLadder, "ladder code out of range");
        power[i / static_cast<std::size_t>(config_.zones)] += table[static_cast<std::size_t>(codes[i])];
    }
    return power;
}

double MpcInstance::objective_from_power(std::span<const double> power) const {
    double f = 0.0;
    double peak = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
        f += price_[k] * power[k] * config_.dt_hours;
        f -= adjust_[k] * (baseline_[k] - power[k]) * config_.dt_hours;
        peak = std::max(peak, power[k]);
    }
    return f + demand_charge_ * peak - reward_constant_;
}

double MpcInstance::objective(std::span<const int> codes) const { return objective_from_power(step_power(codes)); }

double MpcInstance::relaxed_objective(std::span<const double> bits) const {
    require(bits.size() == dimension() * kComponentsPerRtu, ErrorCode::ShapeMismatch, "relaxed plan length");
    const auto& r = config_.rating;
    std::vector<double> power(static_cast<std::size_t>(config_.horizon), 0.0);
    for (std::size_t i = 0; i < dimension(); ++i) {
        const double* b = bits.data() + i * kComponentsPerRtu;
        power[i / static_cast<std::size_t>(config_.zones)] += b[0] * r.p_c2 + b[1] * r.p_c1 + b[2] * r.p_f;
    }
    return objective_from_power(power);
}

std::vector<double> MpcInstance::predict_theta(std::span<const int> codes) const {
    require(codes.size() == dimension(), ErrorCode::ShapeMismatch, "plan length");
    std::vector<double> dtheta(dimension());
    predictor_->predict(codes, dtheta);
    const auto nz = static_cast<std::size_t>(config_.zones);
    for (std::size_t i = 0; i < dtheta.size(); ++i) dtheta[i] += i < nz ? theta0_[i] : dtheta[i - nz];
    return dtheta;
}

solver::Evaluation MpcInstance::evaluate(std::span<const int> codes) const {
    solver::Evaluation e;
    const auto power = step_power(codes);
    e.f = objective_from_power(power);
    e.g.reserve(constraint_count());

    const auto theta = predict_theta(codes);
    for (std::size_t i = 0; i < theta.size(); ++i) e.g.push_back(theta[i] - upper_[i]);

    const auto nz = static_cast<std::size_t>(config_.zones);
    const auto T = static_cast<std::size_t>(config_.horizon);
    std::vector<int> seq;
    for (std::size_t z = 0; z < nz; ++z) {
        for (std::size_t j = 0; j < kComponentsPerRtu; ++j) {
            const auto& past = past_bits_[z][j];
            seq.assign(past.begin(), past.end());
            for (std::size_t k = 0; k < T; ++k) seq.push_back(ControlVector::from_code(codes[k * nz + z]).bits()[j]);
            for (std::size_t k = 0; k < T; ++k)
                e.g.push_back(lockout_margin(seq, static_cast<std::ptrdiff_t>(past.size() + k), config_.lockout));
        }
    }
    for (const auto& [k, c] : delivery_)
        e.g.push_back(c - (baseline_[static_cast<std::size_t>(k)] - power[static_cast<std::size_t>(k)]));
    return e;
}

MpcInstance build_base(const MpcConfig& config, const models::ThermalModel& model, const RoundState& s) {
    MpcInstance m;
    m.predictor_ = bind_round(config, model, s);
    m.config_ = config;
    m.theta0_ = s.theta;
    m.upper_ = s.upper_bound;
    m.price_ = s.energy_price;
    m.demand_charge_ = s.demand_charge;
    const auto T = static_cast<std::size_t>(config.horizon);
    m.adjust_.assign(T, 0.0);
    m.baseline_.assign(T, 0.0);
    const auto nz = static_cast<std::size_t>(config.zones);
    const auto keep = static_cast<std::size_t>(config.lockout + 1);
    m.past_bits_.assign(nz, std::vector<std::vector<int>>(kComponentsPerRtu, std::vector<int>(keep, 0)));
    const std::size_t have = std::min(keep, s.applied.size());
    for (std::size_t i = 0; i < have; ++i) {
        const auto& step = s.applied[s.applied.size() - have + i];
        require(step.size() == nz, ErrorCode::ShapeMismatch, "applied history zone count");
        for (std::size_t z = 0; z < nz; ++z) {
            const auto b = step[z].bits();
            for (std::size_t j = 0; j < kComponentsPerRtu; ++j) m.past_bits_[z][j][keep - have + i] = b[j];
        }
    }
    return m;
}

MpcInstance build_bidding(const MpcConfig& config, const models::ThermalModel& model, const RoundState& s,
                          const BiddingView& v) {
    const auto T = static_cast<std::size_t>(config.horizon);
    require(v.baseline.size() >= T, ErrorCode::MissingBaseline, "baseline does not cover the horizon");
    require(v.price.size() == T && v.open.size() == T && v.capacity.size() == T && v.sigma.size() == T,
            ErrorCode::ShapeMismatch, "market view must cover the horizon");
    MpcInstance m = build_base(config, model, s);
    m.demand_charge_ = 0.0;
    m.baseline_.assign(v.baseline.begin(), v.baseline.begin() + static_cast<std::ptrdiff_t>(T));
    for (std::size_t k = 0; k < T; ++k) {
        if (v.open[k]) {
            m.adjust_[k] = v.price[k];
        } else {
            m.reward_constant_ += v.price[k] * v.capacity[k] * v.sigma[k] * config.dt_hours;
            if (v.sigma[k] > 0 && v.capacity[k] > 0) m.delivery_.emplace_back(static_cast<int>(k), v.capacity[k]);
        }
    }
    return m;
}

MpcInstance build_cpr(const MpcConfig& config, const models::ThermalModel& model, const RoundState& s,
                      std::span<const double> baseline, std::span<const bool> event, double reward_rate) {
    const auto T = static_cast<std::size_t>(config.horizon);
    require(baseline.size() >= T, ErrorCode::MissingBaseline, "baseline does not cover the horizon");
    require(event.size() == T, ErrorCode::ShapeMismatch, "event flags must cover the horizon");
    require(reward_rate >= 0, ErrorCode::InvalidArgument, "rebate rate must be >= 0");
    MpcInstance m = build_base(config, model, s);
    m.demand_charge_ = 0.0;
    m.baseline_.assign(baseline.begin(), baseline.begin() + static_cast<std::ptrdiff_t>(T));
    for (std::size_t k = 0; k < T; ++k) m.adjust_[k] = event[k] ? reward_rate : 0.0;
    return m;
}

ZoneControls PlanResult::first_action(int zones) const {
    require(static_cast<int>(codes.size()) >= zones, ErrorCode::ShapeMismatch, "empty plan");
    ZoneControls u;
    for (int z = 0; z < zones; ++z) u.push_back(ControlVector::from_code(codes[static_cast<std::size_t>(z)]));
    return u;
}

PlanResult solve_mpc(const MpcInstance& instance, const solver::Budget& budget, std::span<const int> start,
                     const solver::SolverOptions& options) {
    const solver::Point x(start.begin(), start.end());
    return solve_mpc(instance, budget, std::span<const solver::Point>(&x, 1), options);
}

PlanResult solve_mpc(const MpcInstance& instance, const solver::Budget& budget, std::span<const solver::Point> starts,
                     const solver::SolverOptions& options) {
    const auto problem = instance.problem();
    const auto r = solver::solve(problem, starts, budget, options);
    PlanResult plan;
    plan.codes = r.point;
    plan.theta = instance.predict_theta(r.point);
    const auto power = instance.step_power(r.point);
    for (double p : power) plan.energy.push_back(p * instance.config().dt_hours);
    plan.objective = r.f;
    plan.violation = r.h;
    plan.feasible = r.feasible;
    plan.evals = r.evals;
    return plan;
}

double extract_bid(const MpcInstance& instance, const PlanResult& plan, int lead) {
    require(lead >= 0 && lead < instance.config().horizon, ErrorCode::InvalidArgument, "bid step outside the plan");
    const auto power = instance.step_power(plan.codes);
    const auto k = static_cast<std::size_t>(lead);
    return std::max(0.0, instance.baseline()[k] - power[k]);
}

double assumed_dispatch(const market::Bid* bid) {
    if (bid == nullptr) return 0.0;
    switch (bid->status) {
    case market::BidStatus::Submitted:
    case market::BidStatus::Cleared:
    case market::BidStatus::Called: return 1.0;
    case market::BidStatus::SettledPaid: return bid->called ? 1.0 : 0.0;
    case market::BidStatus::Rejected:
    case market::BidStatus::NotCalled: return 0.0;
    }
    return 0.0;
}

} // namespace rtumpc::control
