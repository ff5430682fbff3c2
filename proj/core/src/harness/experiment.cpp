#include "rtumpc/harness/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>
#include <random>

#include "../csv.hpp"
#include "rtumpc/control/greedy.hpp"
#include "rtumpc/control/lockout.hpp"
#include "rtumpc/control/mpc.hpp"
#include "rtumpc/error.hpp"
#include "rtumpc/plant/rc_network.hpp"
#include "rtumpc/plant/weather.hpp"

namespace rtumpc::harness {

std::vector<double> inject_noise(std::span<const double> series, double std_end, std::uint64_t seed) {
    require(std_end >= 0, ErrorCode::InvalidArgument, "noise std must be >= 0");
    std::vector<double> out(series.begin(), series.end());
    if (std_end == 0 || out.size() < 2) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double last = static_cast<double>(out.size() - 1);
    for (std::size_t k = 1; k < out.size(); ++k) out[k] += std_end * (static_cast<double>(k) / last) * n01(rng);
    return out;
}

double step_discomfort(std::span<const double> theta, std::span<const double> lower, std::span<const double> upper,
                       double dt_hours) {
    require(theta.size() == lower.size() && theta.size() == upper.size(), ErrorCode::ShapeMismatch,
            "discomfort inputs differ in length");
    double d = 0.0;
    for (std::size_t z = 0; z < theta.size(); ++z)
        d += std::max(lower[z] - theta[z], 0.0) + std::max(theta[z] - upper[z], 0.0);
    return d * dt_hours;
}

namespace {

double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::uint64_t round_seed(std::uint64_t base, long step, int channel) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(channel)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

/// Called for every MPC round with the instance and the solver start points.
using RoundHook =
    std::function<void(long step, const control::MpcInstance&, std::span<const solver::Point> starts)>;

struct Loop {
    const Scenario& sc;
    const models::ThermalModel* model;
    bool benchmark;  // zero curtailment price, no bids
    RoundHook hook;

    SimClock clock{};
    long start_step = 0;
    long run_steps = 0;
    plant::WeatherTrace weather;
    market::MarketTrace prices;
    double oat_std = 0, ghi_std = 0, energy_std = 0, mcp_std = 0;
    std::vector<double> baseline;  // kW for absolute steps [start_step, start_step + run_steps + horizon)
    Tariff tou;                    // filled for the TOU program only

    RunResult run();

    [[nodiscard]] double baseline_at(long step) const {
        return baseline[static_cast<std::size_t>(step - start_step)];
    }
    [[nodiscard]] bool event_at(long step) const {
        const double h = hour_of_day(clock.time_at(step));
        return h >= sc.cpr.event_start_hour && h < sc.cpr.event_end_hour;
    }
    [[nodiscard]] double true_energy_price(long step) const {
        switch (sc.program) {
        case Program::Flat: return sc.flat_energy_price;
        case Program::Tou: return tou_price(step);
        case Program::Cpr: return sc.cpr.base_rate;
        case Program::Bidding: return prices.energy_price[static_cast<std::size_t>(step)];
        }
        return 0.0;
    }
    [[nodiscard]] double tou_price(long step) const { return tou.energy_price_at(step); }
};

market::MarketTrace load_prices(const Scenario& sc, const SimClock& clock, int days) {
    if (sc.price_csv.empty()) return market::synthesize_prices(sc.price_seed, days, clock, sc.prices);
    std::ifstream in(sc.price_csv);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open price file " + sc.price_csv.string());
    const auto csv = market::read_price_csv(in);
    require(csv.clock.step_seconds == clock.step_seconds, ErrorCode::Parse, "price file step differs from 5 minutes");
    const auto offset = (clock.start - csv.clock.start).count() / clock.step_seconds;
    const long need = static_cast<long>(days) * clock.steps_per_day();
    require(offset >= 0 && offset + need <= static_cast<long>(csv.size()), ErrorCode::Parse,
            "price file does not cover the simulated period");
    market::MarketTrace t;
    t.clock = clock;
    t.energy_price.assign(csv.energy_price.begin() + offset, csv.energy_price.begin() + offset + need);
    t.mcp.assign(csv.mcp.begin() + offset, csv.mcp.begin() + offset + need);
    return t;
}

RunResult Loop::run() {
    sc.validate();
    const bool mpc = sc.controller != ControllerKind::Greedy;
    require(!mpc || model != nullptr, ErrorCode::InvalidArgument, "model-based controller needs a thermal model");
    const plant::RcNetwork network = plant::RcNetwork::two_zone_default();
    const plant::RcPlant plant(network, clock.step_seconds);
    const int nz = network.zone_count();
    require(!mpc || model->zones() == nz, ErrorCode::ShapeMismatch, "model zone count differs from the building");
    const int T = sc.horizon;
    const double dt = clock.dt_hours();
    const bool bidding = sc.program == Program::Bidding;
    const bool cpr = sc.program == Program::Cpr;

    control::MpcConfig cfg;
    cfg.horizon = T;
    cfg.lockout = sc.lockout;
    cfg.dt_hours = dt;
    cfg.zones = nz;
    const RtuRating rating{};

    plant::PlantState state = plant::PlantState::uniform(nz, sc.initial_temperature, clock.start);
    std::vector<plant::Record> records;
    std::vector<ZoneControls> applied;
    std::vector<std::vector<ControlVector>> zone_hist(static_cast<std::size_t>(nz));
    std::vector<market::DayProfile> days;

    auto advance_plant = [&](long step, const ZoneControls& u) {
        const auto w = weather.at(step);
        plant::PlantState next = plant.step(state, u, w);
        plant::Record r;
        r.exog = ExogenousState::at(clock.time_at(step), w.oat, w.ghi);
        r.controls = u;
        r.theta = next.air;
        for (int z = 0; z < nz; ++z)
            r.dtheta.push_back(next.air[static_cast<std::size_t>(z)] - state.air[static_cast<std::size_t>(z)]);
        records.push_back(std::move(r));
        applied.push_back(u);
        for (int z = 0; z < nz; ++z) zone_hist[static_cast<std::size_t>(z)].push_back(u[static_cast<std::size_t>(z)]);
        state = std::move(next);
    };
    auto greedy_action = [&](long step) {
        const auto bounds = sc.comfort.at(clock.time_at(step));
        ZoneControls u;
        for (int z = 0; z < nz; ++z) {
            u.push_back(control::greedy_step(state.air[static_cast<std::size_t>(z)], bounds,
                                             zone_hist[static_cast<std::size_t>(z)], sc.lockout, sc.greedy));
        }
        return u;
    };

    // Greedy warm-up provides model history and the baseline days.
    const int spd = clock.steps_per_day();
    for (long step = 0; step < start_step; ++step) {
        const auto u = greedy_action(step);
        if (step >= static_cast<long>(sc.spinup_days) * spd) {
            if (step % spd == 0) days.push_back({day_of_week(clock.time_at(step)), {}});
            days.back().power.push_back(total_power(u, rating));
        }
        advance_plant(step, u);
    }
    const int warmup_violations = control::count_lockout_violations(applied, sc.lockout);

    if (bidding || cpr) {
        for (long step = start_step; step < start_step + run_steps + T; step += spd) {
            const auto b = market::compute_baseline(days, day_of_week(clock.time_at(step)));
            baseline.insert(baseline.end(), b.begin(), b.end());
        }
    }

    RunResult result;
    result.clock = clock;
    market::Iso iso(sc.iso);
    auto& book = result.book;
    std::vector<int> previous_plan;
    const auto nzs = static_cast<std::size_t>(nz);

    for (long t = start_step; t < start_step + run_steps; ++t) {
        RoundLog log;
        log.step = t;
        log.time = format_iso8601(clock.time_at(t));
        const auto bounds = sc.comfort.at(clock.time_at(t));
        if (bidding) iso.advance(book, t);

        ZoneControls action;
        std::optional<control::MpcInstance> instance;
        control::PlanResult plan;
        if (!mpc) {
            action = greedy_action(t);
        } else {
            control::RoundState rs;
            rs.theta = state.air;
            rs.history = records;
            std::vector<double> oat(static_cast<std::size_t>(T)), ghi(static_cast<std::size_t>(T));
            std::vector<double> price(static_cast<std::size_t>(T)), mcp(static_cast<std::size_t>(T));
            for (int k = 0; k < T; ++k) {
                const auto w = weather.at(t + k);
                oat[static_cast<std::size_t>(k)] = w.oat;
                ghi[static_cast<std::size_t>(k)] = w.ghi;
                price[static_cast<std::size_t>(k)] = true_energy_price(t + k);
                mcp[static_cast<std::size_t>(k)] = bidding ? prices.mcp[static_cast<std::size_t>(t + k)] : 0.0;
            }
            if (sc.noise.enabled) {
                oat = inject_noise(oat, oat_std / sc.noise.oat_divisor, round_seed(sc.noise.seed, t, 0));
                ghi = inject_noise(ghi, ghi_std / sc.noise.ghi_divisor, round_seed(sc.noise.seed, t, 1));
                for (double& g : ghi) g = std::max(g, 0.0);
                if (bidding) {
                    price = inject_noise(price, energy_std / sc.noise.price_divisor, round_seed(sc.noise.seed, t, 2));
                    mcp = inject_noise(mcp, mcp_std / sc.noise.price_divisor, round_seed(sc.noise.seed, t, 3));
                    for (double& p : price) p = std::max(p, 0.0);
                    for (double& p : mcp) p = std::max(p, 0.0);
                }
            }
            for (int k = 0; k < T; ++k) {
                const auto tk = clock.time_at(t + k);
                rs.forecast.push_back(ExogenousState::at(tk, oat[static_cast<std::size_t>(k)], ghi[static_cast<std::size_t>(k)]));
                const double ub = sc.comfort.at(tk).upper;
                for (int z = 0; z < nz; ++z) rs.upper_bound.push_back(ub);
            }
            rs.energy_price = price;
            rs.demand_charge = sc.program == Program::Flat ? sc.demand_charge : 0.0;
            rs.applied = applied;

            if (bidding) {
                control::BiddingView v;
                for (int k = 0; k < T; ++k) {
                    const long step = t + k;
                    v.baseline.push_back(baseline_at(step));
                    const market::Bid* bid = book.find(step);
                    v.open.push_back(!benchmark && !book.is_closed(step));
                    v.price.push_back(benchmark ? 0.0 : (bid ? bid->price : mcp[static_cast<std::size_t>(k)]));
                    v.capacity.push_back(bid ? bid->quantity : 0.0);
                    v.sigma.push_back(control::assumed_dispatch(bid));
                }
                instance = control::build_bidding(cfg, *model, rs, v);
            } else if (cpr) {
                std::vector<double> b;
                // vector<bool> has no contiguous storage
                const auto ev = std::make_unique<bool[]>(static_cast<std::size_t>(T));
                for (int k = 0; k < T; ++k) {
                    b.push_back(baseline_at(t + k));
                    ev[static_cast<std::size_t>(k)] = event_at(t + k);
                }
                instance = control::build_cpr(cfg, *model, rs, b, std::span<const bool>(ev.get(), static_cast<std::size_t>(T)),
                                              sc.cpr.reward_rate);
            } else {
                instance = control::build_base(cfg, *model, rs);
            }

            // Shifted previous plan, then holding the current action (never
            // breaks lock-out).
            std::vector<solver::Point> starts;
            if (!previous_plan.empty()) starts.push_back(solver::warm_start(previous_plan, nzs));
            solver::Point hold;
            for (int k = 0; k < T; ++k)
                for (int z = 0; z < nz; ++z)
                    hold.push_back(applied.empty() ? 0 : applied.back()[static_cast<std::size_t>(z)].code());
            if (starts.empty() || starts.front() != hold) starts.push_back(std::move(hold));
            if (hook) hook(t, *instance, starts);
            solver::Budget budget{sc.solver.max_evals, sc.solver.max_seconds, sc.solver.seed};
            solver::SolverOptions opts;
            opts.vns = sc.solver.vns;
            opts.vns_max_radius = sc.solver.vns_max_radius;
            if (sc.solver.block_search)
                opts.search = [&inst = *instance](const solver::Point& c) { return inst.block_moves(c); };
            plan = control::solve_mpc(*instance, budget, starts, opts);
            previous_plan = plan.codes;
            action = plan.first_action(nz);
            log.plan_objective = plan.objective;
            log.plan_violation = plan.violation;
            log.plan_feasible = plan.feasible;
            log.evals = plan.evals;
        }

        if (sc.safety_filter) {
            for (int z = 0; z < nz; ++z) {
                const int allowed = control::max_allowed_code(zone_hist[static_cast<std::size_t>(z)], sc.lockout);
                auto& u = action[static_cast<std::size_t>(z)];
                if (u.code() > allowed) {
                    u = ControlVector::from_code(allowed);
                    ++log.lockout_overrides;
                }
            }
            if (const market::Bid* bid = book.find(t); bid && bid->status == market::BidStatus::Called) {
                while (!market::delivery_met(baseline_at(t), total_power(action, rating), bid->quantity)) {
                    // Lower the highest running unit one rung; all-off always meets the bid.
                    auto it = std::max_element(action.begin(), action.end(),
                                               [](const ControlVector& a, const ControlVector& b) { return a.code() < b.code(); });
                    if (it->code() == 0) break;
                    *it = ControlVector::from_code(it->code() - 1);
                    ++log.delivery_overrides;
                }
            }
        }

        if (bidding && mpc && !benchmark && t + market::kGateClosureLead < start_step + run_steps) {
            const long d = t + market::kGateClosureLead;
            const double c = control::extract_bid(*instance, plan, market::kGateClosureLead);
            book.close(d, c, prices.mcp[static_cast<std::size_t>(d)]);
            log.bid_quantity = c;
        }

        advance_plant(t, action);
        for (int z = 0; z < nz; ++z) log.codes.push_back(action[static_cast<std::size_t>(z)].code());
        log.theta = state.air;
        log.lower.assign(nzs, bounds.lower);
        log.upper.assign(nzs, bounds.upper);
        log.oat = weather.at(t).oat;
        log.power = total_power(action, rating);
        log.energy = log.power * dt;
        log.energy_price = true_energy_price(t);
        log.energy_cost = log.energy_price * log.energy;
        if (bidding || cpr) log.baseline = baseline_at(t);
        log.event = cpr && event_at(t);
        if (bidding) {
            const auto s = market::settle(book, t, log.power, log.baseline, dt);
            if (s.called) {
                log.sigma = 1.0;
                log.committed = book.find(t)->quantity;
            }
            log.reward = s.reward;
            log.delivered = s.delivered;
        }
        result.rounds.push_back(std::move(log));
    }

    const int toggling = control::count_lockout_violations(applied, sc.lockout) - warmup_violations;
    result.summary = summarize(sc, result.rounds, book, toggling, dt);
    return result;
}

Loop make_loop(const Scenario& sc, const models::ThermalModel* model, bool benchmark, RoundHook hook) {
    Loop L{sc, model, benchmark, std::move(hook), {}, 0, 0, {}, {}, 0, 0, 0, 0, {}, {}};
    const auto start = parse_iso8601(sc.start);
    L.clock.start = start - std::chrono::days(sc.warmup_days);
    L.start_step = static_cast<long>(sc.warmup_days) * L.clock.steps_per_day();
    L.run_steps = static_cast<long>(sc.days) * L.clock.steps_per_day();
    const int total_days = sc.warmup_days + sc.days + 1;  // tail day covers the last horizon
    if (sc.program == Program::Tou)
        L.tou = tou_tariff(L.clock, 0, static_cast<long>(total_days) * L.clock.steps_per_day(), sc.tou);
    L.weather = plant::synthesize_weather(sc.weather_seed, total_days, L.clock, sc.weather);
    L.oat_std = stddev(L.weather.oat);
    L.ghi_std = stddev(L.weather.ghi);
    if (sc.program == Program::Bidding) {
        L.prices = load_prices(sc, L.clock, total_days);
        L.energy_std = stddev(L.prices.energy_price);
        L.mcp_std = stddev(L.prices.mcp);
    }
    return L;
}

} // namespace

RunSummary summarize(const Scenario& sc, std::span<const RoundLog> rounds, const market::BidBook& book, int toggling,
                     double dt_hours) {
    RunSummary s;
    s.scenario = sc.name;
    s.controller = to_string(sc.controller);
    s.program = to_string(sc.program);
    s.rounds = static_cast<int>(rounds.size());
    s.toggling = toggling;
    long evals = 0;
    int mpc_rounds = 0;
    for (const auto& r : rounds) {
        s.energy_kwh += r.energy;
        s.discomfort_degc_h += step_discomfort(r.theta, r.lower, r.upper, dt_hours);
        s.peak_kw = std::max(s.peak_kw, r.power);
        s.energy_cost += r.energy_cost;
        s.rewards += r.reward;
        if (r.event) {
            s.event_energy_kwh += r.energy;
            s.event_baseline_kwh += r.baseline * dt_hours;
        }
        if (!r.plan_feasible) ++s.infeasible_rounds;
        s.lockout_overrides += r.lockout_overrides;
        s.delivery_overrides += r.delivery_overrides;
        if (r.evals > 0) {
            evals += r.evals;
            ++mpc_rounds;
        }
    }
    const double hours = static_cast<double>(rounds.size()) * dt_hours;
    s.avg_discomfort_degc = hours > 0 ? s.discomfort_degc_h / hours : 0.0;
    s.mean_evals = mpc_rounds > 0 ? static_cast<double>(evals) / mpc_rounds : 0.0;
    for (const auto& [interval, b] : book.bids()) {
        ++s.bids;
        s.bid_kwh += b.quantity * dt_hours;
        if (b.called || b.status == market::BidStatus::Cleared || b.status == market::BidStatus::NotCalled ||
            (b.status == market::BidStatus::SettledPaid))
            ++s.bids_cleared;
        if (b.called) {
            ++s.bids_called;
            if (b.status == market::BidStatus::SettledPaid) {
                s.delivered_kwh += std::max(0.0, b.baseline - b.realized_power) * dt_hours;
                if (!b.delivered) ++s.delivery_failures;
            }
        }
    }
    switch (sc.program) {
    case Program::Flat:
        s.demand_cost = sc.demand_charge * s.peak_kw;
        s.net_cost = s.energy_cost + s.demand_cost;
        break;
    case Program::Tou: s.net_cost = s.energy_cost; break;
    case Program::Bidding: s.net_cost = s.energy_cost - s.rewards; break;
    case Program::Cpr:
        s.cpr_rebate = sc.cpr.reward_rate * std::max(0.0, s.event_baseline_kwh - s.event_energy_kwh);
        s.net_cost = s.energy_cost - s.cpr_rebate;
        break;
    }
    return s;
}

std::vector<std::string> check_invariants(const Scenario& scenario, const RunResult& result) {
    std::vector<std::string> out;
    const auto& s = result.summary;
    for (const auto& r : result.rounds) {
        for (int c : r.codes) {
            if (c < 0 || c >= kLadderSize) {
                out.push_back("step " + std::to_string(r.step) + ": code " + std::to_string(c) + " is off the ladder");
                break;
            }
        }
    }
    if (scenario.safety_filter && s.toggling != 0)
        out.push_back(std::to_string(s.toggling) + " lock-out violations with the safety filter on");
    const auto again = summarize(scenario, result.rounds, result.book, s.toggling, result.clock.dt_hours());
    if (again.net_cost != s.net_cost) out.push_back("net cost does not match the round logs");
    double paid = 0.0;
    for (const auto& [interval, b] : result.book.bids())
        if (b.status == market::BidStatus::SettledPaid && b.called) paid += b.reward;
    if (paid != s.rewards) out.push_back("settled rewards do not match the round logs");
    if (s.delivery_failures > 0)
        out.push_back(std::to_string(s.delivery_failures) + " called bids were not delivered");
    return out;
}

RunResult run(const Scenario& scenario, const models::ThermalModel* model) {
    std::optional<RunSummary> bench;
    if (scenario.program == Program::Bidding && scenario.bidding_benchmark &&
        scenario.controller != ControllerKind::Greedy) {
        bench = make_loop(scenario, model, true, {}).run().summary;
    }
    RunResult r = make_loop(scenario, model, false, {}).run();
    if (bench) {
        r.summary.benchmark_net_cost = bench->net_cost;
        r.summary.savings = bench->net_cost - r.summary.net_cost;
        if (bench->net_cost != 0) r.summary.savings_pct = 100.0 * *r.summary.savings / bench->net_cost;
    }
    return r;
}

BudgetStudy budget_study(const Scenario& scenario, const models::ThermalModel& model, std::span<const long> budgets,
                         double fraction, std::uint64_t seed) {
    require(!budgets.empty() && budgets.front() >= 1, ErrorCode::InvalidArgument, "budgets must be >= 1");
    for (std::size_t i = 1; i < budgets.size(); ++i)
        require(budgets[i] > budgets[i - 1], ErrorCode::InvalidArgument, "budgets must increase");
    require(fraction > 0 && fraction <= 1, ErrorCode::InvalidArgument, "sample fraction must lie in (0, 1]");
    require(scenario.controller != ControllerKind::Greedy, ErrorCode::InvalidArgument,
            "budget study needs an MPC controller");

    BudgetStudy study;
    study.budgets.assign(budgets.begin(), budgets.end());
    Loop loop = make_loop(scenario, &model, false, {});
    // Seeded choice of exactly round(fraction * rounds) rounds.
    std::vector<long> steps(static_cast<std::size_t>(loop.run_steps));
    std::iota(steps.begin(), steps.end(), loop.start_step);
    std::mt19937_64 rng(seed);
    std::shuffle(steps.begin(), steps.end(), rng);
    const auto n = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(steps.size())));
    steps.resize(std::max<std::size_t>(n, 1));
    std::sort(steps.begin(), steps.end());

    loop.hook = [&](long step, const control::MpcInstance& inst, std::span<const solver::Point> starts) {
        if (!std::binary_search(steps.begin(), steps.end(), step)) return;
        BudgetRound br;
        br.step = step;
        solver::SolverOptions opts;
        opts.vns = scenario.solver.vns;
        opts.vns_max_radius = scenario.solver.vns_max_radius;
        if (scenario.solver.block_search)
            opts.search = [&inst](const solver::Point& c) { return inst.block_moves(c); };
        for (long b : budgets) {
            const auto plan = control::solve_mpc(inst, solver::Budget{b, std::numeric_limits<double>::infinity(),
                                                                      scenario.solver.seed},
                                                 starts, opts);
            br.f.push_back(plan.objective);
            br.h.push_back(plan.violation);
            br.feasible.push_back(plan.feasible);
            br.plans.push_back(plan.codes);
        }
        study.rounds.push_back(std::move(br));
    };
    loop.run();

    const std::size_t extra = budgets.size() - 1;
    study.identical.assign(extra, 0.0);
    study.mean_abs_gap.assign(extra, 0.0);
    for (const auto& r : study.rounds) {
        for (std::size_t i = 0; i < extra; ++i) {
            if (r.plans[i + 1] == r.plans[0]) study.identical[i] += 1;
            study.mean_abs_gap[i] += std::abs(r.f[i + 1] - r.f[0]);
        }
        for (std::size_t i = 1; i < budgets.size(); ++i) {
            if (solver::barrier_less(r.f[i - 1], r.h[i - 1], r.plans[i - 1], r.f[i], r.h[i], r.plans[i])) {
                ++study.monotonicity_violations;
                break;
            }
        }
    }
    if (!study.rounds.empty()) {
        for (std::size_t i = 0; i < extra; ++i) {
            study.identical[i] /= static_cast<double>(study.rounds.size());
            study.mean_abs_gap[i] /= static_cast<double>(study.rounds.size());
        }
    }
    return study;
}

void write_summary_json(std::ostream& out, const RunSummary& s) {
    nlohmann::ordered_json j;
    j["scenario"] = s.scenario;
    j["controller"] = s.controller;
    j["program"] = s.program;
    j["rounds"] = s.rounds;
    j["energy_kwh"] = s.energy_kwh;
    j["discomfort_degc_h"] = s.discomfort_degc_h;
    j["avg_discomfort_degc"] = s.avg_discomfort_degc;
    j["toggling"] = s.toggling;
    j["peak_kw"] = s.peak_kw;
    j["energy_cost"] = s.energy_cost;
    j["demand_cost"] = s.demand_cost;
    j["rewards"] = s.rewards;
    j["cpr_rebate"] = s.cpr_rebate;
    j["net_cost"] = s.net_cost;
    j["benchmark_net_cost"] = s.benchmark_net_cost ? nlohmann::ordered_json(*s.benchmark_net_cost) : nlohmann::ordered_json(nullptr);
    j["savings"] = s.savings ? nlohmann::ordered_json(*s.savings) : nlohmann::ordered_json(nullptr);
    j["savings_pct"] = s.savings_pct ? nlohmann::ordered_json(*s.savings_pct) : nlohmann::ordered_json(nullptr);
    j["bids"] = s.bids;
    j["bids_cleared"] = s.bids_cleared;
    j["bids_called"] = s.bids_called;
    j["bid_kwh"] = s.bid_kwh;
    j["delivered_kwh"] = s.delivered_kwh;
    j["delivery_failures"] = s.delivery_failures;
    j["event_energy_kwh"] = s.event_energy_kwh;
    j["event_baseline_kwh"] = s.event_baseline_kwh;
    j["infeasible_rounds"] = s.infeasible_rounds;
    j["lockout_overrides"] = s.lockout_overrides;
    j["delivery_overrides"] = s.delivery_overrides;
    j["mean_evals"] = s.mean_evals;
    out << j.dump(2) << '\n';
}

void write_rounds_csv(std::ostream& out, const RunResult& result) {
    const std::size_t nz = result.rounds.empty() ? 0 : result.rounds.front().codes.size();
    out << "step,time";
    for (std::size_t z = 1; z <= nz; ++z) out << ",code_z" << z << ",theta_z" << z;
    out << ",lower,upper,oat,power_kw,energy_kwh,energy_price,energy_cost,baseline_kw,event,plan_objective,"
           "plan_violation,plan_feasible,evals,bid_kw,sigma,committed_kw,reward,delivered,lockout_overrides,"
           "delivery_overrides\n";
    using detail::fmt_double;
    for (const auto& r : result.rounds) {
        out << r.step << ',' << r.time;
        for (std::size_t z = 0; z < nz; ++z) out << ',' << r.codes[z] << ',' << fmt_double(r.theta[z]);
        out << ',' << fmt_double(r.lower.empty() ? 0.0 : r.lower[0]) << ','
            << fmt_double(r.upper.empty() ? 0.0 : r.upper[0]) << ',' << fmt_double(r.oat) << ','
            << fmt_double(r.power) << ',' << fmt_double(r.energy) << ',' << fmt_double(r.energy_price) << ','
            << fmt_double(r.energy_cost) << ',' << fmt_double(r.baseline) << ',' << (r.event ? 1 : 0) << ','
            << fmt_double(r.plan_objective) << ',' << fmt_double(r.plan_violation) << ',' << (r.plan_feasible ? 1 : 0)
            << ',' << r.evals << ',' << fmt_double(r.bid_quantity) << ',' << fmt_double(r.sigma) << ','
            << fmt_double(r.committed) << ',' << fmt_double(r.reward) << ',' << (r.delivered ? 1 : 0) << ','
            << r.lockout_overrides << ',' << r.delivery_overrides << '\n';
    }
}

void write_budget_json(std::ostream& out, const BudgetStudy& study) {
    nlohmann::ordered_json j;
    j["budgets"] = study.budgets;
    j["sampled_rounds"] = study.rounds.size();
    j["identical_fraction"] = study.identical;
    j["mean_abs_objective_gap"] = study.mean_abs_gap;
    j["monotonicity_violations"] = study.monotonicity_violations;
    auto rounds = nlohmann::ordered_json::array();
    for (const auto& r : study.rounds) {
        nlohmann::ordered_json x;
        x["step"] = r.step;
        x["objective"] = r.f;
        x["violation"] = r.h;
        x["feasible"] = r.feasible;
        rounds.push_back(std::move(x));
    }
    j["rounds"] = std::move(rounds);
    out << j.dump(2) << '\n';
}

} // namespace rtumpc::harness
