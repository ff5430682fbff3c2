// Command line front end: data generation, model training and evaluation,
// closed-loop runs, budget study and controller comparison.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "rtumpc/error.hpp"
#include "rtumpc/harness/experiment.hpp"
#include "rtumpc/harness/scenario.hpp"
#include "rtumpc/models/arx.hpp"
#include "rtumpc/models/evaluation.hpp"
#include "rtumpc/models/features.hpp"
#include "rtumpc/models/training.hpp"
#include "rtumpc/plant/dataset.hpp"
#include "rtumpc/plant/weather.hpp"

namespace fs = std::filesystem;
using namespace rtumpc;

namespace {

constexpr int kInvariantExit = 2;

plant::RecordSet read_dataset(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    return plant::read_records_csv(in);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
    return out;
}

// ---- gen-data -------------------------------------------------------------

struct GenDataArgs {
    double months = 6.0;
    std::uint64_t weather_seed = 11;
    std::uint64_t policy_seed = 7;
    std::string start = "2021-01-04T00:00:00Z";
    double initial_temperature = 22.0;
    fs::path out = "data.csv";
    fs::path weather_out;
};

int gen_data(const GenDataArgs& a) {
    require(a.months > 0, ErrorCode::InvalidArgument, "--months must be > 0");
    SimClock clock;
    clock.start = parse_iso8601(a.start);
    const int days = static_cast<int>(std::ceil(a.months * plant::kDaysPerMonth)) + 1;
    const auto trace = plant::synthesize_weather(a.weather_seed, days, clock);
    plant::ExcitationPolicy policy;
    policy.seed = a.policy_seed;
    const auto set =
        plant::generate_dataset(plant::RcNetwork::two_zone_default(), trace, policy, a.months, a.initial_temperature);
    auto out = open_out(a.out);
    plant::write_records_csv(out, set);
    if (!a.weather_out.empty()) {
        auto w = open_out(a.weather_out);
        plant::write_weather_csv(w, trace);
    }
    std::cout << "wrote " << set.size() << " records to " << a.out.string() << '\n';
    return 0;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string kind = "icrnn";
    fs::path data = "data.csv";
    fs::path out = "model.json";
    fs::path log;
    models::TrainConfig config{};
    std::vector<double> grid_lr;
    std::vector<int> grid_hidden;
};

int train(const TrainArgs& a) {
    const auto set = read_dataset(a.data);
    if (a.kind == "arx") {
        const auto split = models::make_windows(set.size(), a.config.window, a.config.horizon, a.config.seed,
                                                a.config.stride);
        std::vector<std::size_t> idx;
        for (auto i : models::covered_records(split.train, split.length()))
            if (i >= static_cast<std::size_t>(models::ArxParams::kDthetaLags)) idx.push_back(i);
        const models::ArxModel model(models::fit_arx(set, idx));
        models::save_model(a.out, model);
        std::cout << "fitted ARX on " << idx.size() << " records, saved to " << a.out.string() << '\n';
        return 0;
    }
    require(a.kind == "icrnn", ErrorCode::InvalidArgument, "model kind must be icrnn or arx");

    std::ofstream log;
    if (!a.log.empty()) {
        log = open_out(a.log);
        log << "epoch,train_loss,validation_loss\n";
    }
    auto on_epoch = [&](const models::EpochLog& e) {
        std::cout << "epoch " << e.epoch << "  train " << e.train_loss << "  validation " << e.validation_loss
                  << std::endl;
        if (log) log << e.epoch << ',' << e.train_loss << ',' << e.validation_loss << '\n';
    };

    if (!a.grid_lr.empty() || !a.grid_hidden.empty()) {
        const std::vector<double> lrs = a.grid_lr.empty() ? std::vector<double>{a.config.learning_rate} : a.grid_lr;
        const std::vector<int> hs = a.grid_hidden.empty() ? std::vector<int>{a.config.hidden} : a.grid_hidden;
        const auto grid = models::grid_search(set, a.config, lrs, hs);
        for (const auto& p : grid.points)
            std::cout << "lr " << p.learning_rate << "  hidden " << p.hidden << "  validation " << p.validation_loss
                      << '\n';
        const auto& w = grid.points[grid.best];
        std::cout << "best: lr " << w.learning_rate << " hidden " << w.hidden << '\n';
        models::save_model(a.out, grid.fit->model);
        return 0;
    }

    const auto fit = models::fit_icrnn(set, a.config, on_epoch);
    models::save_model(a.out, fit.model);
    std::cout << "best epoch " << fit.result.best_epoch << "  validation " << fit.result.best_validation_loss
              << ", saved to " << a.out.string() << '\n';
    return 0;
}

// ---- eval-model -----------------------------------------------------------

struct EvalArgs {
    fs::path data = "data.csv";
    std::vector<fs::path> models;
    int window = 36;
    int horizon = 24;
    int stride = 1;
    std::uint64_t seed = 1;
    fs::path out;
};

nlohmann::ordered_json report_json(const std::string& kind, const models::RmseReport& r) {
    nlohmann::ordered_json j;
    j["model"] = kind;
    j["rmse"] = r.rmse;
    j["std"] = r.std;
    j["zone_rmse"] = r.zone_rmse;
    j["zone_std"] = r.zone_std;
    j["step_rmse"] = r.step_rmse;
    j["windows"] = r.windows;
    return j;
}

int eval_model(const EvalArgs& a) {
    const auto set = read_dataset(a.data);
    const auto split = models::make_windows(set.size(), a.window, a.horizon, a.seed, a.stride);
    const auto train_idx = models::covered_records(split.train, split.length());
    auto reports = nlohmann::ordered_json::array();
    auto print = [&](const std::string& name, const models::RmseReport& r) {
        std::cout << std::left << std::setw(28) << name << " rmse " << std::setprecision(5) << r.rmse << " +- "
                  << r.std << "  (" << r.windows << " windows)\n";
        reports.push_back(report_json(name, r));
    };
    for (const auto& path : a.models) {
        const auto m = models::load_model(path);
        print(m->kind() + " " + path.filename().string(),
              models::evaluate_rmse(*m, set, split.test, a.window, a.horizon));
    }
    const auto constant = models::ConstantModel::fit(set, train_idx);
    print("constant", models::evaluate_rmse(constant, set, split.test, a.window, a.horizon));
    if (!a.out.empty()) {
        auto out = open_out(a.out);
        out << reports.dump(2) << '\n';
    }
    return 0;
}

// ---- run / budget-study / compare -------------------------------------------

struct Overrides {
    std::string controller;
    std::string program;
    int days = 0;
    long max_evals = 0;
    double max_seconds = 0.0;
    fs::path model;
    bool no_noise = false;
};

harness::Scenario load_with(const fs::path& path, const Overrides& o) {
    harness::Scenario s = path.empty() ? harness::Scenario{} : harness::load_scenario(path);
    if (!o.controller.empty()) s.controller = harness::parse_controller(o.controller);
    if (!o.program.empty()) s.program = harness::parse_program(o.program);
    if (o.days > 0) s.days = o.days;
    if (o.max_evals > 0) s.solver.max_evals = o.max_evals;
    if (o.max_seconds > 0) s.solver.max_seconds = o.max_seconds;
    if (!o.model.empty()) s.model_path = o.model;
    if (o.no_noise) s.noise.enabled = false;
    s.validate();
    return s;
}

std::unique_ptr<models::ThermalModel> model_for(const harness::Scenario& s) {
    if (s.controller == harness::ControllerKind::Greedy) return nullptr;
    require(!s.model_path.empty(), ErrorCode::InvalidArgument,
            "controller '" + harness::to_string(s.controller) + "' needs model weights (--model)");
    require(fs::exists(s.model_path), ErrorCode::Io, "model weights not found: " + s.model_path.string());
    return models::load_model(s.model_path);
}

int write_run(const harness::Scenario& s, const harness::RunResult& r, const fs::path& dir) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "summary.json");
        harness::write_summary_json(out, r.summary);
    }
    {
        auto out = open_out(dir / "rounds.csv");
        harness::write_rounds_csv(out, r);
    }
    if (s.program == harness::Program::Bidding) {
        auto out = open_out(dir / "bids.jsonl");
        market::write_bid_ledger(out, r.book, r.clock);
    }
    const auto broken = harness::check_invariants(s, r);
    for (const auto& b : broken) std::cerr << "invariant violated: " << b << '\n';
    return broken.empty() ? 0 : kInvariantExit;
}

int run_cmd(const fs::path& scenario, const Overrides& o, const fs::path& out_dir) {
    const auto s = load_with(scenario, o);
    const auto model = model_for(s);
    const auto r = harness::run(s, model.get());
    const int code = write_run(s, r, out_dir);
    harness::write_summary_json(std::cout, r.summary);
    return code;
}

int budget_cmd(const fs::path& scenario, const Overrides& o, std::vector<long> budgets, double fraction,
               std::uint64_t seed, const fs::path& out) {
    const auto s = load_with(scenario, o);
    const auto model = model_for(s);
    require(model != nullptr, ErrorCode::InvalidArgument, "budget study needs an MPC controller");
    if (budgets.empty()) budgets = {s.solver.max_evals, 2 * s.solver.max_evals, 6 * s.solver.max_evals};
    const auto study = harness::budget_study(s, *model, budgets, fraction, seed);
    {
        auto f = open_out(out);
        harness::write_budget_json(f, study);
    }
    std::cout << "sampled rounds: " << study.rounds.size() << '\n';
    for (std::size_t i = 0; i < study.identical.size(); ++i)
        std::cout << "budget " << budgets[0] << " vs " << budgets[i + 1] << ": identical "
                  << std::setprecision(4) << 100.0 * study.identical[i] << "%  mean |df| " << study.mean_abs_gap[i]
                  << '\n';
    std::cout << "monotonicity violations: " << study.monotonicity_violations << '\n';
    return study.monotonicity_violations == 0 ? 0 : kInvariantExit;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

int compare_cmd(const fs::path& scenario, const Overrides& o, const std::string& controllers,
                const std::string& programs, const fs::path& convex_model, const fs::path& linear_model, int jobs,
                const fs::path& out_dir) {
    struct Job {
        harness::Scenario scenario;
        std::shared_ptr<models::ThermalModel> model;
        fs::path dir;
    };
    std::vector<Job> queue;
    for (const auto& p : split_list(programs)) {
        for (const auto& c : split_list(controllers)) {
            Overrides oo = o;
            oo.program = p;
            oo.controller = c;
            auto s = load_with(scenario, oo);
            if (s.controller == harness::ControllerKind::Convex && !convex_model.empty()) s.model_path = convex_model;
            if (s.controller == harness::ControllerKind::Linear && !linear_model.empty()) s.model_path = linear_model;
            s.name = p + "-" + c;
            queue.push_back({s, model_for(s), out_dir / s.name});
        }
    }
    // Runs share nothing mutable, so independent scenarios run concurrently.
    std::vector<harness::RunResult> results(queue.size());
    std::vector<int> codes(queue.size(), 0);
    const auto width = static_cast<std::size_t>(std::max(jobs, 1));
    for (std::size_t begin = 0; begin < queue.size(); begin += width) {
        std::vector<std::future<void>> running;
        for (std::size_t i = begin; i < std::min(queue.size(), begin + width); ++i) {
            running.push_back(std::async(std::launch::async, [&, i] {
                results[i] = harness::run(queue[i].scenario, queue[i].model.get());
                codes[i] = write_run(queue[i].scenario, results[i], queue[i].dir);
            }));
        }
        for (auto& f : running) f.get();
    }

    auto table = open_out(out_dir / "compare.csv");
    table << "program,controller,energy_kwh,avg_discomfort_degc,toggling,peak_kw,net_cost,savings_pct,bids,"
             "bids_called,bid_kwh,delivered_kwh\n";
    std::cout << std::left << std::setw(10) << "program" << std::setw(10) << "control" << std::right << std::setw(12)
              << "energy kWh" << std::setw(14) << "discomfort C" << std::setw(10) << "toggling" << std::setw(12)
              << "net cost $" << std::setw(11) << "savings %" << '\n';
    for (std::size_t i = 0; i < queue.size(); ++i) {
        const auto& s = results[i].summary;
        table << s.program << ',' << s.controller << ',' << s.energy_kwh << ',' << s.avg_discomfort_degc << ','
              << s.toggling << ',' << s.peak_kw << ',' << s.net_cost << ','
              << (s.savings_pct ? std::to_string(*s.savings_pct) : "") << ',' << s.bids << ',' << s.bids_called
              << ',' << s.bid_kwh << ',' << s.delivered_kwh << '\n';
        std::cout << std::left << std::setw(10) << s.program << std::setw(10) << s.controller << std::right
                  << std::fixed << std::setprecision(2) << std::setw(12) << s.energy_kwh << std::setprecision(3)
                  << std::setw(14) << s.avg_discomfort_degc << std::setw(10) << s.toggling << std::setprecision(2)
                  << std::setw(12) << s.net_cost << std::setw(11)
                  << (s.savings_pct ? std::to_string(*s.savings_pct).substr(0, 6) : "-") << '\n'
                  << std::defaultfloat;
    }
    return *std::max_element(codes.begin(), codes.end());
}

void add_overrides(CLI::App* app, Overrides& o) {
    app->add_option("--controller", o.controller, "greedy | linear | convex");
    app->add_option("--program", o.program, "flat | tou | bidding | cpr");
    app->add_option("--days", o.days, "simulated days");
    app->add_option("--max-evals", o.max_evals, "solver evaluations per round");
    app->add_option("--max-seconds", o.max_seconds, "solver wall-clock limit per round");
    app->add_option("--model", o.model, "model weights for the MPC controllers");
    app->add_flag("--no-noise", o.no_noise, "exact forecasts");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rooftop-unit HVAC model predictive control toolkit"};
    app.require_subcommand(1);

    GenDataArgs gd;
    auto* gen = app.add_subcommand("gen-data", "simulate the RC building under an excitation policy");
    gen->add_option("--months", gd.months, "30-day months to simulate");
    gen->add_option("--weather-seed", gd.weather_seed);
    gen->add_option("--policy-seed", gd.policy_seed);
    gen->add_option("--start", gd.start, "first timestamp, ISO-8601 UTC");
    gen->add_option("--initial-temperature", gd.initial_temperature);
    gen->add_option("-o,--out", gd.out, "records CSV");
    gen->add_option("--weather-out", gd.weather_out, "also write the weather trace");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "fit a thermal model");
    tr->add_option("kind", ta.kind, "icrnn | arx")->check(CLI::IsMember({"icrnn", "arx"}));
    tr->add_option("-d,--data", ta.data, "records CSV")->required();
    tr->add_option("-o,--out", ta.out, "weights JSON");
    tr->add_option("--log", ta.log, "per-epoch loss CSV");
    tr->add_option("--epochs", ta.config.max_epochs);
    tr->add_option("--patience", ta.config.patience);
    tr->add_option("--lr", ta.config.learning_rate);
    tr->add_option("--hidden", ta.config.hidden);
    tr->add_option("--batch", ta.config.batch_size);
    tr->add_option("--window", ta.config.window);
    tr->add_option("--horizon", ta.config.horizon);
    tr->add_option("--stride", ta.config.stride);
    tr->add_option("--seed", ta.config.seed);
    tr->add_option("--grid-lr", ta.grid_lr, "learning rates to search")->delimiter(',');
    tr->add_option("--grid-hidden", ta.grid_hidden, "hidden widths to search")->delimiter(',');

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval-model", "held-out multi-step RMSE");
    ev->add_option("-d,--data", ea.data, "records CSV")->required();
    ev->add_option("-m,--model", ea.models, "weights JSON (repeatable)");
    ev->add_option("--window", ea.window);
    ev->add_option("--horizon", ea.horizon);
    ev->add_option("--stride", ea.stride);
    ev->add_option("--seed", ea.seed, "split seed used at training");
    ev->add_option("-o,--out", ea.out, "report JSON");

    fs::path scenario;
    fs::path out_dir = "out";
    Overrides ov;
    auto* rn = app.add_subcommand("run", "closed-loop simulation of one scenario");
    rn->add_option("scenario", scenario, "scenario JSON");
    rn->add_option("-o,--out", out_dir, "output directory");
    add_overrides(rn, ov);

    std::vector<long> budgets;
    double fraction = 0.3;
    std::uint64_t sample_seed = 1;
    fs::path budget_out = "budget.json";
    auto* bs = app.add_subcommand("budget-study", "re-solve sampled rounds under larger budgets");
    bs->add_option("scenario", scenario, "scenario JSON");
    bs->add_option("--budgets", budgets, "increasing evaluation budgets (default B,2B,6B)")->delimiter(',');
    bs->add_option("--fraction", fraction, "share of rounds to re-solve");
    bs->add_option("--sample-seed", sample_seed);
    bs->add_option("-o,--out", budget_out, "report JSON");
    add_overrides(bs, ov);

    std::string controllers = "greedy,linear,convex";
    std::string programs = "flat";
    fs::path convex_model, linear_model;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    auto* cmp = app.add_subcommand("compare", "run controllers side by side and tabulate");
    cmp->add_option("scenario", scenario, "base scenario JSON");
    cmp->add_option("--controllers", controllers);
    cmp->add_option("--programs", programs);
    cmp->add_option("--icrnn", convex_model, "weights for the convex controller");
    cmp->add_option("--arx", linear_model, "weights for the linear controller");
    cmp->add_option("-j,--jobs", jobs, "concurrent runs");
    cmp->add_option("-o,--out", out_dir, "output directory");
    add_overrides(cmp, ov);

    CLI11_PARSE(app, argc, argv);
    try {
        if (gen->parsed()) return gen_data(gd);
        if (tr->parsed()) return train(ta);
        if (ev->parsed()) return eval_model(ea);
        if (rn->parsed()) return run_cmd(scenario, ov, out_dir);
        if (bs->parsed()) return budget_cmd(scenario, ov, budgets, fraction, sample_seed, budget_out);
        if (cmp->parsed())
            return compare_cmd(scenario, ov, controllers, programs, convex_model, linear_model, jobs, out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
