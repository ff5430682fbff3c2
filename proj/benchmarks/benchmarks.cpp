#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "../tests/unit/helpers.hpp"
#include "rtumpc/control/mpc.hpp"
#include "rtumpc/models/features.hpp"
#include "rtumpc/models/icrnn.hpp"
#include "rtumpc/plant/rc_network.hpp"

using namespace rtumpc;

namespace {

const plant::RecordSet& records() {
    static const auto set = testing::default_dataset(0.1);
    return set;
}

models::IcrnnModel random_model(int hidden) {
    const int zones = 2, n_in = models::input_width(zones);
    models::ScalerParams in{std::vector<double>(n_in, -1.0), std::vector<double>(n_in, 40.0)};
    models::ScalerParams out{std::vector<double>(zones, -0.5), std::vector<double>(zones, 0.5)};
    return {models::IcrnnParams::random(n_in, hidden, zones, 3), in, out, zones, 36, 24};
}

control::RoundState round_state(std::size_t t, int horizon) {
    const auto& d = records();
    control::RoundState s;
    s.theta = d.records[t - 1].theta;
    s.history = std::span<const plant::Record>(d.records).subspan(t - 36, 36);
    for (int k = 0; k < horizon; ++k) s.forecast.push_back(d.records[t + static_cast<std::size_t>(k)].exog);
    s.upper_bound.assign(static_cast<std::size_t>(2 * horizon), 24.0);
    s.energy_price.assign(static_cast<std::size_t>(horizon), 0.05303);
    s.demand_charge = 14.58;
    return s;
}

} // namespace

static void BM_IcrnnForward(benchmark::State& state) {
    const int hidden = static_cast<int>(state.range(0));
    const auto p = models::IcrnnParams::random(13, hidden, 2, 1);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::MatrixXd x(13, 60);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(models::icrnn_forward(p, x));
    state.SetItemsProcessed(state.iterations() * 60);
}
BENCHMARK(BM_IcrnnForward)->Arg(8)->Arg(60);

static void BM_HorizonPredict(benchmark::State& state) {
    const auto model = random_model(60);
    const auto s = round_state(200, 24);
    const auto pred = model.bind(s.history, s.forecast);
    std::vector<int> codes(48, 2);
    std::vector<double> dtheta(48);
    for (auto _ : state) {
        pred->predict(codes, dtheta);
        benchmark::DoNotOptimize(dtheta.data());
    }
}
BENCHMARK(BM_HorizonPredict);

static void BM_MpcSolve(benchmark::State& state) {
    const auto model = random_model(60);
    const auto s = round_state(300, 24);
    control::MpcConfig cfg;
    const auto m = control::build_base(cfg, model, s);
    const std::vector<int> start(48, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(control::solve_mpc(m, solver::Budget{state.range(0), INFINITY, 1}, start));
}
BENCHMARK(BM_MpcSolve)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_PlantStep(benchmark::State& state) {
    const plant::RcPlant plant(plant::RcNetwork::two_zone_default());
    auto x = plant::PlantState::uniform(2, 24.0, testing::kMonday);
    const auto u = testing::codes({2, 1});
    for (auto _ : state) {
        x = plant.step(x, u, {32.0, 600.0});
        benchmark::DoNotOptimize(x.air.data());
    }
}
BENCHMARK(BM_PlantStep);

BENCHMARK_MAIN();
