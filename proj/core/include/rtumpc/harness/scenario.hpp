#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "rtumpc/control/greedy.hpp"
#include "rtumpc/market/market.hpp"
#include "rtumpc/plant/rc_network.hpp"
#include "rtumpc/plant/weather.hpp"
#include "rtumpc/types.hpp"

namespace rtumpc::harness {

enum class ControllerKind { Greedy, Linear, Convex };
enum class Program { Flat, Tou, Bidding, Cpr };

std::string to_string(ControllerKind k);
std::string to_string(Program p);
ControllerKind parse_controller(const std::string& s);
Program parse_program(const std::string& s);

struct NoiseConfig {
    bool enabled = true;
    double oat_divisor = 10.0;    // std(OAT) / divisor at the horizon end
    double ghi_divisor = 50.0;
    double price_divisor = 10.0;
    std::uint64_t seed = 5;
};

struct CprConfig {
    double base_rate = 0.076;    // $/kWh
    double reward_rate = 0.55;   // $/kWh curtailed below baseline
    double event_start_hour = 12.0;
    double event_end_hour = 18.0;
};

struct SolverConfig {
    long max_evals = 2000;
    double max_seconds = std::numeric_limits<double>::infinity();
    bool vns = true;
    int vns_max_radius = 4;
    bool block_search = true;  // lock-out-aware block moves in the search step
    std::uint64_t seed = 3;
};

/// One closed-loop experiment.
struct Scenario {
    std::string name = "scenario";
    ControllerKind controller = ControllerKind::Convex;
    Program program = Program::Flat;

    // Building and weather.
    std::string start = "2021-07-05T00:00:00Z";  // first controlled step (a Monday)
    int days = 1;
    int warmup_days = 14;                         // greedy operation before start
    int spinup_days = 1;                          // leading warm-up days left out of baselines
    double initial_temperature = 22.0;
    std::uint64_t weather_seed = 11;
    plant::WeatherConfig weather{};
    ComfortSchedule comfort{};

    // Controllers.
    std::filesystem::path model_path;  // weights for linear/convex controllers
    int horizon = 24;
    int lockout = 3;
    control::GreedyConfig greedy{};
    SolverConfig solver{};
    bool safety_filter = true;  // project applied actions onto lock-out and committed delivery

    // Prices and programs.
    double flat_energy_price = 0.05303;
    double demand_charge = 14.58;
    TouRates tou{};
    CprConfig cpr{};
    market::IsoModel iso{};
    market::PriceConfig prices{};
    std::uint64_t price_seed = 17;
    std::filesystem::path price_csv;  // replaces synthetic prices when set
    bool bidding_benchmark = true;    // also run the zero-price benchmark for savings

    NoiseConfig noise{};

    void validate() const;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

/// Reads a JSON scenario; absent keys keep their defaults. Relative model and
/// price paths resolve against the file's directory.
Scenario load_scenario(const std::filesystem::path& path);

} // namespace rtumpc::harness
