#include "rtumpc/harness/scenario.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "rtumpc/error.hpp"

namespace rtumpc::harness {

using nlohmann::json;

std::string to_string(ControllerKind k) {
    switch (k) {
    case ControllerKind::Greedy: return "greedy";
    case ControllerKind::Linear: return "linear";
    case ControllerKind::Convex: return "convex";
    }
    return "unknown";
}

std::string to_string(Program p) {
    switch (p) {
    case Program::Flat: return "flat";
    case Program::Tou: return "tou";
    case Program::Bidding: return "bidding";
    case Program::Cpr: return "cpr";
    }
    return "unknown";
}

ControllerKind parse_controller(const std::string& s) {
    if (s == "greedy") return ControllerKind::Greedy;
    if (s == "linear") return ControllerKind::Linear;
    if (s == "convex") return ControllerKind::Convex;
    throw Error(ErrorCode::InvalidArgument, "unknown controller '" + s + "' (greedy|linear|convex)");
}

Program parse_program(const std::string& s) {
    if (s == "flat") return Program::Flat;
    if (s == "tou") return Program::Tou;
    if (s == "bidding") return Program::Bidding;
    if (s == "cpr") return Program::Cpr;
    throw Error(ErrorCode::InvalidArgument, "unknown program '" + s + "' (flat|tou|bidding|cpr)");
}

void Scenario::validate() const {
    require(days >= 1 && warmup_days >= 0 && spinup_days >= 0, ErrorCode::InvalidArgument,
            "days >= 1, warmup_days >= 0 and spinup_days >= 0");
    require(horizon >= 1 && lockout >= 0 && lockout < horizon, ErrorCode::InvalidArgument,
            "horizon >= 1 and 0 <= lockout < horizon");
    require(solver.max_evals >= 1 && solver.max_seconds > 0, ErrorCode::InvalidArgument,
            "solver budget must allow evaluations");
    require((program != Program::Bidding && program != Program::Cpr) || warmup_days - spinup_days >= 7,
            ErrorCode::NoHistory, "bidding and CPR baselines need at least 7 warm-up days after spin-up");
    require(noise.oat_divisor > 0 && noise.ghi_divisor > 0 && noise.price_divisor > 0, ErrorCode::InvalidArgument,
            "noise divisors must be > 0");
    require(cpr.event_end_hour > cpr.event_start_hour, ErrorCode::InvalidArgument, "CPR event must have positive length");
    comfort.validate();
    greedy.validate();
    iso.validate();
    (void)parse_iso8601(start);
}

namespace {

template <class T>
void opt(const json& j, const char* key, T& v) {
    if (auto it = j.find(key); it != j.end()) it->get_to(v);
}

json bounds_json(const ComfortBounds& b) { return json::array({b.lower, b.upper}); }

void bounds_from(const json& j, const char* key, ComfortBounds& b) {
    if (auto it = j.find(key); it != j.end()) {
        const auto v = it->get<std::vector<double>>();
        require(v.size() == 2, ErrorCode::Parse, std::string(key) + " needs [lower, upper]");
        b.lower = v[0];
        b.upper = v[1];
    }
}

} // namespace

void to_json(json& j, const Scenario& s) {
    const auto& w = s.weather;
    j = json{
        {"name", s.name},
        {"controller", to_string(s.controller)},
        {"program", to_string(s.program)},
        {"start", s.start},
        {"days", s.days},
        {"warmup_days", s.warmup_days},
        {"spinup_days", s.spinup_days},
        {"initial_temperature", s.initial_temperature},
        {"weather_seed", s.weather_seed},
        {"weather",
         {{"oat_mean", w.oat_mean},
          {"oat_amplitude", w.oat_amplitude},
          {"oat_peak_hour", w.oat_peak_hour},
          {"day_to_day_std", w.day_to_day_std},
          {"oat_noise_std", w.oat_noise_std},
          {"ghi_peak", w.ghi_peak},
          {"sunrise_hour", w.sunrise_hour},
          {"sunset_hour", w.sunset_hour},
          {"min_clearness", w.min_clearness},
          {"ghi_noise_std", w.ghi_noise_std}}},
        {"comfort",
         {{"occupied", bounds_json(s.comfort.occupied_bounds)},
          {"unoccupied", bounds_json(s.comfort.unoccupied_bounds)},
          {"open_hour", s.comfort.calendar.open_hour},
          {"close_hour", s.comfort.calendar.close_hour},
          {"weekends_occupied", s.comfort.calendar.weekends_occupied}}},
        {"model", s.model_path.string()},
        {"horizon", s.horizon},
        {"lockout", s.lockout},
        {"greedy", {{"escalate_margin", s.greedy.escalate_margin}, {"deadband", s.greedy.deadband}}},
        {"solver",
         {{"max_evals", s.solver.max_evals},
          {"max_seconds", std::isfinite(s.solver.max_seconds) ? json(s.solver.max_seconds) : json(nullptr)},
          {"vns", s.solver.vns},
          {"vns_max_radius", s.solver.vns_max_radius},
          {"block_search", s.solver.block_search},
          {"seed", s.solver.seed}}},
        {"safety_filter", s.safety_filter},
        {"flat_energy_price", s.flat_energy_price},
        {"demand_charge", s.demand_charge},
        {"tou", {{"off_peak", s.tou.off_peak}, {"mid_peak", s.tou.mid_peak}, {"on_peak", s.tou.on_peak}}},
        {"cpr",
         {{"base_rate", s.cpr.base_rate},
          {"reward_rate", s.cpr.reward_rate},
          {"event_start_hour", s.cpr.event_start_hour},
          {"event_end_hour", s.cpr.event_end_hour}}},
        {"iso", {{"p_clear", s.iso.p_clear}, {"p_call", s.iso.p_call}, {"seed", s.iso.seed}}},
        {"prices",
         {{"energy_mean", s.prices.energy_mean},
          {"energy_peak_ratio", s.prices.energy_peak_ratio},
          {"energy_sigma", s.prices.energy_sigma},
          {"mcp_mean", s.prices.mcp_mean},
          {"mcp_peak_ratio", s.prices.mcp_peak_ratio},
          {"mcp_sigma", s.prices.mcp_sigma},
          {"ar", s.prices.ar}}},
        {"price_seed", s.price_seed},
        {"price_csv", s.price_csv.string()},
        {"bidding_benchmark", s.bidding_benchmark},
        {"noise",
         {{"enabled", s.noise.enabled},
          {"oat_divisor", s.noise.oat_divisor},
          {"ghi_divisor", s.noise.ghi_divisor},
          {"price_divisor", s.noise.price_divisor},
          {"seed", s.noise.seed}}},
    };
}

void from_json(const json& j, Scenario& s) {
    static const std::set<std::string> known{
        "name",   "controller",   "program",       "start",       "days",        "warmup_days", "spinup_days",
        "initial_temperature",    "weather_seed",  "weather",     "comfort",     "model",
        "horizon", "lockout",     "greedy",        "solver",      "safety_filter", "flat_energy_price",
        "demand_charge", "tou",   "cpr",           "iso",         "prices",      "price_seed",
        "price_csv", "bidding_benchmark", "noise"};
    require(j.is_object(), ErrorCode::Parse, "scenario must be a JSON object");
    for (const auto& [key, value] : j.items())
        require(known.count(key) > 0, ErrorCode::Parse, "unknown scenario key '" + key + "'");

    opt(j, "name", s.name);
    if (auto it = j.find("controller"); it != j.end()) s.controller = parse_controller(it->get<std::string>());
    if (auto it = j.find("program"); it != j.end()) s.program = parse_program(it->get<std::string>());
    opt(j, "start", s.start);
    opt(j, "days", s.days);
    opt(j, "warmup_days", s.warmup_days);
    opt(j, "spinup_days", s.spinup_days);
    opt(j, "initial_temperature", s.initial_temperature);
    opt(j, "weather_seed", s.weather_seed);
    if (auto it = j.find("weather"); it != j.end()) {
        auto& w = s.weather;
        opt(*it, "oat_mean", w.oat_mean);
        opt(*it, "oat_amplitude", w.oat_amplitude);
        opt(*it, "oat_peak_hour", w.oat_peak_hour);
        opt(*it, "day_to_day_std", w.day_to_day_std);
        opt(*it, "oat_noise_std", w.oat_noise_std);
        opt(*it, "ghi_peak", w.ghi_peak);
        opt(*it, "sunrise_hour", w.sunrise_hour);
        opt(*it, "sunset_hour", w.sunset_hour);
        opt(*it, "min_clearness", w.min_clearness);
        opt(*it, "ghi_noise_std", w.ghi_noise_std);
    }
    if (auto it = j.find("comfort"); it != j.end()) {
        bounds_from(*it, "occupied", s.comfort.occupied_bounds);
        bounds_from(*it, "unoccupied", s.comfort.unoccupied_bounds);
        opt(*it, "open_hour", s.comfort.calendar.open_hour);
        opt(*it, "close_hour", s.comfort.calendar.close_hour);
        opt(*it, "weekends_occupied", s.comfort.calendar.weekends_occupied);
    }
    if (auto it = j.find("model"); it != j.end()) s.model_path = it->get<std::string>();
    opt(j, "horizon", s.horizon);
    opt(j, "lockout", s.lockout);
    if (auto it = j.find("greedy"); it != j.end()) {
        opt(*it, "escalate_margin", s.greedy.escalate_margin);
        opt(*it, "deadband", s.greedy.deadband);
    }
    if (auto it = j.find("solver"); it != j.end()) {
        opt(*it, "max_evals", s.solver.max_evals);
        if (auto sec = it->find("max_seconds"); sec != it->end() && !sec->is_null()) sec->get_to(s.solver.max_seconds);
        opt(*it, "vns", s.solver.vns);
        opt(*it, "vns_max_radius", s.solver.vns_max_radius);
        opt(*it, "block_search", s.solver.block_search);
        opt(*it, "seed", s.solver.seed);
    }
    opt(j, "safety_filter", s.safety_filter);
    opt(j, "flat_energy_price", s.flat_energy_price);
    opt(j, "demand_charge", s.demand_charge);
    if (auto it = j.find("tou"); it != j.end()) {
        opt(*it, "off_peak", s.tou.off_peak);
        opt(*it, "mid_peak", s.tou.mid_peak);
        opt(*it, "on_peak", s.tou.on_peak);
    }
    if (auto it = j.find("cpr"); it != j.end()) {
        opt(*it, "base_rate", s.cpr.base_rate);
        opt(*it, "reward_rate", s.cpr.reward_rate);
        opt(*it, "event_start_hour", s.cpr.event_start_hour);
        opt(*it, "event_end_hour", s.cpr.event_end_hour);
    }
    if (auto it = j.find("iso"); it != j.end()) {
        opt(*it, "p_clear", s.iso.p_clear);
        opt(*it, "p_call", s.iso.p_call);
        opt(*it, "seed", s.iso.seed);
    }
    if (auto it = j.find("prices"); it != j.end()) {
        auto& p = s.prices;
        opt(*it, "energy_mean", p.energy_mean);
        opt(*it, "energy_peak_ratio", p.energy_peak_ratio);
        opt(*it, "energy_sigma", p.energy_sigma);
        opt(*it, "mcp_mean", p.mcp_mean);
        opt(*it, "mcp_peak_ratio", p.mcp_peak_ratio);
        opt(*it, "mcp_sigma", p.mcp_sigma);
        opt(*it, "ar", p.ar);
    }
    opt(j, "price_seed", s.price_seed);
    if (auto it = j.find("price_csv"); it != j.end()) s.price_csv = it->get<std::string>();
    opt(j, "bidding_benchmark", s.bidding_benchmark);
    if (auto it = j.find("noise"); it != j.end()) {
        opt(*it, "enabled", s.noise.enabled);
        opt(*it, "oat_divisor", s.noise.oat_divisor);
        opt(*it, "ghi_divisor", s.noise.ghi_divisor);
        opt(*it, "price_divisor", s.noise.price_divisor);
        opt(*it, "seed", s.noise.seed);
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open scenario " + path.string());
    Scenario s;
    try {
        from_json(json::parse(in), s);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, "scenario " + path.string() + ": " + e.what());
    }
    const auto dir = path.parent_path();
    if (!s.model_path.empty() && s.model_path.is_relative()) s.model_path = dir / s.model_path;
    if (!s.price_csv.empty() && s.price_csv.is_relative()) s.price_csv = dir / s.price_csv;
    s.validate();
    return s;
}

} // namespace rtumpc::harness
