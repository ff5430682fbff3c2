#include "rtumpc/plant/rc_network.hpp"

#include <cmath>
#include <string>

#include "rtumpc/error.hpp"

namespace rtumpc::plant {

RcNetwork RcNetwork::two_zone_default() {
    RcNetwork net;
    ZoneParams core;
    core.solar_aperture = 3.0;
    core.internal_gain_occupied = 3.0;
    ZoneParams perimeter;
    perimeter.air_capacitance = 1.3;
    perimeter.mass_capacitance = 12.0;
    perimeter.r_air_outdoor = 1.6;
    perimeter.solar_aperture = 6.0;
    perimeter.internal_gain_occupied = 2.0;
    net.zones = {core, perimeter};
    net.r_inter_zone = 2.0;
    return net;
}

void RcNetwork::validate() const {
    require(!zones.empty(), ErrorCode::InvalidArgument, "RC network needs at least one zone");
    require(r_inter_zone > 0, ErrorCode::InvalidArgument, "inter-zone resistance must be positive");
    for (const auto& z : zones) {
        require(z.air_capacitance > 0 && z.mass_capacitance > 0 && z.r_air_mass > 0 && z.r_air_outdoor > 0,
                ErrorCode::InvalidArgument, "capacitances and resistances must be positive");
        require(z.cooling_stage1 < 0 && z.cooling_stage2 < 0, ErrorCode::InvalidArgument,
                "cooling delivery must be negative");
        require(z.solar_aperture >= 0 && z.solar_to_air >= 0 && z.solar_to_air <= 1, ErrorCode::InvalidArgument,
                "solar parameters out of range");
    }
}

PlantState PlantState::uniform(int zones, double temperature, TimePoint time) {
    return {std::vector<double>(static_cast<std::size_t>(zones), temperature),
            std::vector<double>(static_cast<std::size_t>(zones), temperature), time};
}

Eigen::VectorXd pack(const PlantState& s) {
    const auto n = static_cast<Eigen::Index>(s.air.size());
    Eigen::VectorXd x(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = s.air[static_cast<std::size_t>(i)];
        x[n + i] = s.mass[static_cast<std::size_t>(i)];
    }
    return x;
}

void unpack(const Eigen::VectorXd& x, PlantState& s) {
    const auto n = x.size() / 2;
    s.air.resize(static_cast<std::size_t>(n));
    s.mass.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        s.air[static_cast<std::size_t>(i)] = x[i];
        s.mass[static_cast<std::size_t>(i)] = x[n + i];
    }
}

RcPlant::RcPlant(RcNetwork network, int step_seconds) : network_(std::move(network)), step_seconds_(step_seconds) {
    network_.validate();
    require(step_seconds_ > 0, ErrorCode::InvalidArgument, "step must be positive");
    const auto n = static_cast<Eigen::Index>(network_.zones.size());
    const Eigen::Index m = 2 * n;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);  // conductance Laplacian, kW/degC
    outdoor_ = Eigen::VectorXd::Zero(m);
    inv_capacitance_.resize(m);
    auto connect = [&](Eigen::Index a, Eigen::Index b, double r) {
        g(a, a) -= 1.0 / r;
        g(b, b) -= 1.0 / r;
        g(a, b) += 1.0 / r;
        g(b, a) += 1.0 / r;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& z = network_.zones[static_cast<std::size_t>(i)];
        connect(i, n + i, z.r_air_mass);
        g(i, i) -= 1.0 / z.r_air_outdoor;
        outdoor_[i] = 1.0 / z.r_air_outdoor;
        inv_capacitance_[i] = 1.0 / z.air_capacitance;
        inv_capacitance_[n + i] = 1.0 / z.mass_capacitance;
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) connect(i, i + 1, network_.r_inter_zone);

    conductance_ = inv_capacitance_.asDiagonal() * g;
    outdoor_ = inv_capacitance_.cwiseProduct(outdoor_);
    const double dt = dt_hours();
    implicit_.compute(Eigen::MatrixXd::Identity(m, m) - dt * conductance_);
}

double RcPlant::hvac_heat(int zone, ControlVector u) const {
    const auto& z = network_.zones[static_cast<std::size_t>(zone)];
    return u.fan() * z.fan_gain + u.stage1() * z.cooling_stage1 + u.stage2() * z.cooling_stage2;
}

Injection RcPlant::injection(std::span<const ControlVector> controls, WeatherSample weather, bool occupied) const {
    const int n = zones();
    require(static_cast<int>(controls.size()) == n, ErrorCode::ShapeMismatch,
            "expected " + std::to_string(n) + " zone controls, got " + std::to_string(controls.size()));
    Injection q = Injection::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        const auto& z = network_.zones[static_cast<std::size_t>(i)];
        const double solar = z.solar_aperture * weather.ghi / 1000.0;
        const double internal = occupied ? z.internal_gain_occupied : z.internal_gain_unoccupied;
        q[i] = internal + z.solar_to_air * solar + hvac_heat(i, controls[static_cast<std::size_t>(i)]);
        q[n + i] = (1.0 - z.solar_to_air) * solar;
    }
    return q;
}

Eigen::VectorXd RcPlant::propagate(const Eigen::VectorXd& temperatures, const Injection& q, double oat) const {
    const double dt = dt_hours();
    const Eigen::VectorXd rhs = temperatures + dt * (inv_capacitance_.cwiseProduct(q) + outdoor_ * oat);
    return implicit_.solve(rhs);
}

Eigen::VectorXd RcPlant::steady_state(const Injection& q, double oat) const {
    const Eigen::VectorXd b = inv_capacitance_.cwiseProduct(q) + outdoor_ * oat;
    return conductance_.partialPivLu().solve(-b);
}

PlantState RcPlant::step(const PlantState& state, std::span<const ControlVector> controls,
                         WeatherSample weather) const {
    require(static_cast<int>(state.air.size()) == zones() && state.mass.size() == state.air.size(),
            ErrorCode::ShapeMismatch, "plant state does not match the network");
    const Injection q = injection(controls, weather, network_.occupancy.occupied(state.time));
    const Eigen::VectorXd next = propagate(pack(state), q, weather.oat);
    for (Eigen::Index i = 0; i < next.size(); ++i) {
        require(std::isfinite(next[i]) && next[i] >= kMinPhysicalTemperature && next[i] <= kMaxPhysicalTemperature,
                ErrorCode::NumericOverflow, "temperature left physical bounds: " + std::to_string(next[i]));
    }
    PlantState out;
    unpack(next, out);
    out.time = state.time + std::chrono::seconds(step_seconds_);
    return out;
}

} // namespace rtumpc::plant
