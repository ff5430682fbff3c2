#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rtumpc/types.hpp"

namespace rtumpc::plant {

/// Two-resistance two-capacitance zone: an air node coupled to outdoor air and
/// to a thermal mass node. Heat flows in kW, temperatures in degC.
struct ZoneParams {
    double air_capacitance = 1.5;    ///< kWh/degC
    double mass_capacitance = 15.0;  ///< kWh/degC
    double r_air_mass = 0.3;         ///< degC/kW
    double r_air_outdoor = 2.0;      ///< degC/kW
    double solar_aperture = 5.0;     ///< m2, solar gain kW = aperture * GHI / 1000
    double solar_to_air = 0.4;       ///< share of solar gain injected on the air node
    double internal_gain_occupied = 2.5;    ///< kW
    double internal_gain_unoccupied = 0.4;  ///< kW
    double cooling_stage1 = -6.5;    ///< kW thermal, stage 1
    double cooling_stage2 = -5.5;    ///< kW thermal added by stage 2
    double fan_gain = 0.4;           ///< kW thermal, motor heat
};

struct RcNetwork {
    std::vector<ZoneParams> zones;
    double r_inter_zone = 2.0;  ///< degC/kW between neighbouring zones
    OccupancyCalendar occupancy{};

    /// Default two-zone building: zone 1 interior-heavy, zone 2 sun-exposed.
    static RcNetwork two_zone_default();
    void validate() const;
    [[nodiscard]] int zone_count() const noexcept { return static_cast<int>(zones.size()); }
};

struct PlantState {
    std::vector<double> air;   ///< zone air temperatures theta
    std::vector<double> mass;  ///< zone mass temperatures
    TimePoint time{};

    static PlantState uniform(int zones, double temperature, TimePoint time);
};

struct WeatherSample {
    double oat = 0.0;  ///< degC
    double ghi = 0.0;  ///< W/m2
};

inline constexpr double kMinPhysicalTemperature = -20.0;
inline constexpr double kMaxPhysicalTemperature = 60.0;

/// Heat injected on every node during one step, kW. Layout: air nodes then mass nodes.
using Injection = Eigen::VectorXd;

/// Linear RC plant discretized with implicit Euler. Stepping is a pure
/// function of (state, controls, weather).
class RcPlant {
public:
    explicit RcPlant(RcNetwork network, int step_seconds = 300);

    [[nodiscard]] const RcNetwork& network() const noexcept { return network_; }
    [[nodiscard]] int zones() const noexcept { return network_.zone_count(); }
    [[nodiscard]] double dt_hours() const noexcept { return step_seconds_ / 3600.0; }

    /// Advances one step. Throws Error(NumericOverflow) when any temperature
    /// leaves [-20, 60] degC and Error(ShapeMismatch) on size mismatches.
    [[nodiscard]] PlantState step(const PlantState& state, std::span<const ControlVector> controls,
                                  WeatherSample weather) const;

    [[nodiscard]] Injection injection(std::span<const ControlVector> controls, WeatherSample weather,
                                      bool occupied) const;
    /// Implicit Euler update for explicit node injections; affine in (state, injection).
    [[nodiscard]] Eigen::VectorXd propagate(const Eigen::VectorXd& temperatures, const Injection& injection,
                                            double oat) const;
    /// Steady state for constant inputs, solving A x + b = 0 directly.
    [[nodiscard]] Eigen::VectorXd steady_state(const Injection& injection, double oat) const;

    /// Thermal power (kW, negative) delivered to the zone air for a ladder code.
    [[nodiscard]] double hvac_heat(int zone, ControlVector u) const;

private:
    RcNetwork network_;
    int step_seconds_;
    Eigen::MatrixXd conductance_;  // continuous-time A scaled by capacitances
    Eigen::VectorXd outdoor_;      // coupling of each node to the outdoor temperature
    Eigen::VectorXd inv_capacitance_;
    Eigen::PartialPivLU<Eigen::MatrixXd> implicit_;
};

Eigen::VectorXd pack(const PlantState& s);
void unpack(const Eigen::VectorXd& x, PlantState& s);

} // namespace rtumpc::plant
