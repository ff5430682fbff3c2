#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rtumpc/models/thermal_model.hpp"
#include "rtumpc/plant/dataset.hpp"
#include "rtumpc/plant/weather.hpp"

namespace rtumpc::testing {

inline const TimePoint kMonday = parse_iso8601("2021-07-05T00:00:00Z");

inline ZoneControls codes(std::initializer_list<int> c) {
    ZoneControls u;
    for (int x : c) u.push_back(ControlVector::from_code(x));
    return u;
}

/// dtheta[k, z] = drift[z] + per_step[k] - gain[z] * code. Linear in the
/// codes, so every MPC built on it has a convex relaxation.
class LinearModel final : public models::ThermalModel {
public:
    LinearModel(std::vector<double> drift, std::vector<double> gain, std::vector<double> per_step = {})
        : drift_(std::move(drift)), gain_(std::move(gain)), per_step_(std::move(per_step)) {}

    [[nodiscard]] std::string kind() const override { return "linear-test"; }
    [[nodiscard]] int zones() const noexcept override { return static_cast<int>(drift_.size()); }
    [[nodiscard]] int history_length() const noexcept override { return 0; }
    [[nodiscard]] std::unique_ptr<models::HorizonPredictor> bind(
        std::span<const plant::Record>, std::span<const ExogenousState> forecast) const override {
        return std::make_unique<Predictor>(*this, static_cast<int>(forecast.size()));
    }

private:
    class Predictor final : public models::HorizonPredictor {
    public:
        Predictor(const LinearModel& m, int horizon) : m_(m), horizon_(horizon) {}
        [[nodiscard]] int horizon() const noexcept override { return horizon_; }
        [[nodiscard]] int zones() const noexcept override { return m_.zones(); }
        void predict(std::span<const int> codes, std::span<double> dtheta) const override {
            const auto nz = m_.drift_.size();
            for (std::size_t i = 0; i < codes.size(); ++i) {
                const auto k = i / nz, z = i % nz;
                const double extra = k < m_.per_step_.size() ? m_.per_step_[k] : 0.0;
                dtheta[i] = m_.drift_[z] + extra - m_.gain_[z] * codes[i];
            }
        }

    private:
        const LinearModel& m_;
        int horizon_;
    };

    std::vector<double> drift_, gain_, per_step_;
};

inline plant::RecordSet default_dataset(double months, std::uint64_t weather_seed = 11, std::uint64_t policy_seed = 7) {
    const SimClock clock{parse_iso8601("2021-06-01T00:00:00Z"), 300};
    const int days = static_cast<int>(months * plant::kDaysPerMonth) + 1;
    const auto weather = plant::synthesize_weather(weather_seed, days, clock);
    plant::ExcitationPolicy policy;
    policy.seed = policy_seed;
    return plant::generate_dataset(plant::RcNetwork::two_zone_default(), weather, policy, months);
}

} // namespace rtumpc::testing
