#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

#include "rtumpc/models/thermal_model.hpp"
#include "rtumpc/plant/dataset.hpp"

namespace rtumpc::models {

/// Multi-output first-order ARX on dtheta. Regressors for step t:
///   [1, OAT_t, 4 clock features at t, GHI_{t-3..t}, dtheta_{t-4..t-1} of
///    every zone, u_t bits of every zone]
/// The current controls are included so the model can drive an MPC.
struct ArxParams {
    static constexpr int kGhiLags = 4;     // t-3 .. t
    static constexpr int kDthetaLags = 4;  // t-4 .. t-1

    int zones = 0;
    Eigen::MatrixXd coefficients;  // zones x feature_count(zones)

    [[nodiscard]] static int feature_count(int zones) noexcept {
        return 2 + 4 + kGhiLags + kDthetaLags * zones + kComponentsPerRtu * zones;
    }
    void check() const;
};

/// Regressor row for record t of `records` (needs t >= kDthetaLags).
void arx_features(std::span<const plant::Record> records, std::size_t t, std::span<double> out);

/// Least squares on the given record indices (each >= kDthetaLags). Throws
/// Error(SingularDesign) when the design matrix is rank-deficient.
ArxParams fit_arx(const plant::RecordSet& records, std::span<const std::size_t> indices);

/// Recursive multi-step prediction: predicted dtheta feeds back into the lags.
/// history: at least kDthetaLags past records; forecast/controls: one per step.
std::vector<Eigen::VectorXd> predict_arx(const ArxParams& params, std::span<const plant::Record> history,
                                         std::span<const ExogenousState> forecast,
                                         std::span<const ZoneControls> controls);

class ArxModel final : public ThermalModel {
public:
    explicit ArxModel(ArxParams params);

    [[nodiscard]] std::string kind() const override { return "arx"; }
    [[nodiscard]] int zones() const noexcept override { return params_.zones; }
    [[nodiscard]] int history_length() const noexcept override { return ArxParams::kDthetaLags; }
    [[nodiscard]] const ArxParams& params() const noexcept { return params_; }
    [[nodiscard]] std::unique_ptr<HorizonPredictor> bind(std::span<const plant::Record> history,
                                                         std::span<const ExogenousState> forecast) const override;

private:
    ArxParams params_;
};

void save_arx(std::ostream& out, const ArxModel& model);
ArxModel load_arx(std::istream& in);

} // namespace rtumpc::models
