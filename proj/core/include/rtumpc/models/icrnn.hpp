#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "rtumpc/models/features.hpp"
#include "rtumpc/models/thermal_model.hpp"

namespace rtumpc::models {

/// Weights of an input convex recurrent network
///
///   h_t = relu(U_h x_t + W_h h_{t-1} + P_2 x_{t-1} + b_h)
///   y_t =      W_y h_t + P_1 h_{t-1} + P_3 x_t     + b_y
///
/// With U_h, W_h, P_2, W_y, P_1, P_3 elementwise nonnegative every output is
/// convex and nondecreasing in every input coordinate. The recurrence starts
/// from h = 0 and x = 0 before the first step of a sequence.
struct IcrnnParams {
    Eigen::MatrixXd U_h, W_h, P_2;  // n_h x n_in, n_h x n_h, n_h x n_in
    Eigen::MatrixXd W_y, P_1, P_3;  // n_out x n_h, n_out x n_h, n_out x n_in
    Eigen::VectorXd b_h, b_y;

    static IcrnnParams zeros(int inputs, int hidden, int outputs);
    /// Nonnegative uniform weights scaled by fan-in, small negative hidden biases.
    static IcrnnParams random(int inputs, int hidden, int outputs, std::uint64_t seed);

    [[nodiscard]] int inputs() const noexcept { return static_cast<int>(U_h.cols()); }
    [[nodiscard]] int hidden() const noexcept { return static_cast<int>(U_h.rows()); }
    [[nodiscard]] int outputs() const noexcept { return static_cast<int>(W_y.rows()); }
    [[nodiscard]] bool is_nonnegative() const;
    [[nodiscard]] bool all_finite() const;
    [[nodiscard]] Eigen::Index parameter_count() const;
    void check_shapes() const;

    // Flat access in a fixed order (U_h, W_h, P_2, W_y, P_1, P_3, b_h, b_y),
    // used by optimizers and gradient checks.
    [[nodiscard]] Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);
};

/// Clamps the constrained matrices at zero; biases untouched. Idempotent.
IcrnnParams project_nonneg(IcrnnParams params);
void project_nonneg_inplace(IcrnnParams& params);

/// Runs the recurrence over inputs (n_in x L, one column per step) and
/// returns the outputs (n_out x L). Throws Error(ShapeMismatch).
Eigen::MatrixXd icrnn_forward(const IcrnnParams& params, const Eigen::MatrixXd& inputs);

/// ICRNN plus the scaling it was trained with. Inputs and targets are
/// min-max scaled; both maps are increasing so convexity carries over.
class IcrnnModel final : public ThermalModel {
public:
    IcrnnModel(IcrnnParams params, ScalerParams input_scaler, ScalerParams target_scaler, int zones, int window,
               int horizon);

    [[nodiscard]] std::string kind() const override { return "icrnn"; }
    [[nodiscard]] int zones() const noexcept override { return zones_; }
    [[nodiscard]] int history_length() const noexcept override { return window_; }
    [[nodiscard]] int window() const noexcept { return window_; }
    [[nodiscard]] int horizon() const noexcept { return horizon_; }
    [[nodiscard]] const IcrnnParams& params() const noexcept { return params_; }
    [[nodiscard]] const ScalerParams& input_scaler() const noexcept { return input_scaler_; }
    [[nodiscard]] const ScalerParams& target_scaler() const noexcept { return target_scaler_; }

    [[nodiscard]] std::unique_ptr<HorizonPredictor> bind(std::span<const plant::Record> history,
                                                         std::span<const ExogenousState> forecast) const override;

    /// Unscaled dtheta for raw inputs (n_in x L); returns zones x L.
    [[nodiscard]] Eigen::MatrixXd predict_raw(const Eigen::MatrixXd& raw_inputs) const;

private:
    IcrnnParams params_;
    ScalerParams input_scaler_;
    ScalerParams target_scaler_;
    int zones_;
    int window_;
    int horizon_;
};

/// Versioned JSON weights file: shapes plus row-major values.
void save_icrnn(std::ostream& out, const IcrnnModel& model);
IcrnnModel load_icrnn(std::istream& in);

} // namespace rtumpc::models
