#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "rtumpc/models/thermal_model.hpp"
#include "rtumpc/plant/dataset.hpp"

namespace rtumpc::models {

/// Predicts a fixed dtheta per zone regardless of inputs.
class ConstantModel final : public ThermalModel {
public:
    explicit ConstantModel(std::vector<double> dtheta);
    /// Per-zone mean dtheta over the given record indices.
    static ConstantModel fit(const plant::RecordSet& records, std::span<const std::size_t> indices);

    [[nodiscard]] std::string kind() const override { return "constant"; }
    [[nodiscard]] int zones() const noexcept override { return static_cast<int>(dtheta_.size()); }
    [[nodiscard]] int history_length() const noexcept override { return 0; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return dtheta_; }
    [[nodiscard]] std::unique_ptr<HorizonPredictor> bind(std::span<const plant::Record> history,
                                                         std::span<const ExogenousState> forecast) const override;

private:
    std::vector<double> dtheta_;
};

struct RmseReport {
    std::vector<double> zone_rmse;   // over every predicted step of every window
    std::vector<double> zone_std;    // std of per-batch RMSE
    std::vector<double> step_rmse;   // all zones pooled, indexed by horizon step
    double rmse = 0.0;               // all zones and steps pooled
    double std = 0.0;                // std of pooled per-batch RMSE
    std::size_t windows = 0;
};

/// Multi-step evaluation: for each window start s, the model sees records
/// [s, s+window) and predicts dtheta of [s+window, s+window+horizon) under the
/// recorded controls. Windows are grouped into batches of `batch_size` in the
/// given order for the spread estimate.
RmseReport evaluate_rmse(const ThermalModel& model, const plant::RecordSet& records,
                         std::span<const std::size_t> starts, int window, int horizon, int batch_size = 64);

/// Reads either weights format by its "format" tag.
std::unique_ptr<ThermalModel> load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ThermalModel& model);

} // namespace rtumpc::models
