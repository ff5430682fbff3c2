#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "rtumpc/plant/dataset.hpp"
#include "rtumpc/types.hpp"

namespace rtumpc::models {

/// Width of one model input x = [s; u; -u] for n_zones rooftop units.
constexpr int input_width(int zones) noexcept { return kExogenousFeatures + 2 * kComponentsPerRtu * zones; }

/// Writes x = [s; u; -u] into out (length input_width(zones)).
void write_input(const ExogenousState& s, std::span<const ControlVector> controls, std::span<double> out);

/// Per-feature min-max scaling.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;

    /// Throws Error(DegenerateFeature) when a column is constant.
    static ScalerParams fit(const Eigen::MatrixXd& columns_as_samples);
    void validate() const;
    [[nodiscard]] std::size_t size() const noexcept { return min.size(); }
    [[nodiscard]] double scale(std::size_t i, double v) const { return (v - min[i]) / (max[i] - min[i]); }
    [[nodiscard]] double unscale(std::size_t i, double v) const { return v * (max[i] - min[i]) + min[i]; }
    [[nodiscard]] Eigen::MatrixXd scale(const Eigen::MatrixXd& samples) const;
    [[nodiscard]] Eigen::MatrixXd unscale(const Eigen::MatrixXd& samples) const;
};

/// Raw inputs (input_width x N) and targets dtheta (zones x N) of a record set.
struct FeatureMatrix {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
};

FeatureMatrix feature_matrix(const plant::RecordSet& set);

/// Sliding windows over a record set: `window` past steps followed by
/// `horizon` prediction steps. Start indices are shuffled per seed and split
/// 60/20/20 into disjoint train/validation/test sets.
struct WindowSplit {
    int window = 36;
    int horizon = 24;
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    [[nodiscard]] int length() const noexcept { return window + horizon; }
};

WindowSplit make_windows(std::size_t records, int window, int horizon, std::uint64_t seed, int stride = 1);

/// Record indices covered by the given windows, sorted and unique.
std::vector<std::size_t> covered_records(std::span<const std::size_t> starts, int length);

} // namespace rtumpc::models
