#include "rtumpc/models/features.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "rtumpc/error.hpp"

namespace rtumpc::models {

void write_input(const ExogenousState& s, std::span<const ControlVector> controls, std::span<double> out) {
    const int zones = static_cast<int>(controls.size());
    require(static_cast<int>(out.size()) == input_width(zones), ErrorCode::ShapeMismatch, "input buffer width");
    const auto exog = s.to_array();
    std::copy(exog.begin(), exog.end(), out.begin());
    const std::size_t half = static_cast<std::size_t>(kComponentsPerRtu * zones);
    for (std::size_t z = 0; z < controls.size(); ++z) {
        const auto bits = controls[z].bits();
        for (std::size_t j = 0; j < kComponentsPerRtu; ++j) {
            out[kExogenousFeatures + z * kComponentsPerRtu + j] = bits[j];
            out[kExogenousFeatures + half + z * kComponentsPerRtu + j] = -static_cast<double>(bits[j]);
        }
    }
}

ScalerParams ScalerParams::fit(const Eigen::MatrixXd& samples) {
    require(samples.cols() > 0, ErrorCode::InvalidArgument, "cannot fit a scaler on zero samples");
    ScalerParams p;
    p.min.resize(static_cast<std::size_t>(samples.rows()));
    p.max.resize(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        p.min[static_cast<std::size_t>(i)] = samples.row(i).minCoeff();
        p.max[static_cast<std::size_t>(i)] = samples.row(i).maxCoeff();
    }
    p.validate();
    return p;
}

void ScalerParams::validate() const {
    require(min.size() == max.size(), ErrorCode::ShapeMismatch, "scaler min/max length differ");
    for (std::size_t i = 0; i < min.size(); ++i) {
        require(max[i] > min[i], ErrorCode::DegenerateFeature, "feature " + std::to_string(i) + " is constant");
    }
}

Eigen::MatrixXd ScalerParams::scale(const Eigen::MatrixXd& samples) const {
    require(static_cast<std::size_t>(samples.rows()) == size(), ErrorCode::ShapeMismatch, "scaler width");
    Eigen::MatrixXd out(samples.rows(), samples.cols());
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.row(i) = (samples.row(i).array() - min[k]) / (max[k] - min[k]);
    }
    return out;
}

Eigen::MatrixXd ScalerParams::unscale(const Eigen::MatrixXd& samples) const {
    require(static_cast<std::size_t>(samples.rows()) == size(), ErrorCode::ShapeMismatch, "scaler width");
    Eigen::MatrixXd out(samples.rows(), samples.cols());
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.row(i) = samples.row(i).array() * (max[k] - min[k]) + min[k];
    }
    return out;
}

FeatureMatrix feature_matrix(const plant::RecordSet& set) {
    const int width = input_width(set.zones);
    const auto n = static_cast<Eigen::Index>(set.records.size());
    FeatureMatrix fm{Eigen::MatrixXd(width, n), Eigen::MatrixXd(set.zones, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& r = set.records[static_cast<std::size_t>(k)];
        write_input(r.exog, r.controls, std::span<double>(fm.inputs.col(k).data(), static_cast<std::size_t>(width)));
        for (int z = 0; z < set.zones; ++z) fm.targets(z, k) = r.dtheta[static_cast<std::size_t>(z)];
    }
    return fm;
}

WindowSplit make_windows(std::size_t records, int window, int horizon, std::uint64_t seed, int stride) {
    require(window >= 1 && horizon >= 1 && stride >= 1, ErrorCode::InvalidArgument, "window, horizon and stride >= 1");
    const std::size_t length = static_cast<std::size_t>(window + horizon);
    require(records >= length, ErrorCode::InsufficientHistory, "too few records for one window");
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + length <= records; s += static_cast<std::size_t>(stride)) starts.push_back(s);
    std::mt19937_64 rng(seed);
    std::shuffle(starts.begin(), starts.end(), rng);
    const std::size_t n_train = starts.size() * 6 / 10;
    const std::size_t n_val = starts.size() * 2 / 10;
    WindowSplit split;
    split.window = window;
    split.horizon = horizon;
    split.train.assign(starts.begin(), starts.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(starts.begin() + static_cast<std::ptrdiff_t>(n_train),
                            starts.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(starts.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), starts.end());
    return split;
}

std::vector<std::size_t> covered_records(std::span<const std::size_t> starts, int length) {
    std::vector<std::size_t> out;
    out.reserve(starts.size() * static_cast<std::size_t>(length));
    for (auto s : starts)
        for (int i = 0; i < length; ++i) out.push_back(s + static_cast<std::size_t>(i));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace rtumpc::models
