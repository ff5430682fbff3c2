#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rtumpc/models/features.hpp"
#include "rtumpc/models/icrnn.hpp"
#include "rtumpc/plant/dataset.hpp"

namespace rtumpc::models {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 60;
    int patience = 6;
    int hidden = 60;
    int window = 36;
    int horizon = 24;
    int stride = 1;  // spacing of window start indices
    std::uint64_t seed = 1;

    void validate() const;
};

/// Scaled sequences plus the windows carved out of them. Column k of inputs
/// and targets belongs to record k.
struct SequenceData {
    Eigen::MatrixXd inputs;   // n_in x N, scaled
    Eigen::MatrixXd targets;  // n_out x N, scaled
    int window = 36;
    int horizon = 24;
};

/// Batch loss (MSE over the last `horizon` outputs of each window) and its
/// gradient with respect to every parameter, by backpropagation through time.
struct LossGradient {
    double loss = 0.0;
    IcrnnParams gradient;
};

LossGradient loss_and_gradient(const IcrnnParams& params, const SequenceData& data,
                               std::span<const std::size_t> starts);
double batch_loss(const IcrnnParams& params, const SequenceData& data, std::span<const std::size_t> starts);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    IcrnnParams params;  // best validation loss, projected
    std::vector<EpochLog> history;
    int best_epoch = 0;
    double best_validation_loss = 0.0;
};

/// Minibatch Adam on the window loss with project_nonneg after every update,
/// early stopping on validation loss. Throws Error(Diverged) on a non-finite
/// loss and Error(InvalidArgument) on empty splits.
TrainResult train_icrnn(const SequenceData& data, const WindowSplit& split, const TrainConfig& config,
                        const IcrnnParams* init = nullptr,
                        const std::function<void(const EpochLog&)>& on_epoch = {});

/// End-to-end fit on a record set: split, scale on the training records, train.
struct FittedIcrnn {
    IcrnnModel model;
    TrainResult result;
    WindowSplit split;
};

FittedIcrnn fit_icrnn(const plant::RecordSet& records, const TrainConfig& config,
                      const std::function<void(const EpochLog&)>& on_epoch = {});

struct GridPoint {
    double learning_rate = 0.0;
    int hidden = 0;
    double validation_loss = 0.0;
};

/// Plain grid over learning rate and hidden width; the winner is refit-free
/// (its trained model is kept) and ties resolve to the earlier point.
struct GridResult {
    std::vector<GridPoint> points;
    std::size_t best = 0;
    std::optional<FittedIcrnn> fit;  // winner
};

GridResult grid_search(const plant::RecordSet& records, const TrainConfig& base,
                       std::span<const double> learning_rates, std::span<const int> hidden_sizes);

} // namespace rtumpc::models
