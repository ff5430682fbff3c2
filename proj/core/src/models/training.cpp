#include "rtumpc/models/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rtumpc/error.hpp"

namespace rtumpc::models {

void TrainConfig::validate() const {
    require(learning_rate > 0 && std::isfinite(learning_rate), ErrorCode::InvalidArgument, "learning rate must be > 0");
    require(batch_size >= 1, ErrorCode::InvalidArgument, "batch size must be >= 1");
    require(max_epochs >= 1, ErrorCode::InvalidArgument, "max_epochs must be >= 1");
    require(patience >= 0, ErrorCode::InvalidArgument, "patience must be >= 0");
    require(hidden >= 1 && window >= 1 && horizon >= 1 && stride >= 1, ErrorCode::InvalidArgument,
            "hidden, window, horizon and stride must be >= 1");
}

namespace {

// Gathers step t of every window in the batch into one column block.
void gather(const Eigen::MatrixXd& src, std::span<const std::size_t> starts, int t, Eigen::MatrixXd& out) {
    for (std::size_t b = 0; b < starts.size(); ++b)
        out.col(static_cast<Eigen::Index>(b)) = src.col(static_cast<Eigen::Index>(starts[b]) + t);
}

struct Forward {
    std::vector<Eigen::MatrixXd> x, a, h, y;  // per step; h[t] is post-activation
};

Forward run_forward(const IcrnnParams& p, const SequenceData& data, std::span<const std::size_t> starts) {
    const int length = data.window + data.horizon;
    const auto batch = static_cast<Eigen::Index>(starts.size());
    Forward f;
    f.x.assign(static_cast<std::size_t>(length), Eigen::MatrixXd(p.inputs(), batch));
    f.a.resize(static_cast<std::size_t>(length));
    f.h.resize(static_cast<std::size_t>(length));
    f.y.resize(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) {
        const auto k = static_cast<std::size_t>(t);
        gather(data.inputs, starts, t, f.x[k]);
        f.a[k].noalias() = p.U_h * f.x[k];
        f.a[k].colwise() += p.b_h;
        if (t > 0) {
            f.a[k].noalias() += p.W_h * f.h[k - 1];
            f.a[k].noalias() += p.P_2 * f.x[k - 1];
        }
        f.h[k] = f.a[k].cwiseMax(0.0);
        if (t >= data.window) {
            f.y[k].noalias() = p.W_y * f.h[k];
            f.y[k].noalias() += p.P_3 * f.x[k];
            f.y[k].colwise() += p.b_y;
            if (t > 0) f.y[k].noalias() += p.P_1 * f.h[k - 1];
        }
    }
    return f;
}

double loss_of(const Forward& f, const SequenceData& data, std::span<const std::size_t> starts,
               std::vector<Eigen::MatrixXd>* residuals) {
    const int length = data.window + data.horizon;
    const auto batch = static_cast<Eigen::Index>(starts.size());
    const auto outputs = data.targets.rows();
    Eigen::MatrixXd target(outputs, batch);
    double sum = 0.0;
    if (residuals) residuals->resize(static_cast<std::size_t>(length));
    for (int t = data.window; t < length; ++t) {
        gather(data.targets, starts, t, target);
        Eigen::MatrixXd r = f.y[static_cast<std::size_t>(t)] - target;
        sum += r.squaredNorm();
        if (residuals) (*residuals)[static_cast<std::size_t>(t)] = std::move(r);
    }
    return sum / (static_cast<double>(data.horizon) * static_cast<double>(outputs) * static_cast<double>(batch));
}

void check_data(const IcrnnParams& p, const SequenceData& data, std::span<const std::size_t> starts) {
    p.check_shapes();
    require(!starts.empty(), ErrorCode::InvalidArgument, "empty batch");
    require(data.inputs.rows() == p.inputs() && data.targets.rows() == p.outputs() &&
                data.inputs.cols() == data.targets.cols(),
            ErrorCode::ShapeMismatch, "sequence data does not match the network");
    const auto length = static_cast<std::size_t>(data.window + data.horizon);
    for (auto s : starts)
        require(s + length <= static_cast<std::size_t>(data.inputs.cols()), ErrorCode::InvalidArgument,
                "window runs past the end of the data");
}

} // namespace

double batch_loss(const IcrnnParams& params, const SequenceData& data, std::span<const std::size_t> starts) {
    check_data(params, data, starts);
    return loss_of(run_forward(params, data, starts), data, starts, nullptr);
}

LossGradient loss_and_gradient(const IcrnnParams& p, const SequenceData& data, std::span<const std::size_t> starts) {
    check_data(p, data, starts);
    const Forward f = run_forward(p, data, starts);
    std::vector<Eigen::MatrixXd> res;
    LossGradient out;
    out.loss = loss_of(f, data, starts, &res);
    out.gradient = IcrnnParams::zeros(p.inputs(), p.hidden(), p.outputs());
    auto& g = out.gradient;

    const int length = data.window + data.horizon;
    const auto batch = static_cast<Eigen::Index>(starts.size());
    const double scale =
        2.0 / (static_cast<double>(data.horizon) * static_cast<double>(p.outputs()) * static_cast<double>(batch));

    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(p.hidden(), batch);  // dL/dh_t carried from step t+1
    Eigen::MatrixXd dh(p.hidden(), batch), da(p.hidden(), batch), dy(p.outputs(), batch);
    for (int t = length - 1; t >= 0; --t) {
        const auto k = static_cast<std::size_t>(t);
        dh = dh_next;
        dh_next.setZero();
        if (t >= data.window) {
            dy = scale * res[k];
            dh.noalias() += p.W_y.transpose() * dy;
            g.W_y.noalias() += dy * f.h[k].transpose();
            g.P_3.noalias() += dy * f.x[k].transpose();
            g.b_y += dy.rowwise().sum();
            if (t > 0) {
                g.P_1.noalias() += dy * f.h[k - 1].transpose();
                dh_next.noalias() += p.P_1.transpose() * dy;
            }
        }
        da = dh.cwiseProduct((f.a[k].array() > 0.0).cast<double>().matrix());
        g.U_h.noalias() += da * f.x[k].transpose();
        g.b_h += da.rowwise().sum();
        if (t > 0) {
            g.W_h.noalias() += da * f.h[k - 1].transpose();
            g.P_2.noalias() += da * f.x[k - 1].transpose();
            dh_next.noalias() += p.W_h.transpose() * da;
        }
    }
    return out;
}

TrainResult train_icrnn(const SequenceData& data, const WindowSplit& split, const TrainConfig& config,
                        const IcrnnParams* init, const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    require(!split.train.empty() && !split.validation.empty(), ErrorCode::InvalidArgument,
            "training and validation splits must be nonempty");
    require(split.window == data.window && split.horizon == data.horizon, ErrorCode::InvalidArgument,
            "split and data disagree on window/horizon");

    IcrnnParams params = init ? *init
                              : IcrnnParams::random(static_cast<int>(data.inputs.rows()), config.hidden,
                                                    static_cast<int>(data.targets.rows()), config.seed);
    project_nonneg_inplace(params);

    const Eigen::Index n = params.parameter_count();
    Eigen::VectorXd theta = params.flatten();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    auto validation_loss = [&](const IcrnnParams& p) {
        // Large chunks keep memory bounded while amortizing the matrix products.
        constexpr std::size_t chunk = 1024;
        double sum = 0.0;
        for (std::size_t i = 0; i < split.validation.size(); i += chunk) {
            const auto len = std::min(chunk, split.validation.size() - i);
            sum += batch_loss(p, data, std::span(split.validation).subspan(i, len)) * static_cast<double>(len);
        }
        return sum / static_cast<double>(split.validation.size());
    };

    TrainResult result;
    result.params = params;
    result.best_validation_loss = validation_loss(params);
    require(std::isfinite(result.best_validation_loss), ErrorCode::Diverged, "initial validation loss is not finite");

    std::vector<std::size_t> order = split.train;
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    int bad_epochs = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double train_sum = 0.0;
        for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(config.batch_size)) {
            const auto len = std::min(static_cast<std::size_t>(config.batch_size), order.size() - i);
            const auto batch = std::span(order).subspan(i, len);
            const LossGradient lg = loss_and_gradient(params, data, batch);
            require(std::isfinite(lg.loss), ErrorCode::Diverged,
                    "training loss became non-finite in epoch " + std::to_string(epoch));
            train_sum += lg.loss * static_cast<double>(len);
            const Eigen::VectorXd grad = lg.gradient.flatten();
            ++step;
            m = beta1 * m + (1 - beta1) * grad;
            v = beta2 * v + (1 - beta2) * grad.cwiseProduct(grad);
            const double c1 = 1 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1 - std::pow(beta2, static_cast<double>(step));
            theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
            params.assign(theta);
            project_nonneg_inplace(params);
            theta = params.flatten();
        }
        EpochLog log{epoch, train_sum / static_cast<double>(order.size()), validation_loss(params)};
        require(std::isfinite(log.validation_loss), ErrorCode::Diverged,
                "validation loss became non-finite in epoch " + std::to_string(epoch));
        result.history.push_back(log);
        if (on_epoch) on_epoch(log);
        if (log.validation_loss < result.best_validation_loss) {
            result.best_validation_loss = log.validation_loss;
            result.best_epoch = epoch;
            result.params = params;
            bad_epochs = 0;
        } else if (++bad_epochs > config.patience) {
            break;
        }
    }
    return result;
}

FittedIcrnn fit_icrnn(const plant::RecordSet& records, const TrainConfig& config,
                      const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    WindowSplit split = make_windows(records.records.size(), config.window, config.horizon, config.seed, config.stride);
    const FeatureMatrix fm = feature_matrix(records);
    const auto train_cols = covered_records(split.train, split.length());
    Eigen::MatrixXd train_in(fm.inputs.rows(), static_cast<Eigen::Index>(train_cols.size()));
    Eigen::MatrixXd train_out(fm.targets.rows(), static_cast<Eigen::Index>(train_cols.size()));
    for (std::size_t i = 0; i < train_cols.size(); ++i) {
        train_in.col(static_cast<Eigen::Index>(i)) = fm.inputs.col(static_cast<Eigen::Index>(train_cols[i]));
        train_out.col(static_cast<Eigen::Index>(i)) = fm.targets.col(static_cast<Eigen::Index>(train_cols[i]));
    }
    ScalerParams in_s = ScalerParams::fit(train_in);
    ScalerParams out_s = ScalerParams::fit(train_out);
    SequenceData data{in_s.scale(fm.inputs), out_s.scale(fm.targets), config.window, config.horizon};
    TrainResult result = train_icrnn(data, split, config, nullptr, on_epoch);
    IcrnnModel model(result.params, std::move(in_s), std::move(out_s), records.zones, config.window, config.horizon);
    return FittedIcrnn{std::move(model), std::move(result), std::move(split)};
}

GridResult grid_search(const plant::RecordSet& records, const TrainConfig& base,
                       std::span<const double> learning_rates, std::span<const int> hidden_sizes) {
    require(!learning_rates.empty() && !hidden_sizes.empty(), ErrorCode::InvalidArgument, "empty search grid");
    GridResult grid;
    double best = std::numeric_limits<double>::infinity();
    for (double lr : learning_rates) {
        for (int nh : hidden_sizes) {
            TrainConfig cfg = base;
            cfg.learning_rate = lr;
            cfg.hidden = nh;
            FittedIcrnn fit = fit_icrnn(records, cfg);
            grid.points.push_back({lr, nh, fit.result.best_validation_loss});
            if (fit.result.best_validation_loss < best) {
                best = fit.result.best_validation_loss;
                grid.best = grid.points.size() - 1;
                grid.fit = std::move(fit);
            }
        }
    }
    return grid;
}

} // namespace rtumpc::models
