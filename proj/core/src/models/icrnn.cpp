#include "rtumpc/models/icrnn.hpp"

#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <random>

#include "../json_matrix.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::models {

IcrnnParams IcrnnParams::zeros(int inputs, int hidden, int outputs) {
    require(inputs > 0 && hidden > 0 && outputs > 0, ErrorCode::InvalidArgument, "ICRNN dimensions must be positive");
    IcrnnParams p;
    p.U_h = Eigen::MatrixXd::Zero(hidden, inputs);
    p.W_h = Eigen::MatrixXd::Zero(hidden, hidden);
    p.P_2 = Eigen::MatrixXd::Zero(hidden, inputs);
    p.W_y = Eigen::MatrixXd::Zero(outputs, hidden);
    p.P_1 = Eigen::MatrixXd::Zero(outputs, hidden);
    p.P_3 = Eigen::MatrixXd::Zero(outputs, inputs);
    p.b_h = Eigen::VectorXd::Zero(hidden);
    p.b_y = Eigen::VectorXd::Zero(outputs);
    return p;
}

IcrnnParams IcrnnParams::random(int inputs, int hidden, int outputs, std::uint64_t seed) {
    IcrnnParams p = zeros(inputs, hidden, outputs);
    std::mt19937_64 rng(seed);
    auto fill = [&](Eigen::MatrixXd& m, double scale) {
        std::uniform_real_distribution<double> u(0.0, scale);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    };
    const double in_scale = 1.0 / inputs;
    fill(p.U_h, in_scale);
    fill(p.P_2, in_scale);
    fill(p.W_h, 0.5 / hidden);
    fill(p.W_y, 1.0 / hidden);
    fill(p.P_1, 1.0 / hidden);
    fill(p.P_3, in_scale);
    std::uniform_real_distribution<double> bias(-0.5, 0.1);
    for (Eigen::Index i = 0; i < p.b_h.size(); ++i) p.b_h[i] = bias(rng);
    p.b_y.setZero();
    return p;
}

bool IcrnnParams::is_nonnegative() const {
    return U_h.minCoeff() >= 0 && W_h.minCoeff() >= 0 && P_2.minCoeff() >= 0 && W_y.minCoeff() >= 0 &&
           P_1.minCoeff() >= 0 && P_3.minCoeff() >= 0;
}

bool IcrnnParams::all_finite() const { return flatten().allFinite(); }

Eigen::Index IcrnnParams::parameter_count() const {
    return U_h.size() + W_h.size() + P_2.size() + W_y.size() + P_1.size() + P_3.size() + b_h.size() + b_y.size();
}

void IcrnnParams::check_shapes() const {
    const auto n_in = U_h.cols(), n_h = U_h.rows(), n_out = W_y.rows();
    const bool ok = W_h.rows() == n_h && W_h.cols() == n_h && P_2.rows() == n_h && P_2.cols() == n_in &&
                    W_y.cols() == n_h && P_1.rows() == n_out && P_1.cols() == n_h && P_3.rows() == n_out &&
                    P_3.cols() == n_in && b_h.size() == n_h && b_y.size() == n_out && n_in > 0 && n_h > 0 &&
                    n_out > 0;
    require(ok, ErrorCode::ShapeMismatch, "ICRNN parameter shapes are inconsistent");
}

Eigen::VectorXd IcrnnParams::flatten() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index o = 0;
    for (const Eigen::MatrixXd* m : {&U_h, &W_h, &P_2, &W_y, &P_1, &P_3}) {
        flat.segment(o, m->size()) = m->reshaped();
        o += m->size();
    }
    flat.segment(o, b_h.size()) = b_h;
    o += b_h.size();
    flat.segment(o, b_y.size()) = b_y;
    return flat;
}

void IcrnnParams::assign(const Eigen::VectorXd& flat) {
    require(flat.size() == parameter_count(), ErrorCode::ShapeMismatch, "flat parameter vector length");
    Eigen::Index o = 0;
    for (Eigen::MatrixXd* m : {&U_h, &W_h, &P_2, &W_y, &P_1, &P_3}) {
        m->reshaped() = flat.segment(o, m->size());
        o += m->size();
    }
    b_h = flat.segment(o, b_h.size());
    o += b_h.size();
    b_y = flat.segment(o, b_y.size());
}

void project_nonneg_inplace(IcrnnParams& p) {
    for (Eigen::MatrixXd* m : {&p.U_h, &p.W_h, &p.P_2, &p.W_y, &p.P_1, &p.P_3}) *m = m->cwiseMax(0.0);
}

IcrnnParams project_nonneg(IcrnnParams params) {
    project_nonneg_inplace(params);
    return params;
}

Eigen::MatrixXd icrnn_forward(const IcrnnParams& p, const Eigen::MatrixXd& inputs) {
    p.check_shapes();
    require(inputs.rows() == p.inputs(), ErrorCode::ShapeMismatch,
            "ICRNN expects " + std::to_string(p.inputs()) + " input rows, got " + std::to_string(inputs.rows()));
    const Eigen::Index steps = inputs.cols();
    Eigen::MatrixXd out(p.outputs(), steps);
    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(p.hidden());
    Eigen::VectorXd x_prev = Eigen::VectorXd::Zero(p.inputs());
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto x = inputs.col(t);
        const Eigen::VectorXd h = (p.U_h * x + p.W_h * h_prev + p.P_2 * x_prev + p.b_h).cwiseMax(0.0);
        out.col(t) = p.W_y * h + p.P_1 * h_prev + p.P_3 * x + p.b_y;
        h_prev = h;
        x_prev = x;
    }
    return out;
}

namespace {

/// Horizon rollout with the past window folded into a hidden state and the
/// exogenous contributions precomputed; control contributions come from
/// per-(zone, code) lookup tables.
class IcrnnPredictor final : public HorizonPredictor {
public:
    IcrnnPredictor(const IcrnnModel& model, std::span<const plant::Record> history,
                   std::span<const ExogenousState> forecast)
        : params_(&model.params()), zones_(model.zones()), horizon_(static_cast<int>(forecast.size())) {
        const auto& p = model.params();
        const auto& in_scaler = model.input_scaler();
        const int width = input_width(zones_);
        const int window = model.window();

        Eigen::MatrixXd past(width, window);
        const std::size_t first = history.size() - static_cast<std::size_t>(window);
        for (int k = 0; k < window; ++k) {
            const auto& r = history[first + static_cast<std::size_t>(k)];
            require(static_cast<int>(r.controls.size()) == zones_, ErrorCode::ShapeMismatch, "history zone count");
            write_input(r.exog, r.controls, std::span<double>(past.col(k).data(), static_cast<std::size_t>(width)));
        }
        past = in_scaler.scale(past);

        Eigen::VectorXd h = Eigen::VectorXd::Zero(p.hidden());
        Eigen::VectorXd x_prev = Eigen::VectorXd::Zero(width);
        for (int k = 0; k < window; ++k) {
            h = (p.U_h * past.col(k) + p.W_h * h + p.P_2 * x_prev + p.b_h).cwiseMax(0.0);
            x_prev = past.col(k);
        }
        h0_ = h;

        // Exogenous part of each future input, scaled.
        Eigen::MatrixXd s(kExogenousFeatures, horizon_);
        for (int k = 0; k < horizon_; ++k) {
            const auto a = forecast[static_cast<std::size_t>(k)].to_array();
            for (int i = 0; i < kExogenousFeatures; ++i) s(i, k) = in_scaler.scale(static_cast<std::size_t>(i), a[i]);
        }
        const auto Us = p.U_h.leftCols(kExogenousFeatures);
        const auto P2s = p.P_2.leftCols(kExogenousFeatures);
        const auto P3s = p.P_3.leftCols(kExogenousFeatures);
        base_h_ = Us * s;
        base_h_.colwise() += p.b_h;
        base_h_.col(0) += p.P_2 * x_prev;
        if (horizon_ > 1) base_h_.rightCols(horizon_ - 1) += P2s * s.leftCols(horizon_ - 1);
        base_y_ = P3s * s;
        base_y_.colwise() += p.b_y;

        // Control lookup tables, column zone * 4 + code.
        const int half = kComponentsPerRtu * zones_;
        table_u_.resize(p.hidden(), zones_ * kLadderSize);
        table_p2_.resize(p.hidden(), zones_ * kLadderSize);
        table_p3_.resize(p.outputs(), zones_ * kLadderSize);
        for (int z = 0; z < zones_; ++z) {
            for (int c = 0; c < kLadderSize; ++c) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(width);
                const auto bits = ControlVector::from_code(c).bits();
                for (int j = 0; j < kComponentsPerRtu; ++j) {
                    const int iu = kExogenousFeatures + z * kComponentsPerRtu + j;
                    const int in = iu + half;
                    v[iu] = in_scaler.scale(static_cast<std::size_t>(iu), bits[static_cast<std::size_t>(j)]);
                    v[in] = in_scaler.scale(static_cast<std::size_t>(in), -bits[static_cast<std::size_t>(j)]);
                }
                // Exogenous entries of v are zero, so full products only pick control columns.
                table_u_.col(z * kLadderSize + c) = p.U_h * v;
                table_p2_.col(z * kLadderSize + c) = p.P_2 * v;
                table_p3_.col(z * kLadderSize + c) = p.P_3 * v;
            }
        }
        const auto& t_scaler = model.target_scaler();
        for (int z = 0; z < zones_; ++z) {
            target_span_.push_back(t_scaler.max[static_cast<std::size_t>(z)] - t_scaler.min[static_cast<std::size_t>(z)]);
            target_min_.push_back(t_scaler.min[static_cast<std::size_t>(z)]);
        }
    }

    [[nodiscard]] int horizon() const noexcept override { return horizon_; }
    [[nodiscard]] int zones() const noexcept override { return zones_; }

    void predict(std::span<const int> codes, std::span<double> dtheta) const override {
        const auto n = static_cast<std::size_t>(horizon_ * zones_);
        require(codes.size() == n && dtheta.size() == n, ErrorCode::ShapeMismatch, "horizon plan size");
        const auto& p = *params_;
        Eigen::VectorXd h = h0_;
        Eigen::VectorXd a(p.hidden());
        Eigen::VectorXd h_new(p.hidden());
        Eigen::VectorXd y(p.outputs());
        for (int k = 0; k < horizon_; ++k) {
            a.noalias() = base_h_.col(k);
            y.noalias() = base_y_.col(k);
            for (int z = 0; z < zones_; ++z) {
                const int c = codes[static_cast<std::size_t>(k * zones_ + z)];
                a += table_u_.col(z * kLadderSize + c);
                y += table_p3_.col(z * kLadderSize + c);
                if (k > 0) a += table_p2_.col(z * kLadderSize + codes[static_cast<std::size_t>((k - 1) * zones_ + z)]);
            }
            a.noalias() += p.W_h * h;
            h_new = a.cwiseMax(0.0);
            y.noalias() += p.W_y * h_new;
            y.noalias() += p.P_1 * h;
            for (int z = 0; z < zones_; ++z) {
                dtheta[static_cast<std::size_t>(k * zones_ + z)] =
                    y[z] * target_span_[static_cast<std::size_t>(z)] + target_min_[static_cast<std::size_t>(z)];
            }
            h.swap(h_new);
        }
    }

private:
    const IcrnnParams* params_;
    int zones_;
    int horizon_;
    Eigen::VectorXd h0_;
    Eigen::MatrixXd base_h_, base_y_;
    Eigen::MatrixXd table_u_, table_p2_, table_p3_;
    std::vector<double> target_span_, target_min_;
};

} // namespace

IcrnnModel::IcrnnModel(IcrnnParams params, ScalerParams input_scaler, ScalerParams target_scaler, int zones,
                       int window, int horizon)
    : params_(std::move(params)), input_scaler_(std::move(input_scaler)), target_scaler_(std::move(target_scaler)),
      zones_(zones), window_(window), horizon_(horizon) {
    params_.check_shapes();
    input_scaler_.validate();
    target_scaler_.validate();
    require(params_.inputs() == input_width(zones_) && params_.outputs() == zones_, ErrorCode::ShapeMismatch,
            "ICRNN shape does not match the zone count");
    require(static_cast<int>(input_scaler_.size()) == params_.inputs() &&
                static_cast<int>(target_scaler_.size()) == zones_,
            ErrorCode::ShapeMismatch, "scaler width does not match the network");
    require(window_ >= 1 && horizon_ >= 1, ErrorCode::InvalidArgument, "window and horizon must be >= 1");
}

std::unique_ptr<HorizonPredictor> IcrnnModel::bind(std::span<const plant::Record> history,
                                                   std::span<const ExogenousState> forecast) const {
    require(history.size() >= static_cast<std::size_t>(window_), ErrorCode::InsufficientHistory,
            "ICRNN needs " + std::to_string(window_) + " past records, got " + std::to_string(history.size()));
    require(!forecast.empty(), ErrorCode::InvalidArgument, "empty forecast");
    return std::make_unique<IcrnnPredictor>(*this, history, forecast);
}

Eigen::MatrixXd IcrnnModel::predict_raw(const Eigen::MatrixXd& raw_inputs) const {
    return target_scaler_.unscale(icrnn_forward(params_, input_scaler_.scale(raw_inputs)));
}

void save_icrnn(std::ostream& out, const IcrnnModel& model) {
    using detail::matrix_to_json;
    const auto& p = model.params();
    nlohmann::json j;
    j["format"] = "rtumpc-icrnn";
    j["version"] = 1;
    j["zones"] = model.zones();
    j["window"] = model.window();
    j["horizon"] = model.horizon();
    j["hidden"] = p.hidden();
    j["scaler"] = {{"input_min", model.input_scaler().min},
                   {"input_max", model.input_scaler().max},
                   {"target_min", model.target_scaler().min},
                   {"target_max", model.target_scaler().max}};
    j["params"] = {{"U_h", matrix_to_json(p.U_h)}, {"W_h", matrix_to_json(p.W_h)}, {"P_2", matrix_to_json(p.P_2)},
                   {"W_y", matrix_to_json(p.W_y)}, {"P_1", matrix_to_json(p.P_1)}, {"P_3", matrix_to_json(p.P_3)},
                   {"b_h", detail::vector_to_json(p.b_h)}, {"b_y", detail::vector_to_json(p.b_y)}};
    out << j.dump() << '\n';
}

IcrnnModel load_icrnn(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("ICRNN weights file: ") + e.what());
    }
    require(j.value("format", "") == "rtumpc-icrnn", ErrorCode::Parse, "not an ICRNN weights file");
    require(j.value("version", 0) == 1, ErrorCode::Parse, "unsupported ICRNN weights version");
    try {
        const auto& jp = j.at("params");
        IcrnnParams p;
        p.U_h = detail::matrix_from_json(jp.at("U_h"), "U_h");
        p.W_h = detail::matrix_from_json(jp.at("W_h"), "W_h");
        p.P_2 = detail::matrix_from_json(jp.at("P_2"), "P_2");
        p.W_y = detail::matrix_from_json(jp.at("W_y"), "W_y");
        p.P_1 = detail::matrix_from_json(jp.at("P_1"), "P_1");
        p.P_3 = detail::matrix_from_json(jp.at("P_3"), "P_3");
        p.b_h = detail::vector_from_json(jp.at("b_h"));
        p.b_y = detail::vector_from_json(jp.at("b_y"));
        const auto& js = j.at("scaler");
        ScalerParams in_s{js.at("input_min").get<std::vector<double>>(), js.at("input_max").get<std::vector<double>>()};
        ScalerParams out_s{js.at("target_min").get<std::vector<double>>(),
                           js.at("target_max").get<std::vector<double>>()};
        return IcrnnModel(std::move(p), std::move(in_s), std::move(out_s), j.at("zones").get<int>(),
                          j.at("window").get<int>(), j.at("horizon").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("ICRNN weights file: ") + e.what());
    }
}

} // namespace rtumpc::models
