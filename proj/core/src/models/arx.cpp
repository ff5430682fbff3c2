#include "rtumpc/models/arx.hpp"

#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "../json_matrix.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::models {

namespace {

constexpr int kGhiOffset = 6;
constexpr int kLagOffset = kGhiOffset + ArxParams::kGhiLags;

int control_offset(int zones) { return kLagOffset + ArxParams::kDthetaLags * zones; }

} // namespace

void ArxParams::check() const {
    require(zones >= 1, ErrorCode::InvalidArgument, "ARX needs at least one zone");
    require(coefficients.rows() == zones && coefficients.cols() == feature_count(zones), ErrorCode::ShapeMismatch,
            "ARX coefficient shape");
}

void arx_features(std::span<const plant::Record> records, std::size_t t, std::span<double> out) {
    require(t >= static_cast<std::size_t>(ArxParams::kDthetaLags) && t < records.size(), ErrorCode::InsufficientHistory,
            "ARX features need four earlier records");
    const int zones = static_cast<int>(records[t].controls.size());
    require(static_cast<int>(out.size()) == ArxParams::feature_count(zones), ErrorCode::ShapeMismatch,
            "ARX feature buffer width");
    const auto& s = records[t].exog;
    out[0] = 1.0;
    out[1] = s.oat;
    out[2] = s.tod_sin;
    out[3] = s.tod_cos;
    out[4] = s.dow_sin;
    out[5] = s.dow_cos;
    for (int l = 0; l < ArxParams::kGhiLags; ++l)
        out[static_cast<std::size_t>(kGhiOffset + l)] = records[t - static_cast<std::size_t>(ArxParams::kGhiLags - 1 - l)].exog.ghi;
    for (int l = 0; l < ArxParams::kDthetaLags; ++l) {
        const auto& r = records[t - static_cast<std::size_t>(ArxParams::kDthetaLags - l)];
        for (int z = 0; z < zones; ++z)
            out[static_cast<std::size_t>(kLagOffset + l * zones + z)] = r.dtheta[static_cast<std::size_t>(z)];
    }
    const int co = control_offset(zones);
    for (int z = 0; z < zones; ++z) {
        const auto bits = records[t].controls[static_cast<std::size_t>(z)].bits();
        for (int j = 0; j < kComponentsPerRtu; ++j)
            out[static_cast<std::size_t>(co + z * kComponentsPerRtu + j)] = bits[static_cast<std::size_t>(j)];
    }
}

ArxParams fit_arx(const plant::RecordSet& records, std::span<const std::size_t> indices) {
    const int zones = records.zones;
    const int nf = ArxParams::feature_count(zones);
    require(static_cast<int>(indices.size()) >= nf, ErrorCode::SingularDesign,
            "fewer ARX samples than regressors");
    Eigen::MatrixXd design(static_cast<Eigen::Index>(indices.size()), nf);
    Eigen::MatrixXd target(static_cast<Eigen::Index>(indices.size()), zones);
    std::vector<double> row(static_cast<std::size_t>(nf));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        arx_features(records.records, indices[i], row);
        design.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), nf);
        for (int z = 0; z < zones; ++z)
            target(static_cast<Eigen::Index>(i), z) = records.records[indices[i]].dtheta[static_cast<std::size_t>(z)];
    }
    // Column scaling keeps the rank test meaningful across feature magnitudes.
    Eigen::VectorXd norms = design.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < nf; ++c) {
        require(norms[c] > 0, ErrorCode::SingularDesign, "ARX regressor " + std::to_string(c) + " is identically zero");
        design.col(c) /= norms[c];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    require(qr.rank() == nf, ErrorCode::SingularDesign,
            "ARX design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(nf));
    Eigen::MatrixXd beta = qr.solve(target);  // nf x zones
    for (Eigen::Index c = 0; c < nf; ++c) beta.row(c) /= norms[c];
    ArxParams p;
    p.zones = zones;
    p.coefficients = beta.transpose();
    return p;
}

std::vector<Eigen::VectorXd> predict_arx(const ArxParams& params, std::span<const plant::Record> history,
                                         std::span<const ExogenousState> forecast,
                                         std::span<const ZoneControls> controls) {
    params.check();
    require(history.size() >= static_cast<std::size_t>(ArxParams::kDthetaLags), ErrorCode::InsufficientHistory,
            "ARX prediction needs four past records");
    require(forecast.size() == controls.size(), ErrorCode::ShapeMismatch, "forecast and control lengths differ");
    std::vector<plant::Record> work(history.end() - ArxParams::kDthetaLags, history.end());
    std::vector<double> row(static_cast<std::size_t>(params.coefficients.cols()));
    std::vector<Eigen::VectorXd> out;
    out.reserve(forecast.size());
    for (std::size_t k = 0; k < forecast.size(); ++k) {
        require(static_cast<int>(controls[k].size()) == params.zones, ErrorCode::ShapeMismatch, "control zone count");
        plant::Record r;
        r.exog = forecast[k];
        r.controls = controls[k];
        work.push_back(r);
        arx_features(work, work.size() - 1, row);
        Eigen::VectorXd y = params.coefficients * Eigen::Map<const Eigen::VectorXd>(row.data(), params.coefficients.cols());
        work.back().dtheta.assign(y.data(), y.data() + y.size());
        out.push_back(std::move(y));
    }
    return out;
}

namespace {

/// Recursion with the control-independent part of every step precomputed.
class ArxPredictor final : public HorizonPredictor {
public:
    ArxPredictor(const ArxParams& p, std::span<const plant::Record> history, std::span<const ExogenousState> forecast)
        : zones_(p.zones), horizon_(static_cast<int>(forecast.size())) {
        const auto& C = p.coefficients;
        const int n = zones_;
        base_ = Eigen::MatrixXd(n, horizon_);
        std::vector<double> ghi;
        for (std::size_t i = history.size() - (ArxParams::kGhiLags - 1); i < history.size(); ++i)
            ghi.push_back(history[i].exog.ghi);
        for (const auto& s : forecast) ghi.push_back(s.ghi);
        for (int k = 0; k < horizon_; ++k) {
            const auto& s = forecast[static_cast<std::size_t>(k)];
            Eigen::VectorXd b = C.col(0) + C.col(1) * s.oat + C.col(2) * s.tod_sin + C.col(3) * s.tod_cos +
                                C.col(4) * s.dow_sin + C.col(5) * s.dow_cos;
            for (int l = 0; l < ArxParams::kGhiLags; ++l) b += C.col(kGhiOffset + l) * ghi[static_cast<std::size_t>(k + l)];
            base_.col(k) = b;
        }
        lag_ = C.middleCols(kLagOffset, ArxParams::kDthetaLags * n);
        const int co = control_offset(n);
        table_ = Eigen::MatrixXd::Zero(n, n * kLadderSize);
        for (int z = 0; z < n; ++z) {
            for (int c = 0; c < kLadderSize; ++c) {
                const auto bits = ControlVector::from_code(c).bits();
                for (int j = 0; j < kComponentsPerRtu; ++j)
                    table_.col(z * kLadderSize + c) += C.col(co + z * kComponentsPerRtu + j) * bits[static_cast<std::size_t>(j)];
            }
        }
        past_.resize(static_cast<std::size_t>(ArxParams::kDthetaLags * n));
        for (int l = 0; l < ArxParams::kDthetaLags; ++l) {
            const auto& r = history[history.size() - static_cast<std::size_t>(ArxParams::kDthetaLags - l)];
            for (int z = 0; z < n; ++z) past_[static_cast<std::size_t>(l * n + z)] = r.dtheta[static_cast<std::size_t>(z)];
        }
    }

    [[nodiscard]] int horizon() const noexcept override { return horizon_; }
    [[nodiscard]] int zones() const noexcept override { return zones_; }

    void predict(std::span<const int> codes, std::span<double> dtheta) const override {
        const auto n = static_cast<std::size_t>(zones_);
        require(codes.size() == n * static_cast<std::size_t>(horizon_) && dtheta.size() == codes.size(),
                ErrorCode::ShapeMismatch, "horizon plan size");
        // lags holds the last kDthetaLags dtheta vectors, oldest first.
        std::vector<double> lags(past_);
        for (int k = 0; k < horizon_; ++k) {
            Eigen::VectorXd y = base_.col(k);
            y.noalias() += lag_ * Eigen::Map<const Eigen::VectorXd>(lags.data(), static_cast<Eigen::Index>(lags.size()));
            for (std::size_t z = 0; z < n; ++z)
                y += table_.col(static_cast<Eigen::Index>(z * kLadderSize) + codes[static_cast<std::size_t>(k) * n + z]);
            std::copy(lags.begin() + static_cast<std::ptrdiff_t>(n), lags.end(), lags.begin());
            for (std::size_t z = 0; z < n; ++z) {
                lags[lags.size() - n + z] = y[static_cast<Eigen::Index>(z)];
                dtheta[static_cast<std::size_t>(k) * n + z] = y[static_cast<Eigen::Index>(z)];
            }
        }
    }

private:
    int zones_;
    int horizon_;
    Eigen::MatrixXd base_, lag_, table_;
    std::vector<double> past_;
};

} // namespace

ArxModel::ArxModel(ArxParams params) : params_(std::move(params)) { params_.check(); }

std::unique_ptr<HorizonPredictor> ArxModel::bind(std::span<const plant::Record> history,
                                                 std::span<const ExogenousState> forecast) const {
    require(history.size() >= static_cast<std::size_t>(ArxParams::kDthetaLags), ErrorCode::InsufficientHistory,
            "ARX needs four past records");
    require(!forecast.empty(), ErrorCode::InvalidArgument, "empty forecast");
    return std::make_unique<ArxPredictor>(params_, history, forecast);
}

void save_arx(std::ostream& out, const ArxModel& model) {
    nlohmann::json j;
    j["format"] = "rtumpc-arx";
    j["version"] = 1;
    j["zones"] = model.zones();
    j["coefficients"] = detail::matrix_to_json(model.params().coefficients);
    out << j.dump() << '\n';
}

ArxModel load_arx(std::istream& in) {
    try {
        nlohmann::json j;
        in >> j;
        require(j.value("format", "") == "rtumpc-arx", ErrorCode::Parse, "not an ARX weights file");
        require(j.value("version", 0) == 1, ErrorCode::Parse, "unsupported ARX weights version");
        ArxParams p;
        p.zones = j.at("zones").get<int>();
        p.coefficients = detail::matrix_from_json(j.at("coefficients"), "coefficients");
        return ArxModel(std::move(p));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("ARX weights file: ") + e.what());
    }
}

} // namespace rtumpc::models
