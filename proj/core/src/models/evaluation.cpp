#include "rtumpc/models/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rtumpc/error.hpp"
#include "rtumpc/models/arx.hpp"
#include "rtumpc/models/icrnn.hpp"

namespace rtumpc::models {

namespace {

class ConstantPredictor final : public HorizonPredictor {
public:
    ConstantPredictor(const std::vector<double>& v, int horizon) : values_(v), horizon_(horizon) {}
    [[nodiscard]] int horizon() const noexcept override { return horizon_; }
    [[nodiscard]] int zones() const noexcept override { return static_cast<int>(values_.size()); }
    void predict(std::span<const int> codes, std::span<double> dtheta) const override {
        const auto n = values_.size() * static_cast<std::size_t>(horizon_);
        require(codes.size() == n && dtheta.size() == n, ErrorCode::ShapeMismatch, "horizon plan size");
        for (std::size_t i = 0; i < n; ++i) dtheta[i] = values_[i % values_.size()];
    }

private:
    std::vector<double> values_;
    int horizon_;
};

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

ConstantModel::ConstantModel(std::vector<double> dtheta) : dtheta_(std::move(dtheta)) {
    require(!dtheta_.empty(), ErrorCode::InvalidArgument, "constant model needs at least one zone");
}

ConstantModel ConstantModel::fit(const plant::RecordSet& records, std::span<const std::size_t> indices) {
    require(!indices.empty(), ErrorCode::InvalidArgument, "no records to average");
    std::vector<double> mean(static_cast<std::size_t>(records.zones), 0.0);
    for (auto i : indices)
        for (std::size_t z = 0; z < mean.size(); ++z) mean[z] += records.records.at(i).dtheta[z];
    for (double& m : mean) m /= static_cast<double>(indices.size());
    return ConstantModel(std::move(mean));
}

std::unique_ptr<HorizonPredictor> ConstantModel::bind(std::span<const plant::Record>,
                                                      std::span<const ExogenousState> forecast) const {
    require(!forecast.empty(), ErrorCode::InvalidArgument, "empty forecast");
    return std::make_unique<ConstantPredictor>(dtheta_, static_cast<int>(forecast.size()));
}

RmseReport evaluate_rmse(const ThermalModel& model, const plant::RecordSet& records,
                         std::span<const std::size_t> starts, int window, int horizon, int batch_size) {
    require(!starts.empty(), ErrorCode::InvalidArgument, "no evaluation windows");
    require(window >= model.history_length() && horizon >= 1 && batch_size >= 1, ErrorCode::InvalidArgument,
            "evaluation window shorter than the model history");
    require(model.zones() == records.zones, ErrorCode::ShapeMismatch, "model and data zone counts differ");
    const auto zones = static_cast<std::size_t>(records.zones);
    const auto h = static_cast<std::size_t>(horizon);
    const auto& recs = records.records;

    std::vector<double> zone_sse(zones, 0.0), step_sse(h, 0.0);
    std::vector<double> batch_zone_sse(zones, 0.0);
    std::vector<std::vector<double>> batch_zone_rmse(zones);
    std::vector<double> batch_rmse;
    std::size_t in_batch = 0;

    std::vector<ExogenousState> forecast(h);
    std::vector<int> codes(h * zones);
    std::vector<double> pred(h * zones);
    auto flush = [&] {
        if (in_batch == 0) return;
        double pooled = 0.0;
        for (std::size_t z = 0; z < zones; ++z) {
            batch_zone_rmse[z].push_back(std::sqrt(batch_zone_sse[z] / static_cast<double>(in_batch * h)));
            pooled += batch_zone_sse[z];
            batch_zone_sse[z] = 0.0;
        }
        batch_rmse.push_back(std::sqrt(pooled / static_cast<double>(in_batch * h * zones)));
        in_batch = 0;
    };

    for (auto s : starts) {
        require(s + static_cast<std::size_t>(window) + h <= recs.size(), ErrorCode::InvalidArgument,
                "evaluation window runs past the data");
        const std::size_t first = s + static_cast<std::size_t>(window);
        for (std::size_t k = 0; k < h; ++k) {
            forecast[k] = recs[first + k].exog;
            for (std::size_t z = 0; z < zones; ++z) codes[k * zones + z] = recs[first + k].controls[z].code();
        }
        const auto predictor = model.bind(std::span(recs).subspan(s, static_cast<std::size_t>(window)), forecast);
        predictor->predict(codes, pred);
        for (std::size_t k = 0; k < h; ++k) {
            for (std::size_t z = 0; z < zones; ++z) {
                const double e = pred[k * zones + z] - recs[first + k].dtheta[z];
                zone_sse[z] += e * e;
                batch_zone_sse[z] += e * e;
                step_sse[k] += e * e;
            }
        }
        if (++in_batch == static_cast<std::size_t>(batch_size)) flush();
    }
    flush();

    RmseReport r;
    r.windows = starts.size();
    double pooled = 0.0;
    for (std::size_t z = 0; z < zones; ++z) {
        r.zone_rmse.push_back(std::sqrt(zone_sse[z] / static_cast<double>(starts.size() * h)));
        r.zone_std.push_back(stddev(batch_zone_rmse[z]));
        pooled += zone_sse[z];
    }
    for (std::size_t k = 0; k < h; ++k)
        r.step_rmse.push_back(std::sqrt(step_sse[k] / static_cast<double>(starts.size() * zones)));
    r.rmse = std::sqrt(pooled / static_cast<double>(starts.size() * h * zones));
    r.std = stddev(batch_rmse);
    return r;
}

std::unique_ptr<ThermalModel> load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open model file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::string format;
    try {
        format = nlohmann::json::parse(text).value("format", "");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, "model file " + path.string() + ": " + e.what());
    }
    std::istringstream again(text);
    if (format == "rtumpc-icrnn") return std::make_unique<IcrnnModel>(load_icrnn(again));
    if (format == "rtumpc-arx") return std::make_unique<ArxModel>(load_arx(again));
    if (format == "rtumpc-constant") {
        const auto j = nlohmann::json::parse(text);
        return std::make_unique<ConstantModel>(j.at("dtheta").get<std::vector<double>>());
    }
    throw Error(ErrorCode::Parse, "unknown model format '" + format + "' in " + path.string());
}

void save_model(const std::filesystem::path& path, const ThermalModel& model) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write model file " + path.string());
    if (const auto* m = dynamic_cast<const IcrnnModel*>(&model)) {
        save_icrnn(out, *m);
    } else if (const auto* a = dynamic_cast<const ArxModel*>(&model)) {
        save_arx(out, *a);
    } else if (const auto* c = dynamic_cast<const ConstantModel*>(&model)) {
        out << nlohmann::json{{"format", "rtumpc-constant"}, {"version", 1}, {"dtheta", c->values()}}.dump() << '\n';
    } else {
        throw Error(ErrorCode::InvalidArgument, "model kind '" + model.kind() + "' cannot be saved");
    }
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

} // namespace rtumpc::models
