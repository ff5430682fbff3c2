#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "rtumpc/error.hpp"
#include "rtumpc/models/arx.hpp"
#include "rtumpc/models/evaluation.hpp"
#include "rtumpc/models/features.hpp"
#include "rtumpc/models/icrnn.hpp"
#include "rtumpc/models/training.hpp"

using namespace rtumpc;
using namespace rtumpc::models;
using rtumpc::testing::kMonday;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = 0.0,
                              double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

IcrnnParams random_signed(int in, int hidden, int out, std::mt19937_64& rng) {
    IcrnnParams p = IcrnnParams::zeros(in, hidden, out);
    p.assign(random_matrix(p.parameter_count(), 1, rng, -0.5, 0.5).col(0));
    return p;
}

// Predicts the recorded dtheta by reading past the end of the history span,
// which points into the evaluated record set.
class PerfectModel final : public ThermalModel {
public:
    explicit PerfectModel(int zones) : zones_(zones) {}
    [[nodiscard]] std::string kind() const override { return "perfect"; }
    [[nodiscard]] int zones() const noexcept override { return zones_; }
    [[nodiscard]] int history_length() const noexcept override { return 1; }
    [[nodiscard]] std::unique_ptr<HorizonPredictor> bind(std::span<const plant::Record> history,
                                                         std::span<const ExogenousState> forecast) const override {
        return std::make_unique<P>(history.data() + history.size(), static_cast<int>(forecast.size()), zones_);
    }

private:
    struct P final : HorizonPredictor {
        P(const plant::Record* f, int h, int z) : future(f), h_(h), z_(z) {}
        [[nodiscard]] int horizon() const noexcept override { return h_; }
        [[nodiscard]] int zones() const noexcept override { return z_; }
        void predict(std::span<const int>, std::span<double> d) const override {
            for (int k = 0; k < h_; ++k)
                for (int z = 0; z < z_; ++z)
                    d[static_cast<std::size_t>(k * z_ + z)] = future[k].dtheta[static_cast<std::size_t>(z)];
        }
        const plant::Record* future;
        int h_, z_;
    };
    int zones_;
};

} // namespace

TEST_SUITE("models") {

TEST_CASE("input layout is [s; u; -u]") {
    const auto s = ExogenousState::at(kMonday, 30.0, 400.0);
    std::vector<double> x(static_cast<std::size_t>(input_width(2)));
    write_input(s, rtumpc::testing::codes({3, 1}), x);
    CHECK(input_width(2) == 18);
    CHECK(x[0] == 30.0);
    CHECK(x[1] == 400.0);
    const std::vector<double> u(x.begin() + 6, x.end());
    CHECK(u == std::vector<double>{1, 1, 1, 0, 0, 1, -1, -1, -1, 0, 0, -1});
    std::vector<double> bad(5);
    CHECK_THROWS_AS(write_input(s, rtumpc::testing::codes({3, 1}), bad), Error);
}

TEST_CASE("scaler round trip and degenerate features") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd x = random_matrix(5, 40, rng, -3, 8);
    const auto sc = ScalerParams::fit(x);
    const Eigen::MatrixXd y = sc.scale(x);
    CHECK(y.minCoeff() == doctest::Approx(0.0));
    CHECK(y.maxCoeff() == doctest::Approx(1.0));
    CHECK((sc.unscale(y) - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sc.unscale(2, sc.scale(2, 0.123)) == doctest::Approx(0.123).epsilon(1e-12));

    Eigen::MatrixXd flat = x;
    flat.row(3).setConstant(2.0);
    try {
        (void)ScalerParams::fit(flat);
        FAIL("expected DegenerateFeature");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateFeature);
    }
}

TEST_CASE("window split is disjoint and complete") {
    const auto split = make_windows(1000, 36, 24, 9);
    const std::size_t total = 1000 - 60 + 1;
    CHECK(split.train.size() + split.validation.size() + split.test.size() == total);
    CHECK(split.train.size() == total * 6 / 10);
    std::vector<std::size_t> all = split.train;
    all.insert(all.end(), split.validation.begin(), split.validation.end());
    all.insert(all.end(), split.test.begin(), split.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(total);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(all == expect);
    CHECK(make_windows(1000, 36, 24, 9).test == split.test);
    CHECK(make_windows(1000, 36, 24, 10).test != split.test);
    CHECK(make_windows(1000, 36, 24, 9, 5).train.size() == (total + 4) / 5 * 6 / 10);
    CHECK_THROWS_AS((void)make_windows(10, 36, 24, 1), Error);

    const std::vector<std::size_t> starts{5, 0};
    CHECK(covered_records(starts, 3) == std::vector<std::size_t>{0, 1, 2, 5, 6, 7});
}

TEST_CASE("zero weights give the output bias") {
    IcrnnParams p = IcrnnParams::zeros(4, 3, 2);
    p.b_y << 0.7, -1.25;
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd y = icrnn_forward(p, random_matrix(4, 9, rng));
    for (Eigen::Index t = 0; t < 9; ++t) {
        CHECK(y(0, t) == 0.7);
        CHECK(y(1, t) == -1.25);
    }
    CHECK_THROWS_AS((void)icrnn_forward(p, Eigen::MatrixXd::Zero(3, 2)), Error);
}

TEST_CASE("projection clamps constrained weights only") {
    std::mt19937_64 rng(3);
    IcrnnParams p = random_signed(5, 4, 2, rng);
    p.U_h(0, 0) = -0.3;
    const IcrnnParams q = project_nonneg(p);
    CHECK(q.U_h(0, 0) == 0.0);
    CHECK(q.is_nonnegative());
    CHECK(q.b_h == p.b_h);
    CHECK(q.b_y == p.b_y);
    CHECK(project_nonneg(q).flatten() == q.flatten());
    const IcrnnParams r = IcrnnParams::random(5, 4, 2, 7);
    CHECK(r.is_nonnegative());
    CHECK(project_nonneg(r).flatten() == r.flatten());
}

TEST_CASE("flatten and assign are inverse") {
    std::mt19937_64 rng(4);
    const IcrnnParams p = random_signed(3, 5, 2, rng);
    IcrnnParams q = IcrnnParams::zeros(3, 5, 2);
    q.assign(p.flatten());
    CHECK(q.flatten() == p.flatten());
    CHECK(p.parameter_count() == 5 * 3 + 25 + 15 + 10 + 10 + 6 + 5 + 2);
    CHECK_THROWS_AS(q.assign(Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("nonnegative networks satisfy Jensen's inequality on random sequences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lam(0.0, 1.0);
    double worst = -1e300;
    for (int net = 0; net < 10; ++net) {
        IcrnnParams p = project_nonneg(random_signed(6, 8, 3, rng));
        p.b_h = random_matrix(8, 1, rng, -1.0, 0.5).col(0);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::MatrixXd x = random_matrix(6, 7, rng, -2, 2);
            const Eigen::MatrixXd y = random_matrix(6, 7, rng, -2, 2);
            const double l = lam(rng);
            const Eigen::MatrixXd gap =
                icrnn_forward(p, l * x + (1 - l) * y) - (l * icrnn_forward(p, x) + (1 - l) * icrnn_forward(p, y));
            worst = std::max(worst, gap.maxCoeff());
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("nonnegative networks are monotone in every input") {
    std::mt19937_64 rng(6);
    IcrnnParams p = project_nonneg(random_signed(5, 6, 2, rng));
    const Eigen::MatrixXd x = random_matrix(5, 6, rng, -1, 1);
    const Eigen::MatrixXd base = icrnn_forward(p, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::MatrixXd bumped = x;
        bumped.data()[i] += 0.1;
        CHECK((icrnn_forward(p, bumped) - base).minCoeff() >= -1e-9);
    }
}

TEST_CASE("signed weights break convexity somewhere") {
    // Sanity check that the Jensen probe has teeth.
    std::mt19937_64 rng(7);
    double worst = -1e300;
    for (int trial = 0; trial < 200 && worst <= 1e-6; ++trial) {
        IcrnnParams p = random_signed(3, 6, 1, rng);
        p.W_y = -p.W_y.cwiseAbs();
        const Eigen::MatrixXd x = random_matrix(3, 4, rng, -2, 2), y = random_matrix(3, 4, rng, -2, 2);
        const Eigen::MatrixXd gap =
            icrnn_forward(p, 0.5 * x + 0.5 * y) - 0.5 * (icrnn_forward(p, x) + icrnn_forward(p, y));
        worst = std::max(worst, gap.maxCoeff());
    }
    CHECK(worst > 1e-6);
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(8);
    for (int net = 0; net < 10; ++net) {
        const int in = 3 + net % 3, hidden = 2 + net % 7, out = 1 + net % 2;
        IcrnnParams p = random_signed(in, hidden, out, rng);
        SequenceData data{random_matrix(in, 30, rng), random_matrix(out, 30, rng), 4, 3};
        const std::vector<std::size_t> starts{0, 5, 11, 20};
        const auto lg = loss_and_gradient(p, data, starts);
        CHECK(lg.loss == doctest::Approx(batch_loss(p, data, starts)).epsilon(1e-14));

        const Eigen::VectorXd theta = p.flatten();
        const Eigen::VectorXd g = lg.gradient.flatten();
        Eigen::VectorXd fd(theta.size());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            Eigen::VectorXd t = theta;
            t[i] += h;
            p.assign(t);
            const double up = batch_loss(p, data, starts);
            t[i] -= 2 * h;
            p.assign(t);
            fd[i] = (up - batch_loss(p, data, starts)) / (2 * h);
        }
        p.assign(theta);
        const double rel = (g - fd).norm() / std::max(g.norm(), 1e-12);
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("patience zero stops after the first non-improving epoch") {
    std::mt19937_64 rng(9);
    SequenceData data{random_matrix(3, 200, rng), random_matrix(1, 200, rng), 3, 2};
    const auto split = make_windows(200, 3, 2, 1);
    TrainConfig cfg;
    cfg.hidden = 4;
    cfg.window = 3;
    cfg.horizon = 2;
    cfg.patience = 0;
    cfg.max_epochs = 200;
    cfg.learning_rate = 0.5;  // large steps stall quickly on pure noise
    const auto r = train_icrnn(data, split, cfg);
    REQUIRE(!r.history.empty());
    CHECK(r.history.size() < 200);
    const auto& last = r.history.back();
    CHECK(last.validation_loss >= r.best_validation_loss);
    for (std::size_t i = 0; i + 1 < r.history.size(); ++i)
        CHECK(r.history[i].validation_loss < (i == 0 ? 1e300 : r.history[i - 1].validation_loss));
    CHECK(r.params.is_nonnegative());
}

TEST_CASE("student recovers a convex teacher") {
    std::mt19937_64 rng(10);
    const int in = 4, hidden = 6, n = 4000;
    IcrnnParams teacher = IcrnnParams::random(in, hidden, 1, 77);
    teacher.W_h.setZero();  // finite memory keeps targets independent of window starts
    teacher.b_h.setConstant(-0.2);
    const Eigen::MatrixXd x = random_matrix(in, n, rng);
    const Eigen::MatrixXd y = icrnn_forward(teacher, x);
    SequenceData data{x, y, 4, 4};
    const auto split = make_windows(n, 4, 4, 3);

    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.window = 4;
    cfg.horizon = 4;
    cfg.learning_rate = 1e-2;
    cfg.max_epochs = 40;
    cfg.patience = 5;
    cfg.batch_size = 32;
    const auto r = train_icrnn(data, split, cfg);

    const double mean = y.mean();
    const double stddev = std::sqrt((y.array() - mean).square().mean());
    const double rmse = std::sqrt(batch_loss(r.params, data, split.validation));
    INFO("student rmse " << rmse << " target std " << stddev);
    CHECK(rmse < 0.1 * stddev);
    CHECK(r.params.is_nonnegative());
}

TEST_CASE("training rejects empty splits") {
    SequenceData data{Eigen::MatrixXd::Zero(3, 10), Eigen::MatrixXd::Zero(1, 10), 2, 2};
    WindowSplit split;
    split.window = 2;
    split.horizon = 2;
    CHECK_THROWS_AS((void)train_icrnn(data, split, TrainConfig{}), Error);
    TrainConfig bad;
    bad.learning_rate = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("ARX identification recovers known coefficients") {
    const int zones = 2;
    const int nf = ArxParams::feature_count(zones);
    std::mt19937_64 rng(11);
    Eigen::MatrixXd truth = random_matrix(zones, nf, rng, -0.05, 0.05);
    // Keep the lag dynamics stable.
    truth.block(0, 10, zones, ArxParams::kDthetaLags * zones) *= 0.5;

    plant::RecordSet set;
    set.zones = zones;
    set.clock = SimClock{kMonday, 300};
    std::uniform_real_distribution<double> oat(20, 35), ghi(0, 900);
    std::uniform_int_distribution<int> code(0, 3);
    std::normal_distribution<double> noise(0.0, 1e-5);
    std::vector<double> row(static_cast<std::size_t>(nf));
    const long n = 4000;
    for (long k = 0; k < n; ++k) {
        plant::Record r;
        r.exog = ExogenousState::at(set.clock.time_at(k), oat(rng), ghi(rng));
        r.controls = {ControlVector::from_code(code(rng)), ControlVector::from_code(code(rng))};
        r.theta = {22, 22};
        r.dtheta = {noise(rng), noise(rng)};
        set.records.push_back(r);
        if (k >= ArxParams::kDthetaLags) {
            arx_features(set.records, static_cast<std::size_t>(k), row);
            const Eigen::VectorXd d = truth * Eigen::Map<const Eigen::VectorXd>(row.data(), nf);
            for (int z = 0; z < zones; ++z) set.records.back().dtheta[static_cast<std::size_t>(z)] += d[z];
        }
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(n - ArxParams::kDthetaLags));
    std::iota(idx.begin(), idx.end(), static_cast<std::size_t>(ArxParams::kDthetaLags));
    const auto fit = fit_arx(set, idx);
    CHECK((fit.coefficients - truth).cwiseAbs().maxCoeff() < 1e-2);

    // Recursive prediction with the true coefficients replays the noiseless part.
    const ArxModel model(ArxParams{zones, truth});
    const std::size_t s = 100, h = 6;
    std::vector<ExogenousState> forecast;
    std::vector<ZoneControls> controls;
    for (std::size_t k = 0; k < h; ++k) {
        forecast.push_back(set.records[s + k].exog);
        controls.push_back(set.records[s + k].controls);
    }
    const auto pred = predict_arx(model.params(), std::span(set.records).subspan(0, s), forecast, controls);
    REQUIRE(pred.size() == h);
    CHECK(std::abs(pred[0][0] - set.records[s].dtheta[0]) < 1e-4);
    CHECK(std::abs(pred[h - 1][1] - set.records[s + h - 1].dtheta[1]) < 1e-3);

    std::stringstream ss;
    save_arx(ss, model);
    const auto back = load_arx(ss);
    CHECK(back.params().coefficients == truth);
}

TEST_CASE("ARX rejects rank-deficient designs") {
    plant::RecordSet set;
    set.zones = 1;
    for (int k = 0; k < 100; ++k) {
        plant::Record r;
        r.exog = ExogenousState::at(kMonday, 25.0, 0.0);
        r.controls = {ControlVector::from_code(0)};
        r.theta = {22};
        r.dtheta = {0.01 * k};
        set.records.push_back(r);
    }
    std::vector<std::size_t> idx(96);
    std::iota(idx.begin(), idx.end(), 4);
    try {
        (void)fit_arx(set, idx);
        FAIL("expected SingularDesign");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularDesign);
    }
}

TEST_CASE("rmse of perfect and constant-mean predictors") {
    const auto set = rtumpc::testing::default_dataset(0.2);
    const auto split = make_windows(set.size(), 36, 24, 1, 7);
    const PerfectModel perfect(2);
    CHECK(evaluate_rmse(perfect, set, split.test, 36, 24).rmse == 0.0);

    // Mean over exactly the evaluated targets: RMSE equals their population std.
    std::vector<std::size_t> targets;
    for (auto s : split.test)
        for (std::size_t k = 0; k < 24; ++k) targets.push_back(s + 36 + k);
    const auto cm = ConstantModel::fit(set, targets);
    const auto rep = evaluate_rmse(cm, set, split.test, 36, 24);
    for (std::size_t z = 0; z < 2; ++z) {
        double ss = 0;
        for (auto i : targets) ss += std::pow(set.records[i].dtheta[z] - cm.values()[z], 2);
        const double sd = std::sqrt(ss / static_cast<double>(targets.size()));
        CHECK(rep.zone_rmse[z] == doctest::Approx(sd).epsilon(0.02));
    }
    CHECK(rep.step_rmse.size() == 24);
    CHECK(rep.windows == split.test.size());
}

TEST_CASE("fitted ICRNN predictor agrees with the plain forward pass") {
    const auto set = rtumpc::testing::default_dataset(0.1);
    TrainConfig cfg;
    cfg.hidden = 10;
    cfg.window = 12;
    cfg.horizon = 6;
    cfg.max_epochs = 2;
    cfg.stride = 5;
    const auto fit = fit_icrnn(set, cfg);
    const auto& model = fit.model;
    CHECK(model.params().is_nonnegative());
    CHECK(model.history_length() == 12);

    const std::size_t s = 400;
    std::vector<ExogenousState> forecast;
    std::vector<int> plan;
    Eigen::MatrixXd raw(input_width(2), 18);
    for (std::size_t k = 0; k < 18; ++k) {
        const auto& r = set.records[s + k];
        // Plan controls differ from the recorded ones on purpose.
        ZoneControls u = k < 12 ? r.controls : rtumpc::testing::codes({int(k % 4), int((k + 1) % 4)});
        write_input(r.exog, u, std::span<double>(raw.col(static_cast<Eigen::Index>(k)).data(), 18));
        if (k >= 12) {
            forecast.push_back(r.exog);
            for (const auto& c : u) plan.push_back(c.code());
        }
    }
    const auto predictor = model.bind(std::span(set.records).subspan(s, 12), forecast);
    std::vector<double> fast(12);
    predictor->predict(plan, fast);
    const Eigen::MatrixXd slow = model.predict_raw(raw);
    for (int k = 0; k < 6; ++k)
        for (int z = 0; z < 2; ++z)
            CHECK(fast[static_cast<std::size_t>(k * 2 + z)] == doctest::Approx(slow(z, 12 + k)).epsilon(1e-10));

    std::stringstream ss;
    save_icrnn(ss, model);
    const auto back = load_icrnn(ss);
    CHECK(back.params().flatten() == model.params().flatten());
    std::vector<double> again(12);
    back.bind(std::span(set.records).subspan(s, 12), forecast)->predict(plan, again);
    CHECK(again == fast);

    CHECK_THROWS_AS((void)model.bind(std::span(set.records).subspan(s, 5), forecast), Error);
    std::stringstream junk("{\"format\": \"something-else\"}");
    CHECK_THROWS_AS((void)load_icrnn(junk), Error);
}

TEST_CASE("grid search keeps the winner") {
    const auto set = rtumpc::testing::default_dataset(0.05);
    TrainConfig cfg;
    cfg.window = 6;
    cfg.horizon = 4;
    cfg.max_epochs = 1;
    cfg.stride = 10;
    const std::vector<double> lrs{1e-3, 1e-2};
    const std::vector<int> hidden{4, 8};
    const auto g = grid_search(set, cfg, lrs, hidden);
    REQUIRE(g.points.size() == 4);
    REQUIRE(g.fit.has_value());
    for (const auto& p : g.points) CHECK(g.points[g.best].validation_loss <= p.validation_loss);
    CHECK(g.fit->model.params().hidden() == g.points[g.best].hidden);
}

}
