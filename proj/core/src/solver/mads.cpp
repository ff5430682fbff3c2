#include "rtumpc/solver/mads.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <unordered_map>

#include "../csv.hpp"
#include "rtumpc/error.hpp"

namespace rtumpc::solver {

void BoxedIntProblem::validate() const {
    require(!lower.empty() && lower.size() == upper.size(), ErrorCode::InvalidArgument,
            "problem needs matching nonempty bounds");
    for (std::size_t i = 0; i < lower.size(); ++i)
        require(lower[i] <= upper[i], ErrorCode::InvalidArgument, "inverted domain at variable " + std::to_string(i));
    require(static_cast<bool>(evaluate), ErrorCode::InvalidArgument, "problem has no evaluation callback");
}

bool BoxedIntProblem::contains(std::span<const int> x) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] || x[i] > upper[i]) return false;
    return true;
}

double violation(std::span<const double> g) {
    double h = 0.0;
    for (double v : g)
        if (v > 0) h += v * v;
    return h;
}

double violation(const BoxedIntProblem& problem, std::span<const int> x) { return violation(problem.evaluate(x).g); }

void Budget::validate() const {
    require(max_evals >= 0, ErrorCode::InvalidArgument, "max_evals must be >= 0");
    require(max_seconds > 0, ErrorCode::InvalidArgument, "max_seconds must be > 0");
}

bool barrier_less(double f_a, double h_a, std::span<const int> a, double f_b, double h_b, std::span<const int> b) {
    if (h_a != h_b) return h_a < h_b;
    if (f_a != f_b) return f_a < f_b;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

namespace {

Point perturb(const BoxedIntProblem& problem, std::span<const int> x, int k, std::mt19937_64& rng) {
    Point y(x.begin(), x.end());
    std::uniform_int_distribution<std::size_t> coord(0, y.size() - 1);
    std::bernoulli_distribution up(0.5);
    for (int i = 0; i < k; ++i) {
        const auto c = coord(rng);
        const int v = y[c] + (up(rng) ? 1 : -1);
        y[c] = std::clamp(v, problem.lower[c], problem.upper[c]);
    }
    return y;
}

struct PointHash {
    std::size_t operator()(const Point& p) const noexcept {
        std::size_t h = 1469598103934665603ULL;
        for (int v : p) h = (h ^ static_cast<std::size_t>(v + 0x9e37)) * 1099511628211ULL;
        return h;
    }
};

struct Candidate {
    Point x;
    double f = 0.0;
    double h = 0.0;
};

class Run {
public:
    Run(const BoxedIntProblem& problem, const Budget& budget, const SolverOptions& options)
        : p_(problem), budget_(budget), opt_(options), rng_(budget.seed),
          deadline_(std::isfinite(budget.max_seconds)
                        ? std::optional(std::chrono::steady_clock::now() +
                                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                            std::chrono::duration<double>(budget.max_seconds)))
                        : std::nullopt) {
        for (std::size_t i = 0; i < p_.dimension(); ++i) max_width_ = std::max(max_width_, p_.upper[i] - p_.lower[i]);
        max_width_ = std::max(max_width_, 1);
        if (opt_.trace) *opt_.trace << "eval,point,f,h,mesh\n";
    }

    SolveResult run(std::span<const Point> starts) {
        Candidate c;
        for (const auto& x : starts) {
            if (done() && (F_ || I_)) break;
            try_point(x, opt_.initial_mesh, c);
        }
        int mesh = std::clamp(opt_.initial_mesh, 1, max_width_);
        Point last_disp;
        int vns_k = 1;
        while (!done()) {
            bool success = false;
            if (opt_.speculative_search && !last_disp.empty()) {
                const Point center = primary().x;
                Point y = center;
                for (std::size_t i = 0; i < y.size(); ++i) y[i] = clamp(i, y[i] + last_disp[i]);
                if (y != center) success = try_point(y, mesh, c);
                if (!success) last_disp.clear();
            }
            if (!success && opt_.search && !done()) {
                const Point center = primary().x;
                for (auto& y : opt_.search(center)) {
                    if (done()) break;
                    if (y == center || !p_.contains(y)) continue;
                    if (try_point(y, mesh, c)) {
                        success = true;
                        last_disp.resize(y.size());
                        for (std::size_t i = 0; i < y.size(); ++i) last_disp[i] = y[i] - center[i];
                        break;
                    }
                }
            }
            if (!success && !done()) {
                Point disp;
                const Candidate center = primary();
                success = poll(center, mesh, disp);
                if (!success && F_ && I_ && !done()) success = poll(*I_, mesh, disp);
                if (success) last_disp = std::move(disp);
            }
            if (success) {
                mesh = std::min(mesh * 2, max_width_);
            } else if (mesh > 1) {
                mesh /= 2;
            } else if (opt_.vns && opt_.vns_max_radius >= 1) {
                vns_k = vns_round(vns_k) ? 1 : vns_k % opt_.vns_max_radius + 1;
                mesh = 1;
            } else {
                break;  // local optimum at the finest mesh
            }
        }
        SolveResult r;
        const Candidate& best = F_ ? *F_ : *I_;
        r.point = best.x;
        r.f = best.f;
        r.h = best.h;
        r.feasible = F_.has_value();
        r.evals = evals_;
        r.cache_hits = cache_hits_;
        r.incumbents = std::move(events_);
        return r;
    }

private:
    [[nodiscard]] int clamp(std::size_t i, int v) const { return std::clamp(v, p_.lower[i], p_.upper[i]); }

    [[nodiscard]] const Candidate& primary() const { return F_ ? *F_ : *I_; }

    [[nodiscard]] bool done() const {
        if (evals_ >= budget_.max_evals || cache_streak_ >= opt_.max_cache_streak) return true;
        return deadline_ && std::chrono::steady_clock::now() >= *deadline_;
    }

    // Evaluates (or recalls) x, updates the incumbents and reports whether
    // either incumbent strictly improved.
    bool try_point(Point x, int mesh, Candidate& out) {
        auto it = cache_.find(x);
        if (it != cache_.end()) {
            ++cache_hits_;
            ++cache_streak_;
            out = Candidate{std::move(x), it->second.first, it->second.second};
            return false;
        }
        if (evals_ >= budget_.max_evals) {
            out = Candidate{std::move(x), std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity()};
            return false;
        }
        const Evaluation e = p_.evaluate(x);
        double f = e.f;
        double h = violation(e.g);
        // Non-finite results rank behind every finite point.
        if (!std::isfinite(f) || !std::isfinite(h)) {
            f = std::numeric_limits<double>::infinity();
            h = std::numeric_limits<double>::infinity();
        }
        ++evals_;
        cache_streak_ = 0;
        cache_.emplace(x, std::make_pair(f, h));
        if (opt_.trace) {
            auto& t = *opt_.trace;
            t << evals_ << ',';
            for (std::size_t i = 0; i < x.size(); ++i) t << (i ? " " : "") << x[i];
            t << ',' << detail::fmt_double(f) << ',' << detail::fmt_double(h) << ',' << mesh << '\n';
        }
        out = Candidate{x, f, h};
        return update(out);
    }

    bool update(const Candidate& c) {
        if (!std::isfinite(c.h)) {
            if (!F_ && !I_) I_ = c;  // keeps a center even when the start is unusable
            return false;
        }
        if (c.h == 0.0) {
            const bool strict = !F_ || c.f < F_->f;
            if (strict || (c.f == F_->f && c.x < F_->x)) {
                F_ = c;
                events_.push_back({evals_, true, c.f, 0.0});
            }
            return strict;
        }
        const bool strict = !I_ || c.h < I_->h || (c.h == I_->h && c.f < I_->f);
        if (strict || (c.h == I_->h && c.f == I_->f && c.x < I_->x)) {
            I_ = c;
            events_.push_back({evals_, false, c.f, c.h});
        }
        return strict;
    }

    bool poll(const Candidate& center, int mesh, Point& disp) {
        const int dirs = static_cast<int>(2 * center.x.size());
        Candidate c;
        for (int i = 0; i < dirs && !done(); ++i) {
            const int dir = (last_dir_ + i) % dirs;
            const auto coord = static_cast<std::size_t>(dir / 2);
            Point y = center.x;
            y[coord] = clamp(coord, y[coord] + (dir % 2 ? -mesh : mesh));
            if (y[coord] == center.x[coord]) continue;
            if (try_point(y, mesh, c)) {
                last_dir_ = dir;
                disp.assign(y.size(), 0);
                disp[coord] = y[coord] - center.x[coord];
                return true;
            }
        }
        return false;
    }

    // Shake the primary incumbent, then descend from the shaken point with
    // unit polls. True when either incumbent improved along the way.
    bool vns_round(int k) {
        bool improved = false;
        Candidate center;
        improved |= try_point(perturb(p_, primary().x, k, rng_), 1, center);
        const int dirs = static_cast<int>(2 * center.x.size());
        bool moved = true;
        while (moved && !improved && !done()) {
            moved = false;
            Candidate c;
            for (int dir = 0; dir < dirs && !done(); ++dir) {
                const auto coord = static_cast<std::size_t>(dir / 2);
                Point y = center.x;
                y[coord] = clamp(coord, y[coord] + (dir % 2 ? -1 : 1));
                if (y[coord] == center.x[coord]) continue;
                improved |= try_point(std::move(y), 1, c);
                if (improved || barrier_less(c.f, c.h, c.x, center.f, center.h, center.x)) {
                    center = c;
                    moved = true;
                    break;
                }
            }
        }
        return improved;
    }

    const BoxedIntProblem& p_;
    Budget budget_;
    SolverOptions opt_;
    std::mt19937_64 rng_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    int max_width_ = 1;
    int last_dir_ = 0;
    long evals_ = 0;
    long cache_hits_ = 0;
    long cache_streak_ = 0;
    std::unordered_map<Point, std::pair<double, double>, PointHash> cache_;
    std::optional<Candidate> F_, I_;
    std::vector<IncumbentEvent> events_;
};

} // namespace

SolveResult solve(const BoxedIntProblem& problem, std::span<const Point> starts, const Budget& budget,
                  const SolverOptions& options) {
    problem.validate();
    budget.validate();
    require(budget.max_evals > 0, ErrorCode::NoEvaluations, "evaluation budget is zero");
    require(!starts.empty(), ErrorCode::InvalidArgument, "no start point");
    for (const auto& x : starts)
        require(problem.contains(x), ErrorCode::InvalidArgument, "start point lies outside the domain");
    require(options.initial_mesh >= 1 && options.vns_max_radius >= 0 && options.max_cache_streak >= 1,
            ErrorCode::InvalidArgument, "invalid solver options");
    Run run(problem, budget, options);
    return run.run(starts);
}

SolveResult solve(const BoxedIntProblem& problem, std::span<const int> start, const Budget& budget,
                  const SolverOptions& options) {
    const Point x(start.begin(), start.end());
    return solve(problem, std::span<const Point>(&x, 1), budget, options);
}

Point vns_perturb(const BoxedIntProblem& problem, std::span<const int> x, int k, std::uint64_t seed) {
    require(k >= 0, ErrorCode::InvalidArgument, "neighborhood radius must be >= 0");
    require(x.size() == problem.dimension() && !x.empty(), ErrorCode::InvalidArgument, "point dimension");
    std::mt19937_64 rng(seed);
    return perturb(problem, x, k, rng);
}

Point warm_start(std::span<const int> previous, std::size_t vars_per_step) {
    require(vars_per_step >= 1 && !previous.empty() && previous.size() % vars_per_step == 0,
            ErrorCode::InvalidArgument, "plan length must be a multiple of the step width");
    Point next(previous.begin() + static_cast<std::ptrdiff_t>(vars_per_step), previous.end());
    next.insert(next.end(), previous.end() - static_cast<std::ptrdiff_t>(vars_per_step), previous.end());
    return next;
}

} // namespace rtumpc::solver
