#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace rtumpc::solver {

using Point = std::vector<int>;

/// Objective value and constraint values (feasible iff every g <= 0).
struct Evaluation {
    double f = 0.0;
    std::vector<double> g;
};

/// Bound-constrained integer problem. The callback must be deterministic and
/// free of side effects; it may be invoked from several threads.
struct BoxedIntProblem {
    std::vector<int> lower;
    std::vector<int> upper;
    std::function<Evaluation(std::span<const int>)> evaluate;

    [[nodiscard]] std::size_t dimension() const noexcept { return lower.size(); }
    /// Throws Error(InvalidArgument) on empty or inverted domains.
    void validate() const;
    [[nodiscard]] bool contains(std::span<const int> x) const;
};

/// h = sum of squared positive parts.
double violation(std::span<const double> g);
double violation(const BoxedIntProblem& problem, std::span<const int> x);

struct Budget {
    long max_evals = 2000;
    double max_seconds = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;

    void validate() const;
};

struct SolverOptions {
    int initial_mesh = 1;
    bool speculative_search = true;
    bool vns = true;
    int vns_max_radius = 4;
    /// Consecutive cache hits after which the run ends (lattice exhausted).
    long max_cache_streak = 2000;
    /// When set, one CSV line per fresh evaluation: eval,point,f,h,mesh.
    std::ostream* trace = nullptr;
    /// Problem-specific search: trial points around the primary incumbent,
    /// tried in order after the speculative search until one improves.
    std::function<std::vector<Point>(const Point& center)> search;
};

/// Incumbent change, recorded each time either incumbent moves.
struct IncumbentEvent {
    long eval = 0;
    bool feasible = false;  // which incumbent moved
    double f = 0.0;
    double h = 0.0;
};

struct SolveResult {
    Point point;
    double f = 0.0;
    double h = 0.0;
    long evals = 0;       // distinct points evaluated
    long cache_hits = 0;
    bool feasible = false;
    std::vector<IncumbentEvent> incumbents;
};

/// Barrier order: smaller h, then smaller f, then lexicographically smaller point.
bool barrier_less(double f_a, double h_a, std::span<const int> a, double f_b, double h_b, std::span<const int> b);

/// Integer-lattice mesh adaptive direct search with a progressive barrier.
/// Returns the best feasible point found, or the least-violating one when none
/// is feasible. Throws Error(NoEvaluations) when the budget allows none.
SolveResult solve(const BoxedIntProblem& problem, std::span<const int> start, const Budget& budget,
                  const SolverOptions& options = {});

/// Same, seeded with several start points evaluated in order before the first
/// poll. The best of them in barrier order becomes the initial center.
SolveResult solve(const BoxedIntProblem& problem, std::span<const Point> starts, const Budget& budget,
                  const SolverOptions& options = {});

/// Random point within L1 distance k of x: k unit moves on random coordinates
/// with random signs, clamped to the domain.
Point vns_perturb(const BoxedIntProblem& problem, std::span<const int> x, int k, std::uint64_t seed);

/// Shifts a rolling-horizon plan by one step of `vars_per_step` variables and
/// repeats the last step in the freed tail.
Point warm_start(std::span<const int> previous, std::size_t vars_per_step);

} // namespace rtumpc::solver
