#pragma once

// Topological entropy by separated-set counting, in the classical form
// (separation anywhere on [0, T]) and the tau form (separation on
// J_{T,delta}(x), which skips delta-windows around the times of tau(x)).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/impulsive.hpp"
#include "impflow/spaces.hpp"
#include "impflow/timefns.hpp"

namespace impflow {

using OrbitEval = std::function<Point(double)>;

/// The two things counting needs from a system: its metric and a way to
/// evaluate the forward orbit of a point on [0, T]. `flow` is the underlying
/// continuous semiflow, used to size the classical time grid.
class Dynamics {
public:
    using OrbitFn = std::function<OrbitEval(const Point&, double)>;

    Dynamics(std::shared_ptr<const MetricSpace> space, std::shared_ptr<const Semiflow> flow,
             OrbitFn orbit)
        : space_(std::move(space)), flow_(std::move(flow)), orbit_(std::move(orbit)) {}

    static Dynamics of(const ImpulsiveSystem& sys) {
        auto shared = std::make_shared<const ImpulsiveSystem>(sys);
        auto space = std::shared_ptr<const MetricSpace>(shared, &shared->space());
        OrbitFn orbit;
        if (sys.has_impulses()) {
            orbit = [shared](const Point& x, double T) -> OrbitEval {
                auto o = std::make_shared<const ImpulsiveOrbit>(impulsive_orbit(*shared, x, T));
                return [o](double t) { return o->at(t); };
            };
        } else {
            auto flow = shared->flow_ptr();
            orbit = [flow](const Point& x, double) -> OrbitEval {
                return [flow, x](double t) { return flow->evolve(t, x); };
            };
        }
        return Dynamics(space, sys.flow_ptr(), std::move(orbit));
    }

    static Dynamics of(std::shared_ptr<const MetricSpace> space,
                       std::shared_ptr<const Semiflow> flow) {
        OrbitFn orbit = [flow](const Point& x, double) -> OrbitEval {
            return [flow, x](double t) { return flow->evolve(t, x); };
        };
        return Dynamics(std::move(space), flow, std::move(orbit));
    }

    const MetricSpace& space() const noexcept { return *space_; }
    const Semiflow& flow() const noexcept { return *flow_; }
    OrbitEval orbit(const Point& x, double T) const { return orbit_(x, T); }

private:
    std::shared_ptr<const MetricSpace> space_;
    std::shared_ptr<const Semiflow> flow_;
    OrbitFn orbit_;
};

enum class EntropyMode { classical, tau };

inline const char* to_string(EntropyMode m) {
    return m == EntropyMode::classical ? "classical" : "tau";
}

struct SeparationParams {
    double T = 1.0;
    double epsilon = 0.1;
    double delta = 0.0;  ///< 0 in classical mode
    EntropyMode mode = EntropyMode::classical;
    double time_grid_step = 0.01;
};

/// 0, h, 2h, ... up to T, with T appended when it is off the grid.
inline std::vector<double> time_grid(double T, double step) {
    if (!(step > 0.0) || !(T >= 0.0)) throw DomainError("time_grid: bad step or horizon");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor(T / step + 1e-9));
    g.reserve(n + 2);
    for (std::size_t k = 0; k <= n; ++k) g.push_back(std::min(T, static_cast<double>(k) * step));
    if (T - g.back() > 1e-12) g.push_back(T);
    return g;
}

/// Time grid step used when none is given: delta/4 in tau mode, half the
/// continuity modulus of the flow at epsilon/2 in classical mode.
inline double default_grid_step(const Dynamics& dyn, std::span<const Point> points,
                                double epsilon, double delta, EntropyMode mode) {
    if (mode == EntropyMode::tau) return delta / 4.0;
    const std::size_t m = std::min<std::size_t>(points.size(), 64);
    return modulus_beta(dyn.flow(), dyn.space(), epsilon / 2.0, points.first(m), 2.0) / 2.0;
}

/// max over grid times t in J (and t = 0 if requested) of
/// dist(orbit_x(t), orbit_y(t)).
inline double orbit_sep_dist(const Dynamics& dyn, const Point& x, const Point& y,
                             const IntervalSet& J, double step, bool include_zero = false) {
    if (!(step > 0.0)) throw DomainError("orbit_sep_dist: grid step must be positive");
    const double T = J.horizon();
    auto ox = dyn.orbit(x, T);
    auto oy = dyn.orbit(y, T);
    double best = -1.0;
    for (double t : time_grid(T, step)) {
        if (!((t == 0.0 && include_zero) || J.contains(t))) continue;
        best = std::max(best, dyn.space().dist(ox(t), oy(t)));
    }
    if (best < 0.0) throw DomainError("orbit_sep_dist: no grid time inside J");
    return best;
}

/// Classical Bowen distance dist_T sampled on the grid over [0, T].
inline double orbit_sep_dist_classical(const Dynamics& dyn, const Point& x, const Point& y,
                                       double T, double step) {
    return orbit_sep_dist(dyn, x, y, IntervalSet::full(T), step, true);
}

namespace detail {

inline void check_params(const SeparationParams& p, const SequenceBuilder* seq) {
    if (!(p.T > 0.0)) throw DomainError("separation: T must be positive");
    if (!(p.epsilon > 0.0)) throw DomainError("separation: epsilon must be positive");
    if (!(p.time_grid_step > 0.0)) throw DomainError("separation: grid step must be positive");
    if (p.mode == EntropyMode::tau) {
        if (!seq || !*seq) throw DomainError("separation: tau mode needs a sequence builder");
        if (!(p.delta > 0.0)) throw DomainError("separation: tau mode needs delta > 0");
        if (p.time_grid_step > p.delta / 4.0 + 1e-15) {
            throw DomainError("separation: grid step must not exceed delta/4 in tau mode");
        }
    }
}

/// Grid mask of the times at which separation may be witnessed for a centre.
inline std::vector<std::uint8_t> grid_mask(const std::vector<double>& grid,
                                           const SeparationParams& p,
                                           const SequenceBuilder* seq, const Point& centre) {
    std::vector<std::uint8_t> mask(grid.size(), 1);
    if (p.mode == EntropyMode::tau) {
        const IntervalSet J = j_set((*seq)(centre, p.T), p.T, p.delta);
        for (std::size_t k = 0; k < grid.size(); ++k) mask[k] = J.contains(grid[k]) ? 1 : 0;
    }
    return mask;
}

}  // namespace detail

struct SeparatedSet {
    std::size_t count = 0;
    std::vector<std::size_t> selected;  ///< indices into the input points
};

/// Greedy maximal separated subset, scanning points in the given order.
///
/// A point is kept when, for every point already kept, each of the two
/// lies outside the other's (tau-)dynamical ball: the distance reaches
/// epsilon at some grid time of J(p) and at some grid time of J(q). The
/// result is a lower bound for the maximal cardinality.
inline SeparatedSet separated_count_greedy(const Dynamics& dyn, std::span<const Point> points,
                                           const SeparationParams& params,
                                           const SequenceBuilder* seq = nullptr) {
    detail::check_params(params, seq);
    SeparatedSet out;
    if (points.empty()) return out;

    const auto grid = time_grid(params.T, params.time_grid_step);
    const std::size_t G = grid.size();
    const std::size_t dim = dyn.space().dimension();
    const MetricSpace& space = dyn.space();

    // Coarse-to-fine visiting order: a stride through the whole grid from the
    // end, then the offsets in between. Separation windows are long compared
    // with the grid step, so a separated pair is usually settled early.
    const std::size_t stride = std::max<std::size_t>(1, G / 32);
    std::vector<std::size_t> order;
    order.reserve(G);
    for (std::size_t o = 0; o < stride; ++o) {
        for (std::size_t k = G - 1 - std::min(o, G - 1);; k -= stride) {
            order.push_back(k);
            if (k < stride) break;
        }
    }

    std::vector<double> kept_traj;
    std::vector<std::uint8_t> kept_mask;
    std::vector<double> traj(G * dim);

    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        auto orbit = dyn.orbit(points[idx], params.T);
        for (std::size_t k = 0; k < G; ++k) {
            const Point p = orbit(grid[k]);
            std::copy_n(p.coords().begin(), dim, traj.begin() + static_cast<std::ptrdiff_t>(k * dim));
        }
        const auto mask = detail::grid_mask(grid, params, seq, points[idx]);

        bool keep = true;
        for (std::size_t q = 0; q < out.count && keep; ++q) {
            const double* qt = kept_traj.data() + q * G * dim;
            const std::uint8_t* qm = kept_mask.data() + q * G;
            bool sep_p = false, sep_q = false;
            for (std::size_t k : order) {
                if (!(mask[k] && !sep_p) && !(qm[k] && !sep_q)) continue;
                const double d = space.raw_dist({traj.data() + k * dim, dim}, {qt + k * dim, dim});
                if (d >= params.epsilon) {
                    sep_p = sep_p || mask[k];
                    sep_q = sep_q || qm[k];
                    if (sep_p && sep_q) break;
                }
            }
            keep = sep_p && sep_q;
        }
        if (keep) {
            kept_traj.insert(kept_traj.end(), traj.begin(), traj.end());
            kept_mask.insert(kept_mask.end(), mask.begin(), mask.end());
            out.selected.push_back(idx);
            ++out.count;
        }
    }
    return out;
}

inline constexpr std::size_t kMaxExactPoints = 20;

/// Maximum separated subset by exhaustive search (at most 20 points).
///
/// Pairwise separation is recomputed directly with orbit_sep_dist in both
/// directions, independently of the greedy scan, and the largest subset of
/// mutually separated points is found by enumerating all subsets.
inline std::size_t separated_count_exact(const Dynamics& dyn, std::span<const Point> points,
                                         const SeparationParams& params,
                                         const SequenceBuilder* seq = nullptr) {
    detail::check_params(params, seq);
    const std::size_t n = points.size();
    if (n > kMaxExactPoints) throw DomainError("separated_count_exact: more than 20 points");
    if (n == 0) return 0;

    std::vector<IntervalSet> J;
    for (const auto& p : points) {
        J.push_back(params.mode == EntropyMode::tau
                        ? j_set((*seq)(p, params.T), params.T, params.delta)
                        : IntervalSet::full(params.T));
    }
    const bool zero = params.mode == EntropyMode::classical;

    std::vector<std::uint32_t> compatible(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sep =
                orbit_sep_dist(dyn, points[i], points[j], J[i], params.time_grid_step, zero) >= params.epsilon &&
                orbit_sep_dist(dyn, points[j], points[i], J[j], params.time_grid_step, zero) >= params.epsilon;
            if (sep) {
                compatible[i] |= 1u << j;
                compatible[j] |= 1u << i;
            }
        }
    }

    std::size_t best = 1;
    const std::uint32_t full = (1u << n) - 1;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        if (size <= best) continue;
        bool ok = true;
        for (std::uint32_t rest = mask; rest && ok; rest &= rest - 1) {
            const int i = std::countr_zero(rest);
            ok = ((mask & ~(1u << i)) & ~compatible[i]) == 0;
        }
        if (ok) best = size;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Growth rates

struct GrowthEstimate {
    EntropyMode mode = EntropyMode::classical;
    double epsilon = 0.0;
    double delta = 0.0;
    double grid_step = 0.0;
    std::size_t sample_size = 0;
    std::vector<std::pair<double, std::size_t>> counts;  ///< (T, separated count)
    double slope = 0.0;       ///< fitted exponential growth rate, 1/time
    double intercept = 0.0;
    std::vector<double> residuals;  ///< of the fitted points
    bool degenerate = false;  ///< counts never exceed one
    bool saturated = false;   ///< largest count equals the sample size
    bool monotone = true;     ///< counts nondecreasing in T
};

/// Least-squares line through (T, log count) over the upper half of the
/// points (at least two).
inline void fit_growth(GrowthEstimate& g) {
    const std::size_t n = g.counts.size();
    g.residuals.clear();
    g.degenerate = std::all_of(g.counts.begin(), g.counts.end(),
                               [](const auto& c) { return c.second <= 1; });
    if (n < 2 || g.degenerate) {
        g.slope = 0.0;
        g.intercept = n ? std::log(static_cast<double>(std::max<std::size_t>(g.counts.back().second, 1))) : 0.0;
        return;
    }
    const std::size_t m = std::max<std::size_t>(2, (n + 1) / 2);
    const std::size_t first = n - m;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = first; i < n; ++i) {
        const double x = g.counts[i].first;
        const double y = std::log(static_cast<double>(std::max<std::size_t>(g.counts[i].second, 1)));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double mm = static_cast<double>(m);
    const double den = mm * sxx - sx * sx;
    g.slope = den != 0.0 ? (mm * sxy - sx * sy) / den : 0.0;
    g.intercept = (sy - g.slope * sx) / mm;
    for (std::size_t i = first; i < n; ++i) {
        const double y = std::log(static_cast<double>(std::max<std::size_t>(g.counts[i].second, 1)));
        g.residuals.push_back(y - (g.intercept + g.slope * g.counts[i].first));
    }
}

/// Greedy counts for each T of the grid and the fitted growth rate.
/// `grid_step` <= 0 selects default_grid_step.
inline GrowthEstimate entropy_estimate(const Dynamics& dyn, std::span<const Point> points,
                                       std::span<const double> T_grid, double epsilon,
                                       double delta, EntropyMode mode,
                                       const SequenceBuilder* seq = nullptr,
                                       double grid_step = 0.0) {
    if (T_grid.size() < 4) throw DomainError("entropy_estimate: need at least 4 horizons");
    if (!std::is_sorted(T_grid.begin(), T_grid.end()) ||
        std::adjacent_find(T_grid.begin(), T_grid.end()) != T_grid.end()) {
        throw DomainError("entropy_estimate: T grid must be strictly increasing");
    }
    if (points.empty()) throw DomainError("entropy_estimate: empty sample");

    GrowthEstimate g;
    g.mode = mode;
    g.epsilon = epsilon;
    g.delta = mode == EntropyMode::tau ? delta : 0.0;
    g.sample_size = points.size();
    g.grid_step = grid_step > 0.0 ? grid_step : default_grid_step(dyn, points, epsilon, delta, mode);

    for (double T : T_grid) {
        SeparationParams p{T, epsilon, g.delta, mode, g.grid_step};
        const auto s = separated_count_greedy(dyn, points, p, seq);
        if (!g.counts.empty() && s.count < g.counts.back().second) g.monotone = false;
        g.counts.emplace_back(T, s.count);
    }
    g.saturated = g.counts.back().second >= points.size();
    fit_growth(g);
    return g;
}

struct SweepResult {
    std::vector<GrowthEstimate> cells;  ///< delta-major, epsilon-minor
    double h_estimate = 0.0;            ///< slope at the smallest (epsilon, delta)
    bool stable = true;       ///< last two epsilon steps agree within 10%
    bool eps_monotone = true; ///< slope nondecreasing as epsilon decreases
    bool delta_monotone = true;
    bool saturated = false;   ///< some cell ran out of sample points
};

/// Growth rates over decreasing epsilon and delta grids. Cells are
/// independent and evaluated concurrently when threads > 1.
inline SweepResult entropy_sweep(const Dynamics& dyn, std::span<const Point> points,
                                 std::span<const double> T_grid,
                                 std::span<const double> eps_grid,
                                 std::span<const double> delta_grid, EntropyMode mode,
                                 const SequenceBuilder* seq = nullptr,
                                 unsigned threads = std::thread::hardware_concurrency()) {
    auto strictly_decreasing = [](std::span<const double> v) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!(v[i] < v[i - 1])) return false;
        }
        return !v.empty();
    };
    if (!strictly_decreasing(eps_grid)) throw DomainError("entropy_sweep: epsilon grid must decrease");
    std::vector<double> deltas(delta_grid.begin(), delta_grid.end());
    if (mode == EntropyMode::classical) deltas = {0.0};
    if (!strictly_decreasing(deltas)) throw DomainError("entropy_sweep: delta grid must decrease");

    const std::size_t ne = eps_grid.size(), nd = deltas.size();
    SweepResult r;
    r.cells.resize(ne * nd);
    auto run_cell = [&](std::size_t c) {
        r.cells[c] = entropy_estimate(dyn, points, T_grid, eps_grid[c % ne], deltas[c / ne], mode, seq);
    };
    if (threads > 1) {
        std::vector<std::future<void>> jobs;
        for (std::size_t c = 0; c < r.cells.size(); ++c) {
            jobs.push_back(std::async(std::launch::async, run_cell, c));
            if (jobs.size() >= threads) {
                for (auto& j : jobs) j.get();
                jobs.clear();
            }
        }
        for (auto& j : jobs) j.get();
    } else {
        for (std::size_t c = 0; c < r.cells.size(); ++c) run_cell(c);
    }

    constexpr double kSlopeTol = 1e-9;
    for (std::size_t d = 0; d < nd; ++d) {
        for (std::size_t e = 1; e < ne; ++e) {
            if (r.cells[d * ne + e].slope < r.cells[d * ne + e - 1].slope - kSlopeTol) r.eps_monotone = false;
        }
    }
    for (std::size_t e = 0; e < ne; ++e) {
        for (std::size_t d = 1; d < nd; ++d) {
            if (r.cells[d * ne + e].slope < r.cells[(d - 1) * ne + e].slope - kSlopeTol) r.delta_monotone = false;
        }
    }
    for (const auto& c : r.cells) r.saturated = r.saturated || c.saturated;

    const auto& last = r.cells[(nd - 1) * ne + ne - 1];
    r.h_estimate = last.slope;
    if (ne >= 2) {
        const double a = last.slope, b = r.cells[(nd - 1) * ne + ne - 2].slope;
        const double diff = std::abs(a - b);
        r.stable = !(diff > 0.1 * std::max(std::abs(a), std::abs(b)) && diff > 0.01);
    }
    return r;
}

}  // namespace impflow
