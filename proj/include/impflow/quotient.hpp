#pragma once

// The quotient X/~ glueing each d in D to I(d), its distance, and the
// semiflow it carries.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/impulsive.hpp"
#include "impflow/sampling.hpp"
#include "impflow/spaces.hpp"

namespace impflow {

inline constexpr double kEquivTol = 1e-9;
inline constexpr std::size_t kInverseGrid = 10000;
inline constexpr std::size_t kMaxPreimages = 16;

/// x ~ y iff x = y, y = I(x), x = I(y) or I(x) = I(y); I is applied only on D.
inline bool are_equivalent(const ImpulsiveSystem& sys, const Point& x, const Point& y) {
    const auto& sp = sys.space();
    if (sp.dist(x, y) <= kEquivTol) return true;
    const bool xd = sys.in_d(x), yd = sys.in_d(y);
    if (xd && sp.dist(sys.i_map()(x), y) <= kEquivTol) return true;
    if (yd && sp.dist(sys.i_map()(y), x) <= kEquivTol) return true;
    return xd && yd && sp.dist(sys.i_map()(x), sys.i_map()(y)) <= kEquivTol;
}

/// All d in D with I(d) = target: scan of the D parametrization, then
/// golden-section refinement around each local minimum of |I(d) - target|.
inline std::vector<Point> preimages(const ImpulsiveSystem& sys, const Point& target) {
    std::vector<Point> out;
    const auto& D = sys.d_set();
    if (D.empty() || !D.param) return out;
    if (!sys.landing_set().empty() && !sys.landing_set().member(target, 1e3 * kEquivTol)) return out;

    const auto& par = *D.param;
    const auto& sp = sys.space();
    auto f = [&](double u) { return sp.dist(sys.i_map()(par.at(u)), target); };
    const std::size_t n = kInverseGrid;
    const double h = (par.hi - par.lo) / static_cast<double>(n - 1);
    std::vector<double> fv(n);
    for (std::size_t k = 0; k < n; ++k) fv[k] = f(par.lo + static_cast<double>(k) * h);
    // two neighbouring grid points both mapped onto the target: I is constant
    // on a piece of D and the preimage set is not finite
    for (std::size_t k = 1; k < n; ++k) {
        if (fv[k] <= kEquivTol && fv[k - 1] <= kEquivTol) {
            throw DomainError("preimages: I is constant near " + detail::describe(par.at(par.lo + static_cast<double>(k) * h)));
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        const bool left_ok = k == 0 || fv[k] <= fv[k - 1];
        const bool right_ok = k + 1 == n || fv[k] < fv[k + 1];
        if (!left_ok || !right_ok) continue;
        double a = par.lo + static_cast<double>(k == 0 ? 0 : k - 1) * h;
        double b = par.lo + static_cast<double>(std::min(k + 1, n - 1)) * h;
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - r * (b - a), d = a + r * (b - a);
        double fc = f(c), fd = f(d);
        for (int it = 0; it < 120 && b - a > 1e-15; ++it) {
            if (fc < fd) {
                b = d; d = c; fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c; c = d; fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        double best_u = 0.5 * (a + b), best_f = f(best_u);
        if (fv[k] < best_f) {
            best_u = par.lo + static_cast<double>(k) * h;
            best_f = fv[k];
        }
        if (best_f > kEquivTol) continue;
        const Point p = par.at(best_u);
        const bool dup = std::any_of(out.begin(), out.end(),
                                     [&](const Point& q) { return sp.dist(p, q) <= kEquivTol; });
        if (dup) continue;
        out.push_back(p);
        if (out.size() > kMaxPreimages) {
            throw DomainError("preimages: more than 16 preimages of " + detail::describe(target));
        }
    }
    return out;
}

struct EquivClass {
    std::vector<Point> members;
    /// Transitive closure added points beyond {x, I(x)} and the preimages
    /// of I(x) (or of x when x is not in D).
    bool closure_grew = false;
};

inline EquivClass class_of(const ImpulsiveSystem& sys, const Point& x) {
    const auto& sp = sys.space();
    EquivClass cls;
    auto add = [&](const Point& p) {
        for (const auto& q : cls.members) {
            if (sp.dist(p, q) <= kEquivTol) return false;
        }
        cls.members.push_back(p);
        return true;
    };
    auto neighbours = [&](const Point& m) {
        std::vector<Point> nb;
        if (sys.in_d(m)) {
            const Point im = sys.i_map()(m);
            nb.push_back(im);
            for (auto& d : preimages(sys, im)) nb.push_back(d);
        }
        for (auto& d : preimages(sys, m)) nb.push_back(d);
        return nb;
    };

    add(x);
    const std::size_t described = [&] {
        for (const auto& p : neighbours(x)) add(p);
        return cls.members.size();
    }();
    for (std::size_t i = 1; i < cls.members.size(); ++i) {
        const Point m = cls.members[i];
        for (const auto& p : neighbours(m)) add(p);
        if (cls.members.size() > kMaxPreimages + 2) {
            throw DomainError("class_of: class of " + detail::describe(x) + " is not finite");
        }
    }
    cls.closure_grew = cls.members.size() > described;
    return cls;
}

struct QuotientPoint {
    EquivClass cls;
    Point canonical;  ///< lexicographically least member
};

inline QuotientPoint project(const ImpulsiveSystem& sys, const Point& x) {
    QuotientPoint q{class_of(sys, x), x};
    for (const auto& m : q.cls.members) {
        if (lex_less(m, q.canonical)) q.canonical = m;
    }
    return q;
}

namespace detail {

inline double class_gap(const MetricSpace& sp, const EquivClass& a, const EquivClass& b) {
    double best = kInf;
    for (const auto& p : a.members) {
        for (const auto& q : b.members) best = std::min(best, sp.dist(p, q));
    }
    return best;
}

}  // namespace detail

/// Minimum of dist(p, q) over representatives p of a and q of b. Only
/// meaningful when I does not expand distances, so other systems are
/// refused; quotient_dist_chain has no such restriction.
inline double quotient_dist(const ImpulsiveSystem& sys, const QuotientPoint& a,
                            const QuotientPoint& b) {
    if (sys.i_map().lipschitz_bound > 1.0 + 1e-12) {
        throw DomainError("quotient_dist: impulse map of " + sys.name() +
                          " is not 1-Lipschitz; use quotient_dist_chain");
    }
    return detail::class_gap(sys.space(), a.cls, b.cls);
}

/// Infimum of d(p1,q1) + ... + d(pn,qn) over chains with p1 ~ a, qi ~ p(i+1),
/// qn ~ b and n <= max_chain, where the intermediate classes are those of
/// the pool points. Shortest path with a bounded number of edges.
/// Pool given as precomputed classes, for repeated queries.
inline double quotient_dist_chain(const ImpulsiveSystem& sys, const QuotientPoint& a,
                                  const QuotientPoint& b, std::size_t max_chain,
                                  std::span<const EquivClass> pool) {
    if (max_chain < 1) throw DomainError("quotient_dist_chain: max_chain must be >= 1");
    std::vector<EquivClass> nodes{a.cls, b.cls};
    nodes.insert(nodes.end(), pool.begin(), pool.end());
    const std::size_t n = nodes.size();
    std::vector<double> w(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i * n + i] = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            w[i * n + j] = w[j * n + i] = detail::class_gap(sys.space(), nodes[i], nodes[j]);
        }
    }
    std::vector<double> best(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t edges = 2; edges <= max_chain; ++edges) {
        std::vector<double> next = best;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) next[j] = std::min(next[j], best[i] + w[i * n + j]);
        }
        best = std::move(next);
    }
    return best[1];
}

inline double quotient_dist_chain(const ImpulsiveSystem& sys, const QuotientPoint& a,
                                  const QuotientPoint& b, std::size_t max_chain,
                                  std::span<const Point> pool) {
    std::vector<EquivClass> classes;
    classes.reserve(pool.size());
    for (const auto& p : pool) classes.push_back(class_of(sys, p));
    return quotient_dist_chain(sys, a, b, max_chain, std::span<const EquivClass>(classes));
}

/// psi~(t, a) = pi(psi(t, x)) for the representative x of a lying in X_xi.
inline QuotientPoint induced_psi(const ImpulsiveSystem& sys, double t, const QuotientPoint& a) {
    if (t < 0.0) throw DomainError("induced_psi: negative time");
    for (const auto& m : a.cls.members) {
        if (sys.in_x_xi(m)) return project(sys, psi(sys, t, m));
    }
    throw DomainError("induced_psi: class of " + detail::describe(a.canonical) +
                      " has no representative in X_xi");
}

struct SemiconjugacyReport {
    bool passed = true;
    double max_deviation = 0.0;  ///< of d~(psi~_t(pi x), pi(psi_t x))
    double max_jump_gap = 0.0;   ///< d~ between pre- and post-jump states
    std::size_t evaluations = 0;
    std::size_t jumps_checked = 0;
    std::string witness;
};

/// Compares psi~ (built from `sys`) with the projected orbits of
/// `orbit_sys`, which is normally `sys` itself.
inline SemiconjugacyReport semiconjugacy_check(const ImpulsiveSystem& sys,
                                               const ImpulsiveSystem& orbit_sys,
                                               std::span<const Point> samples,
                                               std::span<const double> times, double tol) {
    SemiconjugacyReport rep;
    if (times.empty()) return rep;
    const double T = *std::max_element(times.begin(), times.end());
    for (const auto& x : samples) {
        const auto orbit = impulsive_orbit(orbit_sys, x, T);
        const auto px = project(sys, x);
        for (double t : times) {
            const double dev =
                quotient_dist(sys, induced_psi(sys, t, px), project(sys, orbit.at(t)));
            ++rep.evaluations;
            if (dev > rep.max_deviation) {
                rep.max_deviation = dev;
                if (dev > tol) {
                    rep.witness = "x=" + detail::describe(x) + " t=" + std::to_string(t) +
                                  " deviation=" + std::to_string(dev);
                }
            }
        }
        for (std::size_t n = 0; n < orbit.impulse_times().size(); ++n) {
            const Point before = orbit.pre_jump(n);
            const Point after = orbit.at(orbit.impulse_times()[n]);
            const double gap = quotient_dist(sys, project(sys, before), project(sys, after));
            ++rep.jumps_checked;
            if (gap > rep.max_jump_gap) {
                rep.max_jump_gap = gap;
                if (gap > kEquivTol && rep.witness.empty()) {
                    rep.witness = "jump at t=" + std::to_string(orbit.impulse_times()[n]) +
                                  " from " + detail::describe(before) + " to " +
                                  detail::describe(after) + " gap=" + std::to_string(gap);
                }
            }
        }
    }
    rep.passed = rep.max_deviation <= tol && rep.max_jump_gap <= kEquivTol;
    return rep;
}

inline SemiconjugacyReport semiconjugacy_check(const ImpulsiveSystem& sys,
                                               std::span<const Point> samples,
                                               std::span<const double> times, double tol) {
    return semiconjugacy_check(sys, sys, samples, times, tol);
}

/// Largest d~(psi~(s, pi y), psi~(t, pi x)) over random (s, y) with
/// |s - t| <= rho, d(x, y) <= rho and y in X_xi.
inline double psi_tilde_oscillation(const ImpulsiveSystem& sys, const Point& x, double t,
                                    double rho, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const auto& sp = sys.space();
    const auto centre = induced_psi(sys, t, project(sys, x));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double osc = 0.0;
    std::size_t used = 0;
    for (std::size_t tries = 0; used < n && tries < 50 * n; ++tries) {
        std::array<double, kMaxDim> c{};
        for (std::size_t i = 0; i < x.dim(); ++i) c[i] = x[i] + rho * unit(rng);
        std::span<const double> cs(c.data(), x.dim());
        if (!sp.bounds().contains(cs, 0.0)) continue;
        const Point y = sp.point(cs);
        if (sp.dist(x, y) > rho || !sys.in_x_xi(y)) continue;
        const double s = std::max(0.0, t + rho * unit(rng));
        osc = std::max(osc, quotient_dist(sys, induced_psi(sys, s, project(sys, y)), centre));
        ++used;
    }
    return osc;
}

/// Points that exercise the glueing: thirds drawn from D, from I(D) and
/// uniformly from X, interleaved in that order.
inline std::vector<Point> glued_mixture(const ImpulsiveSystem& sys, std::size_t n,
                                        std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> out;
    out.reserve(n);
    const auto& D = sys.d_set();
    for (std::size_t i = 0; i < n; ++i) {
        if (D.param && i % 3 != 2) {
            const double u = std::uniform_real_distribution<double>(D.param->lo, D.param->hi)(rng);
            const Point d = D.param->at(u);
            out.push_back(i % 3 == 0 ? d : sys.i_map()(d));
        } else {
            out.push_back(sample_uniform(sys.space(), rng));
        }
    }
    return out;
}

/// Candidate pool for the chain search: n_random uniform points followed by
/// n_d evenly spaced points of D.
inline std::vector<Point> chain_pool(const ImpulsiveSystem& sys, std::size_t n_random,
                                     std::size_t n_d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Point> pool;
    for (std::size_t i = 0; i < n_random; ++i) pool.push_back(sample_uniform(sys.space(), rng));
    for (const auto& d : sys.d_set().samples(n_d)) pool.push_back(d);
    return pool;
}

}  // namespace impflow
