#pragma once

// Impulsive dynamical systems (X, phi, D, I): trajectories that follow the
// continuous flow until they meet D and are then reset by I.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/hits.hpp"
#include "impflow/sampling.hpp"
#include "impflow/spaces.hpp"

namespace impflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ImpulseMap {
    std::function<Point(const Point&)> apply;
    double lipschitz_bound = 1.0;

    Point operator()(const Point& p) const { return apply(p); }
};

/// Declared constants of a system. Infinite values are allowed when D is
/// empty (no impulses, no gap).
struct SystemConstants {
    double xi0 = 0.5;  ///< half-tube length
    double eta = kInf; ///< minimal gap between impulse times
    double a = kInf;   ///< dist(D, I(D))
    double s0 = kInf;  ///< minimal return time to I(D)
    double xi = 0.1;   ///< tube width defining X_xi; 0 < xi < min{eta/4, xi0/2, a/2}
};

class ImpulsiveSystem {
public:
    ImpulsiveSystem(std::string name, MetricSpace space, Semiflow flow, ImpulseSet d_set,
                    ImpulseSet landing, ImpulseMap i_map, SystemConstants constants,
                    double hit_horizon)
        : name_(std::move(name)),
          space_(std::make_shared<const MetricSpace>(std::move(space))),
          flow_(std::make_shared<const Semiflow>(std::move(flow))),
          d_set_(std::move(d_set)),
          landing_(std::move(landing)),
          i_map_(std::move(i_map)),
          k_(constants),
          hit_horizon_(hit_horizon) {
        const double bound = std::min({k_.eta / 4.0, k_.xi0 / 2.0, k_.a / 2.0});
        if (!(k_.xi > 0.0 && k_.xi < bound)) {
            std::ostringstream os;
            os << "system '" << name_ << "': xi=" << k_.xi
               << " violates 0 < xi < min{eta/4, xi0/2, a/2} = " << bound;
            throw DomainError(os.str());
        }
        if (!d_set_.empty() && !i_map_.apply) {
            throw DomainError("system '" + name_ + "': nonempty D needs an impulse map");
        }
        if (!(hit_horizon_ > 0.0)) throw DomainError("hit horizon must be positive");
    }

    const std::string& name() const noexcept { return name_; }
    const MetricSpace& space() const noexcept { return *space_; }
    const Semiflow& flow() const noexcept { return *flow_; }
    std::shared_ptr<const Semiflow> flow_ptr() const noexcept { return flow_; }
    const ImpulseSet& d_set() const noexcept { return d_set_; }
    const ImpulseSet& landing_set() const noexcept { return landing_; }
    const ImpulseMap& i_map() const noexcept { return i_map_; }
    const SystemConstants& constants() const noexcept { return k_; }
    double xi() const noexcept { return k_.xi; }
    double eta() const noexcept { return k_.eta; }
    double hit_horizon() const noexcept { return hit_horizon_; }
    bool has_impulses() const noexcept { return !d_set_.empty(); }

    /// Scan step of the event locator: eta-separated hits never share a cell.
    double scan_step() const noexcept { return std::min(k_.eta, 1.0) / 50.0; }

    bool in_d(const Point& p) const { return d_set_.contains(p); }
    bool in_landing(const Point& p) const { return landing_.contains(p); }

    /// Membership in the open tube D_w = {phi_t(d): d in D, 0 < t < w},
    /// decided by flowing backwards for time w.
    bool in_tube(const Point& p, double width) const {
        if (d_set_.empty() || in_d(p)) return false;
        auto back = [&](double t) { return flow_->evolve_backward(t, p); };
        auto h = next_hit(back, d_set_, 0.0, width, scan_step());
        return h && *h < width - kSetBand;
    }

    /// X_xi = X \ (D_xi ∪ D).
    bool in_x_xi(const Point& p) const {
        return space_->contains(p) && !in_d(p) && !in_tube(p, k_.xi);
    }

private:
    std::string name_;
    std::shared_ptr<const MetricSpace> space_;
    std::shared_ptr<const Semiflow> flow_;
    ImpulseSet d_set_;
    ImpulseSet landing_;
    ImpulseMap i_map_;
    SystemConstants k_;
    double hit_horizon_;
};

/// Piecewise-continuous trajectory gamma_x on [0, horizon].
class ImpulsiveOrbit {
public:
    struct Segment {
        double start_time;
        Point start;
        double duration;
    };

    ImpulsiveOrbit(std::shared_ptr<const Semiflow> flow, std::vector<Segment> segments,
                   std::vector<double> impulse_times, double horizon)
        : flow_(std::move(flow)),
          segments_(std::move(segments)),
          impulse_times_(std::move(impulse_times)),
          horizon_(horizon) {}

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    const std::vector<double>& impulse_times() const noexcept { return impulse_times_; }
    double horizon() const noexcept { return horizon_; }

    /// gamma_x(t); right-continuous, so at an impulse time this is the
    /// post-jump state. Impulse times are known to kHitTol, and times that
    /// close below one already count as after the jump.
    Point at(double t) const {
        if (!(t >= 0.0) || t > horizon_ + 1e-12) {
            throw DomainError("orbit evaluated outside [0, horizon]");
        }
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t + kHitTol,
                                   [](double v, const Segment& s) { return v < s.start_time; });
        const Segment& s = *std::prev(it);
        return flow_->evolve(std::max(0.0, t - s.start_time), s.start);
    }

    Point operator()(double t) const { return at(t); }

    /// Left limit at the n-th impulse (0-based): the point of D that was hit.
    Point pre_jump(std::size_t n) const {
        const Segment& s = segments_.at(n);
        return flow_->evolve(s.duration, s.start);
    }

private:
    std::shared_ptr<const Semiflow> flow_;
    std::vector<Segment> segments_;
    std::vector<double> impulse_times_;
    double horizon_;
};

/// tau_1 restricted to (0, horizon]: first time t > 0 with phi_t(x) in D.
/// A point of D has tau_1 equal to its next return.
inline std::optional<double> first_hit_time(const ImpulsiveSystem& sys, const Point& x,
                                            double horizon) {
    if (!(horizon > 0.0)) throw DomainError("first_hit_time: horizon must be positive");
    const Semiflow& flow = sys.flow();
    auto curve = [&](double t) { return flow.evolve(t, x); };
    return next_hit(curve, sys.d_set(), 0.0, horizon, sys.scan_step());
}

/// tau*(x): tau_1(x) on X_xi, 0 on D, +inf when D is never reached within
/// the system's hit horizon.
inline double tau_star(const ImpulsiveSystem& sys, const Point& x) {
    if (!sys.space().contains(x)) throw DomainError("tau_star: point outside X");
    if (sys.in_d(x)) return 0.0;
    if (sys.in_tube(x, sys.xi())) throw DomainError("tau_star: point lies in D_xi");
    return first_hit_time(sys, x, sys.hit_horizon()).value_or(kInf);
}

inline ImpulsiveOrbit impulsive_orbit(const ImpulsiveSystem& sys, const Point& x, double T) {
    if (!(T > 0.0)) throw DomainError("impulsive_orbit: T must be positive");

    std::vector<ImpulsiveOrbit::Segment> segments;
    std::vector<double> times;
    const std::size_t max_impulses =
        sys.has_impulses() ? static_cast<std::size_t>(std::ceil(T / sys.eta())) + 1 : 0;

    double t0 = 0.0;
    Point p = x;
    for (;;) {
        // a hit just past T is a hit at T within the time tolerance
        auto h = first_hit_time(sys, p, T - t0 + kHitTol);
        if (!h) {
            segments.push_back({t0, p, T - t0});
            break;
        }
        segments.push_back({t0, p, *h});
        const Point hit = sys.flow().evolve(*h, p);
        t0 = std::min(t0 + *h, T);
        if (!times.empty() && t0 - times.back() < sys.eta() - 1e-9) {
            std::ostringstream os;
            os.precision(12);
            os << "impulse gap " << t0 - times.back() << " below eta=" << sys.eta()
               << " at t=" << t0;
            throw ConsistencyError(os.str());
        }
        times.push_back(t0);
        if (times.size() > max_impulses) {
            throw ConsistencyError("more impulses than the admissibility gap allows before T");
        }
        p = sys.i_map()(hit);
        if (t0 >= T) {
            segments.push_back({t0, p, 0.0});
            break;
        }
    }
    return ImpulsiveOrbit(sys.flow_ptr(), std::move(segments), std::move(times), T);
}

/// psi(t, x) = gamma_x(t).
inline Point psi(const ImpulsiveSystem& sys, double t, const Point& x) {
    if (!(t >= 0.0)) throw DomainError("psi: negative time");
    if (t == 0.0) return x;
    return impulsive_orbit(sys, x, t).at(t);
}

struct ImpulseTimes {
    std::vector<double> times;
    std::size_t n_T = 0;  ///< max{n : tau_n(x) <= T}, 0 when there is none
};

inline ImpulseTimes impulse_times(const ImpulsiveSystem& sys, const Point& x, double T) {
    auto orbit = impulsive_orbit(sys, x, T);
    ImpulseTimes out;
    out.times = orbit.impulse_times();
    out.n_T = out.times.size();
    return out;
}

// ---------------------------------------------------------------------------
// Hypothesis checks

enum class CheckStatus { pass, fail, assumed, skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::assumed: return "assumed";
        case CheckStatus::skipped: return "skipped";
    }
    return "?";
}

struct ConditionResult {
    std::string id;
    std::string description;
    CheckStatus status = CheckStatus::pass;
    double measured = 0.0;
    std::string witness;
};

/// Sampling-based falsification: "pass" means no counterexample was found.
struct ConditionReport {
    std::vector<ConditionResult> items;
    double gap_a = kInf;
    double lipschitz = 0.0;
    std::uint64_t seed = 0;

    bool all_passed() const {
        return std::none_of(items.begin(), items.end(),
                            [](const auto& c) { return c.status == CheckStatus::fail; });
    }

    const ConditionResult* find(const std::string& id) const {
        for (const auto& c : items) {
            if (c.id == id) return &c;
        }
        return nullptr;
    }
};

namespace detail {

inline std::string pair_witness(const Point& p, const Point& q) {
    return describe(p) + " / " + describe(q);
}

/// Samples of the flow tube {phi_t(x): 0 < t < w} at m interior times.
inline std::vector<Point> tube_samples(const Semiflow& flow, const Point& x, double w,
                                       std::size_t m) {
    std::vector<Point> out;
    out.reserve(m);
    for (std::size_t i = 1; i <= m; ++i) {
        out.push_back(flow.evolve(w * static_cast<double>(i) / static_cast<double>(m + 1), x));
    }
    return out;
}

inline ConditionResult tube_disjointness(const ImpulsiveSystem& sys, std::vector<Point> base,
                                         std::string id, std::string description) {
    ConditionResult r{std::move(id), std::move(description)};
    const auto& space = sys.space();
    const double w = sys.constants().xi0;
    std::vector<std::vector<Point>> tubes;
    for (const auto& b : base) tubes.push_back(tube_samples(sys.flow(), b, w, 16));
    double min_sep = kInf;
    for (std::size_t i = 0; i < base.size(); ++i) {
        for (std::size_t j = i + 1; j < base.size(); ++j) {
            if (space.dist(base[i], base[j]) <= kSetBand) continue;
            for (const auto& p : tubes[i]) {
                for (const auto& q : tubes[j]) {
                    const double d = space.dist(p, q);
                    if (d < min_sep) {
                        min_sep = d;
                        r.witness = pair_witness(base[i], base[j]);
                    }
                }
            }
        }
    }
    r.measured = min_sep;
    r.status = min_sep > kSetBand ? CheckStatus::pass : CheckStatus::fail;
    return r;
}

}  // namespace detail

/// Numerical falsification of the standing hypotheses on a seeded sample:
/// I(D) ∩ D = ∅ with gap a, the half-tube condition, transversality of I(D),
/// the 1-Lipschitz property of I, and continuity of tau*.
inline ConditionReport check_conditions(const ImpulsiveSystem& sys, std::size_t n_samples,
                                        std::uint64_t seed) {
    if (n_samples < 2) throw DomainError("check_conditions: need at least two samples");
    ConditionReport report;
    report.seed = seed;
    Rng rng(seed);
    const auto& space = sys.space();
    const auto& k = sys.constants();

    if (!sys.has_impulses() || !sys.d_set().param) {
        report.items.push_back({"gap", "I(D) ∩ D = ∅", CheckStatus::skipped, kInf,
                                "D is empty or has no parametrization"});
        return report;
    }

    const auto d_pts = sys.d_set().samples(n_samples);
    std::vector<Point> i_pts;
    for (const auto& d : d_pts) i_pts.push_back(sys.i_map()(d));

    // (i) I(D) ∩ D = ∅ and the measured gap a
    {
        ConditionResult r{"gap", "I(D) ∩ D = ∅ with gap a"};
        double a = kInf;
        for (std::size_t i = 0; i < d_pts.size(); ++i) {
            if (sys.in_d(i_pts[i])) {
                r.status = CheckStatus::fail;
                r.witness = "I" + detail::describe(d_pts[i]) + " = " +
                            detail::describe(i_pts[i]) + " lies in D";
            }
            for (const auto& q : i_pts) {
                const double dd = space.dist(d_pts[i], q);
                if (dd < a) {
                    a = dd;
                    if (r.status != CheckStatus::fail) r.witness = detail::pair_witness(d_pts[i], q);
                }
            }
        }
        r.measured = a;
        report.gap_a = a;
        if (r.status != CheckStatus::fail && (!(a > kSetBand) || std::abs(a - k.a) > 1e-6)) {
            r.status = CheckStatus::fail;
            std::ostringstream os;
            os.precision(12);
            os << "measured a=" << a << " vs declared a=" << k.a << " at " << r.witness;
            r.witness = os.str();
        }
        report.items.push_back(std::move(r));
    }

    report.items.push_back({"tube_open", "D_xi is open for 0 < xi <= xi0",
                            CheckStatus::assumed, 0.0,
                            "openness cannot be decided from finitely many samples"});

    // (ii) orbits enter D_xi0 only through D
    {
        ConditionResult r{"tube_entry", "orbits enter D_xi0 only after meeting D"};
        if (!sys.flow().reversible()) {
            r.status = CheckStatus::skipped;
            r.witness = "flow has no reverse evaluator";
        } else {
            const double H = std::min(sys.hit_horizon(), 10.0);
            const double step = sys.scan_step();
            std::size_t tested = 0;
            for (std::size_t s = 0; s < n_samples && r.status == CheckStatus::pass; ++s) {
                const Point x = sample_uniform(space, rng);
                if (sys.in_d(x) || sys.in_tube(x, k.xi0)) continue;
                for (double t = step; t <= H; t += step) {
                    const Point y = sys.flow().evolve(t, x);
                    if (!sys.in_tube(y, k.xi0)) continue;
                    ++tested;
                    if (!first_hit_time(sys, x, t)) {
                        r.status = CheckStatus::fail;
                        r.witness = detail::describe(x) + " enters the tube at t=" +
                                    std::to_string(t) + " without meeting D";
                    }
                    break;
                }
            }
            r.measured = static_cast<double>(tested);
        }
        report.items.push_back(std::move(r));
    }

    // (iii) tubes from distinct points of D, resp. I(D), are disjoint
    {
        const std::size_t m = std::min<std::size_t>(n_samples, 48);
        const auto base = sys.d_set().samples(m);
        std::vector<Point> ibase;
        for (const auto& b : base) ibase.push_back(sys.i_map()(b));
        report.items.push_back(detail::tube_disjointness(
            sys, base, "tube_disjoint_d", "flow tubes of length xi0 from D are disjoint"));
        report.items.push_back(detail::tube_disjointness(
            sys, ibase, "tube_disjoint_id", "flow tubes of length xi0 from I(D) are disjoint"));
    }

    // (iv) return time to I(D) is at least s0
    {
        ConditionResult r{"return_time_id", "orbits leaving I(D) stay away from it for s0"};
        double min_ret = kInf;
        for (const auto& p : i_pts) {
            const double horizon = std::min(sys.hit_horizon(), std::isfinite(k.s0) ? 2.0 * k.s0 + 1.0 : 10.0);
            const auto tau1 = first_hit_time(sys, p, horizon);
            const double until = tau1.value_or(horizon);
            auto curve = [&](double t) { return sys.flow().evolve(t, p); };
            auto vis = next_hit(curve, sys.landing_set(), 0.0, until, sys.scan_step());
            double ret = kInf;
            if (vis && *vis < until) ret = *vis;
            else if (tau1) ret = *tau1;  // post-jump landing on I(D)
            if (ret < min_ret) {
                min_ret = ret;
                r.witness = detail::describe(p);
            }
        }
        r.measured = min_ret;
        r.status = min_ret >= k.s0 - 1e-9 ? CheckStatus::pass : CheckStatus::fail;
        report.items.push_back(std::move(r));
    }

    // (v) I is 1-Lipschitz
    {
        ConditionResult r{"lipschitz", "I is 1-Lipschitz on D"};
        double lip = 0.0;
        for (std::size_t i = 0; i < d_pts.size(); ++i) {
            for (std::size_t j = i + 1; j < d_pts.size(); ++j) {
                const double dd = space.dist(d_pts[i], d_pts[j]);
                if (dd <= kSetBand) continue;
                const double ratio = space.dist(i_pts[i], i_pts[j]) / dd;
                if (ratio > lip) {
                    lip = ratio;
                    r.witness = detail::pair_witness(d_pts[i], d_pts[j]);
                }
            }
        }
        r.measured = lip;
        report.lipschitz = lip;
        r.status = lip <= 1.0 + 1e-9 && lip <= sys.i_map().lipschitz_bound + 1e-9
                       ? CheckStatus::pass
                       : CheckStatus::fail;
        report.items.push_back(std::move(r));
    }

    // (vi) continuity probe for tau* on X_xi ∪ D
    {
        ConditionResult r{"tau_star_continuity",
                          "oscillation of tau* shrinks with the neighbourhood radius"};
        if (!sys.flow().reversible()) {
            r.status = CheckStatus::skipped;
            r.witness = "flow has no reverse evaluator";
        } else {
            std::vector<Point> base;
            const auto dp = sys.d_set().samples(8);
            base.insert(base.end(), dp.begin(), dp.end());
            while (base.size() < 32) {
                Point p = sample_uniform(space, rng);
                if (sys.in_x_xi(p)) base.push_back(p);
            }
            auto oscillation = [&](double rho, std::string& where) {
                double osc = 0.0;
                std::normal_distribution<double> nd(0.0, 1.0);
                std::uniform_real_distribution<double> ud(0.0, 1.0);
                for (const auto& p : base) {
                    const double tp = tau_star(sys, p);
                    int found = 0;
                    for (int tries = 0; found < 8 && tries < 200; ++tries) {
                        std::array<double, kMaxDim> c{};
                        double norm = 0.0;
                        for (std::size_t d = 0; d < p.dim(); ++d) {
                            c[d] = nd(rng);
                            norm += c[d] * c[d];
                        }
                        const double scale = rho * ud(rng) / std::sqrt(norm);
                        for (std::size_t d = 0; d < p.dim(); ++d) c[d] = p[d] + scale * c[d];
                        Point q(p.space(), std::span<const double>(c.data(), p.dim()));
                        if (!space.contains(q, 0.0) || !(sys.in_d(q) || sys.in_x_xi(q))) continue;
                        ++found;
                        const double diff = std::abs(tau_star(sys, q) - tp);
                        if (diff > osc) {
                            osc = diff;
                            where = detail::pair_witness(p, q);
                        }
                    }
                }
                return osc;
            };
            std::string w_big, w_small;
            const double big = oscillation(1e-2, w_big);
            const double small = oscillation(1e-3, w_small);
            r.measured = small;
            r.witness = w_small;
            r.status = small <= 0.5 * big + 1e-9 ? CheckStatus::pass : CheckStatus::fail;
        }
        report.items.push_back(std::move(r));
    }

    return report;
}

}  // namespace impflow
