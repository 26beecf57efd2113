#pragma once

// Admissible time functions: per-point increasing time sequences (impulse
// times, visits to I(D), section hits, merged refinements) and the sets
// J_{T,delta}(x) that remain after removing delta-windows around them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/hits.hpp"
#include "impflow/impulsive.hpp"
#include "impflow/spaces.hpp"

namespace impflow {

/// Entries closer than this are the same time.
inline constexpr double kTimeMatchTol = 1e-9;

enum class SequenceSource { impulse, visit, merged, section };

inline const char* to_string(SequenceSource s) {
    switch (s) {
        case SequenceSource::impulse: return "impulse";
        case SequenceSource::visit: return "visit";
        case SequenceSource::merged: return "merged";
        case SequenceSource::section: return "section";
    }
    return "?";
}

struct TimeSequence {
    std::vector<double> times;
    double eta = kInf;
    SequenceSource source = SequenceSource::impulse;

    /// Number of entries <= T.
    std::size_t count_until(double T) const {
        return static_cast<std::size_t>(
            std::upper_bound(times.begin(), times.end(), T) - times.begin());
    }

    /// Strictly increasing with gaps >= eta (within 1e-9).
    bool well_formed() const {
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] > 0.0)) return false;
            if (i > 0 && times[i] - times[i - 1] < eta - 1e-9) return false;
        }
        return true;
    }
};

using SequenceBuilder = std::function<TimeSequence(const Point&, double)>;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = false;
    bool hi_closed = true;

    bool contains(double t) const noexcept {
        return (lo_closed ? t >= lo : t > lo) && (hi_closed ? t <= hi : t < hi);
    }

    bool contains(const Interval& o) const noexcept {
        const bool lo_ok = lo < o.lo || (lo == o.lo && (lo_closed || !o.lo_closed));
        const bool hi_ok = hi > o.hi || (hi == o.hi && (hi_closed || !o.hi_closed));
        return lo_ok && hi_ok;
    }

    double length() const noexcept { return hi - lo; }
};

/// Sorted, pairwise disjoint union of intervals inside (0, T].
class IntervalSet {
public:
    IntervalSet() = default;
    IntervalSet(std::vector<Interval> intervals, double T)
        : intervals_(std::move(intervals)), T_(T) {}

    /// The whole of (0, T].
    static IntervalSet full(double T) { return IntervalSet({{0.0, T, false, true}}, T); }

    const std::vector<Interval>& intervals() const noexcept { return intervals_; }
    double horizon() const noexcept { return T_; }
    bool empty() const noexcept { return intervals_.empty(); }

    bool contains(double t) const noexcept {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), t,
                                   [](double v, const Interval& i) { return v < i.lo; });
        return it != intervals_.begin() && std::prev(it)->contains(t);
    }

    double total_length() const noexcept {
        double s = 0.0;
        for (const auto& i : intervals_) s += i.length();
        return s;
    }

    bool subset_of(const IntervalSet& other) const noexcept {
        return std::all_of(intervals_.begin(), intervals_.end(), [&](const Interval& i) {
            return std::any_of(other.intervals_.begin(), other.intervals_.end(),
                               [&](const Interval& j) { return j.contains(i); });
        });
    }

private:
    std::vector<Interval> intervals_;
    double T_ = 0.0;
};

/// J_{T,delta}(x) = (0, T] minus the open windows ]t_j - delta, t_j + delta[
/// around every listed time t_j <= T. Requires 0 < delta < eta/2.
inline IntervalSet j_set(const TimeSequence& seq, double T, double delta) {
    if (!(delta > 0.0) || !(delta < seq.eta / 2.0)) {
        throw DomainError("j_set: need 0 < delta < eta/2");
    }
    if (!(T > 0.0)) throw DomainError("j_set: T must be positive");
    std::vector<Interval> out;
    double lo = 0.0;
    bool lo_closed = false;
    for (double t : seq.times) {
        if (t > T) break;
        const double a = t - delta, b = t + delta;
        if (a > lo || (a == lo && lo_closed)) out.push_back({lo, a, lo_closed, true});
        if (b > lo) {
            lo = b;
            lo_closed = true;
        }
    }
    if (lo < T || (lo == T && lo_closed)) out.push_back({lo, T, lo_closed, true});
    return IntervalSet(std::move(out), T);
}

// ---------------------------------------------------------------------------
// Builders

inline TimeSequence impulse_sequence(const ImpulsiveSystem& sys, const Point& x, double T) {
    return {impulse_times(sys, x, T).times, sys.eta(), SequenceSource::impulse};
}

namespace detail {

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double t : v) {
        if (out.empty() || t - out.back() > kTimeMatchTol) out.push_back(t);
    }
    return out;
}

}  // namespace detail

/// theta(x): every t in (0, T] with psi_t(x) in I(D), including the
/// post-jump landings at impulse times.
inline TimeSequence visit_times_id(const ImpulsiveSystem& sys, const Point& x, double T) {
    TimeSequence seq{{}, sys.constants().s0, SequenceSource::visit};
    if (sys.landing_set().empty()) return seq;
    auto orbit = impulsive_orbit(sys, x, T);
    std::vector<double> t;
    for (const auto& s : orbit.segments()) {
        if (s.duration <= 0.0) continue;
        auto curve = [&](double u) { return sys.flow().evolve(u, s.start); };
        for (double h : all_hits(curve, sys.landing_set(), 0.0, s.duration, sys.scan_step())) {
            const double abs_t = s.start_time + h;
            if (abs_t > 0.0 && abs_t <= T) t.push_back(abs_t);
        }
    }
    for (double tn : orbit.impulse_times()) {
        if (tn <= T) t.push_back(tn);
    }
    seq.times = detail::sorted_unique(std::move(t));
    return seq;
}

/// Hit times of a marked cross-section along the continuous flow.
inline TimeSequence section_times(const Semiflow& flow, const ImpulseSet& section,
                                  const Point& x, double T, double eta) {
    auto curve = [&](double u) { return flow.evolve(u, x); };
    const double step = std::min(eta, 1.0) / 50.0;
    return {all_hits(curve, section, 0.0, T, step), eta, SequenceSource::section};
}

/// tau': tau and theta merged into one increasing sequence. Entries that
/// coincide within 1e-9 are collapsed, keeping the value from tau, so every
/// entry of tau survives verbatim.
inline TimeSequence refine_merge(const TimeSequence& tau, const TimeSequence& theta,
                                 double min_gap = 0.0) {
    std::vector<double> merged;
    merged.reserve(tau.times.size() + theta.times.size());
    std::size_t i = 0, j = 0;
    while (i < tau.times.size() || j < theta.times.size()) {
        if (j == theta.times.size() ||
            (i < tau.times.size() && tau.times[i] <= theta.times[j] + kTimeMatchTol)) {
            if (j < theta.times.size() && std::abs(tau.times[i] - theta.times[j]) <= kTimeMatchTol) ++j;
            merged.push_back(tau.times[i++]);
        } else {
            merged.push_back(theta.times[j++]);
        }
    }
    double eta = std::min(tau.eta, theta.eta);
    for (std::size_t k = 1; k < merged.size(); ++k) {
        const double gap = merged[k] - merged[k - 1];
        if (gap <= kTimeMatchTol || gap < min_gap) {
            std::ostringstream os;
            os.precision(12);
            os << "refine_merge: gap " << gap << " between " << merged[k - 1] << " and "
               << merged[k] << " is below the admissibility threshold";
            throw DomainError(os.str());
        }
        eta = std::min(eta, gap);
    }
    return {std::move(merged), eta, SequenceSource::merged};
}

/// Builder for tau' = refine_merge(impulse times, visit times).
inline SequenceBuilder merged_builder(const ImpulsiveSystem& sys) {
    return [&sys](const Point& x, double T) {
        return refine_merge(impulse_sequence(sys, x, T), visit_times_id(sys, x, T));
    };
}

inline SequenceBuilder impulse_builder(const ImpulsiveSystem& sys) {
    return [&sys](const Point& x, double T) { return impulse_sequence(sys, x, T); };
}

/// Builder for the hit times of a cross-section along the continuous flow.
inline SequenceBuilder section_builder(std::shared_ptr<const Semiflow> flow, ImpulseSet section,
                                       double eta) {
    return [flow = std::move(flow), section = std::move(section), eta](const Point& x, double T) {
        return section_times(*flow, section, x, T, eta);
    };
}

// ---------------------------------------------------------------------------
// Checks

struct AdmissibilityReport {
    bool passed = true;
    double min_first_on_z = kInf;
    double min_gap = kInf;
    double max_translation_error = 0.0;
    std::vector<std::string> failures;
};

/// Falsification test of admissibility on samples: tau_1 >= eta on Z,
/// consecutive gaps >= eta, and tau_n(psi_s x) = tau_n(x) - s for sampled
/// s < tau_1(x), all within 1e-9.
inline AdmissibilityReport check_admissible(const ImpulsiveSystem& sys,
                                            const SequenceBuilder& build,
                                            std::span<const Point> z,
                                            std::span<const Point> samples, double eta,
                                            double horizon) {
    if (samples.empty()) throw DomainError("check_admissible: empty sample");
    AdmissibilityReport rep;
    auto fail = [&](std::string msg) {
        rep.passed = false;
        rep.failures.push_back(std::move(msg));
    };

    for (const auto& p : z) {
        auto seq = build(p, horizon);
        if (seq.times.empty()) continue;
        rep.min_first_on_z = std::min(rep.min_first_on_z, seq.times.front());
        if (seq.times.front() < eta - 1e-9) {
            fail("tau_1 = " + std::to_string(seq.times.front()) + " < eta at " +
                 detail::describe(p));
        }
    }

    for (const auto& x : samples) {
        auto seq = build(x, horizon);
        for (std::size_t k = 1; k < seq.times.size(); ++k) {
            const double gap = seq.times[k] - seq.times[k - 1];
            rep.min_gap = std::min(rep.min_gap, gap);
            if (gap < eta - 1e-9) {
                fail("gap " + std::to_string(gap) + " < eta after t=" +
                     std::to_string(seq.times[k - 1]) + " at " + detail::describe(x));
            }
        }
        const double tau1 = seq.times.empty() ? horizon : seq.times.front();
        for (double frac : {0.25, 0.5, 0.75}) {
            const double s = frac * tau1;
            const Point y = psi(sys, s, x);
            auto shifted = build(y, horizon - s);
            const std::size_t n = seq.count_until(horizon - 1e-9);
            if (shifted.times.size() < n) {
                fail("translated sequence lost entries at " + detail::describe(x));
                continue;
            }
            for (std::size_t k = 0; k < n; ++k) {
                const double err = std::abs(shifted.times[k] - (seq.times[k] - s));
                rep.max_translation_error = std::max(rep.max_translation_error, err);
                if (err > 1e-9) {
                    fail("translation identity off by " + std::to_string(err) + " at " +
                         detail::describe(x));
                    break;
                }
            }
        }
    }
    return rep;
}

/// True when every entry <= T of coarse(x) appears in fine(x) for every
/// sampled x.
inline bool is_refinement(const SequenceBuilder& fine, const SequenceBuilder& coarse,
                          std::span<const Point> samples, double T) {
    for (const auto& x : samples) {
        const auto f = fine(x, T);
        const auto c = coarse(x, T);
        for (double t : c.times) {
            if (t > T) break;
            auto it = std::lower_bound(f.times.begin(), f.times.end(), t - kTimeMatchTol);
            if (it == f.times.end() || std::abs(*it - t) > kTimeMatchTol) return false;
        }
    }
    return true;
}

/// One CSV row: point coordinates separated by spaces, then the times.
inline std::string sequence_csv_row(const Point& x, const TimeSequence& seq) {
    std::string row;
    char buf[32];
    for (std::size_t i = 0; i < x.dim(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", x[i]);
        row += (i ? " " : "");
        row += buf;
    }
    for (double t : seq.times) {
        std::snprintf(buf, sizeof buf, ",%.12g", t);
        row += buf;
    }
    return row;
}

}  // namespace impflow
