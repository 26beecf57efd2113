#pragma once

// Target sets crossed by flow lines, and the event locator that finds the
// crossings: sign-change bracketing on a scan grid, then bisection.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/spaces.hpp"

namespace impflow {

/// Membership band used for D and I(D).
inline constexpr double kSetBand = 1e-9;
/// Hit times are refined until the bracket is narrower than this.
inline constexpr double kBisectWidth = 1e-12;
/// A crossing closer than this to the scan origin belongs to the origin.
inline constexpr double kStartGuard = 1e-9;
/// Accuracy promised for reported hit times.
inline constexpr double kHitTol = 1e-10;

/// Compact set met by flow lines (D, I(D) or a marked cross-section).
///
/// `crossing` is a scalar function of the state whose sign flips when a
/// flow line passes through the set transversally. It may also vanish away
/// from the set; zeros are only accepted as hits after a membership test.
struct ImpulseSet {
    struct Parametrization {
        double lo = 0.0;
        double hi = 1.0;
        std::function<Point(double)> at;
    };

    std::string name;
    std::function<bool(const Point&, double)> member;
    std::function<double(const Point&)> crossing;
    std::optional<Parametrization> param;
    std::size_t dimension = 0;
    double band = kSetBand;

    static ImpulseSet empty_set(std::string name = "empty") {
        ImpulseSet s;
        s.name = std::move(name);
        return s;
    }

    bool empty() const noexcept { return !member; }

    bool contains(const Point& p) const { return member && member(p, band); }

    /// n evenly spaced points of the parametrization (endpoints included).
    std::vector<Point> samples(std::size_t n) const {
        std::vector<Point> out;
        if (!param || n == 0) return out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = n == 1 ? param->lo
                                    : param->lo + (param->hi - param->lo) *
                                                      static_cast<double>(i) /
                                                      static_cast<double>(n - 1);
            out.push_back(param->at(u));
        }
        return out;
    }
};

namespace detail {

inline int sign_of(double v) noexcept { return (v > 0.0) - (v < 0.0); }

inline std::string describe(const Point& p) {
    std::ostringstream os;
    os.precision(12);
    os << '(';
    for (std::size_t i = 0; i < p.dim(); ++i) os << (i ? ", " : "") << p[i];
    os << ')';
    return os.str();
}

}  // namespace detail

/// Smallest t in (t_begin, t_end] with curve(t) in `set`, or nullopt.
///
/// `curve` maps time to state and must be continuous on [t_begin, t_end].
/// A local minimum of |crossing| that reaches zero on the set without a
/// sign change is a grazing contact and raises GrazingError.
template <class Curve>
std::optional<double> next_hit(const Curve& curve, const ImpulseSet& set, double t_begin,
                               double t_end, double step) {
    if (set.empty() || !(t_end > t_begin)) return std::nullopt;
    if (!(step > 0.0)) throw DomainError("next_hit: scan step must be positive");

    auto g = [&](double t) { return set.crossing(curve(t)); };

    auto bisect = [&](double a, double b, double ga) {
        for (int it = 0; it < 200 && b - a > kBisectWidth; ++it) {
            const double m = 0.5 * (a + b);
            const double gm = g(m);
            if (gm == 0.0) return m;
            if (detail::sign_of(gm) == detail::sign_of(ga)) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    };

    auto graze_check = [&](double a, double b) {
        // golden-section minimisation of |g| on [a, b]
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - r * (b - a), d = a + r * (b - a);
        double fc = std::abs(g(c)), fd = std::abs(g(d));
        for (int it = 0; it < 80 && b - a > kBisectWidth; ++it) {
            if (fc < fd) {
                b = d; d = c; fd = fc;
                c = b - r * (b - a);
                fc = std::abs(g(c));
            } else {
                a = c; c = d; fc = fd;
                d = a + r * (b - a);
                fd = std::abs(g(d));
            }
        }
        const double tm = 0.5 * (a + b);
        const Point pm = curve(tm);
        if (std::abs(set.crossing(pm)) <= set.band && set.contains(pm)) {
            throw GrazingError("grazing contact with " + set.name + " at t=" +
                                   std::to_string(tm) + ", point " + detail::describe(pm),
                               tm);
        }
    };

    double t_prev2 = t_begin, g_prev2 = std::numeric_limits<double>::quiet_NaN();
    double t_prev = t_begin, g_prev = g(t_begin);
    for (long k = 1;; ++k) {
        const double t = std::min(t_begin + static_cast<double>(k) * step, t_end);
        const double gt = g(t);

        const int s_prev = detail::sign_of(g_prev), s_t = detail::sign_of(gt);
        if (s_prev != 0 && s_t != 0 && s_prev != s_t) {
            const double th = bisect(t_prev, t, g_prev);
            if (th - t_begin > kStartGuard && set.contains(curve(th))) return th;
        } else if (s_t == 0 && t - t_begin > kStartGuard && set.contains(curve(t))) {
            // exact zero on the grid: crossing if the sign flips across it
            const double probe = std::min(t + 1e-3 * step, t_end);
            const int s_next = detail::sign_of(g(probe));
            if (s_prev == 0 || s_next == 0 || s_next != s_prev || probe == t) return t;
            throw GrazingError("grazing contact with " + set.name + " at t=" + std::to_string(t), t);
        }

        if (!std::isnan(g_prev2) && s_prev != 0 && s_prev == detail::sign_of(g_prev2) &&
            s_prev == s_t && std::abs(g_prev) < std::abs(g_prev2) &&
            std::abs(g_prev) <= std::abs(gt)) {
            graze_check(t_prev2, t);
        }

        if (t >= t_end) return std::nullopt;
        t_prev2 = t_prev;
        g_prev2 = g_prev;
        t_prev = t;
        g_prev = gt;
    }
}

/// Every hit time in (t_begin, t_end], increasing.
template <class Curve>
std::vector<double> all_hits(const Curve& curve, const ImpulseSet& set, double t_begin,
                             double t_end, double step) {
    std::vector<double> hits;
    double from = t_begin;
    while (auto h = next_hit(curve, set, from, t_end, step)) {
        hits.push_back(*h);
        from = *h;
    }
    return hits;
}

}  // namespace impflow
