#pragma once

// Built-in systems with known behaviour:
//   annulus    1 <= r <= 2, unit rotation, D the segment {(r,0)},
//              I(r,0) = (-1/2 - r/2, 0)
//   rotation   the same rotation without impulses
//   doubling   unit-roof suspension of angle doubling on the circle

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/hits.hpp"
#include "impflow/impulsive.hpp"
#include "impflow/sampling.hpp"
#include "impflow/spaces.hpp"

namespace impflow {

inline constexpr double kPi = std::numbers::pi;

enum class FactOrigin { closed_form, derived, elementary };

inline const char* to_string(FactOrigin o) {
    switch (o) {
        case FactOrigin::closed_form: return "closed_form";
        case FactOrigin::derived: return "derived";
        case FactOrigin::elementary: return "elementary";
    }
    return "?";
}

struct AnalyticFact {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    FactOrigin origin = FactOrigin::derived;
    std::string note;
};

using Sampler = std::function<std::vector<Point>(std::size_t, std::uint64_t)>;

struct ExampleSpec {
    std::string name;
    std::string description;
    ImpulsiveSystem system;
    std::optional<ImpulseSet> section;  ///< marked cross-section for tau-mode
    double section_eta = kInf;          ///< gap between section hits
    Sampler sample;                     ///< deterministic entropy sample
    std::vector<AnalyticFact> facts;

    const AnalyticFact& fact(const std::string& key) const {
        for (const auto& f : facts) {
            if (f.name == key) return f;
        }
        throw DomainError("example '" + name + "' has no fact '" + key + "'");
    }
};

// ---------------------------------------------------------------------------
// Annulus pieces

inline constexpr SpaceId kAnnulusId{1};
inline constexpr SpaceId kSuspensionId{2};

inline MetricSpace annulus_space() {
    Region r;
    r.box = {{-2.0, 2.0}, {-2.0, 2.0}};
    r.constraint = [](std::span<const double> c) {
        const double rho = std::hypot(c[0], c[1]);
        return std::max(1.0 - rho, rho - 2.0);
    };
    return MetricSpace("annulus", kAnnulusId, std::move(r),
                       [](std::span<const double> a, std::span<const double> b) {
                           return std::hypot(a[0] - b[0], a[1] - b[1]);
                       });
}

inline Point rotate(const Point& p, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Point(p.space(), {c * p[0] - s * p[1], s * p[0] + c * p[1]});
}

/// r' = 0, theta' = 1.
inline Semiflow rotation_flow() {
    return Semiflow(
        "unit-speed rotation r'=0, theta'=1",
        [](double t, const Point& p) { return rotate(p, t); },
        [](double t, const Point& p) { return rotate(p, -t); });
}

/// Horizontal segment {(x, 0): lo <= x <= hi}, crossed by the rotation
/// through the sign of y.
inline ImpulseSet horizontal_segment(std::string name, double lo, double hi) {
    ImpulseSet s;
    s.name = std::move(name);
    s.member = [lo, hi](const Point& p, double band) {
        return std::abs(p[1]) <= band && p[0] >= lo - band && p[0] <= hi + band;
    };
    s.crossing = [](const Point& p) { return p[1]; };
    s.param = ImpulseSet::Parametrization{
        lo, hi, [lo, hi](double u) { return Point(kAnnulusId, {std::clamp(u, lo, hi), 0.0}); }};
    s.dimension = 1;
    return s;
}

/// Annulus rotation with D = {(r,0)} and I(r,0) = (-offset - slope*r, 0).
/// The built-in example is offset = slope = 1/2.
inline ImpulsiveSystem annulus_family(std::string name, double offset, double slope) {
    const double near = offset + slope, far = offset + 2.0 * slope;
    if (!(slope > 0.0) || near < 1.0 - 1e-12 || far > 2.0 + 1e-12) {
        throw DomainError("annulus family: I(D) must lie on the left half of the annulus "
                          "(need slope > 0, offset + slope >= 1, offset + 2 slope <= 2)");
    }
    ImpulseMap I;
    I.apply = [offset, slope](const Point& p) {
        return Point(p.space(), {-offset - slope * std::hypot(p[0], p[1]), 0.0});
    };
    I.lipschitz_bound = slope;
    SystemConstants k;
    k.xi0 = 0.5;
    k.eta = kPi;
    k.a = 1.0 + near;
    k.s0 = kPi;
    k.xi = 0.2;
    return ImpulsiveSystem(std::move(name), annulus_space(), rotation_flow(),
                           horizontal_segment("D", 1.0, 2.0),
                           horizontal_segment("I(D)", -far, -near), std::move(I), k,
                           2.0 * kPi + 1.0);
}

/// Polar grid with about n points at roughly even spacing; angles are offset
/// by half a step so that none lies on D.
inline std::vector<Point> annulus_grid(std::size_t n) {
    const auto radii = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n) / (3.0 * kPi)))));
    const std::size_t per = std::max<std::size_t>(1, n / radii);
    std::vector<Point> out;
    out.reserve(per * radii);
    for (std::size_t j = 0; j < per; ++j) {
        const double th = 2.0 * kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(per);
        for (std::size_t i = 0; i < radii; ++i) {
            const double r = 1.0 + (static_cast<double>(i) + 0.5) / static_cast<double>(radii);
            out.push_back(Point(kAnnulusId, {r * std::cos(th), r * std::sin(th)}));
        }
    }
    return out;
}

inline ExampleSpec build_annulus() {
    ExampleSpec ex{
        "annulus",
        "annulus 1<=r<=2 under unit rotation; hitting D={(r,0)} resets to I(r,0)=(-1/2-r/2,0)",
        annulus_family("annulus", 0.5, 0.5),
        std::nullopt,
        kInf,
        [](std::size_t n, std::uint64_t) { return annulus_grid(n); },
        {}};
    ex.facts = {
        {"lipschitz", 0.5, 1e-9, FactOrigin::closed_form, "Lipschitz constant of I"},
        {"gap_a", 2.0, 1e-6, FactOrigin::derived, "dist(D, I(D)) = |(1,0) - (-1,0)|"},
        {"eta", kPi, 1e-9, FactOrigin::derived, "return from angle pi to angle 2pi"},
        {"s0", kPi, 1e-9, FactOrigin::derived, "return time to I(D)"},
        {"xi0", 0.5, 0.0, FactOrigin::closed_form, "half-tube length"},
        {"xi", 0.2, 0.0, FactOrigin::elementary, "below min{pi/4, 1/4, 1}"},
        {"tau_star_at_3pi_2", kPi / 2.0, 1e-9, FactOrigin::closed_form,
         "tau*(x) = 2pi - theta on X_xi"},
        {"omega_radius", 1.0, 1e-6, FactOrigin::closed_form,
         "omega-limit set is the lower unit semicircle"},
        {"h_top_tau", 0.0, 0.05, FactOrigin::closed_form, "tau-entropy of psi"},
    };
    return ex;
}

inline ExampleSpec build_rotation() {
    SystemConstants k;
    k.xi0 = 0.5;
    k.eta = 2.0 * kPi;
    k.xi = 0.2;
    ImpulsiveSystem sys("rotation", annulus_space(), rotation_flow(), ImpulseSet::empty_set("D"),
                        ImpulseSet::empty_set("I(D)"), ImpulseMap{}, k, 2.0 * kPi + 1.0);
    ExampleSpec ex{"rotation",
                   "annulus 1<=r<=2 under unit rotation, no impulses",
                   std::move(sys),
                   horizontal_segment("theta=0", 1.0, 2.0),
                   2.0 * kPi,
                   [](std::size_t n, std::uint64_t) { return annulus_grid(n); },
                   {}};
    ex.facts = {
        {"period", 2.0 * kPi, 1e-12, FactOrigin::elementary, "evolve(2pi, x) = x"},
        {"h_top", 0.0, 0.02, FactOrigin::elementary, "isometric flow"},
    };
    return ex;
}

// ---------------------------------------------------------------------------
// Doubling suspension
//
// State (theta, s) in [0,1)^2 with (theta, 1) glued to (2 theta, 0). The
// flow raises s at unit speed and doubles theta at each pass through the
// roof. The distance is the length of the shortest path when a horizontal
// step at height s costs 2^s times the circle distance and a vertical step
// costs its length, minimised over paths crossing the roof at most once
// from each end:
//   A  direct             |sp - sq| + 2^min(sp,sq) dS(tp, tq)
//   B  p over the roof    (1 - sp) + sq + 2^(sp-1) dS(2tp, tq)
//   C  q over the roof    (1 - sq) + sp + 2^(sq-1) dS(2tq, tp)
//   D  both over          (1 - sp) + (1 - sq) + 2^(min(sp,sq)-1) dS(2tp, 2tq)

inline double circle_dist(double a, double b) {
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

inline double frac(double v) { return v - std::floor(v); }

inline double suspension_dist(std::span<const double> p, std::span<const double> q) {
    const double tp = p[0], sp = p[1], tq = q[0], sq = q[1];
    const double lo = std::min(sp, sq);
    const double A = std::abs(sp - sq) + std::exp2(lo) * circle_dist(tp, tq);
    const double B = (1.0 - sp) + sq + std::exp2(sp - 1.0) * circle_dist(frac(2.0 * tp), tq);
    const double C = (1.0 - sq) + sp + std::exp2(sq - 1.0) * circle_dist(frac(2.0 * tq), tp);
    const double D = (1.0 - sp) + (1.0 - sq) +
                     std::exp2(lo - 1.0) * circle_dist(frac(2.0 * tp), frac(2.0 * tq));
    return std::min({A, B, C, D});
}

inline MetricSpace suspension_space() {
    Region r;
    r.box = {{0.0, 1.0}, {0.0, 1.0}};
    return MetricSpace("doubling-suspension", kSuspensionId, std::move(r), suspension_dist);
}

inline Point suspension_evolve(double t, const Point& p) {
    const double h = p[1] + t;
    const double n = std::floor(h);
    double th = p[0];
    for (double k = 0; k < n; ++k) th = frac(2.0 * th);
    return Point(p.space(), {th, h - n});
}

inline ImpulseSet suspension_section() {
    ImpulseSet s;
    s.name = "s=0";
    s.member = [](const Point& p, double band) { return std::min(p[1], 1.0 - p[1]) <= band; };
    s.crossing = [](const Point& p) { return std::sin(2.0 * kPi * p[1]); };
    s.param = ImpulseSet::Parametrization{
        0.0, 1.0, [](double u) { return Point(kSuspensionId, {frac(u), 0.0}); }};
    s.dimension = 1;
    return s;
}

/// Base angles k/n on the floor s = 0.
inline std::vector<Point> suspension_grid(std::size_t n) {
    std::vector<Point> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(Point(kSuspensionId, {static_cast<double>(k) / static_cast<double>(n), 0.0}));
    }
    return out;
}

inline ExampleSpec build_doubling_suspension() {
    SystemConstants k;
    k.xi0 = 0.5;
    k.eta = 1.0;
    k.xi = 0.2;
    ImpulsiveSystem sys("doubling", suspension_space(),
                        Semiflow("unit-roof suspension of theta -> 2 theta", suspension_evolve),
                        ImpulseSet::empty_set("D"), ImpulseSet::empty_set("I(D)"), ImpulseMap{}, k,
                        2.0);
    ExampleSpec ex{"doubling",
                   "suspension of angle doubling under the unit roof, (theta,1)~(2theta,0)",
                   std::move(sys),
                   suspension_section(),
                   1.0,
                   [](std::size_t n, std::uint64_t) { return suspension_grid(n); },
                   {}};
    ex.facts = {
        {"return_time", 1.0, 1e-12, FactOrigin::elementary, "roof height"},
        {"h_top", std::log(2.0), 0.14, FactOrigin::derived,
         "2^floor(T) distinguishable blocks of length T"},
    };
    return ex;
}

// ---------------------------------------------------------------------------

inline std::vector<std::string> example_names() { return {"annulus", "rotation", "doubling"}; }

inline ExampleSpec build_example(const std::string& name) {
    if (name == "annulus") return build_annulus();
    if (name == "rotation") return build_rotation();
    if (name == "doubling") return build_doubling_suspension();
    throw DomainError("unknown example '" + name + "'");
}

/// Default sample size for entropy runs on an example.
inline std::size_t default_sample_size(const std::string& name) {
    if (name == "doubling") return std::size_t{1} << 15;
    return 8192;
}

}  // namespace impflow
