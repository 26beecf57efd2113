#pragma once

// Reference computations for the tests. None of these call the event
// locator, the orbit builder or the separated-set code of the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// Polar angle in [0, 2pi).
inline double angle(double x, double y) {
    double a = std::atan2(y, x);
    if (a < 0) a += 2 * pi;
    return a;
}

/// Annulus with I(r,0) = (-1/2 - r/2, 0), in closed form. A point at angle
/// theta in (0, 2pi) first meets D after 2pi - theta; every later jump
/// follows pi after the previous one and maps r to (1 + r)/2.
struct AnnulusOrbit {
    double r0, th0;

    std::vector<double> jumps(double T) const {
        std::vector<double> out;
        const double first = th0 > 0 ? 2 * pi - th0 : 2 * pi;
        for (double t = first; t <= T + 1e-12; t += pi) out.push_back(t);
        return out;
    }

    std::pair<double, double> at(double t) const {
        const auto js = jumps(t);
        if (js.empty()) return {r0 * std::cos(th0 + t), r0 * std::sin(th0 + t)};
        double r = r0;
        for (std::size_t i = 0; i < js.size(); ++i) r = 0.5 * (1 + r);
        const double since = t - js.back();
        return {-r * std::cos(since), -r * std::sin(since)};
    }
};

/// First t in (0, horizon] with the rotation of (x, y) crossing the positive
/// x axis, by a fine scan of the sign of y.
inline double dense_first_hit(double x, double y, double horizon, double step = 1e-4) {
    double prev = y;
    for (double t = step; t <= horizon; t += step) {
        const double c = std::cos(t), s = std::sin(t);
        const double xt = c * x - s * y, yt = s * x + c * y;
        if (prev < 0 && yt >= 0 && xt > 0) return t;
        prev = yt;
    }
    return -1;
}

/// Number of distinct itineraries of length `bits` among base angles k/n
/// (binary digits of the angle). For the doubling map this is the count of
/// words that T-orbits can tell apart at resolution 2^-(bits - floor(T)).
inline std::size_t distinct_words(std::size_t n, unsigned bits) {
    std::set<std::uint64_t> words;
    for (std::size_t k = 0; k < n; ++k) {
        const double th = static_cast<double>(k) / static_cast<double>(n);
        words.insert(static_cast<std::uint64_t>(std::floor(std::ldexp(th, static_cast<int>(bits)))));
    }
    return words.size();
}

/// Maximum clique of a symmetric adjacency matrix by plain branch and bound.
inline std::size_t max_clique(const std::vector<std::vector<bool>>& adj) {
    const std::size_t n = adj.size();
    std::size_t best = 0;
    std::vector<std::size_t> chosen;
    std::function<void(std::size_t)> grow = [&](std::size_t next) {
        best = std::max(best, chosen.size());
        if (chosen.size() + (n - next) <= best) return;
        for (std::size_t v = next; v < n; ++v) {
            bool ok = true;
            for (auto c : chosen) ok = ok && adj[c][v];
            if (!ok) continue;
            chosen.push_back(v);
            grow(v + 1);
            chosen.pop_back();
        }
    };
    grow(0);
    return best;
}

/// Largest subset of n equally spaced points on a circle of radius 1 with
/// chord distance >= eps between any two chosen points.
inline std::size_t circle_packing(std::size_t n, double eps) {
    std::size_t gap = 1;
    while (gap < n && 2 * std::sin(pi * static_cast<double>(gap) / static_cast<double>(n)) < eps) ++gap;
    return std::max<std::size_t>(1, n / gap);
}

/// Circle distance on R/Z.
inline double circ(double a, double b) {
    double d = std::fmod(std::abs(a - b), 1.0);
    return std::min(d, 1 - d);
}

}  // namespace oracle
