#pragma once

// Phase spaces, metrics and continuous semiflows.
//
// Every flow shipped with the library is a closed-form evaluator, so the
// entropy estimates downstream carry no integrator error.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "impflow/errors.hpp"

namespace impflow {

inline constexpr std::size_t kMaxDim = 4;

/// Membership tolerance for the compact bounds of a space.
inline constexpr double kBoundsTol = 1e-9;

struct SpaceId {
    std::uint32_t value = 0;
    friend constexpr auto operator<=>(SpaceId, SpaceId) = default;
};

/// Element of a phase space. Coordinates are stored inline; the space id
/// ties the point to the metric that may measure it.
class Point {
public:
    Point() = default;

    Point(SpaceId space, std::initializer_list<double> coords)
        : Point(space, std::span<const double>(coords.begin(), coords.size())) {}

    Point(SpaceId space, std::span<const double> coords) : space_(space) {
        if (coords.size() > kMaxDim) {
            throw DomainError("point dimension exceeds kMaxDim");
        }
        dim_ = static_cast<std::uint8_t>(coords.size());
        std::copy(coords.begin(), coords.end(), c_.begin());
    }

    std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }
    std::size_t dim() const noexcept { return dim_; }
    SpaceId space() const noexcept { return space_; }

    double operator[](std::size_t i) const noexcept { return c_[i]; }
    double& operator[](std::size_t i) noexcept { return c_[i]; }

    /// Exact coordinate equality; use a metric for tolerant comparisons.
    friend bool operator==(const Point& a, const Point& b) noexcept {
        return a.space_ == b.space_ && a.dim_ == b.dim_ &&
               std::equal(a.c_.begin(), a.c_.begin() + a.dim_, b.c_.begin());
    }

    /// Lexicographic order on coordinates (canonical representatives).
    friend bool lex_less(const Point& a, const Point& b) noexcept {
        return std::lexicographical_compare(a.c_.begin(), a.c_.begin() + a.dim_,
                                            b.c_.begin(), b.c_.begin() + b.dim_);
    }

private:
    std::array<double, kMaxDim> c_{};
    std::uint8_t dim_ = 0;
    SpaceId space_{};
};

/// Compact region: an axis-aligned box intersected with an optional
/// constraint g(p) <= 0.
struct Region {
    std::vector<std::pair<double, double>> box;
    std::function<double(std::span<const double>)> constraint;

    bool contains(std::span<const double> c, double tol = kBoundsTol) const {
        if (c.size() != box.size()) return false;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] < box[i].first - tol || c[i] > box[i].second + tol) return false;
        }
        return !constraint || constraint(c) <= tol;
    }
};

class MetricSpace {
public:
    using DistFn = std::function<double(std::span<const double>, std::span<const double>)>;

    MetricSpace(std::string name, SpaceId id, Region bounds, DistFn dist)
        : name_(std::move(name)), id_(id), bounds_(std::move(bounds)), dist_(std::move(dist)) {}

    const std::string& name() const noexcept { return name_; }
    SpaceId id() const noexcept { return id_; }
    std::size_t dimension() const noexcept { return bounds_.box.size(); }
    const Region& bounds() const noexcept { return bounds_; }

    /// Metric value; throws DomainError when a point belongs to another space.
    double dist(const Point& x, const Point& y) const {
        if (x.space() != id_ || y.space() != id_) {
            throw DomainError("dist: point does not belong to space '" + name_ + "'");
        }
        return dist_(x.coords(), y.coords());
    }

    /// Unchecked metric on raw coordinates, for inner loops.
    double raw_dist(std::span<const double> a, std::span<const double> b) const {
        return dist_(a, b);
    }

    bool contains(const Point& p, double tol = kBoundsTol) const {
        return p.space() == id_ && bounds_.contains(p.coords(), tol);
    }

    Point point(std::initializer_list<double> coords) const {
        if (coords.size() != dimension()) {
            throw DomainError("point: wrong dimension for space '" + name_ + "'");
        }
        return Point(id_, coords);
    }

    Point point(std::span<const double> coords) const {
        if (coords.size() != dimension()) {
            throw DomainError("point: wrong dimension for space '" + name_ + "'");
        }
        return Point(id_, coords);
    }

private:
    std::string name_;
    SpaceId id_;
    Region bounds_;
    DistFn dist_;
};

/// Continuous semiflow phi: R+ x X -> X given by an exact evaluator. The
/// optional reverse evaluator flows backwards; it is only used to decide
/// membership in flow tubes.
class Semiflow {
public:
    using EvolveFn = std::function<Point(double, const Point&)>;

    Semiflow(std::string description, EvolveFn forward, EvolveFn reverse = {})
        : description_(std::move(description)),
          forward_(std::move(forward)),
          reverse_(std::move(reverse)) {}

    const std::string& description() const noexcept { return description_; }

    Point evolve(double t, const Point& x) const {
        if (!(t >= 0.0)) throw DomainError("evolve: negative time");
        return forward_(t, x);
    }

    bool reversible() const noexcept { return static_cast<bool>(reverse_); }

    /// phi_{-t}(x) for t >= 0.
    Point evolve_backward(double t, const Point& x) const {
        if (!reverse_) throw DomainError("evolve_backward: flow has no reverse evaluator");
        if (!(t >= 0.0)) throw DomainError("evolve_backward: negative time");
        return reverse_(t, x);
    }

private:
    std::string description_;
    EvolveFn forward_;
    EvolveFn reverse_;
};

inline double dist(const MetricSpace& space, const Point& x, const Point& y) {
    return space.dist(x, y);
}

inline Point evolve(const Semiflow& flow, double t, const Point& x) {
    return flow.evolve(t, x);
}

/// Largest grid-verified beta such that |t - u| < beta implies
/// dist(phi_t(x), phi_u(x)) < alpha for every sampled x and t, u <= t_max.
///
/// Times are scanned on a uniform grid of step alpha/20. Candidate beta
/// values are multiples of the step; the answer is the last lag before some
/// sampled orbit moves by alpha or more (at least one step). If no lag
/// fails, the orbit never moves that far on [0, t_max] and t_max is returned.
inline double modulus_beta(const Semiflow& flow, const MetricSpace& space, double alpha,
                           std::span<const Point> sample, double t_max) {
    if (!(alpha > 0.0)) throw DomainError("modulus_beta: alpha must be positive");
    if (sample.empty()) throw DomainError("modulus_beta: empty sample");
    if (!(t_max > 0.0)) throw DomainError("modulus_beta: t_max must be positive");

    const double step = alpha / 20.0;
    const auto n = static_cast<std::size_t>(std::floor(t_max / step)) + 1;
    const std::size_t dim = space.dimension();

    std::vector<std::vector<double>> orbits;
    orbits.reserve(sample.size());
    for (const Point& x : sample) {
        std::vector<double> flat(n * dim);
        for (std::size_t i = 0; i < n; ++i) {
            Point p = flow.evolve(static_cast<double>(i) * step, x);
            std::copy_n(p.coords().begin(), dim, flat.begin() + static_cast<std::ptrdiff_t>(i * dim));
        }
        orbits.push_back(std::move(flat));
    }

    for (std::size_t lag = 1; lag < n; ++lag) {
        for (const auto& o : orbits) {
            for (std::size_t i = 0; i + lag < n; ++i) {
                const double d = space.raw_dist({o.data() + i * dim, dim},
                                                {o.data() + (i + lag) * dim, dim});
                if (d >= alpha) return static_cast<double>(std::max<std::size_t>(lag - 1, 1)) * step;
            }
        }
    }
    return t_max;
}

}  // namespace impflow
