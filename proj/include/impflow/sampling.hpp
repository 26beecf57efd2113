#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "impflow/errors.hpp"
#include "impflow/spaces.hpp"

namespace impflow {

using Rng = std::mt19937_64;

/// Uniform point of the space by rejection from its bounding box.
inline Point sample_uniform(const MetricSpace& space, Rng& rng, int max_tries = 100000) {
    const auto& box = space.bounds().box;
    std::array<double, kMaxDim> c{};
    for (int tries = 0; tries < max_tries; ++tries) {
        for (std::size_t i = 0; i < box.size(); ++i) {
            std::uniform_real_distribution<double> u(box[i].first, box[i].second);
            c[i] = u(rng);
        }
        std::span<const double> cs(c.data(), box.size());
        if (space.bounds().contains(cs, 0.0)) return space.point(cs);
    }
    throw DomainError("sample_uniform: rejection sampling failed for " + space.name());
}

/// Radical inverse of i in the given prime base.
inline double radical_inverse(std::uint64_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

/// Halton points in the bounding box, Cranley-Patterson shifted by a seeded
/// offset, keeping those inside the region. Deterministic for a fixed seed.
inline std::vector<Point> sample_low_discrepancy(const MetricSpace& space, std::size_t n,
                                                 std::uint64_t seed) {
    static constexpr std::array<unsigned, kMaxDim> primes{2, 3, 5, 7};
    const auto& box = space.bounds().box;
    Rng rng(seed);
    std::array<double, kMaxDim> shift{};
    for (std::size_t d = 0; d < box.size(); ++d) {
        shift[d] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    std::vector<Point> out;
    out.reserve(n);
    std::array<double, kMaxDim> c{};
    for (std::uint64_t i = 1; out.size() < n; ++i) {
        if (i > 1000 * (n + 10)) throw DomainError("sample_low_discrepancy: region too thin");
        for (std::size_t d = 0; d < box.size(); ++d) {
            double u = radical_inverse(i, primes[d]) + shift[d];
            u -= std::floor(u);
            c[d] = box[d].first + u * (box[d].second - box[d].first);
        }
        std::span<const double> cs(c.data(), box.size());
        if (space.bounds().contains(cs, 0.0)) out.push_back(space.point(cs));
    }
    return out;
}

}  // namespace impflow
