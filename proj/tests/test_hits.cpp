#include <catch_amalgamated.hpp>

#include <cmath>

#include "impflow/examples.hpp"
#include "impflow/hits.hpp"
#include "oracles.hpp"

using namespace impflow;
using Catch::Approx;

namespace {

const auto X = annulus_space();

auto circle_curve(double r, double th0) {
    return [r, th0](double t) { return X.point({r * std::cos(th0 + t), r * std::sin(th0 + t)}); };
}

/// Horizontal segment {(x, h): |x| <= 0.5}.
ImpulseSet chord(double h) {
    ImpulseSet s;
    s.name = "chord";
    s.member = [h](const Point& p, double band) { return std::abs(p[1] - h) <= band && std::abs(p[0]) <= 0.5 + band; };
    s.crossing = [h](const Point& p) { return p[1] - h; };
    s.dimension = 1;
    return s;
}

}  // namespace

TEST_CASE("transversal crossing is located to 1e-10") {
    const auto D = horizontal_segment("D", 1.0, 2.0);
    for (double th : {0.3, 1.0, oracle::pi / 2, 3.0, 5.9}) {
        const auto h = next_hit(circle_curve(1.5, th), D, 0.0, 10.0, oracle::pi / 50);
        REQUIRE(h);
        CHECK(*h == Approx(2 * oracle::pi - th).margin(1e-10));
    }
}

TEST_CASE("zeros of the crossing function away from the set are ignored") {
    // y changes sign at angle pi too, where x < 0
    const auto D = horizontal_segment("D", 1.0, 2.0);
    const auto h = next_hit(circle_curve(1.2, 0.5), D, 0.0, 4.0, 0.05);
    CHECK_FALSE(h);
}

TEST_CASE("a start on the set is not a hit") {
    const auto D = horizontal_segment("D", 1.0, 2.0);
    const auto h = next_hit(circle_curve(1.5, 0.0), D, 0.0, 10.0, oracle::pi / 50);
    REQUIRE(h);
    CHECK(*h == Approx(2 * oracle::pi).margin(1e-10));
}

TEST_CASE("tangential contact raises a grazing error") {
    // the circle of radius 1.2 touches y = 1.2 at the top without crossing
    const auto S = chord(1.2);
    CHECK_THROWS_AS(next_hit(circle_curve(1.2, 0.2), S, 0.0, 3.0, 0.02), GrazingError);
    try {
        next_hit(circle_curve(1.2, 0.2), S, 0.0, 3.0, 0.02);
    } catch (const GrazingError& e) {
        CHECK(e.time() == Approx(oracle::pi / 2 - 0.2).margin(1e-4));
    }
}

TEST_CASE("a near miss is not a grazing contact") {
    const auto S = chord(1.2);
    CHECK_FALSE(next_hit(circle_curve(1.19, 0.2), S, 0.0, 3.0, 0.02));
}

TEST_CASE("all_hits collects every crossing") {
    const auto D = horizontal_segment("D", 1.0, 2.0);
    const auto hits = all_hits(circle_curve(1.5, 1.0), D, 0.0, 20.0, 0.05);
    REQUIRE(hits.size() == 3);
    for (std::size_t k = 0; k < hits.size(); ++k) {
        CHECK(hits[k] == Approx(2 * oracle::pi * (k + 1) - 1.0).margin(1e-10));
    }
}

TEST_CASE("empty set and degenerate ranges") {
    CHECK_FALSE(next_hit(circle_curve(1.5, 1.0), ImpulseSet::empty_set(), 0.0, 10.0, 0.1));
    const auto D = horizontal_segment("D", 1.0, 2.0);
    CHECK_FALSE(next_hit(circle_curve(1.5, 1.0), D, 2.0, 2.0, 0.1));
    CHECK_THROWS_AS(next_hit(circle_curve(1.5, 1.0), D, 0.0, 1.0, 0.0), DomainError);
}

TEST_CASE("set samples follow the parametrization") {
    const auto D = horizontal_segment("D", 1.0, 2.0);
    const auto s = D.samples(5);
    REQUIRE(s.size() == 5);
    CHECK(s.front()[0] == 1.0);
    CHECK(s.back()[0] == 2.0);
    for (const auto& p : s) CHECK(D.contains(p));
}
