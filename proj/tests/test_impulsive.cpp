#include <catch_amalgamated.hpp>

#include <cmath>

#include "impflow/examples.hpp"
#include "impflow/impulsive.hpp"
#include "impflow/sampling.hpp"
#include "oracles.hpp"

using namespace impflow;
using Catch::Approx;
using oracle::pi;

namespace {

const auto sys = build_annulus().system;

Point P(double x, double y) { return Point(kAnnulusId, {x, y}); }
Point polar(double r, double th) { return P(r * std::cos(th), r * std::sin(th)); }

/// Ray {(r cos e, r sin e): 1 <= r <= 2}.
ImpulseSet ray(double e) {
    ImpulseSet s;
    s.name = "ray";
    const double c = std::cos(e), sn = std::sin(e);
    s.member = [c, sn](const Point& p, double band) {
        const double along = c * p[0] + sn * p[1], across = -sn * p[0] + c * p[1];
        return std::abs(across) <= band && along >= 1 - band && along <= 2 + band;
    };
    s.crossing = [c, sn](const Point& p) { return -sn * p[0] + c * p[1]; };
    s.param = ImpulseSet::Parametrization{1.0, 2.0, [c, sn](double u) { return P(u * c, u * sn); }};
    s.dimension = 1;
    return s;
}

/// The annulus with I(r,0) = (r cos e, r sin e), which lands inside D_xi
/// while keeping the declared constants of the original example.
ImpulsiveSystem tilted(double e) {
    ImpulseMap I;
    I.apply = [e](const Point& p) { return polar(std::hypot(p[0], p[1]), e); };
    I.lipschitz_bound = 1.0;
    return ImpulsiveSystem("tilted", annulus_space(), rotation_flow(), horizontal_segment("D", 1, 2), ray(e),
                           I, sys.constants(), 2 * pi + 1);
}

ImpulsiveSystem identity_reset() {
    ImpulseMap I;
    I.apply = [](const Point& p) { return p; };
    I.lipschitz_bound = 1.0;
    return ImpulsiveSystem("identity", annulus_space(), rotation_flow(), horizontal_segment("D", 1, 2),
                           horizontal_segment("D", 1, 2), I, sys.constants(), 2 * pi + 1);
}

}  // namespace

TEST_CASE("first_hit_time") {
    CHECK(*first_hit_time(sys, polar(1, pi / 2), 10) == Approx(3 * pi / 2).margin(1e-10));
    CHECK(*first_hit_time(sys, P(-1, 0), 10) == Approx(pi).margin(1e-10));
    CHECK(*first_hit_time(sys, P(1.5, 0), 10) == Approx(2 * pi).margin(1e-10));
    CHECK_FALSE(first_hit_time(sys, polar(1.5, 1.0), 2.0));
    CHECK_THROWS_AS(first_hit_time(sys, P(1.5, 0), 0.0), DomainError);

    // against a dense scan
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const auto x = sample_uniform(sys.space(), rng);
        const double dense = oracle::dense_first_hit(x[0], x[1], 7.0);
        CHECK(*first_hit_time(sys, x, 7.0) == Approx(dense).margin(2e-4));
    }
}

TEST_CASE("tau_star") {
    for (double r : {1.0, 1.4, 2.0}) CHECK(tau_star(sys, polar(r, 3 * pi / 2)) == Approx(pi / 2).margin(1e-10));
    CHECK(tau_star(sys, P(1.3, 0)) == 0.0);
    CHECK(tau_star(sys, P(-1, 0)) == Approx(pi).margin(1e-10));
    // strictly inside the tube D_xi, xi = 0.2
    CHECK_THROWS_AS(tau_star(sys, polar(1.5, 0.1)), DomainError);
    // closed form 2pi - theta across X_xi
    for (double th = 0.25; th < 2 * pi; th += 0.37) {
        CHECK(tau_star(sys, polar(1.7, th)) == Approx(2 * pi - th).margin(1e-10));
    }
}

TEST_CASE("impulsive_orbit and impulse_times") {
    SECTION("x = (-1, 0), T = 10") {
        const auto o = impulsive_orbit(sys, P(-1, 0), 10);
        REQUIRE(o.impulse_times().size() == 3);
        for (int k = 0; k < 3; ++k) CHECK(o.impulse_times()[k] == Approx((k + 1) * pi).margin(1e-10));
        for (double t : {0.5, 2.0, 4.0, 7.5, 9.9}) {
            const auto p = o.at(t);
            CHECK(std::hypot(p[0], p[1]) == Approx(1.0));
            CHECK(p[1] <= 1e-9);  // lower half circle
        }
        const auto it = impulse_times(sys, P(-1, 0), 10);
        CHECK(it.n_T == 3);
    }
    SECTION("x = (0, 1.5), T = 6") {
        const auto o = impulsive_orbit(sys, P(0, 1.5), 6);
        REQUIRE(o.impulse_times().size() == 1);
        CHECK(o.impulse_times()[0] == Approx(3 * pi / 2).margin(1e-10));
        const auto post = o.at(o.impulse_times()[0]);
        CHECK(post[0] == Approx(-1.25).margin(1e-9));
        CHECK(post[1] == Approx(0.0).margin(1e-9));
    }
    SECTION("x = (0, 1.5), T = 4 has no impulse") {
        const auto it = impulse_times(sys, P(0, 1.5), 4);
        CHECK(it.times.empty());
        CHECK(it.n_T == 0);
    }
    SECTION("orbit from (0, 2)") {
        const auto o = impulsive_orbit(sys, P(0, 2), 6);
        REQUIRE(o.impulse_times().size() == 1);
        CHECK(o.impulse_times()[0] == Approx(3 * pi / 2).margin(1e-10));
        CHECK(o.at(3 * pi / 2)[0] == Approx(-1.5).margin(1e-9));
    }
    SECTION("no impulses without D") {
        const auto rot = build_rotation().system;
        const auto o = impulsive_orbit(rot, P(1.5, 0.2), 20);
        CHECK(o.impulse_times().empty());
        CHECK(rot.space().dist(o.at(13.0), rot.flow().evolve(13.0, P(1.5, 0.2))) == 0.0);
    }
    SECTION("agrees with the closed-form orbit") {
        Rng rng(8);
        double worst = 0.0;
        for (int i = 0; i < 30; ++i) {
            const auto x = sample_uniform(sys.space(), rng);
            const oracle::AnnulusOrbit ref{std::hypot(x[0], x[1]), oracle::angle(x[0], x[1])};
            const auto o = impulsive_orbit(sys, x, 30);
            const auto js = ref.jumps(30);
            REQUIRE(o.impulse_times().size() == js.size());
            for (std::size_t k = 0; k < js.size(); ++k) CHECK(o.impulse_times()[k] == Approx(js[k]).margin(1e-9));
            for (double t = 0.05; t < 30; t += 0.7) {
                // away from jumps, where 1e-10 time errors do not matter
                bool near_jump = false;
                for (double j : js) near_jump = near_jump || std::abs(t - j) < 1e-6;
                if (near_jump) continue;
                const auto [ex, ey] = ref.at(t);
                const auto p = o.at(t);
                worst = std::max(worst, std::hypot(p[0] - ex, p[1] - ey));
            }
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("psi") {
    const auto a = psi(sys, pi, P(-1, 0));
    CHECK(a[0] == Approx(-1.0).margin(1e-9));
    CHECK(a[1] == Approx(0.0).margin(1e-9));
    const auto x = P(1.3, -0.9);
    CHECK(psi(sys, 0, x) == x);
    const auto b = psi(sys, pi / 2, P(-1, 0));
    CHECK(b[0] == Approx(0.0).margin(1e-12));
    CHECK(b[1] == Approx(-1.0));
    CHECK_THROWS_AS(psi(sys, -1, x), DomainError);
}

TEST_CASE("the xi constraint is enforced on construction") {
    auto k = sys.constants();
    k.xi = 0.3;  // above xi0/2 = 0.25
    CHECK_THROWS_AS(ImpulsiveSystem("bad", annulus_space(), rotation_flow(), horizontal_segment("D", 1, 2),
                                    horizontal_segment("I(D)", -1.5, -1), sys.i_map(), k, 10),
                    DomainError);
}

TEST_CASE("orbits with gaps below eta are rejected") {
    auto k = sys.constants();
    k.eta = 4.0;  // actual gaps are pi
    k.xi = 0.2;
    const ImpulsiveSystem liar("liar", annulus_space(), rotation_flow(), horizontal_segment("D", 1, 2),
                               horizontal_segment("I(D)", -1.5, -1), sys.i_map(), k, 10);
    CHECK_THROWS_AS(impulsive_orbit(liar, P(-1, 0), 10), ConsistencyError);
}

TEST_CASE("check_conditions") {
    SECTION("annulus passes") {
        const auto rep = check_conditions(sys, 64, 1);
        CHECK(rep.all_passed());
        CHECK(rep.gap_a == Approx(2.0).margin(1e-6));
        CHECK(rep.lipschitz == Approx(0.5).margin(1e-9));
        REQUIRE(rep.find("tube_open"));
        CHECK(rep.find("tube_open")->status == CheckStatus::assumed);
    }
    SECTION("tilted reset fails with a witness") {
        const auto rep = check_conditions(tilted(0.1), 64, 1);
        CHECK_FALSE(rep.all_passed());
        const auto* gap = rep.find("gap");
        REQUIRE(gap);
        CHECK(gap->status == CheckStatus::fail);
        CHECK_FALSE(gap->witness.empty());
        CHECK(rep.gap_a == Approx(2 * std::sin(0.05)).margin(1e-6));
    }
    SECTION("identity reset fails the gap") {
        const auto rep = check_conditions(identity_reset(), 32, 1);
        REQUIRE(rep.find("gap"));
        CHECK(rep.find("gap")->status == CheckStatus::fail);
    }
    SECTION("deterministic for a seed") {
        const auto a = check_conditions(sys, 32, 9), b = check_conditions(sys, 32, 9);
        REQUIRE(a.items.size() == b.items.size());
        for (std::size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].measured == b.items[i].measured);
    }
}

TEST_CASE("impulsive semigroup law off impulse times") {
    Rng rng(21);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    double worst = 0.0;
    int used = 0;
    while (used < 200) {
        const auto x = sample_uniform(sys.space(), rng);
        const double t = u(rng), s = u(rng);
        const auto jx = impulse_times(sys, x, t + s + 1).times;
        bool clear = true;
        for (double j : jx) clear = clear && std::abs(j - s) >= 1e-6 && std::abs(j - t - s) >= 1e-6;
        const auto y = psi(sys, s, x);
        for (double j : impulse_times(sys, y, t + 1).times) clear = clear && std::abs(j - t) >= 1e-6;
        if (!clear) continue;
        worst = std::max(worst, sys.space().dist(psi(sys, t + s, x), psi(sys, t, y)));
        ++used;
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("X_xi is forward invariant") {
    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    int tested = 0;
    while (tested < 300) {
        const auto x = sample_uniform(sys.space(), rng);
        if (!sys.in_x_xi(x)) continue;
        const double t = u(rng);
        CHECK(sys.in_x_xi(psi(sys, t, x)));
        ++tested;
    }
}

TEST_CASE("jumps: gaps, right continuity and left limits") {
    Rng rng(6);
    for (int i = 0; i < 40; ++i) {
        const auto x = sample_uniform(sys.space(), rng);
        const auto o = impulsive_orbit(sys, x, 25);
        const auto& js = o.impulse_times();
        for (std::size_t k = 1; k < js.size(); ++k) CHECK(js[k] - js[k - 1] >= pi - 1e-9);
        for (std::size_t k = 0; k < js.size(); ++k) {
            const auto before = o.pre_jump(k);
            CHECK(sys.in_d(before));
            CHECK(sys.space().dist(sys.i_map()(before), o.at(js[k])) <= 1e-12);
            CHECK(sys.space().dist(o.at(js[k] + 1e-9), o.at(js[k])) <= 1e-8);
            CHECK(sys.space().dist(o.at(js[k] - 1e-9), before) <= 1e-8);
        }
    }
}

TEST_CASE("translation identity for s < tau_1") {
    Rng rng(10);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto x = sample_uniform(sys.space(), rng);
        const auto tx = impulse_times(sys, x, 20).times;
        REQUIRE_FALSE(tx.empty());
        for (double frac : {0.1, 0.5, 0.9}) {
            const double s = frac * tx[0];
            const auto ty = impulse_times(sys, psi(sys, s, x), 20 - s).times;
            REQUIRE(ty.size() == tx.size());
            for (std::size_t k = 0; k < tx.size(); ++k) worst = std::max(worst, std::abs(ty[k] - (tx[k] - s)));
        }
    }
    CHECK(worst <= 1e-9);
}
