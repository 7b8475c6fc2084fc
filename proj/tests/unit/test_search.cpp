#include <cmath>
#include <random>

#include "doctest.h"
#include "newton_dyn/error.hpp"
#include "newton_dyn/search.hpp"

using namespace newton_dyn;

namespace {

ParameterPoint cubic(double a1) { return ParameterPoint{3, {a1}}; }

// Independent oracle: plain real Newton iteration of the free critical point 0
// for z^3 + a z + 1 converges to the real root.
bool plain_newton_converges(double a) {
    double x = 0.0;
    for (int n = 0; n < 2000; ++n) {
        const double dp = 3 * x * x + a;
        if (dp == 0.0) return false;
        x -= (x * x * x + a * x + 1) / dp;
        if (!std::isfinite(x)) return false;
    }
    return std::abs(x * x * x + a * x + 1) < 1e-12;
}

// z^3 - 2z + 2 rescaled into the family: z = 2^(1/3) w gives w^3 - 2^(1/3) w + 1.
ParameterPoint classic() { return cubic(-std::cbrt(2.0)); }

}  // namespace

TEST_CASE("map_of / params_of") {
    const NewtonMap f = map_of(cubic(0.0));
    CHECK(f.p().coeffs() == std::vector<Complex>{1.0, 0.0, 0.0, 1.0});
    CHECK(map_of(cubic(1.0)).p().coeffs() == std::vector<Complex>{1.0, 1.0, 0.0, 1.0});
    CHECK(map_of(ParameterPoint{4, {0.0, 0.0}}).p().coeffs() == std::vector<Complex>{1.0, 0.0, 0.0, 0.0, 1.0});

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 3 + trial % 4;
        ParameterPoint pp{d, {}};
        for (int i = 0; i < d - 2; ++i) pp.a.push_back(coef(rng));
        try {
            CHECK(params_of(map_of(pp)) == pp);
        } catch (const DiscriminantZero&) {
        }
    }

    // z^3 + a z + 1 has a double root when 4a^3 + 27 = 0.
    CHECK_THROWS_AS(map_of(cubic(-std::cbrt(27.0 / 4.0))), DiscriminantZero);
    CHECK_THROWS_AS(map_of(ParameterPoint{3, {1.0, 2.0}}), InputError);
    CHECK_THROWS_AS(map_of(ParameterPoint{2, {}}), InputError);
    CHECK_THROWS_AS(params_of(NewtonMap::build(Polynomial::from_real(std::vector<double>{2, -2, 0, 1}))), InputError);
}

TEST_CASE("tau_grid: increasing cubics") {
    const TauGrid g = tau_grid(3, {{0.05, 3.0}}, {64});
    REQUIRE(g.values.size() == 64);
    for (size_t i = 0; i < g.values.size(); ++i) {
        const double a = g.node(i).a[0];
        CHECK(g.values[i] == (plain_newton_converges(a) ? 4 : 3));
        CHECK(g.values[i] == 4);
    }
    CHECK(g.node(0).a[0] == 0.05);
    CHECK(g.node(63).a[0] == 3.0);
}

TEST_CASE("tau_grid: special nodes and bounds") {
    const TauGrid g = tau_grid(3, {{-1.0, 1.0}}, {3});
    CHECK(g.values[1] == 3);  // z^3 + 1: the free critical point lands on the pole
    const double cusp = -std::cbrt(27.0 / 4.0);
    CHECK(tau_grid(3, {{cusp, cusp}}, {1}).values[0] == -1);
    const TauGrid h = tau_grid(4, {{-2.0, 2.0}, {-2.0, 2.0}}, {9, 9});
    for (int v : h.values) CHECK(v <= 6);
    CHECK(h.node(80).a == std::vector<double>{2.0, 2.0});
    CHECK(h.node(1).a == std::vector<double>{-2.0, -1.5});
    CHECK_THROWS_AS(tau_grid(3, {{0.0, 1.0}, {0.0, 1.0}}, {2, 2}), InputError);
    CHECK_THROWS_AS(tau_grid(5, {{0, 1}, {0, 1}, {0, 1}}, {2, 2, 2}), InputError);
}

TEST_CASE("tau_grid: budget monotone and thread independent") {
    std::vector<int> prev;
    for (int iters : {20, 200, 20000}) {
        OrbitBudget b;
        b.max_iter = iters;
        const TauGrid g = tau_grid(3, {{-3.0, 3.0}}, {64}, b);
        if (!prev.empty()) {
            for (size_t i = 0; i < prev.size(); ++i) CHECK(prev[i] <= g.values[i]);
        }
        prev = g.values;
    }
    CHECK(tau_grid(3, {{-3.0, 3.0}}, {64}, {}, 1).values == tau_grid(3, {{-3.0, 3.0}}, {64}, {}, 4).values);
}

TEST_CASE("continue_cycle") {
    const ParameterPoint pp0 = classic();
    const NewtonMap f0 = map_of(pp0);
    const OrbitClassification c = classify(f0, SpherePoint(Complex{0.0, 0.0}));
    REQUIRE(c.kind == OrbitKind::AttractingCycle);
    REQUIRE(c.period == 2);
    CHECK(continue_cycle(pp0, c.cycle, pp0) == c.cycle);

    ParameterPoint pp1 = pp0;
    pp1.a[0] += 1e-4;
    const std::vector<SpherePoint> moved = continue_cycle(pp0, c.cycle, pp1);
    REQUIRE(moved.size() == 2);
    const NewtonMap f1 = map_of(pp1);
    // Oracle: the continued points form a 2-cycle of the new map near the old one.
    CHECK(chordal(f1.apply(f1.apply(moved[0])), moved[0]) < 1e-12);
    CHECK(chordal(moved[0], c.cycle[0]) < 1e-2);
    CHECK(std::abs(cycle_multiplier(f1, moved)) < 0.1);

    // Walk along the line until the cycle bifurcates away.
    int lost_at = -1;
    std::vector<SpherePoint> cyc = c.cycle;
    ParameterPoint at = pp0;
    for (int s = 1; s <= 200 && lost_at < 0; ++s) {
        ParameterPoint next = at;
        next.a[0] += 0.01;
        try {
            cyc = continue_cycle(at, cyc, next);
            at = next;
        } catch (const ContinuationLost&) {
            lost_at = s;
        }
    }
    CHECK(lost_at > 0);
    // Just before the loss the cycle is still attracting.
    CHECK(std::abs(cycle_multiplier(map_of(at), cyc)) < 1.0);
    CHECK_THROWS_AS(continue_cycle(pp0, {SpherePoint(Complex{5.0, 5.0})}, pp1), NotACycle);
}

TEST_CASE("find_hyperbolic_near: z^3 + 1") {
    const ApproxResult r = find_hyperbolic_near(cubic(0.0));
    REQUIRE(r.found.has_value());
    CHECK(r.found->distance <= 0.1);
    CHECK(r.found->distance > 0.0);
    CHECK(r.found->certificate.certified());
    CHECK(r.found->certificate.tau == 4);
    CHECK(plain_newton_converges(r.found->point.a[0]));
    CHECK(r.trace.front().certified == 0);
    CHECK(r.found->samples_tried >= 2);
    const double smallest_success = r.trace.back().radius;
    CHECK(r.found->distance <= smallest_success);
}

TEST_CASE("find_hyperbolic_near: certified center, require_Y filter, determinism") {
    const ApproxResult c = find_hyperbolic_near(classic());
    REQUIRE(c.found.has_value());
    CHECK(c.found->distance == 0.0);
    CHECK(c.found->samples_tried == 1);

    // Free critical points +-i sqrt(0.025) are attracted to a complex cycle:
    // hyperbolic but outside Y.
    const ParameterPoint y_out{4, {-1.35, 0.15}};
    const ApproxResult plain = find_hyperbolic_near(y_out);
    REQUIRE(plain.found.has_value());
    CHECK(plain.found->distance == 0.0);
    SearchConfig cfg;
    cfg.require_Y = true;
    cfg.radii = {1e-4};
    cfg.samples_per_radius = 8;
    const ApproxResult filtered = find_hyperbolic_near(y_out, cfg);
    CHECK(filtered.trace.front().rejected_y == 1);
    CHECK_FALSE(filtered.found.has_value());

    SearchConfig seeded;
    seeded.rng_seed = 99;
    seeded.threads = 1;
    const ApproxResult a = find_hyperbolic_near(cubic(0.0), seeded);
    seeded.threads = 4;
    const ApproxResult b = find_hyperbolic_near(cubic(0.0), seeded);
    REQUIRE(a.found.has_value());
    REQUIRE(b.found.has_value());
    CHECK(a.found->point == b.found->point);
    CHECK(a.found->samples_tried == b.found->samples_tried);
    CHECK(a.trace.size() == b.trace.size());

    SearchConfig bad;
    bad.radii = {0.1, 0.01};
    CHECK_THROWS_AS(find_hyperbolic_near(cubic(0.0), bad), InputError);
    bad.radii = {0.1};
    bad.samples_per_radius = 0;
    CHECK_THROWS_AS(find_hyperbolic_near(cubic(0.0), bad), InputError);
}

TEST_CASE("property: openness of certified parameters") {
    const std::vector<ParameterPoint> centers = {classic(), cubic(1.0), ParameterPoint{4, {-1.35, 0.15}}};
    for (const ParameterPoint& pp : centers) {
        const OpennessReport rep = openness_check(pp);
        CHECK(rep.passed);
        CHECK(rep.neighbor_tau.size() == 8);
        for (int t : rep.neighbor_tau) CHECK(t == 2 * pp.d - 2);
    }
    const ApproxResult r = find_hyperbolic_near(cubic(0.0));
    REQUIRE(r.found.has_value());
    CHECK(openness_check(r.found->point).passed);
    // The non-hyperbolic center fails.
    CHECK_FALSE(openness_check(cubic(0.0)).passed);
    const std::vector<ParameterPoint> ring = perturbations(ParameterPoint{4, {0.0, 0.0}}, 1e-6);
    CHECK(ring.size() == 8);
    for (const ParameterPoint& q : ring) CHECK(linf_distance(q, ParameterPoint{4, {0.0, 0.0}}) == doctest::Approx(1e-6));
}

TEST_CASE("property: lower semicontinuity spot check on random cubics") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    OrbitBudget small;
    small.max_iter = 100;
    for (int trial = 0; trial < 40; ++trial) {
        const ParameterPoint pp = cubic(coef(rng));
        const NewtonMap f = map_of(pp);
        CHECK(tau(f, small) <= tau(f));
    }
}
