#include <cmath>
#include <random>

#include "doctest.h"
#include "newton_dyn/error.hpp"
#include "newton_dyn/kneading.hpp"

using namespace newton_dyn;

namespace {

Polynomial real_poly(std::initializer_list<double> c) { return Polynomial::from_real(std::vector<double>(c)); }

const NewtonMap& classic() {
    static const NewtonMap f = NewtonMap::build(real_poly({2, -2, 0, 1}));
    return f;
}

const NewtonMap& unity() {
    static const NewtonMap f = NewtonMap::build(real_poly({-1, 0, 0, 1}));
    return f;
}

}  // namespace

TEST_CASE("free_real_criticals") {
    const FreeCriticalSet a = free_real_criticals(classic());
    REQUIRE(a.points.size() == 1);
    CHECK(std::abs(a.points[0]) < 1e-12);
    CHECK(a.provenance[0].kind == OrbitKind::AttractingCycle);

    const FreeCriticalSet b = free_real_criticals(unity());
    REQUIRE(b.points.size() == 1);
    CHECK(b.provenance[0].kind == OrbitKind::LandsOnInfinity);

    // z^3 - z: the zero of p'' is the root 0 itself, so nothing is free.
    const NewtonMap g = NewtonMap::build(real_poly({0, -1, 0, 1}));
    CHECK(free_real_criticals(g).points.empty());
    CHECK(kneading_sequence(g, 5).empty());
    CHECK(to_string(kneading_sequence(g, 5)).empty());

    CHECK_THROWS_AS(free_real_criticals(NewtonMap::build(Polynomial({Complex{1, 1}, 0.0, 0.0, 1.0}))), NonRealMap);
}

TEST_CASE("kneading_sequence: classic 2-cycle") {
    const KneadingSequence k = kneading_sequence(classic(), 6);
    REQUIRE(k.symbols.size() == 1);
    CHECK(to_string(k.symbols[0]) == "1*,2,1*,2,1*,2");
    REQUIRE(k.periodic[0].has_value());
    CHECK(*k.periodic[0] == Periodicity{0, 2});
    CHECK(periodic_word(k.symbols[0], *k.periodic[0]) == "1*,2");
}

TEST_CASE("kneading_sequence: pole hit ends with the infinity marker") {
    const KneadingSequence k = kneading_sequence(unity(), 3);
    REQUIRE(k.symbols.size() == 1);
    CHECK(to_string(k) == "1*,inf");
    CHECK_FALSE(k.periodic[0].has_value());
    CHECK_THROWS_AS(kneading_sequence(unity(), 0), InputError);
}

TEST_CASE("detect_period") {
    using S = KneadingSymbol;
    CHECK(detect_period({S::interval(1), S::interval(2), S::interval(2), S::interval(2), S::interval(2)}) ==
          Periodicity{1, 1});
    CHECK_FALSE(detect_period({S::interval(1), S::interval(2), S::interval(3)}).has_value());
    CHECK(detect_period({S::hit(1), S::interval(2), S::hit(1), S::interval(2)}) == Periodicity{0, 2});
}

TEST_CASE("in_family_Y") {
    CHECK(in_family_Y(NewtonMap::build(normalize(real_poly({2, -2, 0, 1})).poly)) == TriState::Yes);
    CHECK(in_family_Y(NewtonMap::build(real_poly({1, 1, 0, 1}))) == TriState::Yes);
    // Not normalized.
    CHECK(in_family_Y(classic()) == TriState::No);

    // z^4 + 0.15 z^2 - 1.35 z + 1: p'' = 12z^2 + 0.3 vanishes at +-i sqrt(0.025).
    const NewtonMap g = NewtonMap::build(real_poly({1, -1.35, 0.15, 0, 1}));
    int captured = 0;
    for (const CriticalOrbit& co : critical_orbits(g)) {
        const Complex c = co.point.location.value();
        if (std::abs(c.real()) < 1e-9 && std::abs(std::abs(c.imag()) - std::sqrt(0.025)) < 1e-9) {
            CHECK(co.orbit.kind == OrbitKind::AttractingCycle);
            ++captured;
        }
    }
    CHECK(captured == 2);
    CHECK(in_family_Y(g) == TriState::No);
}

TEST_CASE("kneading_equal") {
    const KneadingSequence a = kneading_sequence(classic(), 6);
    const KneadingSequence b = kneading_sequence(unity(), 6);
    CHECK(kneading_equal(a, a));
    CHECK_FALSE(kneading_equal(a, b));
    const NewtonMap g = NewtonMap::build(real_poly({0, -1, 0, 1}));
    CHECK(kneading_equal(kneading_sequence(g, 4), kneading_sequence(g, 4)));
    CHECK_THROWS_AS(kneading_equal(a, kneading_sequence(classic(), 5)), LengthMismatch);
}

TEST_CASE("property: interval labels match positions") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(-3.0, 3.0);
    int rows = 0;
    for (int trial = 0; trial < 80; ++trial) {
        const NewtonMap f = NewtonMap::build(real_poly({1, unit(rng), unit(rng), 0, 1}));
        const KneadingSequence k = kneading_sequence(f, 12);
        for (size_t i = 0; i < k.symbols.size(); ++i) {
            ++rows;
            SpherePoint x(k.criticals[i]);
            for (const KneadingSymbol& s : k.symbols[i]) {
                if (s.kind == KneadingSymbol::Kind::Interval) {
                    const double v = x.value().real();
                    const double lo = s.j == 1 ? -HUGE_VAL : k.criticals[static_cast<size_t>(s.j - 2)];
                    const double hi = s.j == static_cast<int>(k.criticals.size()) + 1
                                          ? HUGE_VAL
                                          : k.criticals[static_cast<size_t>(s.j - 1)];
                    CHECK(lo < v);
                    CHECK(v < hi);
                }
                if (s.kind == KneadingSymbol::Kind::Infinity) break;
                x = f.apply(x);
                if (x.is_finite()) x = SpherePoint(Complex{x.value().real(), 0.0});
            }
            if (k.periodic[i]) {
                const auto& row = k.symbols[i];
                const Periodicity per = *k.periodic[i];
                for (size_t n = static_cast<size_t>(per.preperiod); n + static_cast<size_t>(per.period) < row.size(); ++n) {
                    CHECK(row[n] == row[n + static_cast<size_t>(per.period)]);
                }
            }
        }
    }
    CHECK(rows > 0);
}

TEST_CASE("property: kneading is stable when orbits keep clear of the critical points") {
    // z^3 - 2.3z + 2 style maps: keep only those whose free orbit stays at least
    // 10 eps_eq from every free critical point for N steps, then perturb.
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unit(-2.5, 2.5);
    std::uniform_real_distribution<double> tiny(-1e-9, 1e-9);
    const int n = 16;
    int tested = 0;
    for (int trial = 0; trial < 200 && tested < 25; ++trial) {
        const double a = unit(rng);
        const NewtonMap f = NewtonMap::build(real_poly({1, a, 0, 1}));
        const KneadingSequence k = kneading_sequence(f, n);
        if (k.empty()) continue;
        bool clear = true;
        for (size_t i = 0; i < k.symbols.size() && clear; ++i) {
            SpherePoint x(k.criticals[i]);
            for (int t = 1; t < n && clear; ++t) {
                x = f.apply(x);
                if (x.is_infinite()) {
                    clear = false;
                    break;
                }
                for (double c : k.criticals) clear = clear && std::abs(x.value().real() - c) >= 10.0 * kEpsEq;
            }
        }
        if (!clear) continue;
        ++tested;
        for (int rep = 0; rep < 4; ++rep) {
            const NewtonMap g = NewtonMap::build(real_poly({1 + tiny(rng), a + tiny(rng), 0, 1}));
            CHECK(kneading_equal(k, kneading_sequence(g, n)));
        }
    }
    CHECK(tested > 0);
}
