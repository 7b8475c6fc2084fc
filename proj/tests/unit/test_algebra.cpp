#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "newton_dyn/error.hpp"
#include "newton_dyn/polynomial.hpp"

using namespace newton_dyn;

namespace {

Polynomial real_poly(std::initializer_list<double> c) { return Polynomial::from_real(std::vector<double>(c)); }

// Greedy matching of each expected root to its nearest unused computed root.
double match_error(const RootSet& got, const RootSet& want) {
    if (got.roots.size() != want.roots.size()) return HUGE_VAL;
    std::vector<char> used(got.roots.size(), 0);
    double worst = 0.0;
    for (const Root& w : want.roots) {
        size_t best = got.roots.size();
        double best_d = HUGE_VAL;
        for (size_t i = 0; i < got.roots.size(); ++i) {
            const double d = std::abs(got.roots[i].location - w.location);
            if (!used[i] && d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best == got.roots.size() || got.roots[best].multiplicity != w.multiplicity) return HUGE_VAL;
        used[best] = 1;
        worst = std::max(worst, best_d);
    }
    return worst;
}

}  // namespace

TEST_CASE("eval by Horner") {
    const Polynomial cube = real_poly({-1, 0, 0, 1});
    CHECK(std::abs(eval(cube, 1.0)) == doctest::Approx(0.0));
    CHECK(eval(cube, 0.0) == Complex{-1.0, 0.0});
    const Polynomial classic = real_poly({2, -2, 0, 1});
    CHECK(eval(classic, 1.0) == Complex{1.0, 0.0});
}

TEST_CASE("compensated Horner beats plain Horner near a multiple root") {
    // (z - 1)^7 expanded; at z = 1 + 1e-3 the true value is 1e-21.
    RootSet rs;
    rs.roots = {{Complex{1.0, 0.0}, 7}};
    const Polynomial p = from_roots(rs);
    const Complex z{1.0 + 1e-3, 0.0};
    const double exact = std::pow(1e-3, 7);
    const double comp_err = std::abs(eval_compensated(p, z) - exact);
    const double plain_err = std::abs(eval(p, z) - exact);
    CHECK(comp_err < plain_err);
    CHECK(comp_err < 1e-25);
}

TEST_CASE("derive") {
    CHECK(derive(real_poly({-1, 0, 0, 1})) == real_poly({0, 0, 3}));
    CHECK(derive(real_poly({0, 0, 3})) == real_poly({0, 6}));
    CHECK(derive(real_poly({2, -2, 0, 1})) == real_poly({-2, 0, 3}));
    CHECK_THROWS_AS(derive(real_poly({5})), DegreeError);
}

TEST_CASE("polynomial rejects the zero coefficient vector") {
    CHECK_THROWS_AS(real_poly({0, 0}), DegreeError);
    CHECK(real_poly({1, 2, 0, 0}).degree() == 1);
}

TEST_CASE("find_roots: cube roots of unity") {
    const RootSet rs = find_roots(real_poly({-1, 0, 0, 1}), 1e-12);
    RootSet want;
    for (int k = 0; k < 3; ++k) want.roots.push_back({std::polar(1.0, 2.0 * std::numbers::pi * k / 3.0), 1});
    CHECK(match_error(rs, want) < 1e-13);
    CHECK(rs.total_multiplicity() == 3);
}

TEST_CASE("find_roots: multiple root detected from the expanded form") {
    // (z-1)^2 (z+1)(z-2) expanded by hand: z^4 - 3z^3 + z^2 + 3z - 2.
    const Polynomial p = real_poly({-2, 3, 1, -3, 1});
    RootSet factored;
    factored.roots = {{1.0, 2}, {-1.0, 1}, {2.0, 1}};
    CHECK(from_roots(factored) == p);
    const RootSet rs = find_roots(p, 1e-12);
    REQUIRE(rs.roots.size() == 3);
    CHECK(match_error(rs, factored) < 1e-10);
}

TEST_CASE("find_roots: exact zero root") {
    const RootSet rs = find_roots(real_poly({0, 0, 1}), 1e-12);
    REQUIRE(rs.roots.size() == 1);
    CHECK(rs.roots[0].multiplicity == 2);
    CHECK(rs.roots[0].location == Complex{0.0, 0.0});
}

TEST_CASE("find_roots: errors") {
    CHECK_THROWS_AS(find_roots(real_poly({3}), 1e-12), DegreeError);
    CHECK_THROWS_AS(find_roots(real_poly({1, 1}), 0.0), DegreeError);
    RootFindOptions starved;
    starved.max_sweeps = 1;
    CHECK_THROWS_AS(find_roots(real_poly({1, -3, 0.5, 2, 0, 0, 7, 1}), 1e-12, starved), NonConvergence);
}

TEST_CASE("find_roots: real polynomials give exact conjugate pairs") {
    const RootSet rs = find_roots(real_poly({1, 1, 0, 1}), 1e-12);
    int real_count = 0;
    for (const Root& r : rs.roots) {
        if (r.location.imag() == 0.0) {
            ++real_count;
            continue;
        }
        const bool has_partner = std::any_of(rs.roots.begin(), rs.roots.end(),
                                             [&](const Root& o) { return o.location == std::conj(r.location); });
        CHECK(has_partner);
    }
    CHECK(real_count == 1);
}

TEST_CASE("from_roots") {
    RootSet pm;
    pm.roots = {{1.0, 1}, {-1.0, 1}};
    CHECK(from_roots(pm) == real_poly({-1, 0, 1}));
    RootSet dbl;
    dbl.roots = {{0.0, 2}};
    CHECK(from_roots(dbl) == real_poly({0, 0, 1}));
    RootSet unity;
    for (int k = 0; k < 3; ++k) unity.roots.push_back({std::polar(1.0, 2.0 * std::numbers::pi * k / 3.0), 1});
    const Polynomial p = from_roots(unity);
    const Polynomial want = real_poly({-1, 0, 0, 1});
    for (int k = 0; k <= 3; ++k) CHECK(std::abs(p[k] - want[k]) < 1e-15);
}

TEST_CASE("property: find_roots inverts from_roots") {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> deg(3, 6);
    int failures = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = deg(rng);
        RootSet rs;
        while (static_cast<int>(rs.roots.size()) < n) {
            const Complex z{10.0 * unit(rng), 10.0 * unit(rng)};
            if (std::abs(z) > 10.0) continue;
            const bool separated = std::all_of(rs.roots.begin(), rs.roots.end(),
                                               [&](const Root& r) { return std::abs(r.location - z) > 1e-3; });
            if (separated) rs.roots.push_back({z, 1});
        }
        const RootSet got = find_roots(from_roots(rs), 1e-12);
        if (match_error(got, rs) > 1e-8) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("property: derive agrees with the product rule") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 5;
        std::vector<Complex> roots;
        for (int k = 0; k < n; ++k) roots.emplace_back(unit(rng), unit(rng));
        // p' = sum_j prod_{k != j} (z - r_k)
        std::vector<Complex> want(static_cast<size_t>(n), Complex{0.0, 0.0});
        for (int j = 0; j < n; ++j) {
            std::vector<Complex> others;
            for (int k = 0; k < n; ++k) {
                if (k != j) others.push_back(roots[static_cast<size_t>(k)]);
            }
            const Polynomial term = others.empty() ? Polynomial(std::vector<Complex>{1.0}) : from_roots(others);
            for (int k = 0; k <= term.degree(); ++k) want[static_cast<size_t>(k)] += term[k];
        }
        const Polynomial got = derive(from_roots(roots));
        REQUIRE(got.degree() == n - 1);
        for (int k = 0; k < n; ++k) CHECK(std::abs(got[k] - want[static_cast<size_t>(k)]) < 1e-12 * 32.0);
    }
}

TEST_CASE("normalize: z^3 - 2z + 2 rescales by a real cube root") {
    const Polynomial p = real_poly({2, -2, 0, 1});
    const Normalized nz = normalize(p);
    const double lambda = std::cbrt(0.5);
    CHECK(std::abs(nz.gamma.scale - lambda) < 1e-15);
    CHECK(std::abs(nz.gamma.shift) < 1e-15);
    CHECK(std::abs(nz.poly[0] - 1.0) < 1e-12);
    CHECK(std::abs(nz.poly[2]) < 1e-12);
    CHECK(std::abs(nz.poly[1] - (-std::cbrt(2.0))) < 1e-12);
    // Oracle: roots of q are the gamma-images of the roots of p.
    RootSet mapped;
    for (const Root& r : find_roots(p, 1e-12).roots) mapped.roots.push_back({nz.gamma(r.location), 1});
    CHECK(match_error(find_roots(nz.poly, 1e-12), mapped) < 1e-12);
}

TEST_CASE("normalize: fixed point and centering") {
    const Normalized same = normalize(real_poly({1, 1, 0, 1}));
    CHECK(same.gamma.scale == Complex{1.0, 0.0});
    CHECK(same.gamma.shift == Complex{0.0, 0.0});
    CHECK(same.poly == real_poly({1, 1, 0, 1}));

    // (z+1)^3 + (z+1) + 1 = z^3 + 3z^2 + 4z + 3, centered by the shift z -> z + 1.
    const Normalized shifted = normalize(real_poly({3, 4, 3, 1}));
    CHECK(std::abs(shifted.gamma.scale - 1.0) < 1e-12);
    CHECK(std::abs(shifted.gamma.shift - 1.0) < 1e-12);
    for (int k = 0; k <= 3; ++k) CHECK(std::abs(shifted.poly[k] - real_poly({1, 1, 0, 1})[k]) < 1e-12);
}

TEST_CASE("normalize: errors") {
    CHECK_THROWS_AS(normalize(real_poly({0, -1, 0, 1})), ZeroRoot);
    CHECK_THROWS_AS(normalize(real_poly({-1, 0, 1})), DegreeError);
    CHECK_THROWS_AS(normalize(real_poly({-2, 3, 1, -3, 1})), MultipleRootError);
}

TEST_CASE("property: normalize lands in the family") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + trial % 4;
        std::vector<Complex> c;
        for (int k = 0; k < n; ++k) c.emplace_back(unit(rng), trial % 2 ? unit(rng) : 0.0);
        c.emplace_back(1.0 + std::abs(unit(rng)), 0.0);
        const Polynomial p(c);
        Normalized nz{p, {}};
        try {
            nz = normalize(p);
        } catch (const ZeroRoot&) {
            continue;
        }
        CHECK(std::abs(nz.poly[n - 1]) <= 1e-12);
        CHECK(std::abs(nz.poly[0] - 1.0) <= 1e-12);
        CHECK(std::abs(nz.poly.leading() - 1.0) <= 1e-12);
        const AffineMap id = compose(nz.gamma.inverse(), nz.gamma);
        for (const Complex z : {Complex{0.3, -1.0}, Complex{2.0, 5.0}, Complex{-7.0, 0.1}}) {
            CHECK(std::abs(id(z) - z) <= 1e-12 * (1.0 + std::abs(z)));
        }
    }
}
