#include <cmath>
#include <random>

#include "doctest.h"
#include "newton_dyn/error.hpp"
#include "newton_dyn/newton_graph.hpp"

using namespace newton_dyn;

namespace {

Polynomial real_poly(std::initializer_list<double> c) { return Polynomial::from_real(std::vector<double>(c)); }

const NewtonMap& unity() {
    static const NewtonMap f = NewtonMap::build(real_poly({-1, 0, 0, 1}));
    return f;
}

const NewtonMap& classic() {
    static const NewtonMap f = NewtonMap::build(real_poly({2, -2, 0, 1}));
    return f;
}

const NewtonGraphApprox& unity_level(int n) {
    static const std::vector<NewtonGraphApprox> levels = [] {
        std::vector<NewtonGraphApprox> v = {trace_delta0(unity())};
        v.push_back(pull_back(unity(), v[0]));
        v.push_back(pull_back(unity(), v[1]));
        return v;
    }();
    return levels[static_cast<size_t>(n)];
}

int root_index_near(const NewtonMap& f, Complex z) {
    for (int i = 0; i < f.degree(); ++i) {
        if (std::abs(f.root(i) - z) < 1e-9) return i;
    }
    return -1;
}

// Boettcher coordinate of z^3 - 1 at the root a as the limit of
// (lambda u_n)^(2^-n), written as a product of ratios close to 1 so principal
// roots are correct. u_{n+1} = u_n^2 (2z + a) / (3z^2) has no cancellation.
Complex bottcher_limit_unity(Complex a, Complex lambda, Complex z) {
    Complex u = z - a;
    Complex phi = lambda * u;
    double power = 0.5;
    for (int n = 0; n < 12; ++n) {
        const Complex x = a + u;
        const Complex next = u * u * (2.0 * x + a) / (3.0 * x * x);
        if (std::abs(next) < 1e-150) break;
        phi *= std::pow(lambda * next / ((lambda * u) * (lambda * u)), power);
        u = next;
        power *= 0.5;
    }
    return phi;
}

double distance_to_points(const NewtonGraphApprox& g, const std::vector<SpherePoint>& pts) {
    double worst = 0.0;
    for (const SpherePoint& p : pts) worst = std::max(worst, g.distance(p));
    return worst;
}

}  // namespace

TEST_CASE("bottcher_chart: superattracting roots of z^3 - 1") {
    for (int i = 0; i < 3; ++i) {
        const BottcherChart ch = bottcher_chart(unity(), i);
        CHECK(ch.local_degree() == 2);
        CHECK(ch.radius() >= 0.1);
        CHECK(ch.defect(unity(), 0.1) < 1e-8);
        CHECK(ch.potential_radius() > 0.0);
        // Independent oracle: the limit definition along the orbit.
        for (int s = 0; s < 8; ++s) {
            const Complex z = ch.center() + std::polar(0.08, 0.7 + s * 0.8);
            const Complex oracle = bottcher_limit_unity(ch.center(), ch.lambda(), z);
            CHECK(std::abs(ch(z) - oracle) < 1e-10);
            CHECK(std::abs(ch.inverse(ch(z), z) - z) < 1e-12);
        }
    }
}

TEST_CASE("bottcher_chart: classic cubic and guards") {
    for (int i = 0; i < 3; ++i) {
        const BottcherChart ch = bottcher_chart(classic(), i);
        CHECK(ch.defect(classic(), 0.5 * ch.radius()) < 1e-8);
    }
    CHECK_THROWS_AS(bottcher_chart(NewtonMap::build(real_poly({-1, 0, 1})), 0), DegreeError);
    CHECK_THROWS_AS(bottcher_chart(unity(), 3), InputError);
    // (z - 1)^2 (z + 1)(z - 2): the double root is not superattracting.
    const NewtonMap g = NewtonMap::build(from_roots(std::vector<Complex>{1.0, 1.0, -1.0, 2.0}));
    bool threw = false;
    for (int i = 0; i < g.degree(); ++i) {
        if (g.root_multiplicity(i) == 2) {
            CHECK_THROWS_AS(bottcher_chart(g, i), ChartFailure);
            threw = true;
        }
    }
    CHECK(threw);
}

TEST_CASE("trace_ray: the fixed ray of root 1 for z^3 - 1 is the real half-line") {
    const int i = root_index_near(unity(), 1.0);
    const Ray ray = trace_ray(unity(), bottcher_chart(unity(), i), 0, 1);
    REQUIRE(ray.points.size() >= 3);
    CHECK(ray.landing.is_infinite());
    CHECK(ray.points.back().is_infinite());
    CHECK(std::abs(ray.points.front().value() - 1.0) < 1e-15);
    double last = 1.0;
    for (size_t k = 1; k + 1 < ray.points.size(); ++k) {
        const Complex z = ray.points[k].value();
        CHECK(std::abs(z.imag()) < 1e-3 * (1.0 + std::abs(z)));
        CHECK(z.real() >= last);  // monotone, so the polyline covers [1, inf)
        last = z.real();
    }
    CHECK(last > 1e7);
}

TEST_CASE("trace_delta0 and pull_back for z^3 - 1") {
    const NewtonGraphApprox& g0 = unity_level(0);
    CHECK(g0.vertices.size() == 4);
    CHECK(g0.edges.size() == 3);
    CHECK(faces(g0).faces.size() == 1);

    const NewtonGraphApprox& g1 = unity_level(1);
    CHECK(g1.level == 1);
    CHECK(g1.vertices.size() == 8);
    CHECK(g1.edges.size() == 9);
    CHECK(faces(g1).faces.size() == 3);
    const int pole = g1.find_vertex(SpherePoint(Complex{0.0, 0.0}), 1e-9);
    REQUIRE(pole >= 0);
    CHECK(g1.vertices[static_cast<size_t>(pole)].pole);
    CHECK(g1.vertices[static_cast<size_t>(pole)].local_degree == 2);
    CHECK(g1.rotation[static_cast<size_t>(pole)].size() == 6);
    // Co-roots -omega^k / 2 are leaves.
    for (int k = 0; k < 3; ++k) {
        const int v = g1.find_vertex(SpherePoint(-0.5 * std::polar(1.0, 2.0 * M_PI * k / 3)), 1e-9);
        REQUIRE(v >= 0);
        CHECK(g1.rotation[static_cast<size_t>(v)].size() == 1);
    }
    CHECK(g1.edges.size() <= 3 * g0.edges.size());
}

TEST_CASE("graph dynamics: monotone, forward invariant, images consistent") {
    for (int n = 0; n < 2; ++n) {
        const NewtonGraphApprox& g = unity_level(n);
        const NewtonGraphApprox& h = unity_level(n + 1);
        for (const GraphEdge& e : g.edges) CHECK(distance_to_points(h, e.points) <= 1e-6);
        for (const GraphEdge& e : h.edges) {
            std::vector<SpherePoint> images;
            for (const SpherePoint& p : e.points) images.push_back(unity().apply(p));
            CHECK(distance_to_points(g, images) <= 1e-6);
            REQUIRE(e.image >= 0);
        }
        for (const GraphVertex& v : h.vertices) {
            REQUIRE(v.image >= 0);
            CHECK(chordal(h.vertices[static_cast<size_t>(v.image)].position, unity().apply(v.position)) < 1e-6);
        }
    }
}

TEST_CASE("point_locate: sectors of the level-1 graph of z^3 - 1") {
    // Level 1 is three lines through the pole 0 joining each root to infinity,
    // plus spikes from 0 to the co-roots. Faces are the three open sectors
    // between consecutive root directions.
    const NewtonGraphApprox& g = unity_level(1);
    const FaceDecomposition fd = faces(g);
    std::vector<int> sector_face(3, -2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    int located = 0;
    for (int s = 0; s < 1000; ++s) {
        const Complex z{coord(rng), coord(rng)};
        double t = std::arg(z) / (2.0 * M_PI / 3.0);
        if (t < 0) t += 3.0;
        const double frac = t - std::floor(t);
        const bool near_ray = frac < 1e-3 || frac > 1 - 1e-3;
        const bool near_spike = std::abs(frac - 0.5) < 1e-3 && std::abs(z) < 0.6;
        if (near_ray || near_spike || std::abs(z) < 1e-3) continue;
        const int face = point_locate(g, fd, SpherePoint(z));
        REQUIRE(face != kOnGraph);
        const size_t sector = static_cast<size_t>(std::floor(t)) % 3;
        if (sector_face[sector] == -2) sector_face[sector] = face;
        CHECK(sector_face[sector] == face);
        ++located;
    }
    CHECK(located > 900);
    CHECK(sector_face[0] != sector_face[1]);
    CHECK(sector_face[1] != sector_face[2]);
    CHECK(sector_face[0] != sector_face[2]);
    CHECK(point_locate(g, fd, SpherePoint(Complex{2.0, 0.0})) == kOnGraph);
    CHECK(point_locate(g, fd, SpherePoint::infinity()) == kOnGraph);
    for (const Face& face : fd.faces) CHECK(point_locate(g, fd, face.representative) == face.id);
}

TEST_CASE("itinerary") {
    const NewtonGraphApprox& g = unity_level(1);
    const FaceDecomposition fd = faces(g);
    const Itinerary pole = itinerary(unity(), SpherePoint(Complex{0.0, 0.0}), g, fd, 3);
    CHECK(pole.faces == std::vector<int>{kOnGraph, kOnGraph, kOnGraph});
    const Itinerary it = itinerary(unity(), SpherePoint(Complex{-1.0, 0.3}), g, fd, 6);
    CHECK(it.length == 6);
    CHECK(it.faces.size() == 6);
    CHECK(it.faces[0] == point_locate(g, fd, SpherePoint(Complex{-1.0, 0.3})));
    CHECK_THROWS_AS(itinerary(unity(), SpherePoint(Complex{1.0, 1.0}), g, fd, 0), InputError);
}

TEST_CASE("canonical_level") {
    const CanonicalLevel a = canonical_level(unity(), 3);
    CHECK(a.level == 1);
    CHECK(a.graph.vertices.size() == 8);
    const CanonicalLevel b = canonical_level(classic(), 3);
    CHECK(b.level == 1);
    try {
        canonical_level(unity(), 0);
        FAIL("expected LevelNotReached");
    } catch (const LevelNotReached& e) {
        CHECK(e.n_max() == 0);
        CHECK(e.partial().graph.level == 0);
    }
}

TEST_CASE("canonical_code: invariant under affine conjugation") {
    // 8z^3 - 1 has roots omega^k / 2; its Newton map is conjugate to that of z^3 - 1.
    const NewtonMap g = NewtonMap::build(real_poly({-1, 0, 0, 8}));
    const NewtonGraphApprox h1 = pull_back(g, trace_delta0(g));
    const NewtonGraphApprox& g1 = unity_level(1);
    CHECK(canonical_code(g1, faces(g1)).code == canonical_code(h1, faces(h1)).code);
    const NewtonGraphApprox c1 = pull_back(classic(), trace_delta0(classic()));
    CHECK(canonical_code(g1, faces(g1)).code != canonical_code(c1, faces(c1)).code);
}

TEST_CASE("comb_equivalent") {
    CHECK(comb_equivalent(unity(), unity(), 1) == TriState::Yes);
    CHECK(comb_equivalent(classic(), classic(), 1) == TriState::Yes);
    CHECK(comb_equivalent(unity(), classic(), 1) == TriState::No);
    // p(z) = (z - 1)^3 - 2(z - 1) + 2, a translate of the classic cubic.
    const NewtonMap shifted = NewtonMap::build(taylor_shift(classic().p(), Complex{-1.0, 0.0}));
    CHECK(comb_equivalent(classic(), shifted, 1) == TriState::Yes);
}

TEST_CASE("pull_back: free critical value inside an edge of the level-0 graph") {
    // For z^3 + a z + 1 with real a > 0 the free critical point 0 maps to
    // -1/a, on the ray of the real root.
    for (double a : {0.3, 2.7775328802506551e-05}) {
        CAPTURE(a);
        const NewtonMap f = NewtonMap::build(real_poly({1.0, a, 0.0, 1.0}));
        const NewtonGraphApprox g0 = trace_delta0(f);
        NewtonGraphApprox g1;
        REQUIRE_NOTHROW(g1 = pull_back(f, g0));
        const int c = g1.find_vertex(SpherePoint(Complex{0.0, 0.0}), 1e-9);
        REQUIRE(c >= 0);
        const GraphVertex& v = g1.vertices[static_cast<size_t>(c)];
        CHECK(v.kind == VertexKind::PreVertex);
        CHECK_FALSE(v.pole);
        CHECK(v.local_degree == 2);
        CHECK(v.image == -1);
        CHECK(g1.rotation[static_cast<size_t>(c)].size() == 4);
        const FaceDecomposition fd = faces(g1);
        const long chi = static_cast<long>(g1.vertices.size()) - static_cast<long>(g1.edges.size()) +
                         static_cast<long>(fd.faces.size());
        CHECK(chi == 2);
        for (const GraphEdge& e : g1.edges) {
            std::vector<SpherePoint> images;
            for (const SpherePoint& p : e.points) images.push_back(f.apply(p));
            CHECK(distance_to_points(g0, images) <= 1e-6);
        }
        CHECK(comb_equivalent(f, f, 1) == TriState::Yes);
    }
    const NewtonMap near_a = NewtonMap::build(real_poly({1.0, 2.7775328802506551e-05, 0.0, 1.0}));
    const NewtonMap near_b = NewtonMap::build(real_poly({1.0, 2.702532880250655e-05, 0.0, 1.0}));
    CHECK(comb_equivalent(near_a, near_b, 1) == TriState::Yes);
}

TEST_CASE("export_graph is deterministic") {
    const NewtonGraphApprox& g = unity_level(1);
    const FaceDecomposition fd = faces(g);
    const std::string a = export_graph(g, fd);
    CHECK(a == export_graph(g, fd));
    size_t lines = 0;
    for (char c : a) lines += c == '\n';
    CHECK(lines == g.vertices.size() + g.edges.size() + fd.faces.size());
    CHECK(a.rfind("V 0 inf inf inf\n", 0) == 0);
}

TEST_CASE("property: Euler, monotonicity and invariance on random cubics") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coef(-1.5, 1.5);
    int built = 0;
    for (int trial = 0; trial < 12 && built < 5; ++trial) {
        const Complex a{coef(rng), coef(rng)};
        const Complex b{coef(rng), coef(rng)};
        const NewtonMap f = NewtonMap::build(Polynomial({b, a, 0.0, 1.0}));
        NewtonGraphApprox g0;
        NewtonGraphApprox g1;
        try {
            g0 = trace_delta0(f);
            g1 = pull_back(f, g0);
        } catch (const RayTraceFailure&) {
            continue;
        } catch (const LandingAmbiguity&) {
            continue;
        } catch (const LiftFailure&) {
            continue;
        } catch (const ChartFailure&) {
            continue;
        }
        ++built;
        CHECK_NOTHROW(faces(g0));
        CHECK_NOTHROW(faces(g1));
        for (const GraphEdge& e : g0.edges) CHECK(distance_to_points(g1, e.points) <= 1e-6);
        for (const GraphEdge& e : g1.edges) {
            std::vector<SpherePoint> images;
            for (const SpherePoint& p : e.points) images.push_back(f.apply(p));
            CHECK(distance_to_points(g0, images) <= 1e-6);
        }
        // Rays stay in their basin.
        for (const GraphEdge& e : g0.edges) {
            for (size_t k = 1; k + 1 < e.points.size(); k += 7) {
                const OrbitClassification c = classify(f, e.points[k]);
                CHECK(c.kind == OrbitKind::ConvergedToRoot);
                CHECK(c.root_index == g0.vertices[static_cast<size_t>(e.v0)].root_index);
            }
        }
        // Conjugate coefficients give the mirrored graph.
        const NewtonMap fc = NewtonMap::build(Polynomial({std::conj(b), std::conj(a), 0.0, 1.0}));
        const NewtonGraphApprox h1 = pull_back(fc, trace_delta0(fc));
        CHECK(h1.vertices.size() == g1.vertices.size());
        CHECK(h1.edges.size() == g1.edges.size());
        for (const GraphVertex& v : g1.vertices) CHECK(h1.find_vertex(conj(v.position), 1e-6) >= 0);
    }
    CHECK(built >= 3);
}
