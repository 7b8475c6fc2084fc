#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "newton_dyn/error.hpp"
#include "newton_dyn/render.hpp"

using namespace newton_dyn;

namespace {

const NewtonMap& unity() {
    static const NewtonMap f = NewtonMap::build(Polynomial::from_real(std::vector<double>{-1, 0, 0, 1}));
    return f;
}

int root_near(const NewtonMap& f, Complex z) {
    for (int i = 0; i < f.degree(); ++i) {
        if (std::abs(f.root(i) - z) < 1e-9) return i;
    }
    return -1;
}

Viewport small_view() {
    Viewport vp;
    vp.width = 4.0;
    vp.pixels_x = 64;
    vp.pixels_y = 64;
    return vp;
}

}  // namespace

TEST_CASE("viewport geometry") {
    Viewport vp;
    vp.center = {1.0, -1.0};
    vp.width = 2.0;
    vp.pixels_x = 4;
    vp.pixels_y = 2;
    CHECK(vp.pixel_size() == 0.5);
    CHECK(vp.pixel_center(0, 0) == Complex{0.25, -0.75});
    CHECK(vp.pixel_center(3, 1) == Complex{1.75, -1.25});
    vp.pixels_y = 0;
    CHECK_THROWS_AS(vp.validate(), InputError);
}

TEST_CASE("render_basins: z^3 - 1 is symmetric under rotation by 120 degrees") {
    const Viewport vp = small_view();
    const ImageGrid g = render_basins(unity(), vp);
    const Complex omega = std::polar(1.0, 2.0 * M_PI / 3.0);
    int mismatches = 0;
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) {
            const int code = g.code(i, j);
            REQUIRE(code >= 0);
            REQUIRE(code <= g.unresolved_code());
            if (code >= g.degree) continue;
            const OrbitClassification c = classify(unity(), SpherePoint(omega * vp.pixel_center(i, j)));
            const int expected = root_near(unity(), omega * unity().root(code));
            if (c.kind != OrbitKind::ConvergedToRoot || c.root_index != expected) ++mismatches;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("render_basins: real maps are mirror symmetric") {
    const ImageGrid g = render_basins(unity(), small_view());
    int mismatches = 0;
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) {
            const int a = g.code(i, j);
            const int b = g.code(i, g.height - 1 - j);
            if (a >= g.degree || b >= g.degree) {
                mismatches += a != b;
                continue;
            }
            mismatches += root_near(unity(), std::conj(unity().root(a))) != b;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("render_basins: the 2-cycle basin of z^3 - 2z + 2") {
    const NewtonMap f = NewtonMap::build(Polynomial::from_real(std::vector<double>{2, -2, 0, 1}));
    REQUIRE(classify(f, SpherePoint(Complex{0.0, 0.0})).kind == OrbitKind::AttractingCycle);
    Viewport vp = small_view();
    vp.pixels_x = 65;
    vp.pixels_y = 65;  // odd, so the central pixel sits on 0
    const ImageGrid g = render_basins(f, vp);
    REQUIRE(g.cycles.size() == 1);
    CHECK(g.code(32, 32) == g.cycle_code(0));
    int in_cycle = 0;
    for (int c : g.codes) in_cycle += c == g.cycle_code(0);
    CHECK(in_cycle > 1);
}

TEST_CASE("render_basins: thread count does not change the bytes") {
    const NewtonMap f = NewtonMap::build(Polynomial::from_real(std::vector<double>{2, -2, 0, 1}));
    const ImageGrid a = render_basins(f, small_view(), {}, 1);
    const ImageGrid b = render_basins(f, small_view(), {}, 5);
    CHECK(a.codes == b.codes);
    CHECK(a.hitting == b.hitting);
    CHECK(encode_ppm(a, basin_palette(a, true)) == encode_ppm(b, basin_palette(b, true)));
}

TEST_CASE("render_basins: few unresolved pixels for z^3 - 1") {
    const ImageGrid g = render_basins(unity(), Viewport{});
    int unresolved = 0;
    for (int c : g.codes) unresolved += c == g.unresolved_code();
    CHECK(unresolved <= 0.05 * static_cast<double>(g.codes.size()));
}

TEST_CASE("render_tau matches tau_grid") {
    const ImageGrid g = render_tau(3, {{-1.0, 1.0}}, {257});
    const TauGrid t = tau_grid(3, {{-1.0, 1.0}}, {257});
    CHECK(g.codes == t.values);
    CHECK(g.width == 257);
    CHECK(g.height == 1);
    CHECK(g.codes[128] == 3);  // z^3 + 1
    for (int c : g.codes) CHECK(c <= 4);
    const ImageGrid h = render_tau(4, {{-1.0, 1.0}, {0.0, 1.0}}, {3, 5});
    CHECK(h.height == 3);
    CHECK(h.width == 5);
    CHECK(encode_ppm(h, tau_palette(4)).size() == 11 + 3 * 15);
}

TEST_CASE("ppm encoding") {
    ImageGrid g;
    g.width = 1;
    g.height = 1;
    g.codes = {0};
    g.hitting = {0};
    Palette p;
    p.colors = {Rgb{255, 0, 0}};
    const std::string bytes = encode_ppm(g, p);
    // 11 header bytes and one RGB triple.
    CHECK(bytes.size() == 14);
    CHECK(bytes == std::string("P6\n1 1\n255\n\xff\x00\x00", 14));
    CHECK(bytes == encode_ppm(g, p));

    g.codes = {1};
    CHECK_THROWS_AS(encode_ppm(g, p), InputError);
    g.codes = {0};
    CHECK_THROWS_AS(write_ppm(g, p, "/nonexistent-dir/x.ppm"), IoError);

    const std::string path = "test_render_tmp.ppm";
    write_ppm(g, p, path);
    std::ifstream in(path, std::ios::binary);
    const std::string back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(back == bytes);
    std::remove(path.c_str());
}

TEST_CASE("golden render of z^3 - 1") {
    OrbitBudget b;
    b.max_iter = 500;
    const ImageGrid g = render_basins(unity(), small_view(), b);
    const std::string bytes = encode_ppm(g, basin_palette(g, true));
    CHECK(bytes.size() == 13 + 64 * 64 * 3);
    CHECK(fnv1a64(bytes) == 15867587335467082099ULL);
}
