#include "newton_dyn/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "newton_dyn/error.hpp"
#include "newton_dyn/parallel.hpp"

namespace newton_dyn {

namespace {

Rgb hsv(double h, double s, double v) {
    const double c = v * s;
    const double hp = std::fmod(h, 1.0) * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double m = v - c;
    auto byte = [](double t) { return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)); };
    return {byte(r + m), byte(g + m), byte(b + m)};
}

}  // namespace

void Viewport::validate() const {
    if (!(width > 0.0) || !std::isfinite(width)) throw InputError("viewport: width must be positive");
    if (pixels_x < 1 || pixels_y < 1) throw InputError("viewport: pixel counts must be positive");
}

Complex Viewport::pixel_center(int i, int j) const {
    const double h = pixel_size();
    const double height = h * pixels_y;
    return {center.real() - 0.5 * width + (i + 0.5) * h, center.imag() + 0.5 * height - (j + 0.5) * h};
}

ImageGrid render_basins(const NewtonMap& f, const Viewport& vp, const OrbitBudget& b, int threads) {
    vp.validate();
    b.validate();
    ImageGrid g;
    g.width = vp.pixels_x;
    g.height = vp.pixels_y;
    g.degree = f.degree();
    const size_t n = static_cast<size_t>(g.width) * static_cast<size_t>(g.height);
    g.codes.assign(n, 0);
    g.hitting.assign(n, 0);
    std::vector<SpherePoint> reps(n);

    parallel_for(static_cast<size_t>(g.height), threads, [&](size_t j) {
        for (int i = 0; i < g.width; ++i) {
            const size_t k = j * static_cast<size_t>(g.width) + static_cast<size_t>(i);
            const OrbitClassification c = classify(f, SpherePoint(vp.pixel_center(i, static_cast<int>(j))), b);
            switch (c.kind) {
                case OrbitKind::ConvergedToRoot:
                    g.codes[k] = c.root_index;
                    g.hitting[k] = c.hitting_time;
                    break;
                case OrbitKind::LandsOnInfinity:
                    g.codes[k] = g.infinity_code();
                    g.hitting[k] = c.step;
                    break;
                case OrbitKind::Unresolved:
                    g.codes[k] = g.unresolved_code();
                    g.hitting[k] = b.max_iter;
                    break;
                case OrbitKind::AttractingCycle:
                    g.codes[k] = -1;  // assigned below
                    g.hitting[k] = c.hitting_time;
                    reps[k] = c.representative;
                    break;
            }
        }
    });

    // Cycle ids from the sorted representatives, merged within 1e-6.
    std::vector<SpherePoint> found;
    for (size_t k = 0; k < n; ++k) {
        if (g.codes[k] == -1) found.push_back(reps[k]);
    }
    auto key = [](const SpherePoint& p) {
        return p.is_infinite() ? std::pair<double, double>{HUGE_VAL, HUGE_VAL}
                               : std::pair<double, double>{p.value().real(), p.value().imag()};
    };
    std::sort(found.begin(), found.end(), [&](const SpherePoint& x, const SpherePoint& y) { return key(x) < key(y); });
    for (const SpherePoint& p : found) {
        bool known = false;
        for (const SpherePoint& q : g.cycles) known = known || chordal(p, q) <= 1e-6;
        if (!known) g.cycles.push_back(p);
    }
    for (size_t k = 0; k < n; ++k) {
        if (g.codes[k] != -1) continue;
        size_t best = 0;
        for (size_t c = 1; c < g.cycles.size(); ++c) {
            if (chordal(reps[k], g.cycles[c]) < chordal(reps[k], g.cycles[best])) best = c;
        }
        g.codes[k] = g.cycle_code(static_cast<int>(best));
    }
    return g;
}

ImageGrid render_tau(int d, const std::vector<Interval>& box, const std::vector<int>& resolution, const OrbitBudget& b,
                     int threads) {
    const TauGrid t = tau_grid(d, box, resolution, b, threads);
    ImageGrid g;
    g.degree = d;
    if (resolution.size() == 1) {
        g.width = resolution[0];
        g.height = 1;
    } else {
        g.width = resolution[1];
        g.height = resolution[0];
    }
    g.codes = t.values;
    g.hitting.assign(g.codes.size(), 0);
    return g;
}

Palette basin_palette(const ImageGrid& g, bool shade) {
    Palette p;
    p.shade = shade;
    for (int i = 0; i < g.degree; ++i) p.colors.push_back(hsv(static_cast<double>(i) / g.degree, 0.75, 0.95));
    p.colors.push_back({0, 0, 0});        // infinity
    p.colors.push_back({128, 128, 128});  // unresolved
    for (size_t k = 0; k < g.cycles.size(); ++k) {
        p.colors.push_back(hsv(0.13 + 0.61 * static_cast<double>(k), 0.35, 1.0));
    }
    return p;
}

Palette tau_palette(int d) {
    Palette p;
    p.offset = 1;
    p.colors.push_back({255, 255, 255});  // discriminant
    const int top = 2 * d - 2;
    for (int t = 0; t <= top; ++t) {
        const auto v = static_cast<std::uint8_t>(std::lround(255.0 * t / top));
        p.colors.push_back(t == top ? Rgb{40, 160, 60} : Rgb{v, 0, static_cast<std::uint8_t>(255 - v)});
    }
    return p;
}

std::string encode_ppm(const ImageGrid& g, const Palette& palette) {
    if (g.width < 1 || g.height < 1 || g.codes.size() != static_cast<size_t>(g.width) * static_cast<size_t>(g.height)) {
        throw InputError("encode_ppm: grid dimensions do not match its data");
    }
    std::string out = "P6\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
    out.reserve(out.size() + 3 * g.codes.size());
    for (size_t k = 0; k < g.codes.size(); ++k) {
        const long idx = static_cast<long>(g.codes[k]) + palette.offset;
        if (idx < 0 || idx >= static_cast<long>(palette.colors.size())) {
            throw InputError("encode_ppm: palette does not cover code " + std::to_string(g.codes[k]));
        }
        Rgb c = palette.colors[static_cast<size_t>(idx)];
        if (palette.shade && k < g.hitting.size()) {
            const int band = std::clamp(g.hitting[k], 0, 15);
            for (auto& ch : c) ch = static_cast<std::uint8_t>(ch * (16 - band) / 16);
        }
        out.append(reinterpret_cast<const char*>(c.data()), 3);
    }
    return out;
}

void write_ppm(const ImageGrid& g, const Palette& palette, const std::string& path) {
    const std::string bytes = encode_ppm(g, palette);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_ppm: cannot open " + path);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write_ppm: write failed for " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace newton_dyn
