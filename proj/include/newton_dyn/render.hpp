#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "newton_dyn/orbit.hpp"
#include "newton_dyn/search.hpp"

namespace newton_dyn {

// Square pixels; the height in the plane is width * pixels_y / pixels_x.
struct Viewport {
    Complex center{0.0, 0.0};
    double width = 4.0;
    int pixels_x = 256;
    int pixels_y = 256;

    void validate() const;  // throws InputError
    double pixel_size() const { return width / pixels_x; }
    // Column i from the left, row j from the top.
    Complex pixel_center(int i, int j) const;
};

// Basin codes: [0, d) root index, d infinity, d + 1 unresolved, d + 2 + k
// attracting cycle k (cycles ordered by representative). Tau images hold tau
// values with -1 on the discriminant.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<int> codes;    // row-major from the top-left
    std::vector<int> hitting;  // hitting time or escape step; max_iter when unresolved
    int degree = 0;            // number of distinct roots (basin images)
    std::vector<SpherePoint> cycles;

    int code(int i, int j) const { return codes[static_cast<size_t>(j) * static_cast<size_t>(width) + static_cast<size_t>(i)]; }
    int infinity_code() const { return degree; }
    int unresolved_code() const { return degree + 1; }
    int cycle_code(int k) const { return degree + 2 + k; }
};

ImageGrid render_basins(const NewtonMap& f, const Viewport& vp, const OrbitBudget& b = {}, int threads = 0);

// One pixel per tau_grid node: a single row in one dimension, rows along the
// first axis in two.
ImageGrid render_tau(int d, const std::vector<Interval>& box, const std::vector<int>& resolution,
                     const OrbitBudget& b = {}, int threads = 0);

using Rgb = std::array<std::uint8_t, 3>;

// colors[code + offset]; with shade, 16 brightness bands by hitting time.
struct Palette {
    std::vector<Rgb> colors;
    int offset = 0;
    bool shade = false;
};

Palette basin_palette(const ImageGrid& g, bool shade = false);
Palette tau_palette(int d);

// Binary PPM: "P6\n<w> <h>\n255\n" then RGB rows from the top. Throws
// InputError when the palette misses a code.
std::string encode_ppm(const ImageGrid& g, const Palette& palette);
// Throws IoError when the file cannot be written.
void write_ppm(const ImageGrid& g, const Palette& palette, const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace newton_dyn
