#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "newton_dyn/kneading.hpp"
#include "newton_dyn/orbit.hpp"

namespace newton_dyn {

// p(z) = z^d + a_{d-2} z^{d-2} + ... + a_1 z + 1, a = (a_1, ..., a_{d-2}).
struct ParameterPoint {
    int d = 3;
    std::vector<double> a;

    bool operator==(const ParameterPoint&) const = default;
};

// Throws DiscriminantZero when the roots are not pairwise distinct and
// InputError when d < 3 or a has the wrong length.
NewtonMap map_of(const ParameterPoint& pp);
// Requires a real normalized map; throws InputError otherwise.
ParameterPoint params_of(const NewtonMap& f);

double linf_distance(const ParameterPoint& x, const ParameterPoint& y);

using Interval = std::pair<double, double>;

// tau at the nodes of a grid over a box of dimension d - 2 <= 2. Nodes are
// lo + (hi - lo) i / (n - 1); values are row-major with the first axis
// slowest. Nodes on the discriminant hold -1.
struct TauGrid {
    int d = 3;
    std::vector<Interval> box;
    std::vector<int> resolution;
    std::vector<int> values;

    ParameterPoint node(size_t index) const;
};

TauGrid tau_grid(int d, const std::vector<Interval>& box, const std::vector<int>& resolution,
                 const OrbitBudget& budget = {}, int threads = 0);

// Continues an attracting or repelling cycle of map_of(pp0) to map_of(pp1)
// along the segment between them. Throws ContinuationLost when Newton fails
// or the multiplier crosses the unit circle.
std::vector<SpherePoint> continue_cycle(const ParameterPoint& pp0, const std::vector<SpherePoint>& cycle,
                                        const ParameterPoint& pp1);

struct SearchConfig {
    std::vector<double> radii = default_radii();
    int samples_per_radius = 64;
    OrbitBudget budget;
    bool require_Y = false;
    std::uint64_t rng_seed = 1;
    int threads = 0;

    static std::vector<double> default_radii();  // geometric, 1e-4 to 0.5, 10 steps
    void validate() const;                        // throws InputError
};

struct RadiusTrace {
    double radius = 0.0;
    int samples = 0;
    int certified = 0;
    int rejected_y = 0;     // certified but not in Y (require_Y only)
    int discriminant = 0;   // samples on the discriminant
};

struct ApproxFound {
    ParameterPoint point;
    HyperbolicityCertificate certificate;
    double distance = 0.0;
    int samples_tried = 0;
};

struct ApproxResult {
    std::optional<ApproxFound> found;
    std::vector<RadiusTrace> trace;  // center first (radius 0), then each radius tried
};

ApproxResult find_hyperbolic_near(const ParameterPoint& pp, const SearchConfig& cfg = {});

// Eight perturbations of a parameter at l-infinity distance up to `delta`:
// +-delta {1, 1/2, 1/4, 1/8} in one dimension, corners and edge midpoints of
// the square in the first two coordinates otherwise.
std::vector<ParameterPoint> perturbations(const ParameterPoint& pp, double delta = 1e-6);

struct OpennessReport {
    bool passed = false;
    int center_tau = 0;
    std::vector<int> neighbor_tau;  // -1 for neighbors on the discriminant
};

// Every neighbor must be certified with the center's tau.
OpennessReport openness_check(const ParameterPoint& pp, const OrbitBudget& budget = {}, double delta = 1e-6);

}  // namespace newton_dyn
