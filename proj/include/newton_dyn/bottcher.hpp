#pragma once

#include <vector>

#include "newton_dyn/newton_map.hpp"

namespace newton_dyn {

// Local Boettcher coordinate at a superattracting root: phi(f(z)) = phi(z)^k.
// phi(a + u) = lambda * u * (1 + b_1 u + ... + b_K u^K).
class BottcherChart {
public:
    int basin_index() const { return basin_; }
    Complex center() const { return center_; }
    int local_degree() const { return k_; }
    Complex lambda() const { return lambda_; }
    const std::vector<Complex>& coefficients() const { return b_; }
    // Validity radius in the z-plane and the potential radius whose
    // phi-disk lies inside it.
    double radius() const { return radius_; }
    double potential_radius() const { return potential_radius_; }

    Complex operator()(Complex z) const;
    Complex derivative(Complex z) const;
    // Solves phi(z) = zeta near `seed` (defaults to the linear guess).
    // Throws ChartFailure when Newton leaves the validity disk.
    Complex inverse(Complex zeta) const;
    Complex inverse(Complex zeta, Complex seed) const;

    // max |phi(f(z)) - phi(z)^k| over a circle of radius r around the center.
    double defect(const NewtonMap& f, double r, int samples = 64) const;

    friend BottcherChart bottcher_chart(const NewtonMap& f, int basin, int order);

private:
    int basin_ = -1;
    Complex center_;
    int k_ = 2;
    Complex lambda_;
    std::vector<Complex> b_;  // b_0 = 1
    double radius_ = 0.0;
    double potential_radius_ = 0.0;
};

// Requires f.degree() >= 3 and a simple root at `basin`. Throws ChartFailure
// when the conjugacy defect test fails at every tried radius.
BottcherChart bottcher_chart(const NewtonMap& f, int basin, int order = 40);

}  // namespace newton_dyn
