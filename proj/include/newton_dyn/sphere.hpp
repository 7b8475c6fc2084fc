#pragma once

#include <cmath>
#include <complex>

namespace newton_dyn {

using Complex = std::complex<double>;

// A point of the Riemann sphere: either a finite complex number or infinity.
class SpherePoint {
public:
    constexpr SpherePoint() = default;
    constexpr SpherePoint(Complex z) : z_(z) {}  // NOLINT(google-explicit-constructor)
    static constexpr SpherePoint infinity() {
        SpherePoint p;
        p.inf_ = true;
        return p;
    }

    bool is_infinite() const { return inf_; }
    bool is_finite() const { return !inf_; }
    // Only meaningful for finite points.
    Complex value() const { return z_; }

    // Coordinate in the reciprocal chart w = 1/z (0 at infinity).
    Complex reciprocal() const;

    friend bool operator==(const SpherePoint& a, const SpherePoint& b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.z_ == b.z_);
    }

private:
    Complex z_{0.0, 0.0};
    bool inf_ = false;
};

// Chordal metric on the sphere, bounded by 2.
double chordal(const SpherePoint& a, const SpherePoint& b);

// Chordal length element at z: |dz| -> 2|dz|/(1+|z|^2).
inline double chordal_factor(Complex z) { return 2.0 / (1.0 + std::norm(z)); }

SpherePoint conj(const SpherePoint& p);

}  // namespace newton_dyn
