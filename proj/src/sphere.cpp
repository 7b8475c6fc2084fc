#include "newton_dyn/sphere.hpp"

namespace newton_dyn {

Complex SpherePoint::reciprocal() const {
    if (inf_) return {0.0, 0.0};
    if (z_ == Complex{0.0, 0.0}) return {HUGE_VAL, 0.0};
    return 1.0 / z_;
}

double chordal(const SpherePoint& a, const SpherePoint& b) {
    if (a.is_infinite() && b.is_infinite()) return 0.0;
    if (a.is_infinite()) return 2.0 / std::sqrt(1.0 + std::norm(b.value()));
    if (b.is_infinite()) return 2.0 / std::sqrt(1.0 + std::norm(a.value()));
    const Complex za = a.value();
    const Complex zb = b.value();
    // Large points are compared in the reciprocal chart to avoid overflow.
    if (std::abs(za) > 1.0 && std::abs(zb) > 1.0) {
        const Complex wa = 1.0 / za;
        const Complex wb = 1.0 / zb;
        return 2.0 * std::abs(wa - wb) / std::sqrt((1.0 + std::norm(wa)) * (1.0 + std::norm(wb)));
    }
    return 2.0 * std::abs(za - zb) / std::sqrt((1.0 + std::norm(za)) * (1.0 + std::norm(zb)));
}

SpherePoint conj(const SpherePoint& p) {
    if (p.is_infinite()) return p;
    return SpherePoint(std::conj(p.value()));
}

}  // namespace newton_dyn
