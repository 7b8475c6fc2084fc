#include "newton_dyn/orbit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "newton_dyn/error.hpp"

namespace newton_dyn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kTail = 256;

// One step of f, switching to the reciprocal chart beyond the budget's radius.
SpherePoint step(const NewtonMap& f, const SpherePoint& z, double chart_radius) {
    if (z.is_infinite()) return z;
    const Complex v = z.value();
    if (std::abs(v) > chart_radius) {
        const Complex fw = f.eval_reciprocal(1.0 / v);
        if (fw == Complex{0.0, 0.0} || !std::isfinite(std::abs(fw))) return SpherePoint::infinity();
        return SpherePoint(1.0 / fw);
    }
    return f.apply(z);
}

bool lex_less(const SpherePoint& a, const SpherePoint& b) {
    if (a.is_infinite() != b.is_infinite()) return b.is_infinite();
    if (a.is_infinite()) return false;
    if (a.value().real() != b.value().real()) return a.value().real() < b.value().real();
    return a.value().imag() < b.value().imag();
}

enum class CycleVerdict { Attracting, NearRoot, Parabolic, Repelling };

struct CycleCandidate {
    CycleVerdict verdict = CycleVerdict::Repelling;
    std::vector<SpherePoint> points;
    Complex multiplier{0.0, 0.0};
};

SpherePoint iterate(const NewtonMap& f, SpherePoint z, int times, double chart_radius) {
    for (int i = 0; i < times && z.is_finite(); ++i) z = step(f, z, chart_radius);
    return z;
}

// z is (close to) a periodic point of period dividing lam. Tighten it, find
// the minimal period and judge the multiplier.
CycleCandidate examine_cycle(const NewtonMap& f, SpherePoint z, int lam, const OrbitBudget& b) {
    CycleCandidate out;
    for (int rep = 0; rep < 20; ++rep) {
        const SpherePoint next = iterate(f, z, lam, b.chart_radius);
        if (next.is_infinite()) return out;
        const double moved = chordal(next, z);
        z = next;
        if (moved <= 1e-2 * b.eps_cycle) break;
    }
    int period = lam;
    for (int q = 1; q < lam; ++q) {
        if (lam % q != 0) continue;
        if (chordal(iterate(f, z, q, b.chart_radius), z) <= b.eps_cycle) {
            period = q;
            break;
        }
    }
    if (period == 1 && z.is_finite() && f.nearest_root(z.value(), 1e-6 * (1.0 + std::abs(z.value()))) >= 0) {
        out.verdict = CycleVerdict::NearRoot;
        return out;
    }
    std::vector<SpherePoint> pts;
    SpherePoint w = z;
    for (int i = 0; i < period; ++i) {
        pts.push_back(w);
        w = step(f, w, b.chart_radius);
    }
    Complex mult{1.0, 0.0};
    try {
        for (const SpherePoint& p : pts) mult *= f.derivative(p);
    } catch (const PoleError&) {
        return out;
    }
    const auto rep = std::min_element(pts.begin(), pts.end(), lex_less);
    std::rotate(pts.begin(), rep, pts.end());
    out.points = std::move(pts);
    out.multiplier = mult;
    const double m = std::abs(mult);
    if (m < 1.0 - b.contraction_margin) {
        out.verdict = CycleVerdict::Attracting;
    } else if (m <= 1.0 + b.contraction_margin) {
        out.verdict = CycleVerdict::Parabolic;
    } else {
        out.verdict = CycleVerdict::Repelling;
    }
    return out;
}

// Budget ran out: a tail that clusters near a periodic pattern while
// creeping closer suggests a parabolic cycle.
UnresolvedReason tail_reason(const std::array<SpherePoint, kTail>& tail, int count) {
    if (count < kTail) return UnresolvedReason::SlowOrNone;
    auto at = [&](int back) { return tail[static_cast<size_t>((count - 1 - back) % kTail)]; };
    for (int p = 1; p <= 64; ++p) {
        const double now = chordal(at(0), at(p));
        const double before = chordal(at(128), at(128 + p));
        if (now < 1e-3 && now < before) return UnresolvedReason::SuspectedParabolic;
    }
    return UnresolvedReason::SlowOrNone;
}

}  // namespace

void OrbitBudget::validate() const {
    if (max_iter < 0) throw InputError("OrbitBudget: max_iter must be nonnegative");
    if (!(eps_root > 0.0) || !(eps_cycle > 0.0) || !(chart_radius > 0.0)) {
        throw InputError("OrbitBudget: tolerances and chart radius must be positive");
    }
    if (!(contraction_margin > 0.0 && contraction_margin < 1.0)) {
        throw InputError("OrbitBudget: contraction_margin must lie in (0,1)");
    }
}

const char* to_string(OrbitKind kind) {
    switch (kind) {
        case OrbitKind::ConvergedToRoot: return "converged_to_root";
        case OrbitKind::AttractingCycle: return "attracting_cycle";
        case OrbitKind::LandsOnInfinity: return "lands_on_infinity";
        case OrbitKind::Unresolved: return "unresolved";
    }
    return "unresolved";
}

const char* to_string(UnresolvedReason reason) {
    switch (reason) {
        case UnresolvedReason::None: return "none";
        case UnresolvedReason::SlowOrNone: return "slow_or_none";
        case UnresolvedReason::SuspectedParabolic: return "suspected_parabolic";
        case UnresolvedReason::SuspectedJulia: return "suspected_julia";
    }
    return "none";
}

OrbitClassification classify(const NewtonMap& f, const SpherePoint& z0, const OrbitBudget& b) {
    b.validate();
    OrbitClassification out;
    if (z0.is_infinite()) {
        out.kind = OrbitKind::LandsOnInfinity;
        out.step = 0;
        return out;
    }
    auto unresolved = [&](UnresolvedReason r) {
        out.kind = OrbitKind::Unresolved;
        out.reason = r;
        return out;
    };

    std::array<SpherePoint, kTail> tail;
    int count = 0;
    SpherePoint z = z0;
    SpherePoint tortoise = z0;
    int power = 1;
    int lam = 0;
    for (int n = 0;; ++n) {
        tail[static_cast<size_t>(n % kTail)] = z;
        count = n + 1;
        const Complex v = z.value();

        const int idx = f.nearest_root(v, b.eps_root);
        if (idx >= 0) {
            const Complex a = f.root(idx);
            SpherePoint next;
            try {
                next = step(f, z, b.chart_radius);
            } catch (const IndeterminateError&) {
                next = SpherePoint(a);
            }
            const double d0 = std::abs(v - a);
            const double d1 = next.is_finite() ? std::abs(next.value() - a) : HUGE_VAL;
            if (d1 <= std::max((1.0 - b.contraction_margin) * d0, 4.0 * kEps * (1.0 + std::abs(a)))) {
                out.kind = OrbitKind::ConvergedToRoot;
                out.root_index = idx;
                out.hitting_time = n;
                out.representative = SpherePoint(a);
                out.multiplier = f.derivative(SpherePoint(a));
                out.period = 1;
                return out;
            }
        }
        if (f.nearest_pole(v, 1e-13 * (1.0 + std::abs(v))) >= 0) {
            out.kind = OrbitKind::LandsOnInfinity;
            out.step = n + 1;
            return out;
        }
        if (n >= b.max_iter) break;

        SpherePoint next;
        try {
            next = step(f, z, b.chart_radius);
        } catch (const IndeterminateError&) {
            return unresolved(UnresolvedReason::SlowOrNone);
        }
        if (next.is_infinite()) {
            out.kind = OrbitKind::LandsOnInfinity;
            out.step = n + 1;
            return out;
        }
        z = next;

        // Brent's cycle detection with approximate equality.
        ++lam;
        if (chordal(tortoise, z) <= b.eps_cycle) {
            const CycleCandidate c = examine_cycle(f, z, lam, b);
            switch (c.verdict) {
                case CycleVerdict::Attracting:
                    out.kind = OrbitKind::AttractingCycle;
                    out.period = static_cast<int>(c.points.size());
                    out.cycle = c.points;
                    out.representative = c.points.front();
                    out.multiplier = c.multiplier;
                    out.hitting_time = n + 1;
                    return out;
                case CycleVerdict::NearRoot: break;
                case CycleVerdict::Parabolic: return unresolved(UnresolvedReason::SuspectedParabolic);
                case CycleVerdict::Repelling: return unresolved(UnresolvedReason::SuspectedJulia);
            }
        }
        if (power == lam) {
            tortoise = z;
            power *= 2;
            lam = 0;
        }
    }
    return unresolved(tail_reason(tail, count));
}

Complex cycle_multiplier(const NewtonMap& f, const std::vector<SpherePoint>& cycle, double tol) {
    if (cycle.empty()) throw NotACycle("cycle_multiplier: empty cycle");
    const size_t n = cycle.size();
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (chordal(cycle[i], cycle[j]) <= tol) throw NotACycle("cycle_multiplier: repeated point");
        }
    }
    for (size_t i = 0; i < n; ++i) {
        const double gap = chordal(f.apply(cycle[i]), cycle[(i + 1) % n]);
        if (gap > tol) {
            std::ostringstream os;
            os << "cycle_multiplier: f does not map point " << i << " to its successor (chordal gap " << gap << ")";
            throw NotACycle(os.str());
        }
    }
    Complex mult{1.0, 0.0};
    for (const SpherePoint& z : cycle) mult *= f.derivative(z);
    return mult;
}

std::vector<CriticalOrbit> critical_orbits(const NewtonMap& f, const OrbitBudget& b) {
    std::vector<CriticalOrbit> out;
    for (const CriticalPoint& c : f.critical_set()) out.push_back({c, classify(f, c.location, b)});
    return out;
}

namespace {

int tau_of(const std::vector<CriticalOrbit>& orbits) {
    int t = 0;
    for (const CriticalOrbit& co : orbits) {
        if (co.orbit.attracted()) t += co.point.local_degree - 1;
    }
    return t;
}

}  // namespace

int tau(const NewtonMap& f, const OrbitBudget& b) { return tau_of(critical_orbits(f, b)); }

HyperbolicityCertificate certify_hyperbolic(const NewtonMap& f, const OrbitBudget& b) {
    HyperbolicityCertificate cert;
    cert.per_critical = critical_orbits(f, b);
    cert.tau = tau_of(cert.per_critical);
    cert.status = cert.tau == 2 * f.degree() - 2 ? CertificateStatus::Certified : CertificateStatus::NotCertified;
    return cert;
}

}  // namespace newton_dyn
