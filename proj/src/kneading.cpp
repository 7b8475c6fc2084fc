#include "newton_dyn/kneading.hpp"

#include <algorithm>
#include <cmath>

#include "newton_dyn/error.hpp"

namespace newton_dyn {

namespace {

bool is_real_point(const SpherePoint& z) {
    return z.is_finite() && std::abs(z.value().imag()) <= 1e-9 * (1.0 + std::abs(z.value()));
}

void require_real(const NewtonMap& f) {
    if (!f.real()) throw NonRealMap("kneading: the map has non-real coefficients");
}

}  // namespace

const char* to_string(TriState t) {
    switch (t) {
        case TriState::Yes: return "yes";
        case TriState::No: return "no";
        case TriState::Unknown: return "unknown";
    }
    return "unknown";
}

std::string KneadingSymbol::str() const {
    switch (kind) {
        case Kind::Interval: return std::to_string(j);
        case Kind::CriticalHit: return std::to_string(j) + "*";
        case Kind::Infinity: return "inf";
    }
    return "?";
}

FreeCriticalSet free_real_criticals(const NewtonMap& f, const OrbitBudget& b) {
    require_real(f);
    std::vector<std::pair<double, OrbitClassification>> found;
    for (const CriticalOrbit& co : critical_orbits(f, b)) {
        if (!is_real_point(co.point.location)) continue;
        // Unresolved orbits count as free: Y-membership must never be claimed wrongly.
        if (co.orbit.kind == OrbitKind::ConvergedToRoot) continue;
        const double x = co.point.location.value().real();
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const auto& e) { return std::abs(e.first - x) <= 1e-9 * (1.0 + std::abs(x)); });
        if (!dup) found.emplace_back(x, co.orbit);
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& c) { return a.first < c.first; });
    FreeCriticalSet out;
    for (auto& [x, oc] : found) {
        out.points.push_back(x);
        out.provenance.push_back(std::move(oc));
    }
    return out;
}

KneadingSymbol symbol_of(double x, const std::vector<double>& criticals, double eps_eq) {
    for (size_t j = 0; j < criticals.size(); ++j) {
        if (std::abs(x - criticals[j]) <= eps_eq) return KneadingSymbol::hit(static_cast<int>(j) + 1);
    }
    const auto above = std::upper_bound(criticals.begin(), criticals.end(), x);
    return KneadingSymbol::interval(static_cast<int>(above - criticals.begin()) + 1);
}

KneadingSequence kneading_sequence(const NewtonMap& f, int n, const OrbitBudget& b, double eps_eq) {
    if (n < 1) throw InputError("kneading_sequence: length must be at least 1");
    const FreeCriticalSet fc = free_real_criticals(f, b);
    KneadingSequence out;
    out.length = n;
    out.criticals = fc.points;
    for (double c : fc.points) {
        std::vector<KneadingSymbol> row;
        SpherePoint x(c);
        for (int t = 0; t < n; ++t) {
            if (x.is_infinite()) {
                row.push_back(KneadingSymbol::infinity());
                break;
            }
            row.push_back(symbol_of(x.value().real(), fc.points, eps_eq));
            if (t + 1 == n) break;
            x = f.apply(x);
            // Real maps keep the real line; drop rounding noise in the imaginary part.
            if (x.is_finite()) x = SpherePoint(Complex{x.value().real(), 0.0});
        }
        out.periodic.push_back(detect_period(row));
        out.symbols.push_back(std::move(row));
    }
    return out;
}

std::optional<Periodicity> detect_period(const std::vector<KneadingSymbol>& s) {
    const int n = static_cast<int>(s.size());
    for (const KneadingSymbol& k : s) {
        if (k.kind == KneadingSymbol::Kind::Infinity) return std::nullopt;
    }
    for (int p = 1; 2 * p <= n; ++p) {
        for (int q = 0; n - q >= 2 * p; ++q) {
            bool ok = true;
            for (int i = q; i + p < n && ok; ++i) ok = s[static_cast<size_t>(i)] == s[static_cast<size_t>(i + p)];
            if (ok) return Periodicity{q, p};
        }
    }
    return std::nullopt;
}

std::string to_string(const std::vector<KneadingSymbol>& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ',';
        out += s[i].str();
    }
    return out;
}

std::string to_string(const KneadingSequence& k) {
    std::string out;
    for (size_t i = 0; i < k.symbols.size(); ++i) {
        if (i) out += ';';
        out += to_string(k.symbols[i]);
    }
    return out;
}

std::string periodic_word(const std::vector<KneadingSymbol>& s, const Periodicity& per) {
    const auto first = s.begin() + per.preperiod;
    return to_string(std::vector<KneadingSymbol>(first, first + per.period));
}

TriState in_family_Y(const NewtonMap& f, const OrbitBudget& b) {
    if (!f.real() || !f.normalized()) return TriState::No;
    bool unknown = false;
    for (const CriticalOrbit& co : critical_orbits(f, b)) {
        if (is_real_point(co.point.location)) continue;
        switch (co.orbit.kind) {
            case OrbitKind::ConvergedToRoot: break;
            case OrbitKind::AttractingCycle:
            case OrbitKind::LandsOnInfinity: return TriState::No;
            case OrbitKind::Unresolved: unknown = true; break;
        }
    }
    return unknown ? TriState::Unknown : TriState::Yes;
}

bool kneading_equal(const KneadingSequence& a, const KneadingSequence& b) {
    if (a.length != b.length) throw LengthMismatch("kneading_equal: truncation lengths differ");
    return a.symbols == b.symbols;
}

}  // namespace newton_dyn
