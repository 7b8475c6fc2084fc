#pragma once

#include <string>
#include <vector>

#include "newton_dyn/newton_map.hpp"

namespace newton_dyn {

struct OrbitBudget {
    int max_iter = 20000;
    double eps_root = 1e-9;
    double eps_cycle = 1e-9;
    double contraction_margin = 0.05;
    double chart_radius = kChartRadius;

    // Throws InputError when a field is out of range.
    void validate() const;
};

enum class OrbitKind { ConvergedToRoot, AttractingCycle, LandsOnInfinity, Unresolved };
enum class UnresolvedReason { None, SlowOrNone, SuspectedParabolic, SuspectedJulia };

const char* to_string(OrbitKind kind);
const char* to_string(UnresolvedReason reason);

struct OrbitClassification {
    OrbitKind kind = OrbitKind::Unresolved;
    int root_index = -1;       // ConvergedToRoot
    int hitting_time = 0;      // ConvergedToRoot, AttractingCycle
    int period = 0;            // AttractingCycle
    SpherePoint representative;
    Complex multiplier{0.0, 0.0};
    std::vector<SpherePoint> cycle;  // starts at representative
    int step = 0;                    // LandsOnInfinity
    UnresolvedReason reason = UnresolvedReason::None;

    bool attracted() const { return kind == OrbitKind::ConvergedToRoot || kind == OrbitKind::AttractingCycle; }
};

OrbitClassification classify(const NewtonMap& f, const SpherePoint& z0, const OrbitBudget& b = {});

// Product of chart-aware derivatives along the cycle. Throws NotACycle when
// the points are not distinct or f does not map each to the next within tol.
Complex cycle_multiplier(const NewtonMap& f, const std::vector<SpherePoint>& cycle, double tol = 1e-9);

struct CriticalOrbit {
    CriticalPoint point;
    OrbitClassification orbit;
};

enum class CertificateStatus { Certified, NotCertified };

struct HyperbolicityCertificate {
    CertificateStatus status = CertificateStatus::NotCertified;
    std::vector<CriticalOrbit> per_critical;
    int tau = 0;

    bool certified() const { return status == CertificateStatus::Certified; }
};

// Classifies every critical point; the base of tau and certify_hyperbolic.
std::vector<CriticalOrbit> critical_orbits(const NewtonMap& f, const OrbitBudget& b = {});

// Critical points in attracting basins, counted with multiplicity.
int tau(const NewtonMap& f, const OrbitBudget& b = {});

HyperbolicityCertificate certify_hyperbolic(const NewtonMap& f, const OrbitBudget& b = {});

}  // namespace newton_dyn
