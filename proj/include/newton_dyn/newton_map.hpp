#pragma once

#include <optional>
#include <string>
#include <vector>

#include "newton_dyn/polynomial.hpp"
#include "newton_dyn/sphere.hpp"

namespace newton_dyn {

// Beyond this modulus the map is evaluated in the reciprocal chart w = 1/z.
inline constexpr double kChartRadius = 1e8;

enum class CriticalKind { RootCenter, PoleCritical, FlexCritical, Other };

const char* to_string(CriticalKind kind);

struct CriticalPoint {
    SpherePoint location;
    int local_degree = 2;
    CriticalKind kind = CriticalKind::Other;
    int root_index = -1;  // set for RootCenter
};

struct FixedPointDatum {
    SpherePoint location;
    Complex multiplier;
    int root_index = -1;  // -1 for infinity
};

struct Pole {
    Complex location;
    int order = 1;
};

// The Newton map f(z) = z - p(z)/p'(z) as a self-map of the Riemann sphere.
// Immutable after construction.
class NewtonMap {
public:
    // Throws DegreeError for constant or linear p, or when p has fewer than
    // two distinct roots.
    static NewtonMap build(const Polynomial& p);

    // Test hook: accepts inconsistent derivative data without checking it.
    static NewtonMap from_parts_unchecked(Polynomial p, Polynomial dp, Polynomial ddp, RootSet roots);

    const Polynomial& p() const { return p_; }
    const Polynomial& dp() const { return dp_; }
    const Polynomial& ddp() const { return ddp_; }
    const RootSet& roots() const { return roots_; }
    Complex root(int i) const { return roots_.roots[static_cast<size_t>(i)].location; }
    int root_multiplicity(int i) const { return roots_.roots[static_cast<size_t>(i)].multiplicity; }

    // Number of distinct roots; the degree of f as a rational map.
    int degree() const { return static_cast<int>(roots_.roots.size()); }
    int poly_degree() const { return p_.degree(); }
    // p monic with vanishing z^{d-1} term and constant term 1.
    bool normalized() const { return normalized_; }
    bool real() const { return p_.is_real(1e-12); }

    SpherePoint apply(const SpherePoint& z) const;
    // f in the finite chart; may return a non-finite value near poles.
    Complex eval_finite(Complex z) const;
    // 1/f(1/w), regular at w = 0.
    Complex eval_reciprocal(Complex w) const;

    // Chart-aware derivative: ordinary f' at finite points, the derivative of
    // w -> 1/f(1/w) at infinity. Throws PoleError at poles.
    Complex derivative(const SpherePoint& z) const;

    const std::vector<Pole>& poles() const { return poles_; }
    // Throws CountMismatch if the critical census failed at construction.
    const std::vector<CriticalPoint>& critical_set() const;

    // Index of a root within `tol` of z, or -1.
    int nearest_root(Complex z, double tol) const;
    // Index of a pole within `tol` of z, or -1.
    int nearest_pole(Complex z, double tol) const;

    // Roots of the reduced equation f(w) = s, i.e. (w - s)Q(w) - P0(w) = 0,
    // with multiplicities. For s = infinity this is infinity plus the poles.
    std::vector<std::pair<SpherePoint, int>> preimages(const SpherePoint& s) const;

private:
    NewtonMap() = default;
    void init_caches();
    bool use_root_form(Complex z) const;
    Complex root_form_value(Complex z) const;
    Complex root_form_derivative(Complex z) const;

    Polynomial p_{std::vector<Complex>{1.0}};
    Polynomial dp_{std::vector<Complex>{1.0}};
    Polynomial ddp_{std::vector<Complex>{1.0}};
    RootSet roots_;
    bool normalized_ = false;

    // w-chart data: rev_p(w) = w^n p(1/w), rev_dp(w) = w^{n-1} p'(1/w), ...
    Polynomial rev_p_{std::vector<Complex>{1.0}};
    Polynomial rev_dp_{std::vector<Complex>{1.0}};
    Polynomial rev_ddp_{std::vector<Complex>{1.0}};
    // Reduced form f = z - squarefree/pole_poly.
    Polynomial squarefree_{std::vector<Complex>{1.0}};
    Polynomial pole_poly_{std::vector<Complex>{1.0}};

    std::vector<Pole> poles_;
    std::vector<CriticalPoint> criticals_;
    std::optional<std::string> critical_error_;
};

std::vector<FixedPointDatum> fixed_point_data(const NewtonMap& f);

struct HeadReport {
    bool ok = false;
    std::vector<int> n;  // recovered multiplicities, one per root
    Complex infinity_multiplier;
    std::string diagnostic;
};

// Self-consistency gate: every root multiplier has the form 1 - 1/n and the
// multiplier at infinity matches the holomorphic index formula.
HeadReport head_verify(const NewtonMap& f);

}  // namespace newton_dyn
