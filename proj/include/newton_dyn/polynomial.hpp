#pragma once

#include <complex>
#include <span>
#include <vector>

namespace newton_dyn {

using Complex = std::complex<double>;

// Dense polynomial with complex coefficients stored in ascending order.
// The leading coefficient is always nonzero; the zero polynomial is not
// representable.
class Polynomial {
public:
    // Trailing exact zeros are dropped. Throws DegreeError if every
    // coefficient is zero.
    explicit Polynomial(std::vector<Complex> coeffs);
    static Polynomial from_real(std::span<const double> coeffs);

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<Complex>& coeffs() const { return coeffs_; }
    const Complex& operator[](int i) const { return coeffs_[static_cast<size_t>(i)]; }
    const Complex& leading() const { return coeffs_.back(); }

    // True when every coefficient has |imag| <= tol.
    bool is_real(double tol = 1e-12) const;

    // Sum of |c_k| |z|^k; the natural magnitude against which p(z) is judged.
    double scale_at(Complex z) const;

    Polynomial operator*(const Polynomial& other) const;
    Polynomial operator+(const Polynomial& other) const;
    Polynomial operator-(const Polynomial& other) const;
    Polynomial operator*(Complex s) const;

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::vector<Complex> coeffs_;
};

struct Root {
    Complex location;
    int multiplicity = 1;
};

// Distinct roots of a polynomial. Locations are pairwise separated by more
// than 2*tolerance and the multiplicities sum to the source degree.
struct RootSet {
    std::vector<Root> roots;
    double tolerance = 0.0;

    int total_multiplicity() const;
    size_t distinct() const { return roots.size(); }
    bool all_simple() const;
};

// z -> scale*z + shift
struct AffineMap {
    Complex scale{1.0, 0.0};
    Complex shift{0.0, 0.0};

    Complex operator()(Complex z) const { return scale * z + shift; }
    AffineMap inverse() const;
    static AffineMap identity() { return {}; }
};

// outer(inner(z))
AffineMap compose(const AffineMap& outer, const AffineMap& inner);

Complex eval(const Polynomial& p, Complex z);

// Horner with error-free transformations; roughly twice the working precision.
Complex eval_compensated(const Polynomial& p, Complex z);

// Throws DegreeError for constant input.
Polynomial derive(const Polynomial& p);

// Coefficients of p(z + shift), ascending.
Polynomial taylor_shift(const Polynomial& p, Complex shift);

// Quotient of p by (z - r); the remainder is discarded.
Polynomial deflate(const Polynomial& p, Complex r);

struct RootFindOptions {
    int max_sweeps = 500;
    // Approximations closer than this (relative to 1+|z|) are examined as a
    // possible multiple root.
    double cluster_radius = 1e-4;
};

// Aberth-Ehrlich simultaneous iteration followed by multiplicity detection
// and polishing. Throws DegreeError for constants, NonConvergence if the
// residuals do not reach tol*scale within the sweep cap.
RootSet find_roots(const Polynomial& p, double tol, const RootFindOptions& opts = {});

// Monic polynomial with the prescribed zeros.
Polynomial from_roots(const RootSet& rs);
Polynomial from_roots(std::span<const Complex> simple_roots);

struct Normalized {
    Polynomial poly;
    AffineMap gamma;  // sends roots of the input to roots of poly
};

// Affine normalization into z^d + a_{d-2} z^{d-2} + ... + a_1 z + 1.
// Requires degree >= 3 and simple roots; throws ZeroRoot when a centered root
// vanishes, MultipleRootError when roots are not simple.
Normalized normalize(const Polynomial& p);

}  // namespace newton_dyn
