#include "newton_dyn/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "newton_dyn/error.hpp"

namespace newton_dyn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct TwoTerm {
    double value;
    double error;
};

TwoTerm two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    const double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

TwoTerm two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

// Ordering used to make root lists deterministic: real part first, with a
// tolerance so that conjugate pairs sort by imaginary part.
bool root_less(const Root& a, const Root& b) {
    const double ra = a.location.real();
    const double rb = b.location.real();
    if (std::abs(ra - rb) > 1e-9 * (1.0 + std::abs(ra) + std::abs(rb))) {
        return ra < rb;
    }
    return a.location.imag() < b.location.imag();
}

Polynomial nth_derivative(const Polynomial& p, int order) {
    Polynomial q = p;
    for (int i = 0; i < order; ++i) {
        q = derive(q);
    }
    return q;
}

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), size_t{0}); }
    size_t find(size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

std::vector<Complex> aberth(const Polynomial& q, double tol, int max_sweeps) {
    const int n = q.degree();
    const Polynomial dq = derive(q);
    double bound = 0.0;
    for (int k = 0; k < n; ++k) {
        bound = std::max(bound, std::abs(q[k] / q.leading()));
    }
    const double radius = 1.0 + bound;

    std::vector<Complex> z(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / n + 0.4;
        const double r = radius * (1.0 + 0.01 * k / n);
        z[static_cast<size_t>(k)] = std::polar(r, angle);
    }

    std::vector<char> done(static_cast<size_t>(n), 0);
    const double machine_resid = 4.0 * n * kEps;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool all_done = true;
        for (size_t k = 0; k < z.size(); ++k) {
            if (done[k]) continue;
            const Complex pz = eval(q, z[k]);
            const double scale = q.scale_at(z[k]);
            if (std::abs(pz) <= machine_resid * scale) {
                done[k] = 1;
                continue;
            }
            all_done = false;
            Complex s{0.0, 0.0};
            for (size_t j = 0; j < z.size(); ++j) {
                if (j != k && z[j] != z[k]) s += 1.0 / (z[k] - z[j]);
            }
            const Complex dpz = eval(dq, z[k]);
            Complex w;
            if (dpz == Complex{0.0, 0.0}) {
                w = (s == Complex{0.0, 0.0}) ? Complex{1e-8 * (1.0 + std::abs(z[k])), 0.0} : -1.0 / s;
            } else {
                const Complex ratio = pz / dpz;
                w = ratio / (1.0 - ratio * s);
            }
            z[k] -= w;
            if (std::abs(w) <= 4.0 * kEps * std::abs(z[k])) done[k] = 1;
        }
        if (all_done) break;
    }

    const double accept = std::max(tol, 16.0 * n * kEps);
    std::ostringstream bad;
    bool failed = false;
    for (const Complex& r : z) {
        const double resid = std::abs(eval(q, r)) / q.scale_at(r);
        if (!(resid <= accept)) {
            failed = true;
            bad << " " << resid;
        }
    }
    if (failed) {
        throw NonConvergence("find_roots: Aberth iteration did not converge; best relative residuals:" +
                             bad.str());
    }
    return z;
}

// Newton on p^(order) started at c; returns the refined point.
Complex refine_on_derivative(const Polynomial& p, int order, Complex c, double max_move) {
    const Polynomial g = nth_derivative(p, order);
    if (g.degree() < 1) return c;
    const Polynomial dg = derive(g);
    const Complex start = c;
    for (int it = 0; it < 30; ++it) {
        const Complex gv = eval(g, c);
        const Complex dv = eval(dg, c);
        if (dv == Complex{0.0, 0.0}) break;
        const Complex step = gv / dv;
        c -= step;
        if (std::abs(c - start) > max_move) return start;
        if (std::abs(step) <= 2.0 * kEps * (1.0 + std::abs(c))) break;
    }
    return c;
}

bool verify_multiplicity(const Polynomial& p, Complex c, int m) {
    const double thr = 1e3 * std::max(p.degree(), 1) * kEps;
    Polynomial g = p;
    for (int j = 0; j < m - 1; ++j) {
        if (std::abs(eval(g, c)) > thr * g.scale_at(c)) return false;
        g = derive(g);
    }
    return true;
}

void symmetrize_real(std::vector<Root>& roots) {
    const size_t n = roots.size();
    std::vector<char> handled(n, 0);
    for (size_t i = 0; i < n; ++i) {
        if (handled[i]) continue;
        const Complex target = std::conj(roots[i].location);
        size_t best = i;
        double best_d = std::abs(target - roots[i].location);
        for (size_t j = 0; j < n; ++j) {
            if (j == i || handled[j]) continue;
            const double d = std::abs(target - roots[j].location);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best == i || roots[best].multiplicity != roots[i].multiplicity) {
            roots[i].location = {roots[i].location.real(), 0.0};
            handled[i] = 1;
        } else {
            const Complex avg = 0.5 * (roots[i].location + std::conj(roots[best].location));
            roots[i].location = avg;
            roots[best].location = std::conj(avg);
            handled[i] = handled[best] = 1;
        }
    }
}

}  // namespace

Polynomial::Polynomial(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
    while (!coeffs_.empty() && coeffs_.back() == Complex{0.0, 0.0}) {
        coeffs_.pop_back();
    }
    if (coeffs_.empty()) {
        throw DegreeError("Polynomial: all coefficients are zero");
    }
}

Polynomial Polynomial::from_real(std::span<const double> coeffs) {
    return Polynomial(std::vector<Complex>(coeffs.begin(), coeffs.end()));
}

bool Polynomial::is_real(double tol) const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [tol](const Complex& c) { return std::abs(c.imag()) <= tol; });
}

double Polynomial::scale_at(Complex z) const {
    const double r = std::abs(z);
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        acc = acc * r + std::abs(*it);
    }
    return acc;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
    std::vector<Complex> out(coeffs_.size() + other.coeffs_.size() - 1, Complex{0.0, 0.0});
    for (size_t i = 0; i < coeffs_.size(); ++i) {
        for (size_t j = 0; j < other.coeffs_.size(); ++j) {
            out[i + j] += coeffs_[i] * other.coeffs_[j];
        }
    }
    return Polynomial(std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
    std::vector<Complex> out(std::max(coeffs_.size(), other.coeffs_.size()), Complex{0.0, 0.0});
    for (size_t i = 0; i < coeffs_.size(); ++i) out[i] += coeffs_[i];
    for (size_t i = 0; i < other.coeffs_.size(); ++i) out[i] += other.coeffs_[i];
    return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other * Complex{-1.0, 0.0}; }

Polynomial Polynomial::operator*(Complex s) const {
    std::vector<Complex> out = coeffs_;
    for (auto& c : out) c *= s;
    return Polynomial(std::move(out));
}

int RootSet::total_multiplicity() const {
    int total = 0;
    for (const auto& r : roots) total += r.multiplicity;
    return total;
}

bool RootSet::all_simple() const {
    return std::all_of(roots.begin(), roots.end(), [](const Root& r) { return r.multiplicity == 1; });
}

AffineMap AffineMap::inverse() const { return {1.0 / scale, -shift / scale}; }

AffineMap compose(const AffineMap& outer, const AffineMap& inner) {
    return {outer.scale * inner.scale, outer.scale * inner.shift + outer.shift};
}

Complex eval(const Polynomial& p, Complex z) {
    const auto& c = p.coeffs();
    Complex acc = c.back();
    for (size_t i = c.size() - 1; i-- > 0;) {
        acc = acc * z + c[i];
    }
    return acc;
}

Complex eval_compensated(const Polynomial& p, Complex z) {
    const auto& c = p.coeffs();
    double rr = c.back().real();
    double ri = c.back().imag();
    Complex err{0.0, 0.0};
    for (size_t i = c.size() - 1; i-- > 0;) {
        const TwoTerm p1 = two_prod(rr, z.real());
        const TwoTerm p2 = two_prod(ri, z.imag());
        const TwoTerm p3 = two_prod(rr, z.imag());
        const TwoTerm p4 = two_prod(ri, z.real());
        const TwoTerm s1 = two_sum(p1.value, -p2.value);
        const TwoTerm s2 = two_sum(p3.value, p4.value);
        const TwoTerm t1 = two_sum(s1.value, c[i].real());
        const TwoTerm t2 = two_sum(s2.value, c[i].imag());
        const Complex step_err{p1.error - p2.error + s1.error + t1.error, p3.error + p4.error + s2.error + t2.error};
        err = err * z + step_err;
        rr = t1.value;
        ri = t2.value;
    }
    return Complex{rr, ri} + err;
}

Polynomial derive(const Polynomial& p) {
    if (p.degree() < 1) {
        throw DegreeError("derive: constant polynomial");
    }
    std::vector<Complex> out(static_cast<size_t>(p.degree()));
    for (int k = 1; k <= p.degree(); ++k) {
        out[static_cast<size_t>(k - 1)] = p[k] * static_cast<double>(k);
    }
    return Polynomial(std::move(out));
}

Polynomial taylor_shift(const Polynomial& p, Complex shift) {
    std::vector<Complex> c = p.coeffs();
    const size_t n = c.size();
    for (size_t i = 0; i + 1 < n; ++i) {
        for (size_t k = n - 1; k-- > i;) {
            c[k] += shift * c[k + 1];
        }
    }
    return Polynomial(std::move(c));
}

Polynomial deflate(const Polynomial& p, Complex r) {
    if (p.degree() < 1) throw DegreeError("deflate: constant polynomial");
    const auto& c = p.coeffs();
    std::vector<Complex> out(c.size() - 1);
    Complex acc = c.back();
    for (size_t k = c.size() - 1; k-- > 0;) {
        out[k] = acc;
        acc = acc * r + c[k];
    }
    return Polynomial(std::move(out));
}

RootSet find_roots(const Polynomial& p, double tol, const RootFindOptions& opts) {
    if (p.degree() < 1) {
        throw DegreeError("find_roots: constant polynomial");
    }
    if (!(tol > 0.0)) {
        throw DegreeError("find_roots: tolerance must be positive");
    }

    // Exact zero roots are peeled off before iterating.
    const auto& c = p.coeffs();
    size_t zeros = 0;
    while (zeros < c.size() && c[zeros] == Complex{0.0, 0.0}) ++zeros;

    std::vector<Complex> approx(zeros, Complex{0.0, 0.0});
    if (zeros < c.size() - 1) {
        const Polynomial q(std::vector<Complex>(c.begin() + static_cast<std::ptrdiff_t>(zeros), c.end()));
        if (q.degree() == 1) {
            approx.push_back(-q[0] / q[1]);
        } else {
            const auto z = aberth(q, tol, opts.max_sweeps);
            approx.insert(approx.end(), z.begin(), z.end());
        }
    }

    const size_t n = approx.size();
    UnionFind uf(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double mag = 1.0 + std::max(std::abs(approx[i]), std::abs(approx[j]));
            if (std::abs(approx[i] - approx[j]) <= std::max(2.0 * tol, opts.cluster_radius * mag)) {
                uf.unite(i, j);
            }
        }
    }

    std::vector<Root> roots;
    std::vector<std::vector<size_t>> clusters(n);
    for (size_t i = 0; i < n; ++i) clusters[uf.find(i)].push_back(i);
    const Polynomial dp = derive(p);
    for (const auto& members : clusters) {
        if (members.empty()) continue;
        const int m = static_cast<int>(members.size());
        Complex centroid{0.0, 0.0};
        for (size_t idx : members) centroid += approx[idx];
        centroid /= static_cast<double>(m);

        bool merged = false;
        if (m > 1) {
            const double move = opts.cluster_radius * (1.0 + std::abs(centroid));
            const Complex refined = refine_on_derivative(p, m - 1, centroid, move);
            if (verify_multiplicity(p, refined, m)) {
                roots.push_back({refined, m});
                merged = true;
            } else {
                bool tight = true;
                for (size_t idx : members) tight = tight && std::abs(approx[idx] - centroid) <= tol;
                if (tight) {
                    roots.push_back({centroid, m});
                    merged = true;
                }
            }
        }
        if (!merged) {
            for (size_t idx : members) {
                Complex z = approx[idx];
                // A couple of Newton steps; keep the Aberth value if they do not help.
                for (int it = 0; it < 3; ++it) {
                    const Complex d = eval(dp, z);
                    if (d == Complex{0.0, 0.0}) break;
                    const Complex next = z - eval(p, z) / d;
                    if (std::abs(eval(p, next)) > std::abs(eval(p, z))) break;
                    z = next;
                }
                roots.push_back({z, 1});
            }
        }
    }

    if (p.is_real(0.0)) symmetrize_real(roots);

    // Final merge of locations within 2*tol.
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < roots.size() && !changed; ++i) {
            for (size_t j = i + 1; j < roots.size(); ++j) {
                if (std::abs(roots[i].location - roots[j].location) <= 2.0 * tol) {
                    const double wi = roots[i].multiplicity;
                    const double wj = roots[j].multiplicity;
                    roots[i].location = (wi * roots[i].location + wj * roots[j].location) / (wi + wj);
                    roots[i].multiplicity += roots[j].multiplicity;
                    roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(j));
                    changed = true;
                    break;
                }
            }
        }
    }

    std::sort(roots.begin(), roots.end(), root_less);
    return RootSet{std::move(roots), tol};
}

Polynomial from_roots(const RootSet& rs) {
    if (rs.roots.empty()) throw DegreeError("from_roots: empty root set");
    Polynomial out(std::vector<Complex>{Complex{1.0, 0.0}});
    for (const Root& r : rs.roots) {
        const Polynomial factor(std::vector<Complex>{-r.location, Complex{1.0, 0.0}});
        for (int k = 0; k < r.multiplicity; ++k) out = out * factor;
    }
    return out;
}

Polynomial from_roots(std::span<const Complex> simple_roots) {
    RootSet rs;
    for (const Complex& z : simple_roots) rs.roots.push_back({z, 1});
    return from_roots(rs);
}

Normalized normalize(const Polynomial& p) {
    const int n = p.degree();
    if (n < 3) throw DegreeError("normalize: degree must be at least 3");
    const RootSet rs = find_roots(p, 1e-12);
    if (!rs.all_simple()) throw MultipleRootError("normalize: roots are not simple");

    const Polynomial monic = p * (1.0 / p.leading());
    const Complex mean = -monic[n - 1] / static_cast<double>(n);
    double size = 1.0;
    for (const Root& r : rs.roots) size = std::max(size, std::abs(r.location));
    for (const Root& r : rs.roots) {
        if (std::abs(r.location - mean) <= 1e-10 * size) {
            throw ZeroRoot("normalize: a centered root is zero; perturb the polynomial first");
        }
    }

    const Polynomial centered = taylor_shift(monic, mean);
    const Complex c0 = centered[0];
    const double mag = std::pow(std::abs(c0), -1.0 / n);
    Complex lambda;
    const bool real_c0 = std::abs(c0.imag()) <= 1e-14 * std::abs(c0);
    if (real_c0 && c0.real() > 0.0) {
        lambda = {mag, 0.0};
    } else if (real_c0 && n % 2 == 1) {
        lambda = {-mag, 0.0};
    } else {
        lambda = std::polar(mag, -std::arg(c0) / n);
    }

    std::vector<Complex> q(static_cast<size_t>(n + 1));
    Complex power{1.0, 0.0};
    for (int k = n; k >= 0; --k) {
        q[static_cast<size_t>(k)] = power * centered[k];
        power *= lambda;
    }
    q[static_cast<size_t>(n)] = 1.0;
    q[static_cast<size_t>(n - 1)] = 0.0;
    q[0] = 1.0;
    if (real_c0 && lambda.imag() == 0.0 && p.is_real(0.0)) {
        for (auto& v : q) v = {v.real(), 0.0};
    }
    return Normalized{Polynomial(std::move(q)), AffineMap{lambda, -lambda * mean}};
}

}  // namespace newton_dyn
