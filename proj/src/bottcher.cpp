#include "newton_dyn/bottcher.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "newton_dyn/error.hpp"

namespace newton_dyn {

namespace {

using Series = std::vector<Complex>;

Series mul(const Series& a, const Series& b, size_t len) {
    Series c(len, Complex{0.0, 0.0});
    for (size_t i = 0; i < a.size() && i < len; ++i) {
        if (a[i] == Complex{0.0, 0.0}) continue;
        for (size_t j = 0; j < b.size() && i + j < len; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

// h(g(u)) truncated to len terms; g(0) must vanish.
Series compose(const Series& h, const Series& g, size_t len) {
    Series out(len, Complex{0.0, 0.0});
    for (size_t j = h.size(); j-- > 0;) {
        out = mul(out, g, len);
        out[0] += h[j];
    }
    return out;
}

Series pow_series(const Series& a, int k, size_t len) {
    Series out(len, Complex{0.0, 0.0});
    out[0] = 1.0;
    for (int i = 0; i < k; ++i) out = mul(out, a, len);
    return out;
}

// Taylor coefficients of f(a + u) - a, with the exact zeros at orders 0 and 1.
Series local_expansion(const NewtonMap& f, Complex a, size_t len) {
    const Polynomial pp = taylor_shift(f.p(), a);
    const Polynomial qq = taylor_shift(f.dp(), a);
    Series p(len, Complex{0.0, 0.0});
    Series q(len, Complex{0.0, 0.0});
    for (size_t i = 0; i < len && static_cast<int>(i) <= pp.degree(); ++i) p[i] = pp[static_cast<int>(i)];
    for (size_t i = 0; i < len && static_cast<int>(i) <= qq.degree(); ++i) q[i] = qq[static_cast<int>(i)];
    p[0] = 0.0;
    Series r(len, Complex{0.0, 0.0});
    for (size_t m = 0; m < len; ++m) {
        Complex acc = p[m];
        for (size_t j = 1; j <= m; ++j) acc -= q[j] * r[m - j];
        r[m] = acc / q[0];
    }
    Series g(len);
    for (size_t m = 0; m < len; ++m) g[m] = -r[m];
    g[1] += 1.0;
    g[0] = 0.0;
    g[1] = 0.0;
    return g;
}

}  // namespace

Complex BottcherChart::operator()(Complex z) const {
    const Complex u = z - center_;
    Complex h{0.0, 0.0};
    for (size_t j = b_.size(); j-- > 0;) h = h * u + b_[j];
    return lambda_ * u * h;
}

Complex BottcherChart::derivative(Complex z) const {
    const Complex u = z - center_;
    // d/du [u h(u)] = sum (j+1) b_j u^j
    Complex d{0.0, 0.0};
    for (size_t j = b_.size(); j-- > 0;) d = d * u + static_cast<double>(j + 1) * b_[j];
    return lambda_ * d;
}

Complex BottcherChart::inverse(Complex zeta) const { return inverse(zeta, center_ + zeta / lambda_); }

Complex BottcherChart::inverse(Complex zeta, Complex seed) const {
    Complex z = seed;
    for (int it = 0; it < 60; ++it) {
        const Complex dz = ((*this)(z)-zeta) / derivative(z);
        z -= dz;
        if (std::abs(z - center_) > 1.05 * radius_) break;
        if (std::abs(dz) <= 1e-16 * (1.0 + std::abs(z))) return z;
    }
    if (std::abs(z - center_) <= 1.05 * radius_ && std::abs((*this)(z)-zeta) <= 1e-14 * (1.0 + std::abs(zeta))) {
        return z;
    }
    throw ChartFailure("bottcher inverse: Newton did not converge inside the chart");
}

double BottcherChart::defect(const NewtonMap& f, double r, int samples) const {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Complex z = center_ + std::polar(r, 2.0 * M_PI * (s + 0.5) / samples);
        const Complex fz = f.eval_finite(z);
        const Complex lhs = (*this)(fz);
        const Complex rhs = std::pow((*this)(z), k_);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

BottcherChart bottcher_chart(const NewtonMap& f, int basin, int order) {
    if (f.degree() < 3) throw DegreeError("bottcher_chart: the map needs at least three distinct roots");
    if (basin < 0 || basin >= f.degree()) throw InputError("bottcher_chart: basin index out of range");
    if (f.root_multiplicity(basin) != 1) {
        throw ChartFailure("bottcher_chart: the root is not simple, hence not superattracting");
    }
    BottcherChart ch;
    ch.basin_ = basin;
    ch.center_ = f.root(basin);
    ch.k_ = 2;
    for (const CriticalPoint& c : f.critical_set()) {
        if (c.kind == CriticalKind::RootCenter && c.root_index == basin) ch.k_ = c.local_degree;
    }
    const int k = ch.k_;
    const size_t len = static_cast<size_t>(k + order + 1);
    const Series g = local_expansion(f, ch.center_, len);
    const Complex ck = g[static_cast<size_t>(k)];
    if (ck == Complex{0.0, 0.0}) throw ChartFailure("bottcher_chart: vanishing leading coefficient");
    ch.lambda_ = k == 2 ? ck : std::pow(ck, 1.0 / (k - 1));

    // Solve g(u) h(g(u)) = c_k u^k h(u)^k order by order for h = 1 + b_1 u + ...
    Series h = {Complex{1.0, 0.0}};
    Series u_k(len, Complex{0.0, 0.0});
    u_k[static_cast<size_t>(k)] = ck;
    for (int j = 1; j <= order; ++j) {
        h.push_back(Complex{0.0, 0.0});
        const size_t m = static_cast<size_t>(k + j) + 1;
        const Series lhs = mul(g, compose(h, g, m), m);
        const Series rhs = mul(u_k, pow_series(h, k, m), m);
        h.back() = (lhs[m - 1] - rhs[m - 1]) / (static_cast<double>(k) * ck);
    }
    ch.b_ = h;

    double obstacle = HUGE_VAL;
    for (int i = 0; i < f.degree(); ++i) {
        if (i != basin) obstacle = std::min(obstacle, std::abs(f.root(i) - ch.center_));
    }
    for (const Pole& pl : f.poles()) obstacle = std::min(obstacle, std::abs(pl.location - ch.center_));
    for (const CriticalPoint& c : f.critical_set()) {
        if (c.kind == CriticalKind::RootCenter && c.root_index == basin) continue;
        if (c.location.is_finite()) obstacle = std::min(obstacle, std::abs(c.location.value() - ch.center_));
    }

    double rho = 0.5 * obstacle;
    for (int attempt = 0; attempt < 60; ++attempt, rho *= 0.75) {
        const double tail = std::abs(h[static_cast<size_t>(order)]) * std::pow(rho, order) +
                            std::abs(h[static_cast<size_t>(order - 1)]) * std::pow(rho, order - 1);
        if (!(tail <= 1e-13)) continue;
        ch.radius_ = rho;
        bool image_inside = true;
        for (int s = 0; s < 64 && image_inside; ++s) {
            const Complex z = ch.center_ + std::polar(rho, 2.0 * M_PI * (s + 0.5) / 64);
            image_inside = std::abs(f.eval_finite(z) - ch.center_) < rho;
        }
        if (!image_inside) continue;
        if (ch.defect(f, rho) > 1e-9 || ch.defect(f, 0.5 * rho) > 1e-9) continue;
        double pr = HUGE_VAL;
        for (int s = 0; s < 128; ++s) {
            pr = std::min(pr, std::abs(ch(ch.center_ + std::polar(rho, 2.0 * M_PI * s / 128))));
        }
        ch.potential_radius_ = 0.9 * pr;
        return ch;
    }
    std::ostringstream os;
    os << "bottcher_chart: conjugacy defect test failed at every radius for root " << basin;
    throw ChartFailure(os.str());
}

}  // namespace newton_dyn
