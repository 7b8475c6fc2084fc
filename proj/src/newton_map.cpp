#include "newton_dyn/newton_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "newton_dyn/error.hpp"

namespace newton_dyn {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Polynomial reversed(const Polynomial& q, int target_degree) {
    std::vector<Complex> out(static_cast<size_t>(target_degree + 1), Complex{0.0, 0.0});
    for (int k = 0; k <= q.degree() && k <= target_degree; ++k) {
        out[static_cast<size_t>(target_degree - k)] = q[k];
    }
    return Polynomial(std::move(out));
}

bool is_normalized(const Polynomial& p) {
    const int n = p.degree();
    if (n < 3) return false;
    return std::abs(p.leading() - 1.0) <= 1e-12 && std::abs(p[n - 1]) <= 1e-12 && std::abs(p[0] - 1.0) <= 1e-12;
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

const char* to_string(CriticalKind kind) {
    switch (kind) {
        case CriticalKind::RootCenter: return "root_center";
        case CriticalKind::PoleCritical: return "pole_critical";
        case CriticalKind::FlexCritical: return "flex_critical";
        case CriticalKind::Other: return "other";
    }
    return "other";
}

NewtonMap NewtonMap::build(const Polynomial& p) {
    if (p.degree() < 2) {
        throw DegreeError("NewtonMap: polynomial must have degree at least 2");
    }
    NewtonMap f;
    f.p_ = p;
    f.dp_ = derive(p);
    f.ddp_ = derive(f.dp_);
    f.roots_ = find_roots(p, 1e-12);
    if (f.roots_.distinct() < 2) {
        throw DegreeError("NewtonMap: polynomial must have at least two distinct roots");
    }
    f.init_caches();
    return f;
}

NewtonMap NewtonMap::from_parts_unchecked(Polynomial p, Polynomial dp, Polynomial ddp, RootSet roots) {
    NewtonMap f;
    f.p_ = std::move(p);
    f.dp_ = std::move(dp);
    f.ddp_ = std::move(ddp);
    f.roots_ = std::move(roots);
    f.init_caches();
    return f;
}

void NewtonMap::init_caches() {
    const int n = p_.degree();
    normalized_ = is_normalized(p_);
    rev_p_ = reversed(p_, n);
    rev_dp_ = reversed(dp_, n - 1);
    rev_ddp_ = n >= 2 ? reversed(ddp_, n - 2) : Polynomial(std::vector<Complex>{0.0, 1.0});

    std::vector<Complex> locs;
    for (const Root& r : roots_.roots) locs.push_back(r.location);

    if (roots_.all_simple()) {
        squarefree_ = p_;
        pole_poly_ = dp_;
    } else {
        squarefree_ = from_roots(locs);
        // Q = sum_j n_j P0/(z - a_j), so that P0/Q = p/p'.
        std::optional<Polynomial> acc;
        for (size_t j = 0; j < locs.size(); ++j) {
            const Polynomial term = deflate(squarefree_, locs[j]) * static_cast<double>(roots_.roots[j].multiplicity);
            acc = acc ? *acc + term : term;
        }
        pole_poly_ = *acc;
    }

    poles_.clear();
    criticals_.clear();
    critical_error_.reset();
    if (pole_poly_.degree() >= 1) {
        for (const Root& r : find_roots(pole_poly_, 1e-12).roots) {
            poles_.push_back({r.location, r.multiplicity});
        }
    }

    // Zeros of the reduced numerator of f' carry every critical point with
    // multiplicity local_degree - 1; infinity is never critical.
    Polynomial numerator = p_ * ddp_;
    if (!roots_.all_simple()) {
        const Polynomial& q = pole_poly_;
        const Polynomial& p0 = squarefree_;
        numerator = q * q - derive(p0) * q + p0 * derive(q);
    }
    const int expected = 2 * degree() - 2;
    if (numerator.degree() < 1) {
        critical_error_ = "critical census: degenerate numerator";
        return;
    }
    RootSet zeros;
    try {
        zeros = find_roots(numerator, 1e-12);
    } catch (const Error& e) {
        critical_error_ = std::string("critical census: ") + e.what();
        return;
    }

    std::vector<char> pole_seen(poles_.size(), 0);
    int total = 0;
    for (const Root& z : zeros.roots) {
        CriticalPoint cp;
        cp.local_degree = z.multiplicity + 1;
        total += z.multiplicity;
        const Complex loc = z.location;
        int ri = -1;
        for (int i = 0; i < degree(); ++i) {
            if (root_multiplicity(i) == 1 && std::abs(loc - root(i)) <= 1e-6 * (1.0 + std::abs(root(i)))) ri = i;
        }
        int pi = -1;
        for (size_t j = 0; j < poles_.size(); ++j) {
            if (std::abs(loc - poles_[j].location) <= 1e-6 * (1.0 + std::abs(poles_[j].location))) {
                pi = static_cast<int>(j);
            }
        }
        if (ri >= 0) {
            cp.kind = CriticalKind::RootCenter;
            cp.root_index = ri;
            cp.location = root(ri);
        } else if (pi >= 0) {
            cp.kind = CriticalKind::PoleCritical;
            cp.location = poles_[static_cast<size_t>(pi)].location;
            pole_seen[static_cast<size_t>(pi)] = 1;
            if (poles_[static_cast<size_t>(pi)].order != cp.local_degree) {
                std::ostringstream os;
                os << "critical census: pole of order " << poles_[static_cast<size_t>(pi)].order
                   << " has critical multiplicity " << z.multiplicity;
                critical_error_ = os.str();
                return;
            }
        } else if (std::abs(eval(ddp_, loc)) <= 1e-8 * ddp_.scale_at(loc)) {
            cp.kind = CriticalKind::FlexCritical;
            cp.location = loc;
        } else {
            cp.kind = CriticalKind::Other;
            cp.location = loc;
        }
        criticals_.push_back(cp);
    }
    for (size_t j = 0; j < poles_.size(); ++j) {
        if (poles_[j].order >= 2 && !pole_seen[j]) {
            critical_error_ = "critical census: multiple pole missing from critical set";
            return;
        }
    }
    if (total != expected) {
        std::ostringstream os;
        os << "critical census: sum of (local_degree - 1) is " << total << ", expected " << expected;
        critical_error_ = os.str();
        return;
    }
    std::stable_sort(criticals_.begin(), criticals_.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        if (a.kind == CriticalKind::RootCenter) return a.root_index < b.root_index;
        return false;
    });
}

const std::vector<CriticalPoint>& NewtonMap::critical_set() const {
    if (critical_error_) throw CountMismatch(*critical_error_);
    return criticals_;
}

int NewtonMap::nearest_root(Complex z, double tol) const {
    int best = -1;
    double best_d = tol;
    for (int i = 0; i < degree(); ++i) {
        const double d = std::abs(z - root(i));
        if (d <= best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

int NewtonMap::nearest_pole(Complex z, double tol) const {
    int best = -1;
    double best_d = tol;
    for (size_t j = 0; j < poles_.size(); ++j) {
        const double d = std::abs(z - poles_[j].location);
        if (d <= best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

bool NewtonMap::use_root_form(Complex z) const {
    if (roots_.all_simple()) return false;
    for (const Root& r : roots_.roots) {
        if (r.multiplicity > 1 && std::abs(z - r.location) <= 1e-2 * (1.0 + std::abs(r.location))) return true;
    }
    return false;
}

Complex NewtonMap::root_form_value(Complex z) const {
    Complex s{0.0, 0.0};
    for (const Root& r : roots_.roots) {
        if (z == r.location) return z;
        s += static_cast<double>(r.multiplicity) / (z - r.location);
    }
    return z - 1.0 / s;
}

Complex NewtonMap::root_form_derivative(Complex z) const {
    int i = 0;
    double best = std::abs(z - root(0));
    for (int j = 1; j < degree(); ++j) {
        const double d = std::abs(z - root(j));
        if (d < best) {
            best = d;
            i = j;
        }
    }
    const Complex u = z - root(i);
    Complex t1{0.0, 0.0};
    Complex t2{0.0, 0.0};
    for (int j = 0; j < degree(); ++j) {
        if (j == i) continue;
        const Complex inv = 1.0 / (z - root(j));
        t1 += static_cast<double>(root_multiplicity(j)) * inv;
        t2 += static_cast<double>(root_multiplicity(j)) * inv * inv;
    }
    const double ni = root_multiplicity(i);
    const Complex den = ni + u * t1;
    return 1.0 - (ni + u * u * t2) / (den * den);
}

Complex NewtonMap::eval_finite(Complex z) const {
    if (use_root_form(z)) return root_form_value(z);
    const Complex pv = eval(p_, z);
    const Complex dv = eval(dp_, z);
    if (dv == Complex{0.0, 0.0}) {
        if (pv == Complex{0.0, 0.0}) throw IndeterminateError("NewtonMap: p and p' vanish together");
        return {HUGE_VAL, HUGE_VAL};
    }
    if (std::abs(pv) <= 1e3 * kEps * p_.scale_at(z) && std::abs(dv) <= 1e3 * kEps * dp_.scale_at(z) &&
        nearest_root(z, 1e-6 * (1.0 + std::abs(z))) < 0) {
        throw IndeterminateError("NewtonMap: p and p' numerically vanish at a non-root");
    }
    return z - pv / dv;
}

Complex NewtonMap::eval_reciprocal(Complex w) const {
    const Complex a = eval(rev_dp_, w);
    const Complex b = a - eval(rev_p_, w);
    return w * a / b;
}

SpherePoint NewtonMap::apply(const SpherePoint& z) const {
    if (z.is_infinite()) return z;
    const Complex v = z.value();
    if (std::abs(v) > kChartRadius) {
        const Complex fw = eval_reciprocal(1.0 / v);
        if (fw == Complex{0.0, 0.0} || !finite(fw)) return SpherePoint::infinity();
        return SpherePoint(1.0 / fw);
    }
    const Complex out = eval_finite(v);
    if (!finite(out)) return SpherePoint::infinity();
    return SpherePoint(out);
}

Complex NewtonMap::derivative(const SpherePoint& z) const {
    if (z.is_infinite()) {
        const Complex a = rev_dp_[0];
        return a / (a - rev_p_[0]);
    }
    const Complex v = z.value();
    if (std::abs(v) > kChartRadius) {
        const Complex w = 1.0 / v;
        const Complex d = eval(rev_dp_, w);
        return eval(rev_p_, w) * eval(rev_ddp_, w) / (d * d);
    }
    if (use_root_form(v)) return root_form_derivative(v);
    const Complex dv = eval(dp_, v);
    if (dv == Complex{0.0, 0.0}) throw PoleError("derivative: point is a pole of f");
    const Complex out = eval(p_, v) * eval(ddp_, v) / (dv * dv);
    if (!finite(out)) throw PoleError("derivative: point is numerically a pole of f");
    return out;
}

std::vector<std::pair<SpherePoint, int>> NewtonMap::preimages(const SpherePoint& s) const {
    std::vector<std::pair<SpherePoint, int>> out;
    if (s.is_infinite()) {
        out.emplace_back(SpherePoint::infinity(), 1);
        for (const Pole& pl : poles_) out.emplace_back(SpherePoint(pl.location), pl.order);
        return out;
    }
    const Polynomial shifted(std::vector<Complex>{-s.value(), 1.0});
    const Polynomial eq = shifted * pole_poly_ - squarefree_;
    for (const Root& r : find_roots(eq, 1e-12).roots) {
        SpherePoint z(r.location);
        // A multiple preimage is a critical point; the cluster mean is only
        // accurate to about sqrt(eps), the critical point itself is exact.
        if (r.multiplicity > 1) {
            double best = 1e-4;
            for (const CriticalPoint& c : critical_set()) {
                const double d = chordal(c.location, z);
                if (d < best && c.local_degree == r.multiplicity) {
                    best = d;
                    z = c.location;
                }
            }
        }
        out.emplace_back(z, r.multiplicity);
    }
    // At a critical value the root finder may split the multiple preimage into
    // nearby simple roots; fold them back onto the critical point.
    for (const CriticalPoint& c : critical_set()) {
        if (c.location.is_infinite() || c.local_degree < 2) continue;
        if (chordal(apply(c.location), s) > 1e-10) continue;
        std::vector<std::pair<double, size_t>> near;
        for (size_t i = 0; i < out.size(); ++i) {
            const double d = chordal(out[i].first, c.location);
            if (d < 1e-3) near.emplace_back(d, i);
        }
        std::sort(near.begin(), near.end());
        int total = 0;
        size_t used = 0;
        while (used < near.size() && total < c.local_degree) total += out[near[used++].second].second;
        if (total != c.local_degree || used < 2) continue;
        std::vector<size_t> drop;
        for (size_t k = 0; k < used; ++k) drop.push_back(near[k].second);
        std::sort(drop.rbegin(), drop.rend());
        for (size_t i : drop) out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
        out.emplace_back(c.location, c.local_degree);
    }
    return out;
}

std::vector<FixedPointDatum> fixed_point_data(const NewtonMap& f) {
    std::vector<FixedPointDatum> out;
    for (int i = 0; i < f.degree(); ++i) {
        out.push_back({SpherePoint(f.root(i)), f.derivative(SpherePoint(f.root(i))), i});
    }
    out.push_back({SpherePoint::infinity(), f.derivative(SpherePoint::infinity()), -1});
    return out;
}

HeadReport head_verify(const NewtonMap& f) {
    HeadReport rep;
    std::ostringstream diag;
    if (f.degree() < 3) {
        rep.diagnostic = "fewer than three distinct roots";
        return rep;
    }
    // Multipliers are recomputed from the quotient rule with a freshly derived
    // p', so inconsistent stored derivative data shows up here.
    const Polynomial true_dp = derive(f.p());
    bool ok = true;
    int total = 0;
    for (int i = 0; i < f.degree(); ++i) {
        const Complex a = f.root(i);
        Complex lambda;
        const Complex dv = eval(f.dp(), a);
        if (f.root_multiplicity(i) > 1 || std::abs(dv) <= 1e-10 * f.dp().scale_at(a)) {
            lambda = f.derivative(SpherePoint(a));
        } else {
            lambda = 1.0 - (eval(true_dp, a) * dv - eval(f.p(), a) * eval(f.ddp(), a)) / (dv * dv);
        }
        const Complex gap = 1.0 - lambda;
        int n = 0;
        if (std::abs(gap) > 1e-12) n = static_cast<int>(std::lround(1.0 / gap.real()));
        if (n < 1 || std::abs(lambda - (1.0 - 1.0 / n)) > 1e-8) {
            diag << "root " << i << " multiplier " << lambda.real() << "+" << lambda.imag() << "i is not 1-1/n; ";
            ok = false;
            n = 0;
        }
        rep.n.push_back(n);
        total += n;
    }
    rep.infinity_multiplier = f.derivative(SpherePoint::infinity());
    if (ok) {
        const double expected = static_cast<double>(total) / (total - 1);
        if (std::abs(rep.infinity_multiplier - expected) > 1e-8) {
            diag << "multiplier at infinity " << rep.infinity_multiplier.real() << " differs from " << expected << "; ";
            ok = false;
        }
    }
    rep.ok = ok;
    rep.diagnostic = ok ? "ok" : diag.str();
    return rep;
}

}  // namespace newton_dyn
