#include "newton_dyn/search.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "newton_dyn/error.hpp"
#include "newton_dyn/parallel.hpp"

namespace newton_dyn {

namespace {

void check_shape(const ParameterPoint& pp) {
    if (pp.d < 3) throw InputError("parameter point: degree must be at least 3");
    if (static_cast<int>(pp.a.size()) != pp.d - 2) {
        throw InputError("parameter point: expected d - 2 coefficients");
    }
}

ParameterPoint lerp(const ParameterPoint& x, const ParameterPoint& y, double t) {
    ParameterPoint out = x;
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] = x.a[i] + t * (y.a[i] - x.a[i]);
    return out;
}

// z -> f^p(z) with the derivative of the composite, finite chart only.
bool iterate_with_derivative(const NewtonMap& f, Complex z, int period, Complex& value, Complex& deriv) {
    deriv = 1.0;
    for (int k = 0; k < period; ++k) {
        const SpherePoint s(z);
        deriv *= f.derivative(s);
        const SpherePoint next = f.apply(s);
        if (next.is_infinite()) return false;
        z = next.value();
    }
    value = z;
    return std::isfinite(value.real()) && std::isfinite(value.imag()) && std::isfinite(std::abs(deriv));
}

// Damped Newton on f^p(z) - z from z.
bool solve_periodic(const NewtonMap& f, int period, Complex& z) {
    for (int it = 0; it < 60; ++it) {
        Complex value;
        Complex deriv;
        if (!iterate_with_derivative(f, z, period, value, deriv)) return false;
        const Complex g = value - z;
        const Complex dg = deriv - 1.0;
        if (dg == Complex{0.0, 0.0}) return false;
        Complex step = g / dg;
        const double cap = 0.1 * (1.0 + std::abs(z));
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        z -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) return true;
    }
    Complex value;
    Complex deriv;
    return iterate_with_derivative(f, z, period, value, deriv) && std::abs(value - z) <= 1e-12 * (1.0 + std::abs(z));
}

// Radical inverse of i in base b.
double radical_inverse(std::uint64_t i, std::uint64_t b) {
    double inv = 1.0 / static_cast<double>(b);
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % b);
        i /= b;
        f *= inv;
    }
    return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

struct Evaluation {
    bool discriminant = false;
    bool accepted = false;
    bool rejected_y = false;
    HyperbolicityCertificate certificate;
};

Evaluation evaluate(const ParameterPoint& pp, const SearchConfig& cfg) {
    Evaluation ev;
    std::optional<NewtonMap> maybe;
    try {
        maybe.emplace(map_of(pp));
    } catch (const DiscriminantZero&) {
        ev.discriminant = true;
        return ev;
    }
    const NewtonMap& f = *maybe;
    ev.certificate = certify_hyperbolic(f, cfg.budget);
    if (!ev.certificate.certified()) return ev;
    if (cfg.require_Y && in_family_Y(f, cfg.budget) != TriState::Yes) {
        ev.rejected_y = true;
        return ev;
    }
    ev.accepted = true;
    return ev;
}

}  // namespace

NewtonMap map_of(const ParameterPoint& pp) {
    check_shape(pp);
    std::vector<double> c(static_cast<size_t>(pp.d) + 1, 0.0);
    c[0] = 1.0;
    for (size_t i = 0; i < pp.a.size(); ++i) c[i + 1] = pp.a[i];
    c[static_cast<size_t>(pp.d)] = 1.0;
    const NewtonMap f = NewtonMap::build(Polynomial::from_real(c));
    bool separated = f.roots().all_simple() && f.degree() == pp.d;
    for (int i = 0; i < f.degree() && separated; ++i) {
        for (int j = i + 1; j < f.degree(); ++j) {
            if (std::abs(f.root(i) - f.root(j)) <= 1e-7 * (1.0 + std::abs(f.root(i)))) separated = false;
        }
    }
    if (!separated) {
        std::ostringstream os;
        os << "map_of: roots are not pairwise distinct for d = " << pp.d;
        throw DiscriminantZero(os.str());
    }
    return f;
}

ParameterPoint params_of(const NewtonMap& f) {
    if (!f.real()) throw InputError("params_of: the map is not real");
    const Polynomial& p = f.p();
    const int d = p.degree();
    if (d < 3 || p[d] != Complex{1.0, 0.0} || p[0] != Complex{1.0, 0.0} || p[d - 1] != Complex{0.0, 0.0}) {
        throw InputError("params_of: the map is not in the normalized family");
    }
    ParameterPoint pp;
    pp.d = d;
    for (int i = 1; i <= d - 2; ++i) pp.a.push_back(p[i].real());
    return pp;
}

double linf_distance(const ParameterPoint& x, const ParameterPoint& y) {
    if (x.d != y.d || x.a.size() != y.a.size()) throw InputError("linf_distance: parameter points differ in degree");
    double m = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
    return m;
}

ParameterPoint TauGrid::node(size_t index) const {
    ParameterPoint pp;
    pp.d = d;
    pp.a.assign(box.size(), 0.0);
    for (size_t k = box.size(); k-- > 0;) {
        const size_t n = static_cast<size_t>(resolution[k]);
        const size_t i = index % n;
        index /= n;
        const auto [lo, hi] = box[k];
        pp.a[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return pp;
}

TauGrid tau_grid(int d, const std::vector<Interval>& box, const std::vector<int>& resolution, const OrbitBudget& budget,
                 int threads) {
    if (d < 3) throw InputError("tau_grid: degree must be at least 3");
    if (static_cast<int>(box.size()) != d - 2) throw InputError("tau_grid: box dimension must be d - 2");
    if (box.size() > 2) throw InputError("tau_grid: at most two parameter dimensions; use slices for higher d");
    if (resolution.size() != box.size()) throw InputError("tau_grid: one resolution per axis");
    budget.validate();
    TauGrid grid;
    grid.d = d;
    grid.box = box;
    grid.resolution = resolution;
    size_t total = 1;
    for (int n : resolution) {
        if (n < 1) throw InputError("tau_grid: resolution must be positive");
        total *= static_cast<size_t>(n);
    }
    grid.values.assign(total, -1);
    parallel_for(total, threads, [&](size_t i) {
        try {
            grid.values[i] = tau(map_of(grid.node(i)), budget);
        } catch (const DiscriminantZero&) {
            grid.values[i] = -1;
        }
    });
    return grid;
}

std::vector<SpherePoint> continue_cycle(const ParameterPoint& pp0, const std::vector<SpherePoint>& cycle,
                                        const ParameterPoint& pp1) {
    if (cycle.empty()) throw InputError("continue_cycle: empty cycle");
    for (const SpherePoint& z : cycle) {
        if (z.is_infinite()) throw InputError("continue_cycle: cycles of Newton maps are finite");
    }
    const int period = static_cast<int>(cycle.size());
    const NewtonMap f0 = map_of(pp0);
    const double start = std::abs(cycle_multiplier(f0, cycle)) - 1.0;
    if (pp0 == pp1) return cycle;

    const double gap = linf_distance(pp0, pp1);
    const int steps = std::max(1, static_cast<int>(std::ceil(gap / 1e-3)));
    Complex z = cycle.front().value();
    std::vector<SpherePoint> current = cycle;
    for (int s = 1; s <= steps; ++s) {
        const ParameterPoint pp = s == steps ? pp1 : lerp(pp0, pp1, static_cast<double>(s) / steps);
        std::optional<NewtonMap> maybe;
        try {
            maybe.emplace(map_of(pp));
        } catch (const DiscriminantZero&) {
            throw ContinuationLost("continue_cycle: path crosses the discriminant");
        }
        const NewtonMap& f = *maybe;
        const Complex before = z;
        if (!solve_periodic(f, period, z)) {
            std::ostringstream os;
            os << "continue_cycle: Newton on f^" << period << "(z) - z failed at step " << s << " of " << steps;
            throw ContinuationLost(os.str());
        }
        if (std::abs(z - before) > 0.1 * (1.0 + std::abs(before))) {
            throw ContinuationLost("continue_cycle: the cycle jumped between steps");
        }
        std::vector<SpherePoint> next = {SpherePoint(z)};
        for (int k = 1; k < period; ++k) next.push_back(f.apply(next.back()));
        Complex lambda;
        try {
            lambda = cycle_multiplier(f, next);
        } catch (const NotACycle& e) {
            throw ContinuationLost(std::string("continue_cycle: ") + e.what());
        }
        const double side = std::abs(lambda) - 1.0;
        if ((side >= 0.0) != (start >= 0.0)) {
            std::ostringstream os;
            os << "continue_cycle: multiplier crossed the unit circle at step " << s << " of " << steps;
            throw ContinuationLost(os.str());
        }
        current = std::move(next);
    }
    return current;
}

std::vector<double> SearchConfig::default_radii() {
    std::vector<double> r;
    for (int i = 0; i < 10; ++i) r.push_back(1e-4 * std::pow(5000.0, i / 9.0));
    r.back() = 0.5;
    return r;
}

void SearchConfig::validate() const {
    if (radii.empty()) throw InputError("search: at least one radius is required");
    for (size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw InputError("search: radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw InputError("search: radii must be increasing");
    }
    if (samples_per_radius < 1) throw InputError("search: samples_per_radius must be at least 1");
    budget.validate();
}

ApproxResult find_hyperbolic_near(const ParameterPoint& pp, const SearchConfig& cfg) {
    check_shape(pp);
    cfg.validate();
    const size_t dim = pp.a.size();
    if (dim > std::size(kPrimes)) throw InputError("search: dimension too large for the sample sequence");

    ApproxResult result;
    int tried = 0;

    const Evaluation center = evaluate(pp, cfg);
    ++tried;
    RadiusTrace t0;
    t0.samples = 1;
    t0.certified = center.certificate.certified() ? 1 : 0;
    t0.rejected_y = center.rejected_y ? 1 : 0;
    t0.discriminant = center.discriminant ? 1 : 0;
    result.trace.push_back(t0);
    if (center.accepted) {
        result.found = ApproxFound{pp, center.certificate, 0.0, tried};
        return result;
    }

    // Halton points with a Cranley-Patterson shift drawn from the seed.
    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> shift(dim);
    for (double& s : shift) s = unit(rng);

    const size_t n = static_cast<size_t>(cfg.samples_per_radius);
    for (double r : cfg.radii) {
        std::vector<ParameterPoint> samples(n, pp);
        for (size_t k = 0; k < n; ++k) {
            for (size_t j = 0; j < dim; ++j) {
                double u = radical_inverse(k + 1, kPrimes[j]) + shift[j];
                u -= std::floor(u);
                samples[k].a[j] = pp.a[j] + r * (2.0 * u - 1.0);
            }
        }
        std::vector<Evaluation> evals(n);
        parallel_for(n, cfg.threads, [&](size_t k) { evals[k] = evaluate(samples[k], cfg); });

        RadiusTrace tr;
        tr.radius = r;
        tr.samples = static_cast<int>(n);
        std::optional<size_t> first;
        for (size_t k = 0; k < n; ++k) {
            tr.certified += evals[k].certificate.certified() ? 1 : 0;
            tr.rejected_y += evals[k].rejected_y ? 1 : 0;
            tr.discriminant += evals[k].discriminant ? 1 : 0;
            if (evals[k].accepted && !first) first = k;
        }
        result.trace.push_back(tr);
        if (first) {
            tried += static_cast<int>(*first) + 1;
            result.found = ApproxFound{samples[*first], evals[*first].certificate, linf_distance(samples[*first], pp), tried};
            return result;
        }
        tried += static_cast<int>(n);
    }
    return result;
}

std::vector<ParameterPoint> perturbations(const ParameterPoint& pp, double delta) {
    check_shape(pp);
    std::vector<ParameterPoint> out;
    if (pp.a.size() == 1) {
        for (double s : {1.0, 0.5, 0.25, 0.125}) {
            for (double sign : {1.0, -1.0}) {
                ParameterPoint q = pp;
                q.a[0] += sign * s * delta;
                out.push_back(q);
            }
        }
        return out;
    }
    const double offsets[8][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& o : offsets) {
        ParameterPoint q = pp;
        q.a[0] += o[0] * delta;
        q.a[1] += o[1] * delta;
        out.push_back(q);
    }
    return out;
}

OpennessReport openness_check(const ParameterPoint& pp, const OrbitBudget& budget, double delta) {
    OpennessReport rep;
    const HyperbolicityCertificate c = certify_hyperbolic(map_of(pp), budget);
    rep.center_tau = c.tau;
    rep.passed = c.certified();
    for (const ParameterPoint& q : perturbations(pp, delta)) {
        int t = -1;
        bool ok = false;
        try {
            const HyperbolicityCertificate cq = certify_hyperbolic(map_of(q), budget);
            t = cq.tau;
            ok = cq.certified();
        } catch (const DiscriminantZero&) {
        }
        rep.neighbor_tau.push_back(t);
        rep.passed = rep.passed && ok && t == rep.center_tau;
    }
    return rep;
}

}  // namespace newton_dyn
