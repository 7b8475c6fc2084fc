#include "newton_dyn/newton_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <tuple>
#include <sstream>

#include "newton_dyn/error.hpp"

namespace newton_dyn {

namespace {

bool finite_value(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Newton's method for f(w) = y starting at w. Targets with |y| > 1 are solved
// as 1/f(w) = 1/y, which stays regular near poles. `first` receives the first
// Newton iterate so callers can judge how far the corrector moved.
bool newton_preimage(const NewtonMap& f, Complex y, Complex& w, Complex& first) {
    const bool inverted = std::abs(y) > 1.0;
    const Complex target = inverted ? 1.0 / y : y;
    bool converged = false;
    for (int it = 0; it < 40; ++it) {
        const Complex pv = eval(f.p(), w);
        const Complex dv = eval(f.dp(), w);
        const Complex ddv = eval(f.ddp(), w);
        Complex val;
        Complex der;
        if (inverted) {
            const Complex den = w * dv - pv;
            if (den == Complex{0.0, 0.0}) return false;
            val = dv / den - target;
            der = -pv * ddv / (den * den);
        } else {
            if (dv == Complex{0.0, 0.0}) return false;
            val = w - pv / dv - target;
            der = pv * ddv / (dv * dv);
        }
        if (der == Complex{0.0, 0.0} || !finite_value(der) || !finite_value(val)) return false;
        const Complex step = val / der;
        w -= step;
        if (it == 0) first = w;
        if (!finite_value(w)) return false;
        if (converged) return true;
        // Near critical values the step stalls at rounding level, so a
        // residual at rounding level also counts.
        if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w)) || std::abs(val) <= 1e-15 * (1.0 + std::abs(target))) {
            converged = true;  // one polishing step
        }
    }
    return converged;
}

// Chordal distance from z to the straight segment [a, b] drawn in whichever
// chart keeps all three points bounded.
double segment_distance(const SpherePoint& z, const SpherePoint& a, const SpherePoint& b) {
    auto big = [](const SpherePoint& p) { return p.is_infinite() || std::abs(p.value()) > 1.0; };
    auto project = [](Complex x, Complex s, Complex t) {
        const Complex d = t - s;
        const double len2 = std::norm(d);
        if (len2 == 0.0) return s;
        const double u = std::clamp(((x - s) * std::conj(d)).real() / len2, 0.0, 1.0);
        return s + u * d;
    };
    if (big(z) && big(a) && big(b)) {
        const Complex wz = z.reciprocal();
        const Complex proj = project(wz, a.reciprocal(), b.reciprocal());
        return chordal(SpherePoint(wz), SpherePoint(proj));
    }
    if (z.is_infinite() || a.is_infinite() || b.is_infinite()) return std::min(chordal(z, a), chordal(z, b));
    return chordal(z, SpherePoint(project(z.value(), a.value(), b.value())));
}

// Douglas-Peucker: drops interior points lying within eps (chordal) of the
// chord replacing them. The points next to each end are kept so endpoint
// segments stay short.
std::vector<SpherePoint> simplify(const std::vector<SpherePoint>& pts, double eps, double max_chord) {
    const size_t n = pts.size();
    if (n <= 4) return pts;
    std::vector<char> keep(n, 0);
    keep[0] = keep[1] = keep[n - 2] = keep[n - 1] = 1;
    std::vector<std::pair<size_t, size_t>> stack = {{1, n - 2}};
    while (!stack.empty()) {
        const auto [lo, hi] = stack.back();
        stack.pop_back();
        if (hi <= lo + 1) continue;
        size_t worst = lo + 1;
        double worst_d = -1.0;
        for (size_t k = lo + 1; k < hi; ++k) {
            const double d = segment_distance(pts[k], pts[lo], pts[hi]);
            if (d > worst_d) {
                worst_d = d;
                worst = k;
            }
        }
        if (worst_d <= eps && chordal(pts[lo], pts[hi]) <= max_chord) continue;
        if (worst_d <= eps) worst = (lo + hi) / 2;
        keep[worst] = 1;
        stack.emplace_back(lo, worst);
        stack.emplace_back(worst, hi);
    }
    std::vector<SpherePoint> out;
    for (size_t i = 0; i < n; ++i) {
        if (keep[i]) out.push_back(pts[i]);
    }
    return out;
}

// Continues the branch of f^{-1} through `seed` (f(seed) = parent[0]) along the
// parent polyline. Every returned point maps onto the parent polyline.
std::vector<Complex> lift_path(const NewtonMap& f, const std::vector<Complex>& parent, Complex seed,
                               const TraceConfig& cfg) {
    std::vector<Complex> out = {seed};
    Complex w = seed;
    for (size_t i = 1; i < parent.size(); ++i) {
        const Complex a = parent[i - 1];
        const Complex b = parent[i];
        double s = 0.0;
        double ds = 1.0;
        int halvings = 0;
        while (s < 1.0) {
            const double s1 = std::min(1.0, s + ds);
            if (s1 == s) {
                std::ostringstream os;
                os << "lift: step size underflow near w = " << w << " lifting " << a << " -> " << b << " at s = " << s;
                throw LiftFailure(os.str());
            }
            const Complex y = s1 == 1.0 ? b : a + (b - a) * s1;
            Complex cand = w;
            Complex first = w;
            bool ok = newton_preimage(f, y, cand, first);
            ok = ok && std::abs(cand - first) <= 0.5 * std::abs(first - w) + 1e-12 * (1.0 + std::abs(w)) &&
                 chordal(SpherePoint(cand), SpherePoint(w)) <= cfg.step_max;
            if (ok) {
                // The chord must follow the lifted curve: its midpoint lifts
                // to within a tenth of the tube.
                const Complex ym = a + (b - a) * (0.5 * (s + s1));
                Complex mid = 0.5 * (w + cand);
                Complex mid_first = mid;
                ok = newton_preimage(f, ym, mid, mid_first) &&
                     chordal(SpherePoint(mid), SpherePoint(0.5 * (w + cand))) <= 0.1 * cfg.tube_tol;
            }
            if (ok) {
                w = cand;
                out.push_back(w);
                s = s1;
                ds = std::min(2.0 * ds, 1.0);
                halvings = 0;
            } else {
                ds *= 0.5;
                if (++halvings > cfg.max_refine) {
                    std::ostringstream os;
                    os << "lift: continuation failed near w = " << w << " (branch point on the path?)";
                    throw LiftFailure(os.str());
                }
            }
        }
    }
    return out;
}

std::vector<Complex> finite_values(const std::vector<SpherePoint>& pts, size_t from, size_t to) {
    std::vector<Complex> out;
    for (size_t i = from; i < to; ++i) out.push_back(pts[i].value());
    return out;
}

// Pulls the last point of a path back from a critical value it runs into, so
// the lift stops where the local branches are still well separated.
void stop_short_of(std::vector<Complex>& path, const std::vector<SpherePoint>& critical_values) {
    if (path.size() < 2) return;
    Complex& end = path.back();
    const Complex prev = path[path.size() - 2];
    for (const SpherePoint& cv : critical_values) {
        if (cv.is_infinite()) {
            if (std::abs(end) > 1e7 && std::abs(prev) < std::abs(end)) end *= 1e7 / std::abs(end);
        } else if (std::abs(end - cv.value()) < 1e-7 && std::abs(prev - cv.value()) > 1e-7) {
            end = cv.value() + (prev - cv.value()) * (1e-7 / std::abs(prev - cv.value()));
        }
    }
}

// The parent graph lies inside its pullback. A lifted edge retracing a parent
// edge takes over the parent's polyline: near superattracting centers the
// inverse branch magnifies polyline error, the parent copy is the accurate one.
void reuse_existing_edge(const NewtonGraphApprox& g, const NewtonGraphApprox& out, GraphEdge& ce) {
    const int a = g.find_vertex(out.vertices[static_cast<size_t>(ce.v0)].position, 1e-9);
    const int b = g.find_vertex(out.vertices[static_cast<size_t>(ce.v1)].position, 1e-9);
    if (a < 0 || b < 0) return;
    const SpherePoint probe = ce.points[ce.points.size() / 2];
    for (const GraphEdge& ge : g.edges) {
        const bool same = ge.v0 == a && ge.v1 == b;
        const bool flipped = ge.v0 == b && ge.v1 == a;
        if (!same && !flipped) continue;
        double d = HUGE_VAL;
        for (size_t i = 0; i + 1 < ge.points.size(); ++i) {
            d = std::min(d, segment_distance(probe, ge.points[i], ge.points[i + 1]));
        }
        if (d > 1e-4) continue;
        ce.points = ge.points;
        if (flipped) std::reverse(ce.points.begin(), ce.points.end());
        return;
    }
}

double dart_angle(const NewtonGraphApprox& g, int dart) {
    const std::vector<SpherePoint> pts = g.dart_points(dart);
    const SpherePoint& v = pts.front();
    const SpherePoint& q = pts[1];
    if (v.is_infinite()) return std::arg(q.reciprocal());
    return std::arg(q.value() - v.value());
}

int critical_degree_at(const NewtonMap& f, const SpherePoint& z) {
    for (const CriticalPoint& c : f.critical_set()) {
        if (chordal(c.location, z) <= 1e-8) return c.local_degree;
    }
    return 1;
}

SpherePoint chord_midpoint(const SpherePoint& a, const SpherePoint& b) {
    if (a.is_finite() && b.is_finite() && std::abs(a.value()) <= 1.0 && std::abs(b.value()) <= 1.0) {
        return SpherePoint(0.5 * (a.value() + b.value()));
    }
    const Complex w = 0.5 * (a.reciprocal() + b.reciprocal());
    return w == Complex{0.0, 0.0} ? SpherePoint::infinity() : SpherePoint(1.0 / w);
}

// The parent graph with its edges cut at the free critical values lying on
// them. Lifting an edge through a critical value has no unique continuation;
// after the cut each piece ends at the critical value and its lifts meet at
// the critical point.
struct CutGraph {
    std::vector<SpherePoint> positions;  // parent vertices, then cut points
    std::vector<GraphEdge> pieces;       // endpoints index positions
    std::vector<int> source;             // parent edge of each piece
};

CutGraph cut_at_critical_values(const NewtonMap& f, const NewtonGraphApprox& g, const TraceConfig& cfg) {
    CutGraph cg;
    for (const GraphVertex& v : g.vertices) cg.positions.push_back(v.position);
    std::vector<SpherePoint> cuts;
    for (const CriticalPoint& c : f.critical_set()) {
        if (c.kind == CriticalKind::RootCenter) continue;
        const SpherePoint cv = f.apply(c.location);
        if (cv.is_infinite() || g.find_vertex(cv, cfg.vertex_tol) >= 0) continue;
        bool seen = false;
        for (const SpherePoint& q : cuts) seen = seen || chordal(q, cv) <= cfg.vertex_tol;
        if (!seen) cuts.push_back(cv);
    }
    const double on_edge = 10.0 * cfg.tube_tol;
    for (size_t ei = 0; ei < g.edges.size(); ++ei) {
        const GraphEdge& e = g.edges[ei];
        // (segment, distance from the segment start, cut point)
        std::vector<std::tuple<size_t, double, SpherePoint>> hits;
        for (const SpherePoint& cv : cuts) {
            size_t best = 0;
            double best_d = HUGE_VAL;
            for (size_t i = 0; i + 1 < e.points.size(); ++i) {
                const double d = segment_distance(cv, e.points[i], e.points[i + 1]);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            if (best_d <= on_edge) hits.emplace_back(best, chordal(e.points[best], cv), cv);
        }
        if (hits.empty()) {
            GraphEdge piece = e;
            cg.pieces.push_back(std::move(piece));
            cg.source.push_back(static_cast<int>(ei));
            continue;
        }
        std::sort(hits.begin(), hits.end(), [](const auto& x, const auto& y) {
            return std::get<0>(x) != std::get<0>(y) ? std::get<0>(x) < std::get<0>(y) : std::get<1>(x) < std::get<1>(y);
        });
        GraphEdge cur;
        cur.v0 = e.v0;
        cur.points.push_back(e.points.front());
        size_t h = 0;
        for (size_t i = 1; i < e.points.size(); ++i) {
            while (h < hits.size() && std::get<0>(hits[h]) == i - 1) {
                const SpherePoint& cv = std::get<2>(hits[h]);
                cg.positions.push_back(cv);
                cur.v1 = static_cast<int>(cg.positions.size()) - 1;
                cur.points.push_back(cv);
                cg.pieces.push_back(std::move(cur));
                cg.source.push_back(static_cast<int>(ei));
                cur = GraphEdge{};
                cur.v0 = static_cast<int>(cg.positions.size()) - 1;
                cur.points.push_back(cv);
                ++h;
            }
            cur.points.push_back(e.points[i]);
        }
        cur.v1 = e.v1;
        cg.pieces.push_back(std::move(cur));
        cg.source.push_back(static_cast<int>(ei));
    }
    // Every piece needs an interior point to start its lifts from.
    for (GraphEdge& piece : cg.pieces) {
        if (piece.points.size() < 3) piece.points.insert(piece.points.begin() + 1, chord_midpoint(piece.points[0], piece.points[1]));
    }
    return cg;
}

// Joins the two edges at each listed valence-2 vertex. Both edges must come
// from the same parent edge; the vertex is left isolated.
void merge_at(NewtonGraphApprox& out, std::vector<int>& parent_of_edge, std::vector<char>& dead,
              const std::vector<int>& vertices) {
    for (int x : vertices) {
        std::vector<size_t> inc;
        for (size_t e = 0; e < out.edges.size(); ++e) {
            if (dead[e]) continue;
            if (out.edges[e].v0 == x) inc.push_back(e);
            if (out.edges[e].v1 == x) inc.push_back(e);
        }
        if (inc.size() != 2 || inc[0] == inc[1] || parent_of_edge[inc[0]] != parent_of_edge[inc[1]]) continue;
        GraphEdge& a = out.edges[inc[0]];
        GraphEdge& b = out.edges[inc[1]];
        if (a.v1 != x) {
            std::reverse(a.points.begin(), a.points.end());
            std::swap(a.v0, a.v1);
        }
        if (b.v0 != x) {
            std::reverse(b.points.begin(), b.points.end());
            std::swap(b.v0, b.v1);
        }
        a.points.insert(a.points.end(), b.points.begin() + 1, b.points.end());
        a.v1 = b.v1;
        dead[inc[1]] = 1;
    }
}

}  // namespace

int NewtonGraphApprox::infinity_vertex() const {
    for (size_t i = 0; i < vertices.size(); ++i) {
        if (vertices[i].kind == VertexKind::Infinity) return static_cast<int>(i);
    }
    return -1;
}

int NewtonGraphApprox::dart_source(int dart) const {
    const GraphEdge& e = edges[static_cast<size_t>(dart_edge(dart))];
    return dart % 2 == 0 ? e.v0 : e.v1;
}

int NewtonGraphApprox::dart_target(int dart) const {
    const GraphEdge& e = edges[static_cast<size_t>(dart_edge(dart))];
    return dart % 2 == 0 ? e.v1 : e.v0;
}

std::vector<SpherePoint> NewtonGraphApprox::dart_points(int dart) const {
    std::vector<SpherePoint> pts = edges[static_cast<size_t>(dart_edge(dart))].points;
    if (dart % 2 == 1) std::reverse(pts.begin(), pts.end());
    return pts;
}

int NewtonGraphApprox::find_vertex(const SpherePoint& z, double tol) const {
    int best = -1;
    double best_d = tol;
    for (size_t i = 0; i < vertices.size(); ++i) {
        const double d = chordal(vertices[i].position, z);
        if (d <= best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

namespace {

std::array<double, 3> on_sphere(const SpherePoint& z) {
    if (z.is_infinite()) return {0.0, 0.0, 1.0};
    const Complex v = z.value();
    const double r2 = std::norm(v);
    if (!std::isfinite(r2)) return {0.0, 0.0, 1.0};
    return {2.0 * v.real() / (1.0 + r2), 2.0 * v.imag() / (1.0 + r2), (r2 - 1.0) / (r2 + 1.0)};
}

}  // namespace

double NewtonGraphApprox::distance(const SpherePoint& z) const {
    double best = HUGE_VAL;
    if (blocks.empty()) {
        for (const GraphEdge& e : edges) {
            for (size_t i = 0; i + 1 < e.points.size(); ++i) {
                best = std::min(best, segment_distance(z, e.points[i], e.points[i + 1]));
            }
        }
        return best;
    }
    const std::array<double, 3> p = on_sphere(z);
    std::vector<double> bound(blocks.size());
    size_t nearest = 0;
    for (size_t j = 0; j < blocks.size(); ++j) {
        const SegmentBlock& b = blocks[j];
        double d2 = 0.0;
        for (size_t k = 0; k < 3; ++k) {
            const double out = std::max({b.lo[k] - p[k], 0.0, p[k] - b.hi[k]});
            d2 += out * out;
        }
        bound[j] = std::sqrt(d2) - 2.0 * b.pad;
        if (bound[j] < bound[nearest]) nearest = j;
    }
    auto scan = [&](const SegmentBlock& b) {
        const std::vector<SpherePoint>& pts = edges[static_cast<size_t>(b.edge)].points;
        for (int i = b.first; i < b.first + b.count; ++i) {
            best = std::min(best, segment_distance(z, pts[static_cast<size_t>(i)], pts[static_cast<size_t>(i) + 1]));
        }
    };
    scan(blocks[nearest]);
    for (size_t j = 0; j < blocks.size(); ++j) {
        if (j != nearest && bound[j] < best) scan(blocks[j]);
    }
    return best;
}

void build_index(NewtonGraphApprox& g) {
    constexpr int kBlock = 16;
    g.blocks.clear();
    for (size_t e = 0; e < g.edges.size(); ++e) {
        const std::vector<SpherePoint>& pts = g.edges[e].points;
        const int segs = static_cast<int>(pts.size()) - 1;
        for (int first = 0; first < segs; first += kBlock) {
            SegmentBlock b;
            b.edge = static_cast<int>(e);
            b.first = first;
            b.count = std::min(kBlock, segs - first);
            for (int k = 0; k < 3; ++k) {
                b.lo[k] = HUGE_VAL;
                b.hi[k] = -HUGE_VAL;
            }
            for (int i = first; i <= first + b.count; ++i) {
                const std::array<double, 3> q = on_sphere(pts[static_cast<size_t>(i)]);
                for (int k = 0; k < 3; ++k) {
                    b.lo[k] = std::min(b.lo[k], q[static_cast<size_t>(k)]);
                    b.hi[k] = std::max(b.hi[k], q[static_cast<size_t>(k)]);
                }
                if (i > first) b.pad = std::max(b.pad, chordal(pts[static_cast<size_t>(i) - 1], pts[static_cast<size_t>(i)]));
            }
            g.blocks.push_back(b);
        }
    }
}

Ray trace_ray(const NewtonMap& f, const BottcherChart& chart, int angle_num, int angle_den, const TraceConfig& cfg) {
    Ray ray;
    ray.basin_index = chart.basin_index();
    ray.angle_num = angle_num;
    ray.angle_den = angle_den;
    const Complex dir = std::polar(1.0, 2.0 * M_PI * angle_num / angle_den);
    const double r1 = chart.potential_radius();
    const double r_inner = std::pow(r1, chart.local_degree());

    // Potentials sampled in the chart: geometric near the center, then uniform.
    std::vector<double> ts;
    for (int j = 24; j > 8; --j) ts.push_back(r1 * std::ldexp(1.0, -j));
    for (int j = 1; j <= cfg.chart_samples; ++j) ts.push_back(r1 * j / cfg.chart_samples);
    ts.push_back(r_inner);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    std::vector<SpherePoint> pts = {SpherePoint(chart.center())};
    std::vector<Complex> parent;
    Complex z = chart.center();
    for (double t : ts) {
        z = chart.inverse(t * dir, pts.size() == 1 ? chart.center() + t * dir / chart.lambda() : z);
        pts.emplace_back(z);
        if (t >= r_inner) parent.push_back(z);
    }

    // Each pass lifts the previous stretch of ray through the branch fixing the ray.
    double last_arg = std::arg(parent.back());
    for (int seg = 0;; ++seg) {
        if (seg >= cfg.max_segments) {
            throw LandingAmbiguity("trace_ray: ray did not reach infinity within the segment budget");
        }
        std::vector<Complex> child;
        try {
            child = lift_path(f, parent, parent.back(), cfg);
        } catch (const LiftFailure& e) {
            throw RayTraceFailure(std::string("trace_ray: ") + e.what());
        }
        for (size_t i = 1; i < child.size(); ++i) pts.emplace_back(child[i]);
        const Complex end = child.back();
        const double arg_now = std::arg(end);
        double turn = std::abs(arg_now - last_arg);
        turn = std::min(turn, 2.0 * M_PI - turn);
        last_arg = arg_now;
        if (std::abs(end) > kChartRadius) {
            if (turn < 1e-2) break;
            if (std::abs(end) > 1e4 * kChartRadius) {
                throw LandingAmbiguity("trace_ray: no stable asymptotic direction at infinity");
            }
        }
        parent = std::move(child);
    }
    pts.push_back(SpherePoint::infinity());
    ray.points = simplify(pts, 0.05 * cfg.tube_tol, cfg.step_max);
    ray.landing = SpherePoint::infinity();
    return ray;
}

void build_rotation(NewtonGraphApprox& g) {
    g.rotation.assign(g.vertices.size(), {});
    for (size_t e = 0; e < g.edges.size(); ++e) {
        g.rotation[static_cast<size_t>(g.edges[e].v0)].push_back(static_cast<int>(2 * e));
        g.rotation[static_cast<size_t>(g.edges[e].v1)].push_back(static_cast<int>(2 * e + 1));
    }
    for (auto& darts : g.rotation) {
        std::vector<std::pair<double, int>> keyed;
        for (int d : darts) keyed.emplace_back(dart_angle(g, d), d);
        std::sort(keyed.begin(), keyed.end());
        for (size_t i = 0; i < darts.size(); ++i) darts[i] = keyed[i].second;
    }
}

NewtonGraphApprox trace_delta0(const NewtonMap& f, const TraceConfig& cfg) {
    if (f.degree() < 3) throw DegreeError("trace_delta0: the map needs at least three distinct roots");
    if (!f.roots().all_simple()) throw ChartFailure("trace_delta0: every root must be simple");
    NewtonGraphApprox g;
    g.level = 0;
    for (int i = 0; i < f.degree(); ++i) {
        GraphVertex v;
        v.kind = VertexKind::RootCenter;
        v.root_index = i;
        v.position = SpherePoint(f.root(i));
        v.local_degree = critical_degree_at(f, v.position);
        v.image = i;
        g.vertices.push_back(v);
    }
    GraphVertex inf;
    inf.kind = VertexKind::Infinity;
    inf.position = SpherePoint::infinity();
    inf.image = f.degree();
    g.vertices.push_back(inf);

    for (int i = 0; i < f.degree(); ++i) {
        const BottcherChart chart = bottcher_chart(f, i);
        const int k = chart.local_degree();
        for (int j = 0; j < k - 1; ++j) {
            const Ray ray = trace_ray(f, chart, j, k - 1, cfg);
            GraphEdge e;
            e.v0 = i;
            e.v1 = f.degree();
            e.points = ray.points;
            e.image = static_cast<int>(g.edges.size());
            g.edges.push_back(std::move(e));
        }
    }
    build_rotation(g);
    build_index(g);
    return g;
}

NewtonGraphApprox pull_back(const NewtonMap& f, const NewtonGraphApprox& g, const TraceConfig& cfg) {
    std::vector<SpherePoint> critical_values;
    for (const CriticalPoint& c : f.critical_set()) critical_values.push_back(f.apply(c.location));

    const CutGraph cg = cut_at_critical_values(f, g, cfg);
    const size_t n_parent = g.vertices.size();
    std::vector<std::vector<std::pair<SpherePoint, int>>> pre(cg.positions.size());
    for (size_t v = 0; v < cg.positions.size(); ++v) pre[v] = f.preimages(cg.positions[v]);

    NewtonGraphApprox out;
    out.level = g.level + 1;
    std::vector<int> parent_of_vertex;  // cut-graph vertex each child vertex maps to
    std::vector<int> joints;            // simple preimages of cut points, merged away below
    auto child_vertex = [&](int parent_v, size_t which) {
        const auto& [pos, mult] = pre[static_cast<size_t>(parent_v)][which];
        const int found = out.find_vertex(pos, cfg.vertex_tol);
        if (found >= 0) return found;
        GraphVertex v;
        const int old = g.find_vertex(pos, cfg.vertex_tol);
        if (old >= 0) {
            v = g.vertices[static_cast<size_t>(old)];
        } else {
            v.kind = VertexKind::PreVertex;
            v.depth = out.level;
            v.pole = static_cast<size_t>(parent_v) < n_parent &&
                     g.vertices[static_cast<size_t>(parent_v)].kind == VertexKind::Infinity;
        }
        v.position = pos;
        v.local_degree = mult;
        out.vertices.push_back(v);
        parent_of_vertex.push_back(parent_v);
        const int id = static_cast<int>(out.vertices.size()) - 1;
        if (static_cast<size_t>(parent_v) >= n_parent && mult == 1 && old < 0) joints.push_back(id);
        return id;
    };
    auto nearest_preimage = [&](int parent_v, Complex z) {
        const auto& list = pre[static_cast<size_t>(parent_v)];
        size_t best = 0;
        double best_d = HUGE_VAL;
        for (size_t i = 0; i < list.size(); ++i) {
            const double d = chordal(list[i].first, SpherePoint(z));
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best_d > 0.05) throw LiftFailure("pull_back: lifted edge does not end near a preimage of its vertex");
        return best;
    };

    std::vector<int> parent_of_edge;  // parent graph edge
    for (size_t pi = 0; pi < cg.pieces.size(); ++pi) {
        const GraphEdge& e = cg.pieces[pi];
        const size_t m = e.points.size();
        // Start from the interior point farthest from the critical values,
        // avoiding the far end of the sphere when possible.
        size_t star = 0;
        double star_clear = -1.0;
        for (int pass = 0; pass < 2 && star == 0; ++pass) {
            for (size_t i = 1; i + 1 < m; ++i) {
                const SpherePoint& y = e.points[i];
                if (y.is_infinite() || (pass == 0 && std::abs(y.value()) > 1e6)) continue;
                double clear = HUGE_VAL;
                for (const SpherePoint& cv : critical_values) clear = std::min(clear, chordal(cv, y));
                const bool middle = 4 * i >= m && 4 * i <= 3 * m;
                if (middle) clear *= 4.0;  // prefer the middle of the edge
                if (clear > star_clear) {
                    star_clear = clear;
                    star = i;
                }
            }
        }
        if (star == 0) throw LiftFailure("pull_back: no usable interior point on an edge");
        const auto seeds = f.preimages(e.points[star]);
        for (const auto& [sd, mult] : seeds) {
            if (mult != 1 || sd.is_infinite()) throw LiftFailure("pull_back: interior point is a critical value");
        }
        std::vector<Complex> fwd = finite_values(e.points, star, m - 1);
        std::vector<Complex> bwd = finite_values(e.points, 1, star + 1);
        std::reverse(bwd.begin(), bwd.end());
        // Cut points are end points of the pieces; reach them like vertices.
        if (static_cast<size_t>(e.v1) >= n_parent) fwd.push_back(e.points.back().value());
        if (static_cast<size_t>(e.v0) >= n_parent) bwd.push_back(e.points.front().value());
        stop_short_of(fwd, critical_values);
        stop_short_of(bwd, critical_values);
        for (const auto& seed : seeds) {
            const std::vector<Complex> cf = lift_path(f, fwd, seed.first.value(), cfg);
            const std::vector<Complex> cb = lift_path(f, bwd, seed.first.value(), cfg);
            const int a = child_vertex(e.v0, nearest_preimage(e.v0, cb.back()));
            const int b = child_vertex(e.v1, nearest_preimage(e.v1, cf.back()));
            GraphEdge ce;
            ce.v0 = a;
            ce.v1 = b;
            ce.points.push_back(out.vertices[static_cast<size_t>(a)].position);
            for (size_t i = cb.size(); i-- > 0;) ce.points.emplace_back(cb[i]);
            for (size_t i = 1; i < cf.size(); ++i) ce.points.emplace_back(cf[i]);
            ce.points.push_back(out.vertices[static_cast<size_t>(b)].position);
            out.edges.push_back(std::move(ce));
            parent_of_edge.push_back(cg.source[pi]);
        }
    }

    std::vector<char> dead(out.edges.size(), 0);
    merge_at(out, parent_of_edge, dead, joints);
    {
        NewtonGraphApprox merged;
        merged.level = out.level;
        merged.vertices = out.vertices;
        std::vector<int> merged_parent;
        for (size_t e = 0; e < out.edges.size(); ++e) {
            if (dead[e]) continue;
            merged.edges.push_back(std::move(out.edges[e]));
            merged_parent.push_back(parent_of_edge[e]);
        }
        out = std::move(merged);
        parent_of_edge = std::move(merged_parent);
    }
    for (GraphEdge& ce : out.edges) {
        ce.points = simplify(ce.points, 0.05 * cfg.tube_tol, cfg.step_max);
        reuse_existing_edge(g, out, ce);
    }

    // Keep the component of infinity.
    const int inf = out.infinity_vertex();
    if (inf < 0) throw LiftFailure("pull_back: infinity is missing from the lifted graph");
    std::vector<std::vector<int>> adj(out.vertices.size());
    for (size_t e = 0; e < out.edges.size(); ++e) {
        adj[static_cast<size_t>(out.edges[e].v0)].push_back(out.edges[e].v1);
        adj[static_cast<size_t>(out.edges[e].v1)].push_back(out.edges[e].v0);
    }
    std::vector<char> seen(out.vertices.size(), 0);
    std::vector<int> stack = {inf};
    seen[static_cast<size_t>(inf)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int u : adj[static_cast<size_t>(v)]) {
            if (!seen[static_cast<size_t>(u)]) {
                seen[static_cast<size_t>(u)] = 1;
                stack.push_back(u);
            }
        }
    }
    NewtonGraphApprox kept;
    kept.level = out.level;
    std::vector<int> remap(out.vertices.size(), -1);
    std::vector<int> kept_parent_vertex;
    for (size_t v = 0; v < out.vertices.size(); ++v) {
        if (!seen[v]) continue;
        remap[v] = static_cast<int>(kept.vertices.size());
        kept.vertices.push_back(out.vertices[v]);
        kept_parent_vertex.push_back(parent_of_vertex[v]);
    }
    std::vector<int> kept_parent_edge;
    for (size_t e = 0; e < out.edges.size(); ++e) {
        if (!seen[static_cast<size_t>(out.edges[e].v0)]) continue;
        GraphEdge ce = std::move(out.edges[e]);
        ce.v0 = remap[static_cast<size_t>(ce.v0)];
        ce.v1 = remap[static_cast<size_t>(ce.v1)];
        kept.edges.push_back(std::move(ce));
        kept_parent_edge.push_back(parent_of_edge[e]);
    }

    // Dynamics: the parent graph sits inside the new one, so images are
    // located by position.
    for (size_t v = 0; v < kept.vertices.size(); ++v) {
        // Critical points over cut points map into the interior of an edge: -1.
        const SpherePoint& target = cg.positions[static_cast<size_t>(kept_parent_vertex[v])];
        kept.vertices[v].image = kept.find_vertex(target, cfg.vertex_tol);
    }
    for (size_t e = 0; e < kept.edges.size(); ++e) {
        const GraphEdge& pe = g.edges[static_cast<size_t>(kept_parent_edge[e])];
        const int a = kept.find_vertex(pe.points.front(), cfg.vertex_tol);
        const int b = kept.find_vertex(pe.points.back(), cfg.vertex_tol);
        const SpherePoint probe = pe.points[pe.points.size() / 2];
        int best = -1;
        double best_d = 1e-5;
        for (size_t c = 0; c < kept.edges.size(); ++c) {
            const GraphEdge& ce = kept.edges[c];
            if (!((ce.v0 == a && ce.v1 == b) || (ce.v0 == b && ce.v1 == a))) continue;
            double d = HUGE_VAL;
            for (size_t i = 0; i + 1 < ce.points.size(); ++i) {
                d = std::min(d, segment_distance(probe, ce.points[i], ce.points[i + 1]));
            }
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        kept.edges[e].image = best;
    }
    build_rotation(kept);
    build_index(kept);
    return kept;
}

}  // namespace newton_dyn
