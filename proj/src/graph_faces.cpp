#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <tuple>

#include "newton_dyn/error.hpp"
#include "newton_dyn/newton_graph.hpp"

namespace newton_dyn {

namespace {

std::vector<int> face_cycle(const NewtonGraphApprox& g, int start, std::vector<char>& used) {
    std::vector<int> cycle;
    int h = start;
    const size_t limit = 2 * g.edges.size() + 1;
    while (!used[static_cast<size_t>(h)]) {
        used[static_cast<size_t>(h)] = 1;
        cycle.push_back(h);
        if (cycle.size() > limit) throw EmbeddingInconsistent("faces: boundary walk does not close");
        const int v = g.dart_target(h);
        const std::vector<int>& rot = g.rotation[static_cast<size_t>(v)];
        const auto it = std::find(rot.begin(), rot.end(), dart_twin(h));
        if (it == rot.end()) throw EmbeddingInconsistent("faces: rotation system misses a dart");
        const size_t pos = static_cast<size_t>(it - rot.begin());
        h = rot[(pos + rot.size() - 1) % rot.size()];
    }
    if (h != start) throw EmbeddingInconsistent("faces: boundary walk re-entered another face");
    return cycle;
}

// Boundary polyline of a face, every dart appended in order.
std::vector<SpherePoint> boundary_points(const NewtonGraphApprox& g, const Face& face) {
    std::vector<SpherePoint> pts;
    for (int d : face.boundary) {
        const std::vector<SpherePoint> dp = g.dart_points(d);
        pts.insert(pts.end(), dp.begin(), dp.end() - 1);
    }
    return pts;
}

// Winding number of the boundary around z, measured in the chart 1/(x - base).
int winding(const std::vector<SpherePoint>& pts, Complex base, const SpherePoint& z) {
    auto chart = [&](const SpherePoint& x) {
        return x.is_infinite() ? Complex{0.0, 0.0} : 1.0 / (x.value() - base);
    };
    const Complex zeta = chart(z);
    double total = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const Complex a = chart(pts[i]) - zeta;
        const Complex b = chart(pts[(i + 1) % pts.size()]) - zeta;
        total += std::arg(b / a);
    }
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

// Points just left of the darts of a face, best candidates first.
std::vector<SpherePoint> left_offsets(const NewtonGraphApprox& g, const Face& face, double tube_tol) {
    struct Candidate {
        double length;
        Complex mid;
        Complex normal;
    };
    std::vector<Candidate> segs;
    for (int d : face.boundary) {
        const std::vector<SpherePoint> pts = g.dart_points(d);
        for (size_t i = 0; i + 1 < pts.size(); ++i) {
            if (pts[i].is_infinite() || pts[i + 1].is_infinite()) continue;
            const Complex a = pts[i].value();
            const Complex b = pts[i + 1].value();
            if (std::abs(a) > 1e3 || std::abs(b) > 1e3) continue;
            const double len = std::abs(b - a);
            if (len <= 0.0) continue;
            segs.push_back({len, 0.5 * (a + b), Complex{0.0, 1.0} * (b - a) / len});
        }
    }
    std::stable_sort(segs.begin(), segs.end(), [](const Candidate& x, const Candidate& y) { return x.length > y.length; });
    if (segs.size() > 24) segs.resize(24);
    std::vector<SpherePoint> out;
    for (const Candidate& s : segs) {
        for (double frac : {0.5, 0.1, 0.01}) {
            const double delta = frac * s.length;
            const Complex z = s.mid + delta * s.normal;
            const double clear = chordal_factor(z) * delta;
            if (clear <= 4.0 * tube_tol) continue;
            if (g.distance(SpherePoint(z)) < 0.5 * clear) continue;
            out.emplace_back(z);
        }
    }
    return out;
}

}  // namespace

LevelNotReached::LevelNotReached(int n_max, std::shared_ptr<const CanonicalLevel> partial)
    : Error("canonical_level: targets are not all vertices by level " + std::to_string(n_max)),
      n_max_(n_max),
      partial_(std::move(partial)) {}

FaceDecomposition faces(const NewtonGraphApprox& g, double tube_tol) {
    FaceDecomposition fd;
    std::vector<char> used(2 * g.edges.size(), 0);
    for (size_t d = 0; d < used.size(); ++d) {
        if (used[d]) continue;
        Face face;
        face.id = static_cast<int>(fd.faces.size());
        face.boundary = face_cycle(g, static_cast<int>(d), used);
        fd.faces.push_back(std::move(face));
    }
    const long v = static_cast<long>(g.vertices.size());
    const long e = static_cast<long>(g.edges.size());
    const long f = static_cast<long>(fd.faces.size());
    if (v - e + f != 2) {
        std::ostringstream os;
        os << "faces: Euler characteristic " << v - e + f << " (V=" << v << ", E=" << e << ", F=" << f << ")";
        throw EmbeddingInconsistent(os.str());
    }

    // The anchor face's representative is the base of the winding chart; the
    // others are checked by locating them.
    for (size_t i = 0; i < fd.faces.size(); ++i) {
        const std::vector<SpherePoint> cands = left_offsets(g, fd.faces[i], tube_tol);
        if (cands.empty()) throw EmbeddingInconsistent("faces: no interior sample point for a face");
        if (i == 0) {
            fd.anchor = 0;
            fd.faces[0].representative = cands.front();
            continue;
        }
        bool placed = false;
        for (const SpherePoint& z : cands) {
            fd.faces[i].representative = z;
            if (point_locate(g, fd, z, tube_tol) == static_cast<int>(i)) {
                placed = true;
                break;
            }
        }
        if (!placed) throw EmbeddingInconsistent("faces: face samples do not locate inside their face");
    }
    return fd;
}

int point_locate(const NewtonGraphApprox& g, const FaceDecomposition& fd, const SpherePoint& z, double tube_tol) {
    if (z.is_infinite() || g.distance(z) <= tube_tol) return kOnGraph;
    const Complex base = fd.faces[static_cast<size_t>(fd.anchor)].representative.value();
    for (const Face& face : fd.faces) {
        if (face.id == fd.anchor) continue;
        if (winding(boundary_points(g, face), base, z) != 0) return face.id;
    }
    return fd.anchor;
}

Itinerary itinerary(const NewtonMap& f, const SpherePoint& z, const NewtonGraphApprox& g, const FaceDecomposition& fd,
                    int len, double tube_tol) {
    if (len < 1) throw InputError("itinerary: length must be positive");
    Itinerary it;
    it.length = len;
    SpherePoint x = z;
    for (int n = 0; n < len; ++n) {
        it.faces.push_back(point_locate(g, fd, x, tube_tol));
        x = f.apply(x);
    }
    return it;
}

std::vector<SpherePoint> critical_points_landing_on_fixed(const NewtonMap& f, double eps_eq, int max_steps) {
    std::vector<SpherePoint> out;
    for (const CriticalPoint& c : f.critical_set()) {
        SpherePoint x = c.location;
        double prev = HUGE_VAL;  // distance to the nearest root one step earlier
        for (int s = 0; s <= max_steps; ++s) {
            if (x.is_infinite()) {
                out.push_back(c.location);
                break;
            }
            double d = HUGE_VAL;
            for (int i = 0; i < f.degree(); ++i) d = std::min(d, std::abs(x.value() - f.root(i)));
            if (d <= eps_eq && (s == 0 || prev > 1e-3)) {
                out.push_back(c.location);
                break;
            }
            if (d <= eps_eq) break;  // converging to a root, not landing on it
            prev = d;
            x = f.apply(x);
            if (x.is_finite() && chordal(x, SpherePoint::infinity()) <= eps_eq) x = SpherePoint::infinity();
        }
    }
    return out;
}

CanonicalLevel canonical_level(const NewtonMap& f, int n_max, const TraceConfig& cfg) {
    if (n_max < 0) throw InputError("canonical_level: n_max must be non-negative");
    CanonicalLevel lvl;
    for (const Pole& p : f.poles()) lvl.targets.emplace_back(p.location);
    for (const SpherePoint& c : critical_points_landing_on_fixed(f)) {
        bool dup = false;
        for (const SpherePoint& t : lvl.targets) dup = dup || chordal(t, c) <= cfg.vertex_tol;
        if (!dup) lvl.targets.push_back(c);
    }
    lvl.graph = trace_delta0(f, cfg);
    for (int n = 0;; ++n) {
        lvl.level = n;
        bool all = true;
        for (const SpherePoint& t : lvl.targets) all = all && lvl.graph.find_vertex(t, cfg.vertex_tol) >= 0;
        if (all) return lvl;
        if (n == n_max) throw LevelNotReached(n_max, std::make_shared<const CanonicalLevel>(lvl));
        lvl.graph = pull_back(f, lvl.graph, cfg);
    }
}

GraphCode canonical_code(const NewtonGraphApprox& g, const FaceDecomposition& fd) {
    const int inf = g.infinity_vertex();
    if (inf < 0) throw InputError("canonical_code: graph has no infinity vertex");
    const size_t nv = g.vertices.size();
    const size_t ne = g.edges.size();
    GraphCode best;
    std::vector<int> best_dnum;
    for (int start : g.rotation[static_cast<size_t>(inf)]) {
        std::vector<int> vnum(nv, -1), enm(ne, -1), dnum(2 * ne, -1), ref(nv, -1);
        std::vector<int> vorder, eorder;
        std::vector<long> code;
        std::queue<int> queue;
        vnum[static_cast<size_t>(inf)] = 0;
        ref[static_cast<size_t>(inf)] = start;
        vorder.push_back(inf);
        queue.push(inf);
        int next_d = 0;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop();
            const GraphVertex& gv = g.vertices[static_cast<size_t>(v)];
            const std::vector<int>& rot = g.rotation[static_cast<size_t>(v)];
            code.push_back(static_cast<long>(gv.kind));
            code.push_back(gv.local_degree);
            code.push_back(gv.pole ? 1 : 0);
            code.push_back(gv.depth);
            code.push_back(static_cast<long>(rot.size()));
            const size_t pos = static_cast<size_t>(std::find(rot.begin(), rot.end(), ref[static_cast<size_t>(v)]) - rot.begin());
            for (size_t k = 0; k < rot.size(); ++k) {
                const int d = rot[(pos + k) % rot.size()];
                dnum[static_cast<size_t>(d)] = next_d++;
                const size_t e = static_cast<size_t>(dart_edge(d));
                if (enm[e] < 0) {
                    enm[e] = static_cast<int>(eorder.size());
                    eorder.push_back(static_cast<int>(e));
                }
                const int u = g.dart_target(d);
                if (vnum[static_cast<size_t>(u)] < 0) {
                    vnum[static_cast<size_t>(u)] = static_cast<int>(vorder.size());
                    vorder.push_back(u);
                    ref[static_cast<size_t>(u)] = dart_twin(d);
                    queue.push(u);
                }
                code.push_back(vnum[static_cast<size_t>(u)]);
                code.push_back(enm[e]);
            }
        }
        if (vorder.size() != nv) throw InputError("canonical_code: graph is not connected");
        for (int e : eorder) {
            const int img = g.edges[static_cast<size_t>(e)].image;
            code.push_back(img < 0 ? -1 : enm[static_cast<size_t>(img)]);
        }
        for (int v : vorder) {
            const int img = g.vertices[static_cast<size_t>(v)].image;
            code.push_back(img < 0 ? -1 : vnum[static_cast<size_t>(img)]);
        }
        if (best_dnum.empty() || code < best.code) {
            best.code = std::move(code);
            best_dnum = std::move(dnum);
        }
    }
    std::vector<std::pair<int, int>> keyed;
    for (const Face& face : fd.faces) {
        int m = static_cast<int>(2 * ne);
        for (int d : face.boundary) m = std::min(m, best_dnum[static_cast<size_t>(d)]);
        keyed.emplace_back(m, face.id);
    }
    std::sort(keyed.begin(), keyed.end());
    best.face_ids.assign(fd.faces.size(), -1);
    for (size_t i = 0; i < keyed.size(); ++i) best.face_ids[static_cast<size_t>(keyed[i].second)] = static_cast<int>(i);
    return best;
}

namespace {

struct CombData {
    GraphCode code;
    std::vector<std::pair<int, std::vector<int>>> criticals;  // (local degree, canonical itinerary)
};

CombData comb_data(const NewtonMap& f, const NewtonGraphApprox& g, const CombConfig& cfg) {
    const FaceDecomposition fd = faces(g, cfg.trace.tube_tol);
    CombData out;
    out.code = canonical_code(g, fd);
    for (const CriticalOrbit& co : critical_orbits(f, cfg.budget)) {
        if (co.point.kind == CriticalKind::RootCenter) continue;
        const Itinerary it = itinerary(f, co.point.location, g, fd, cfg.itinerary_length, cfg.trace.tube_tol);
        std::vector<int> word;
        for (int face : it.faces) word.push_back(face == kOnGraph ? kOnGraph : out.code.face_ids[static_cast<size_t>(face)]);
        out.criticals.emplace_back(co.point.local_degree, std::move(word));
    }
    std::sort(out.criticals.begin(), out.criticals.end());
    return out;
}

}  // namespace

TriState comb_equivalent(const NewtonMap& f, const NewtonMap& g, int level, const CombConfig& cfg) {
    try {
        auto graph_at = [&](const NewtonMap& m, int& reached) {
            try {
                CanonicalLevel lvl = canonical_level(m, level, cfg.trace);
                reached = lvl.level;
                NewtonGraphApprox graph = std::move(lvl.graph);
                while (graph.level < level) graph = pull_back(m, graph, cfg.trace);
                return graph;
            } catch (const LevelNotReached& e) {
                reached = -1;
                return e.partial().graph;
            }
        };
        int nf = 0;
        int ng = 0;
        const NewtonGraphApprox a = graph_at(f, nf);
        const NewtonGraphApprox b = graph_at(g, ng);
        if (nf != ng) return TriState::No;
        const CombData da = comb_data(f, a, cfg);
        const CombData db = comb_data(g, b, cfg);
        if (da.code.code != db.code.code) return TriState::No;
        if (da.criticals != db.criticals) return TriState::No;
        return TriState::Yes;
    } catch (const RayTraceFailure&) {
        return TriState::Unknown;
    } catch (const LandingAmbiguity&) {
        return TriState::Unknown;
    } catch (const LiftFailure&) {
        return TriState::Unknown;
    } catch (const ChartFailure&) {
        return TriState::Unknown;
    } catch (const EmbeddingInconsistent&) {
        return TriState::Unknown;
    }
}

std::string export_graph(const NewtonGraphApprox& g, const FaceDecomposition& fd) {
    auto num = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    auto point = [&](const SpherePoint& p) {
        if (p.is_infinite()) return std::string("inf inf");
        return num(p.value().real()) + " " + num(p.value().imag());
    };
    auto label = [](const GraphVertex& v) {
        std::string s;
        switch (v.kind) {
            case VertexKind::Infinity: s = "inf"; break;
            case VertexKind::RootCenter: s = "root:" + std::to_string(v.root_index); break;
            case VertexKind::PreVertex: s = "pre:" + std::to_string(v.depth); break;
        }
        if (v.pole) s += ":pole";
        return s;
    };

    // Deterministic numbering: infinity, roots by index, then by position.
    std::vector<int> vorder(g.vertices.size());
    std::iota(vorder.begin(), vorder.end(), 0);
    auto vkey = [&](int i) {
        const GraphVertex& v = g.vertices[static_cast<size_t>(i)];
        const int kind = v.kind == VertexKind::Infinity ? 0 : v.kind == VertexKind::RootCenter ? 1 : 2;
        const Complex z = v.position.is_infinite() ? Complex{0.0, 0.0} : v.position.value();
        return std::make_tuple(kind, v.kind == VertexKind::RootCenter ? v.root_index : v.depth, z.real(), z.imag());
    };
    std::stable_sort(vorder.begin(), vorder.end(), [&](int a, int b) { return vkey(a) < vkey(b); });
    std::vector<int> vid(g.vertices.size());
    for (size_t i = 0; i < vorder.size(); ++i) vid[static_cast<size_t>(vorder[i])] = static_cast<int>(i);

    std::vector<int> eorder(g.edges.size());
    std::iota(eorder.begin(), eorder.end(), 0);
    auto ekey = [&](int i) {
        const GraphEdge& e = g.edges[static_cast<size_t>(i)];
        const int a = vid[static_cast<size_t>(e.v0)];
        const int b = vid[static_cast<size_t>(e.v1)];
        const SpherePoint& m = e.points[e.points.size() / 2];
        const Complex z = m.is_infinite() ? Complex{0.0, 0.0} : m.value();
        return std::make_tuple(std::min(a, b), std::max(a, b), z.real(), z.imag());
    };
    std::stable_sort(eorder.begin(), eorder.end(), [&](int a, int b) { return ekey(a) < ekey(b); });
    std::vector<int> eid(g.edges.size());
    for (size_t i = 0; i < eorder.size(); ++i) eid[static_cast<size_t>(eorder[i])] = static_cast<int>(i);

    std::ostringstream os;
    for (int v : vorder) {
        const GraphVertex& gv = g.vertices[static_cast<size_t>(v)];
        os << "V " << vid[static_cast<size_t>(v)] << ' ' << label(gv) << ' ' << point(gv.position) << '\n';
    }
    for (int e : eorder) {
        const GraphEdge& ge = g.edges[static_cast<size_t>(e)];
        os << "E " << eid[static_cast<size_t>(e)] << ' ' << vid[static_cast<size_t>(ge.v0)] << ' '
           << vid[static_cast<size_t>(ge.v1)] << ' ' << ge.points.size();
        for (const SpherePoint& p : ge.points) os << ' ' << point(p);
        os << '\n';
    }
    for (const Face& face : fd.faces) {
        os << "F " << face.id;
        for (int d : face.boundary) os << ' ' << (d % 2 == 0 ? '+' : '-') << eid[static_cast<size_t>(dart_edge(d))];
        os << '\n';
    }
    return os.str();
}

}  // namespace newton_dyn
