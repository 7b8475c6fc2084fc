#include "newton_dyn/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "newton_dyn/error.hpp"
#include "newton_dyn/kneading.hpp"
#include "newton_dyn/newton_graph.hpp"
#include "newton_dyn/parallel.hpp"
#include "newton_dyn/render.hpp"
#include "newton_dyn/search.hpp"

namespace newton_dyn::cli {

namespace {

Complex parse_number(const Json& v, const char* what) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw InputError(std::string("map file: each ") + what + " must be a number or [re, im]");
}

std::string format_double(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void dump_value(const Json& j, std::ostream& os, int indent) {
    const std::string pad(static_cast<size_t>(indent + 2), ' ');
    const std::string close(static_cast<size_t>(indent), ' ');
    switch (j.type()) {
        case Json::value_t::number_float:
            os << format_double(j.get<double>());
            return;
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << Json(it.key()).dump() << ": ";
                dump_value(it.value(), os, indent + 2);
            }
            os << '\n' << close << '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Arrays of scalars (points, coefficient lists) stay on one line.
            bool flat = true;
            for (const Json& v : j) flat = flat && v.is_primitive();
            if (flat) {
                os << '[';
                for (size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    dump_value(j[i], os, indent);
                }
                os << ']';
                return;
            }
            os << "[\n";
            for (size_t i = 0; i < j.size(); ++i) {
                if (i) os << ",\n";
                os << pad;
                dump_value(j[i], os, indent + 2);
            }
            os << '\n' << close << ']';
            return;
        }
        default:
            os << j.dump();
    }
}

// JSON encodings of the numeric types.
Json cjson(Complex z) { return Json::array({z.real(), z.imag()}); }
Json pjson(const SpherePoint& p) { return p.is_infinite() ? Json("inf") : cjson(p.value()); }

Json poly_json(const Polynomial& p) {
    Json a = Json::array();
    for (const Complex& c : p.coeffs()) a.push_back(cjson(c));
    return a;
}

Json orbit_json(const OrbitClassification& c) {
    Json j;
    j["kind"] = to_string(c.kind);
    switch (c.kind) {
        case OrbitKind::ConvergedToRoot:
            j["root_index"] = c.root_index;
            j["hitting_time"] = c.hitting_time;
            break;
        case OrbitKind::AttractingCycle: {
            j["period"] = c.period;
            j["hitting_time"] = c.hitting_time;
            j["multiplier"] = cjson(c.multiplier);
            j["multiplier_abs"] = std::abs(c.multiplier);
            Json cyc = Json::array();
            for (const SpherePoint& p : c.cycle) cyc.push_back(pjson(p));
            j["cycle"] = cyc;
            break;
        }
        case OrbitKind::LandsOnInfinity:
            j["step"] = c.step;
            break;
        case OrbitKind::Unresolved:
            j["reason"] = to_string(c.reason);
            break;
    }
    return j;
}

Json certificate_json(const HyperbolicityCertificate& cert, int d) {
    Json j;
    j["status"] = cert.certified() ? "Certified" : "NotCertified";
    j["tau"] = cert.tau;
    j["tau_hyperbolic"] = 2 * d - 2;
    Json per = Json::array();
    for (const CriticalOrbit& co : cert.per_critical) {
        Json e;
        e["location"] = pjson(co.point.location);
        e["local_degree"] = co.point.local_degree;
        e["kind"] = to_string(co.point.kind);
        e["orbit"] = orbit_json(co.orbit);
        per.push_back(e);
    }
    j["critical_orbits"] = per;
    return j;
}

Json params_json(const ParameterPoint& pp) {
    Json j;
    j["d"] = pp.d;
    j["a"] = pp.a;
    return j;
}

std::vector<double> split_numbers(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || *end != '\0' || !std::isfinite(v)) throw InputError(what + ": cannot parse '" + text + "'");
        out.push_back(v);
    }
    return out;
}

SpherePoint parse_point(const std::string& text) {
    if (text == "inf") return SpherePoint::infinity();
    const std::vector<double> v = split_numbers(text, "--seed");
    if (v.size() == 1) return SpherePoint(Complex{v[0], 0.0});
    if (v.size() == 2) return SpherePoint(Complex{v[0], v[1]});
    throw InputError("--seed: expected re,im or inf");
}

struct Settings {
    std::string profile = "desk";
    OrbitBudget budget;
    TraceConfig trace;
    int threads = 0;
    bool strict = false;
    std::string out;
    int n_max = 4;
    int itinerary_length = 12;
    int samples_per_radius = 64;
};

Settings preset(const std::string& profile) {
    Settings s;
    s.profile = profile;
    if (profile == "deep") {
        s.budget.max_iter = 200000;
        s.budget.eps_cycle = 1e-11;
        s.n_max = 6;
        s.itinerary_length = 24;
        s.samples_per_radius = 256;
    } else if (profile != "desk") {
        throw InputError("--profile must be desk or deep");
    }
    return s;
}

Json config_json(const Settings& s) {
    Json j;
    j["profile"] = s.profile;
    j["budget"] = {{"max_iter", s.budget.max_iter},
                   {"eps_root", s.budget.eps_root},
                   {"eps_cycle", s.budget.eps_cycle},
                   {"contraction_margin", s.budget.contraction_margin},
                   {"chart_radius", s.budget.chart_radius}};
    j["trace"] = {{"step_max", s.trace.step_max},
                  {"tube_tol", s.trace.tube_tol},
                  {"vertex_tol", s.trace.vertex_tol},
                  {"branch_tol", s.trace.branch_tol}};
    j["graph_n_max"] = s.n_max;
    j["itinerary_length"] = s.itinerary_length;
    j["samples_per_radius"] = s.samples_per_radius;
    j["strict"] = s.strict;
    return j;
}

struct Loaded {
    NewtonMap map;
    Json echo;
    Json gamma;  // null unless normalized
};

Loaded load_map(const std::string& path) {
    MapSpec spec = load_map_spec(path);
    Polynomial p = spec.poly;
    Json gamma;
    if (spec.normalize) {
        const Normalized n = normalize(p);
        p = n.poly;
        gamma = {{"scale", cjson(n.gamma.scale)}, {"shift", cjson(n.gamma.shift)}};
    }
    Json echo;
    echo["path"] = path;
    echo["spec"] = spec.source;
    echo["polynomial"] = poly_json(p);
    return {NewtonMap::build(p), echo, gamma};
}

struct Outcome {
    Json inputs;
    Json results;
    bool negative = false;
    bool report_copy = true;  // --out receives the report unless the command writes an artifact
};

Outcome cmd_info(const std::string& path) {
    Loaded m = load_map(path);
    const NewtonMap& f = m.map;
    Json r;
    r["degree"] = f.degree();
    r["poly_degree"] = f.poly_degree();
    r["real"] = f.real();
    r["normalized"] = f.normalized();
    if (!m.gamma.is_null()) r["normalization"] = m.gamma;
    Json roots = Json::array();
    for (const Root& rt : f.roots().roots) roots.push_back({{"location", cjson(rt.location)}, {"multiplicity", rt.multiplicity}});
    r["roots"] = roots;
    Json poles = Json::array();
    for (const Pole& p : f.poles()) poles.push_back({{"location", cjson(p.location)}, {"order", p.order}});
    r["poles"] = poles;
    Json fixed = Json::array();
    for (const FixedPointDatum& fp : fixed_point_data(f)) {
        Json e;
        e["location"] = pjson(fp.location);
        e["root_index"] = fp.root_index < 0 ? Json() : Json(fp.root_index);
        e["multiplier"] = cjson(fp.multiplier);
        fixed.push_back(e);
    }
    r["fixed_points"] = fixed;
    Json crit = Json::array();
    for (const CriticalPoint& c : f.critical_set()) {
        Json e;
        e["location"] = pjson(c.location);
        e["local_degree"] = c.local_degree;
        e["kind"] = to_string(c.kind);
        e["root_index"] = c.root_index < 0 ? Json() : Json(c.root_index);
        crit.push_back(e);
    }
    r["critical_points"] = crit;
    const HeadReport h = head_verify(f);
    r["head_check"] = {{"ok", h.ok}, {"n", h.n}, {"infinity_multiplier", cjson(h.infinity_multiplier)}, {"diagnostic", h.diagnostic}};
    return {{{"map", m.echo}}, r};
}

Outcome cmd_classify(const std::string& path, const std::string& seed, const Settings& s) {
    Loaded m = load_map(path);
    const SpherePoint z0 = parse_point(seed);
    Json in{{"map", m.echo}, {"seed", pjson(z0)}};
    return {in, orbit_json(classify(m.map, z0, s.budget))};
}

Outcome cmd_kneading(const std::string& path, int len, const Settings& s) {
    Loaded m = load_map(path);
    const KneadingSequence k = kneading_sequence(m.map, len, s.budget);
    Json r;
    r["length"] = k.length;
    Json rows = Json::array();
    for (size_t i = 0; i < k.symbols.size(); ++i) {
        Json row;
        row["critical"] = k.criticals[i];
        row["symbols"] = to_string(k.symbols[i]);
        if (k.periodic[i]) {
            row["periodic"] = {{"preperiod", k.periodic[i]->preperiod},
                               {"period", k.periodic[i]->period},
                               {"word", periodic_word(k.symbols[i], *k.periodic[i])}};
        } else {
            row["periodic"] = nullptr;
        }
        rows.push_back(row);
    }
    r["rows"] = rows;
    r["sequence"] = to_string(k);
    r["in_Y"] = to_string(in_family_Y(m.map, s.budget));
    return {{{"map", m.echo}, {"len", len}}, r};
}

Outcome cmd_certify(const std::string& path, const Settings& s) {
    Loaded m = load_map(path);
    const HyperbolicityCertificate cert = certify_hyperbolic(m.map, s.budget);
    return {{{"map", m.echo}}, certificate_json(cert, m.map.degree()), !cert.certified()};
}

Outcome cmd_graph(const std::string& path, std::optional<int> level, const Settings& s) {
    Loaded m = load_map(path);
    const NewtonMap& f = m.map;
    Json r;
    NewtonGraphApprox g;
    bool negative = false;
    if (level) {
        if (*level < 0) throw InputError("--level must be non-negative");
        g = trace_delta0(f, s.trace);
        while (g.level < *level) g = pull_back(f, g, s.trace);
    } else {
        try {
            CanonicalLevel c = canonical_level(f, s.n_max, s.trace);
            g = std::move(c.graph);
            r["canonical"] = {{"reached", true}, {"targets", c.targets.size()}};
        } catch (const LevelNotReached& e) {
            g = e.partial().graph;
            r["canonical"] = {{"reached", false}, {"targets", e.partial().targets.size()}};
            negative = true;
        }
    }
    const FaceDecomposition fd = faces(g, s.trace.tube_tol);
    const long nv = static_cast<long>(g.vertices.size());
    const long ne = static_cast<long>(g.edges.size());
    const long nf = static_cast<long>(fd.faces.size());
    r["level"] = g.level;
    r["vertices"] = nv;
    r["edges"] = ne;
    r["faces"] = nf;
    r["euler"] = nv - ne + nf;
    int poles = 0;
    for (const GraphVertex& v : g.vertices) poles += v.pole;
    r["pole_vertices"] = poles;
    r["code"] = canonical_code(g, fd).code;
    const std::string text = export_graph(g, fd);
    Outcome o{{{"map", m.echo}, {"level", level ? Json(*level) : Json()}}, r, negative};
    if (!s.out.empty()) {
        std::ofstream os(s.out);
        if (!os || !(os << text)) throw IoError("graph: cannot write " + s.out);
        o.results["export_path"] = s.out;
        o.report_copy = false;
    } else {
        o.results["export"] = text;
    }
    return o;
}

Outcome cmd_compare(const std::string& a, const std::string& b, int level, const Settings& s) {
    Loaded ma = load_map(a);
    Loaded mb = load_map(b);
    if (level < 0) throw InputError("--level must be non-negative");
    CombConfig cfg;
    cfg.trace = s.trace;
    cfg.budget = s.budget;
    cfg.itinerary_length = s.itinerary_length;
    const TriState t = comb_equivalent(ma.map, mb.map, level, cfg);
    Json r{{"equivalent", to_string(t)}};
    return {{{"a", ma.echo}, {"b", mb.echo}, {"level", level}}, r, t != TriState::Yes};
}

Outcome cmd_approx(const std::string& path, std::uint64_t seed, bool require_y, const Settings& s) {
    Loaded m = load_map(path);
    const ParameterPoint pp = params_of(m.map);
    SearchConfig cfg;
    cfg.samples_per_radius = s.samples_per_radius;
    cfg.budget = s.budget;
    cfg.require_Y = require_y;
    cfg.rng_seed = seed;
    cfg.threads = s.threads;
    const ApproxResult res = find_hyperbolic_near(pp, cfg);
    Json r;
    r["center"] = params_json(pp);
    if (res.found) {
        const ApproxFound& fd = *res.found;
        const OpennessReport open = openness_check(fd.point, s.budget);
        r["found"] = {{"point", params_json(fd.point)},
                      {"distance", fd.distance},
                      {"samples_tried", fd.samples_tried},
                      {"certificate", certificate_json(fd.certificate, fd.point.d)},
                      {"openness", {{"passed", open.passed}, {"neighbor_tau", open.neighbor_tau}}}};
    } else {
        r["found"] = nullptr;
    }
    Json trace = Json::array();
    for (const RadiusTrace& t : res.trace) {
        trace.push_back({{"radius", t.radius},
                         {"samples", t.samples},
                         {"certified", t.certified},
                         {"rejected_y", t.rejected_y},
                         {"discriminant", t.discriminant}});
    }
    r["trace"] = trace;
    Json in{{"map", m.echo}, {"rng_seed", seed}, {"require_Y", require_y}};
    return {in, r, !res.found.has_value()};
}

std::vector<Interval> parse_box(const std::vector<std::string>& items) {
    std::vector<Interval> box;
    for (const std::string& it : items) {
        const std::vector<double> v = split_numbers(it, "--box");
        if (v.size() != 2 || !(v[0] <= v[1])) throw InputError("--box: expected lo,hi with lo <= hi");
        box.emplace_back(v[0], v[1]);
    }
    return box;
}

Outcome cmd_tau_map(int d, const std::vector<std::string>& box_text, const std::vector<int>& res, const Settings& s) {
    const std::vector<Interval> box = parse_box(box_text);
    const ImageGrid g = render_tau(d, box, res, s.budget, s.threads);
    Json r;
    r["width"] = g.width;
    r["height"] = g.height;
    r["values"] = g.codes;
    std::map<int, int> hist;
    for (int v : g.codes) ++hist[v];
    Json h = Json::object();
    for (const auto& [v, n] : hist) h[std::to_string(v)] = n;
    r["histogram"] = h;
    Json in{{"degree", d}, {"box", box_text}, {"resolution", res}};
    Outcome o{in, r};
    if (!s.out.empty()) {
        write_ppm(g, tau_palette(d), s.out);
        o.results["ppm_path"] = s.out;
        o.results["ppm_fnv1a64"] = std::to_string(fnv1a64(encode_ppm(g, tau_palette(d))));
        o.report_copy = false;
    }
    return o;
}

Outcome cmd_render(const std::string& path, const std::string& center, double width, const std::vector<int>& size,
                   bool shade, const Settings& s) {
    Loaded m = load_map(path);
    Viewport vp;
    const std::vector<double> c = split_numbers(center, "--center");
    if (c.size() != 2) throw InputError("--center: expected re,im");
    vp.center = {c[0], c[1]};
    vp.width = width;
    if (size.size() != 2) throw InputError("--size: expected W,H");
    vp.pixels_x = size[0];
    vp.pixels_y = size[1];
    const ImageGrid g = render_basins(m.map, vp, s.budget, s.threads);
    const Palette pal = basin_palette(g, shade);
    const std::string bytes = encode_ppm(g, pal);
    Json r;
    r["width"] = g.width;
    r["height"] = g.height;
    r["fnv1a64"] = std::to_string(fnv1a64(bytes));
    int unresolved = 0;
    int infinity = 0;
    std::vector<int> per_root(static_cast<size_t>(g.degree), 0);
    std::vector<int> per_cycle(g.cycles.size(), 0);
    for (int code : g.codes) {
        if (code < g.degree) ++per_root[static_cast<size_t>(code)];
        else if (code == g.infinity_code()) ++infinity;
        else if (code == g.unresolved_code()) ++unresolved;
        else ++per_cycle[static_cast<size_t>(code - g.cycle_code(0))];
    }
    r["pixels_per_root"] = per_root;
    r["pixels_infinity"] = infinity;
    r["pixels_unresolved"] = unresolved;
    Json cycles = Json::array();
    for (size_t k = 0; k < g.cycles.size(); ++k) cycles.push_back({{"representative", pjson(g.cycles[k])}, {"pixels", per_cycle[k]}});
    r["cycles"] = cycles;
    Json in{{"map", m.echo}, {"center", cjson(vp.center)}, {"width", width}, {"size", size}, {"shade", shade}};
    Outcome o{in, r};
    if (!s.out.empty()) {
        std::ofstream os(s.out, std::ios::binary);
        if (!os || !os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
            throw IoError("render: cannot write " + s.out);
        }
        o.results["ppm_path"] = s.out;
        o.report_copy = false;
    }
    return o;
}

}  // namespace

MapSpec parse_map_spec(const Json& j) {
    if (!j.is_object()) throw InputError("map file: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "coeffs" && it.key() != "roots" && it.key() != "normalize") {
            throw InputError("map file: unknown key '" + it.key() + "'");
        }
    }
    const bool has_c = j.contains("coeffs");
    const bool has_r = j.contains("roots");
    if (has_c == has_r) throw InputError("map file: exactly one of \"coeffs\" and \"roots\" is required");
    MapSpec spec;
    spec.source = j;
    if (j.contains("normalize")) {
        if (!j["normalize"].is_boolean()) throw InputError("map file: \"normalize\" must be a boolean");
        spec.normalize = j["normalize"].get<bool>();
    }
    const Json& list = has_c ? j["coeffs"] : j["roots"];
    if (!list.is_array() || list.empty()) throw InputError("map file: the coefficient or root list must be a non-empty array");
    std::vector<Complex> vals;
    for (const Json& v : list) {
        const Complex z = parse_number(v, has_c ? "coefficient" : "root");
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw InputError("map file: non-finite value");
        vals.push_back(z);
    }
    try {
        if (has_c) {
            spec.poly = Polynomial(vals);
        } else {
            // Expanding the product leaves rounding residue in coefficients
            // that are exactly zero for the intended roots; drop it.
            std::vector<Complex> c = from_roots(vals).coeffs();
            double top = 0.0;
            for (const Complex& v : c) top = std::max({top, std::abs(v.real()), std::abs(v.imag())});
            const double floor = 8.0 * std::numeric_limits<double>::epsilon() * top;
            for (Complex& v : c) v = {std::abs(v.real()) <= floor ? 0.0 : v.real(), std::abs(v.imag()) <= floor ? 0.0 : v.imag()};
            spec.poly = Polynomial(c);
        }
    } catch (const DegreeError& e) {
        throw InputError(std::string("map file: ") + e.what());
    }
    if (spec.poly.degree() < 2) throw InputError("map file: the polynomial must have degree at least 2");
    return spec;
}

MapSpec load_map_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open map file " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError("map file " + path + ": " + e.what());
    }
    return parse_map_spec(j);
}

std::string dump_report(const Json& j) {
    std::ostringstream os;
    dump_value(j, os, 0);
    os << '\n';
    return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamics of Newton maps: orbits, kneading, Newton graphs, hyperbolicity search, rendering",
                 "newton_dyn"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string profile = "desk";
    int budget_iter = 0;
    double eps_root = 0;
    double eps_cycle = 0;
    double margin = 0;
    double tube_tol = 0;
    double step_max = 0;
    int n_max = 0;
    int itinerary = 0;
    int threads = 0;
    bool strict = false;
    std::string out_path;
    app.add_option("--profile", profile, "Preset budgets: desk (default) or deep")->check(CLI::IsMember({"desk", "deep"}));
    auto* o_iter = app.add_option("--budget-iter", budget_iter, "Orbit iteration cap (desk 20000)");
    auto* o_eps = app.add_option("--eps-root", eps_root, "Root capture radius (1e-9)");
    auto* o_cyc = app.add_option("--eps-cycle", eps_cycle, "Cycle closing tolerance (1e-9)");
    auto* o_margin = app.add_option("--contraction-margin", margin, "Required cycle contraction margin (0.05)");
    auto* o_tube = app.add_option("--tube-tol", tube_tol, "Graph tracing tube tolerance (1e-6)");
    auto* o_step = app.add_option("--step-max", step_max, "Graph tracing chordal step (0.05)");
    auto* o_nmax = app.add_option("--n-max", n_max, "Highest graph level tried for the canonical level (desk 4)");
    auto* o_itin = app.add_option("--itinerary", itinerary, "Itinerary length in graph comparisons (desk 12)");
    app.add_option("--threads", threads, "Worker threads, 0 for all cores")->envname("NEWTON_DYN_THREADS");
    app.add_flag("--strict", strict, "Exit 3 on NotCertified, No or not-found results");
    app.add_option("--out", out_path, "Artifact path (graph export, PPM); other commands write a report copy");
    app.fallthrough();

    std::string map_a;
    std::string map_b;
    std::string seed;
    int len = 12;
    int level = 1;
    std::uint64_t rng_seed = 1;
    int samples = 0;
    bool require_y = false;
    int degree = 3;
    std::vector<std::string> box;
    std::vector<int> res;
    std::string center = "0,0";
    double width = 4.0;
    std::vector<int> size{256, 256};
    bool shade = false;

    auto* info = app.add_subcommand("info", "Roots, fixed points, multipliers, critical points, head check");
    info->add_option("map", map_a, "Map file")->required();
    auto* cls = app.add_subcommand("classify", "Classify the orbit of a seed");
    cls->add_option("map", map_a, "Map file")->required();
    cls->add_option("--seed", seed, "Start point re,im or inf")->required();
    auto* kn = app.add_subcommand("kneading", "Kneading sequences of the free real critical points");
    kn->add_option("map", map_a, "Map file")->required();
    kn->add_option("--len", len, "Sequence length");
    auto* cert = app.add_subcommand("certify", "Hyperbolicity certificate and tau");
    cert->add_option("map", map_a, "Map file")->required();
    auto* gr = app.add_subcommand("graph", "Newton graph export (canonical level unless --level)");
    gr->add_option("map", map_a, "Map file")->required();
    auto* gr_level = gr->add_option("--level", level, "Graph level");
    auto* cmp = app.add_subcommand("compare", "Combinatorial equivalence of two maps");
    cmp->add_option("a", map_a, "First map file")->required();
    cmp->add_option("b", map_b, "Second map file")->required();
    cmp->add_option("--level", level, "Graph level of the comparison (1)");
    auto* ap = app.add_subcommand("approx-hyperbolic", "Search for a certified hyperbolic parameter nearby");
    ap->add_option("map", map_a, "Normalized real map file")->required();
    ap->add_option("--rng-seed", rng_seed, "Sampling seed (1)");
    auto* ap_samples = ap->add_option("--samples", samples, "Samples per radius (desk 64)");
    ap->add_flag("--require-y", require_y, "Only accept maps with real free critical orbits");
    auto* tm = app.add_subcommand("tau-map", "tau over a grid of normalized parameters");
    tm->add_option("--degree", degree, "Degree 3 or 4");
    tm->add_option("--box", box, "lo,hi per parameter axis")->required();
    tm->add_option("--res", res, "Nodes per axis")->required();
    auto* rd = app.add_subcommand("render", "Basin image as binary PPM");
    rd->add_option("map", map_a, "Map file")->required();
    rd->add_option("--center", center, "Viewport center re,im (0,0)");
    rd->add_option("--width", width, "Viewport width (4)");
    rd->add_option("--size", size, "Pixels W H (256 256)")->expected(2)->delimiter(',');
    rd->add_flag("--shade", shade, "Shade by hitting time");
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> store{"newton_dyn"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (std::string& a : store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        Settings s = preset(profile);
        if (o_iter->count()) s.budget.max_iter = budget_iter;
        if (o_eps->count()) s.budget.eps_root = eps_root;
        if (o_cyc->count()) s.budget.eps_cycle = eps_cycle;
        if (o_margin->count()) s.budget.contraction_margin = margin;
        if (o_tube->count()) s.trace.tube_tol = tube_tol;
        if (o_step->count()) s.trace.step_max = step_max;
        if (o_nmax->count()) s.n_max = n_max;
        if (o_itin->count()) s.itinerary_length = itinerary;
        if (ap_samples->count()) s.samples_per_radius = samples;
        s.budget.validate();
        if (!(s.trace.tube_tol > 0) || !(s.trace.step_max > 0)) throw InputError("tracing tolerances must be positive");
        if (s.n_max < 0 || s.itinerary_length < 1) throw InputError("--n-max and --itinerary out of range");
        if (threads < 0) throw InputError("--threads must be non-negative");
        s.threads = threads;
        s.strict = strict;
        s.out = out_path;

        Outcome o;
        std::string name;
        if (info->parsed()) {
            name = "info";
            o = cmd_info(map_a);
        } else if (cls->parsed()) {
            name = "classify";
            o = cmd_classify(map_a, seed, s);
        } else if (kn->parsed()) {
            name = "kneading";
            o = cmd_kneading(map_a, len, s);
        } else if (cert->parsed()) {
            name = "certify";
            o = cmd_certify(map_a, s);
        } else if (gr->parsed()) {
            name = "graph";
            o = cmd_graph(map_a, gr_level->count() ? std::optional<int>(level) : std::nullopt, s);
        } else if (cmp->parsed()) {
            name = "compare";
            o = cmd_compare(map_a, map_b, level, s);
        } else if (ap->parsed()) {
            name = "approx-hyperbolic";
            o = cmd_approx(map_a, rng_seed, require_y, s);
        } else if (tm->parsed()) {
            name = "tau-map";
            o = cmd_tau_map(degree, box, res, s);
        } else {
            name = "render";
            o = cmd_render(map_a, center, width, size, shade, s);
        }

        Json report;
        report["command"] = name;
        report["tool_version"] = kToolVersion;
        report["inputs"] = o.inputs;
        report["config"] = config_json(s);
        report["results"] = o.results;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        // Execution details live here so reports from runs with different worker
        // counts agree outside this block.
        report["timings"] = {{"total_seconds", secs}, {"threads", resolve_threads(s.threads)}};
        const std::string text = dump_report(report);
        out << text;
        if (o.report_copy && !s.out.empty()) {
            std::ofstream os(s.out);
            if (!os || !(os << text)) throw IoError("cannot write report to " + s.out);
        }
        return (s.strict && o.negative) ? 3 : 0;
    } catch (const Error& e) {
        err << "newton_dyn: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "newton_dyn: internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace newton_dyn::cli
