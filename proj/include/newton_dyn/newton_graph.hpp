#pragma once

#include <memory>
#include <string>
#include <vector>

#include "newton_dyn/bottcher.hpp"
#include "newton_dyn/error.hpp"
#include "newton_dyn/kneading.hpp"
#include "newton_dyn/orbit.hpp"

namespace newton_dyn {

struct TraceConfig {
    double step_max = 0.05;   // chordal length of one polyline step
    double tube_tol = 1e-6;
    double vertex_tol = 1e-6;
    double branch_tol = 1e-4;
    int chart_samples = 256;
    int max_segments = 400;
    int max_refine = 40;
};

struct Ray {
    int basin_index = -1;
    int angle_num = 0;  // angle = angle_num / angle_den turns
    int angle_den = 1;
    std::vector<SpherePoint> points;  // from the root center to the landing point
    SpherePoint landing;
};

enum class VertexKind { RootCenter, Infinity, PreVertex };

struct GraphVertex {
    VertexKind kind = VertexKind::PreVertex;
    int root_index = -1;  // RootCenter
    int depth = 0;        // level at which the vertex first appears
    SpherePoint position;
    bool pole = false;     // finite preimage of infinity
    int local_degree = 1;  // local degree of f at the vertex
    int image = -1;        // vertex containing f(position), same graph
};

struct GraphEdge {
    int v0 = -1;
    int v1 = -1;
    std::vector<SpherePoint> points;  // first = v0 position, last = v1 position
    int image = -1;                   // edge containing f(edge), same graph
};

// Darts: 2*e runs along edge e from v0 to v1, 2*e+1 runs back.
inline int dart_edge(int dart) { return dart / 2; }
inline int dart_twin(int dart) { return dart ^ 1; }

// Runs of consecutive edge segments with a bounding box on the Riemann
// sphere, used to prune distance queries.
struct SegmentBlock {
    int edge = 0;
    int first = 0;  // first segment index
    int count = 0;
    double lo[3] = {0, 0, 0};
    double hi[3] = {0, 0, 0};
    double pad = 0.0;  // longest segment chord in the block
};

struct NewtonGraphApprox {
    int level = 0;
    std::vector<GraphVertex> vertices;
    std::vector<GraphEdge> edges;
    std::vector<std::vector<int>> rotation;  // darts leaving each vertex, counterclockwise
    // Spatial index over the edges; rebuild with build_index() after editing edges.
    std::vector<SegmentBlock> blocks;

    int infinity_vertex() const;
    int dart_source(int dart) const;
    int dart_target(int dart) const;
    // Polyline of a dart in its direction of travel.
    std::vector<SpherePoint> dart_points(int dart) const;
    // Index of a vertex within `tol` (chordal) of z, or -1.
    int find_vertex(const SpherePoint& z, double tol) const;
    // Chordal distance from z to the union of edge polylines.
    double distance(const SpherePoint& z) const;
};

Ray trace_ray(const NewtonMap& f, const BottcherChart& chart, int angle_num, int angle_den,
              const TraceConfig& cfg = {});

// Fixed internal rays of every immediate basin, joined at infinity.
NewtonGraphApprox trace_delta0(const NewtonMap& f, const TraceConfig& cfg = {});

// Component of f^{-1}(g) containing infinity.
NewtonGraphApprox pull_back(const NewtonMap& f, const NewtonGraphApprox& g, const TraceConfig& cfg = {});

// Recomputes the counterclockwise dart order at every vertex.
void build_rotation(NewtonGraphApprox& g);
void build_index(NewtonGraphApprox& g);

struct Face {
    int id = 0;
    std::vector<int> boundary;  // darts, face on the left
    SpherePoint representative;
};

inline constexpr int kOnGraph = -1;

struct FaceDecomposition {
    std::vector<Face> faces;
    int anchor = 0;  // face containing the chart base point used for winding numbers
};

// Throws EmbeddingInconsistent when V - E + F != 2.
FaceDecomposition faces(const NewtonGraphApprox& g, double tube_tol = 1e-6);
int point_locate(const NewtonGraphApprox& g, const FaceDecomposition& fd, const SpherePoint& z,
                 double tube_tol = 1e-6);

struct Itinerary {
    std::vector<int> faces;  // kOnGraph marks points within tube_tol of the graph
    int length = 0;
};

Itinerary itinerary(const NewtonMap& f, const SpherePoint& z, const NewtonGraphApprox& g,
                    const FaceDecomposition& fd, int len, double tube_tol = 1e-6);

struct CanonicalLevel {
    int level = 0;
    NewtonGraphApprox graph;
    // Targets that must be vertices: all poles plus critical points that
    // land on a fixed point. Landing is judged numerically.
    std::vector<SpherePoint> targets;
};

class LevelNotReached : public Error {
public:
    LevelNotReached(int n_max, std::shared_ptr<const CanonicalLevel> partial);
    int n_max() const { return n_max_; }
    const CanonicalLevel& partial() const { return *partial_; }

private:
    int n_max_;
    std::shared_ptr<const CanonicalLevel> partial_;
};

// Critical points whose orbit lands exactly on a fixed point, judged with
// tolerance eps_eq after a jump from at least 1e-3 away.
std::vector<SpherePoint> critical_points_landing_on_fixed(const NewtonMap& f, double eps_eq = kEpsEq, int max_steps = 64);

CanonicalLevel canonical_level(const NewtonMap& f, int n_max, const TraceConfig& cfg = {});

// Canonical encoding of the labeled plane graph with its edge dynamics,
// computed from the lexicographically least breadth-first walk starting at
// infinity. face_ids maps face index -> canonical face number.
struct GraphCode {
    std::vector<long> code;
    std::vector<int> face_ids;
};
GraphCode canonical_code(const NewtonGraphApprox& g, const FaceDecomposition& fd);

struct CombConfig {
    TraceConfig trace;
    OrbitBudget budget;
    int itinerary_length = 12;
};

TriState comb_equivalent(const NewtonMap& f, const NewtonMap& g, int level, const CombConfig& cfg = {});

// Line-oriented export: "V id label x y", "E id v1 v2 n pts...", "F id darts...".
std::string export_graph(const NewtonGraphApprox& g, const FaceDecomposition& fd);

}  // namespace newton_dyn
