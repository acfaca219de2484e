#pragma once

#include "disloc/geometry.hpp"

#include <array>
#include <iosfwd>
#include <vector>

namespace disloc {

enum class BoundaryTag { Dirichlet = 1, Traction = 2 };

struct BoundaryEdge {
    int a = -1, b = -1;  // oriented along the counterclockwise outer boundary
    int outer_edge = -1;
    BoundaryTag tag = BoundaryTag::Traction;
    bool measured = false;  // lies on the measurement arc
};

struct InterfaceEdge {
    int a = -1, b = -1;
    int interface = -1;
};

// One element edge on the fault, seen from both sides. Endpoints are ordered
// along the fault segment direction. At an open-fault tip the two sides share
// the node.
struct FaultEdge {
    int segment = -1;
    std::array<int, 2> plus{-1, -1};
    std::array<int, 2> minus{-1, -1};
    std::array<double, 2> s{0.0, 0.0};  // arc length from the segment start
};

struct FaultLocation {
    int segment = -1;
    double s = 0.0;
};

struct DuplicatePair {
    int plus = -1;
    int minus = -1;
    std::vector<FaultLocation> where;  // two entries at a fault vertex
};

struct MeshOptions {
    double min_angle_deg = 20.5;
    bool corner_grading = false;
    long max_points = 4'000'000;
};

struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> tris;  // counterclockwise
    std::vector<int> tri_layer;
    std::vector<FaultEdge> fault_edges;
    std::vector<DuplicatePair> pairs;
    std::vector<int> tips;  // single (shared) fault endpoint nodes
    std::vector<BoundaryEdge> boundary;
    std::vector<InterfaceEdge> interface_edges;
    double h = 0.0;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int tri_count() const { return static_cast<int>(tris.size()); }
    double tri_area(int t) const;
    double min_angle_deg() const;
    // Nodes that are minus-side copies.
    std::vector<char> minus_mask() const;
    void write(std::ostream& os) const;
};

Mesh generate_mesh(const LayeredDomain& domain, const Fault* fault, double h, const MeshOptions& opt = {});
Mesh refine(const Mesh& mesh);

// Uniform-grid bucket search for the triangle containing a point.
class TriangleLocator {
public:
    explicit TriangleLocator(const Mesh& mesh);
    // Returns the triangle index and barycentric coordinates; -1 if outside.
    int locate(const Vec2& x, std::array<double, 3>* bary = nullptr, double tol = 1e-12) const;
    // Restrict to triangles on one side of the fault (+1 plus, -1 minus, 0 any).
    int locate_side(const Vec2& x, int side, std::array<double, 3>* bary = nullptr, double tol = 1e-10) const;

private:
    const Mesh* mesh_;
    Vec2 lo_, hi_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> cells_;
    std::vector<int> tri_side_;
};

}  // namespace disloc
