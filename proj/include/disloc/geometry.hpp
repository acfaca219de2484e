#pragma once

#include "disloc/common.hpp"

#include <array>
#include <optional>
#include <vector>

namespace disloc {

using Polyline = std::vector<Vec2>;

struct Violation {
    std::string message;
    int i = -1;
    int j = -1;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

ValidationReport validate_lame(const LameParameters& p, int n);

// Contiguous stretch of the outer boundary: starts at fraction t_start of
// outer edge edges.front() and ends at fraction t_end of edges.back().
struct MeasurementArc {
    std::vector<int> edges;
    double t_start = 0.0;
    double t_end = 1.0;
};

struct LayeredDomain {
    Polyline outer;                    // counterclockwise; edge k runs outer[k] -> outer[k+1]
    std::vector<int> dirichlet_edges;  // indices of outer edges forming the clamped part
    MeasurementArc measurement;
    std::vector<Polyline> interfaces;  // each runs between two boundary points
    std::vector<LameParameters> layers;
    double omega = 0.0;

    int edge_count() const { return static_cast<int>(outer.size()); }
    Vec2 edge_a(int k) const { return outer[k]; }
    Vec2 edge_b(int k) const { return outer[(k + 1) % outer.size()]; }
    bool is_dirichlet_edge(int k) const;
    double diameter() const;
    double area() const;
    bool contains(const Vec2& x) const;  // open interior
    double boundary_distance(const Vec2& x) const;

    // Layer index of an interior point: the number of interfaces having the
    // point on their left. Layer 0 lies to the right of every interface.
    int layer_of(const Vec2& x) const;
    const LameParameters& params_at(const Vec2& x) const { return layers.at(layer_of(x)); }

    // Closed polygon bounding the region on the left of interface k.
    Polyline interface_left_region(int k) const;
    // Arc-length position along the outer boundary of a point lying on it.
    double boundary_position(const Vec2& x) const;
    double perimeter() const;
    Vec2 boundary_point(double pos) const;
    double measurement_start() const;
    double measurement_length() const;
};

ValidationReport validate_partition(const LayeredDomain& d);

struct Fault {
    Polyline vertices;
    bool closed = false;

    int segment_count() const {
        const int n = static_cast<int>(vertices.size());
        return closed ? n : n - 1;
    }
    Vec2 seg_a(int k) const { return vertices[k]; }
    Vec2 seg_b(int k) const { return vertices[(k + 1) % vertices.size()]; }
    double seg_length(int k) const { return (seg_b(k) - seg_a(k)).norm(); }
    Vec2 seg_tangent(int k) const { return (seg_b(k) - seg_a(k)).normalized(); }
    double length() const;
    // Unit normal of segment k pointing away from the enclosed side (toward the
    // outer boundary). Open faults are closed by their chord to define that side.
    Vec2 normal(int k) const;
    // +1 if the (chord-)closed polygon is counterclockwise, -1 otherwise.
    int orientation() const;
    // Point-in-polygon on the (chord-)closed polygon.
    bool encloses(const Vec2& x) const;
};

struct Corner {
    int vertex = -1;
    Vec2 point;
    double theta = 0.0;      // opening angle in (0, pi)
    double dir_min = 0.0;    // absolute direction of the theta_min edge
    int seg_min = -1;        // fault segment along theta_min (the "minus" edge)
    int seg_max = -1;        // fault segment along theta_max (the "plus" edge)
    int layer = -1;
    bool inside_minus = true;  // sector lies on the enclosed side
};

std::vector<Corner> detect_corners(const Fault& fault, const LayeredDomain& domain,
                                   double collinear_tol = 1e-9);

// Cubic in arc length s measured from the segment's start vertex.
struct SegmentPoly {
    std::array<Vec2, 4> c{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
    Vec2 eval(double s) const { return c[0] + s * (c[1] + s * (c[2] + s * c[3])); }
    Vec2 deriv(double s) const { return c[1] + s * (2.0 * c[2] + s * 3.0 * c[3]); }
    static SegmentPoly constant(const Vec2& v) {
        SegmentPoly p;
        p.c[0] = v;
        return p;
    }
};

struct CornerRegularity {
    double alpha = 1.0;
    double beta = 1.0;
};

struct JumpData {
    std::vector<SegmentPoly> f;
    std::vector<SegmentPoly> g;
    std::vector<CornerRegularity> regularity;

    static JumpData constant(int segments, const Vec2& f, const Vec2& g);
};

Mat2 theta_matrix(double theta);

struct OneSided {
    Vec2 value;
    Vec2 derivative;  // derivative along the edge, pointing away from the corner
};
// One-sided limits of a per-segment polynomial at a corner.
OneSided one_sided(const std::vector<SegmentPoly>& p, const Fault& fault, const Corner& c, bool plus_edge);

struct CornerAdmissibility {
    bool assumption_I = false;
    bool assumption_II = false;
};
struct AdmissibilityReport {
    std::vector<CornerAdmissibility> corners;
    bool overall = false;
};

AdmissibilityReport check_admissibility(const Fault& fault, const JumpData& jumps,
                                        const LayeredDomain& domain, double tol = 1e-12);

struct WeightedNormResult {
    double value = 0.0;
    bool divergent = false;
    std::vector<double> estimates;  // squared-norm estimates per refinement level
};

// Quadrature estimate of || rho^{-1/2} f ||_{L2(Sigma)} for an open fault,
// rho = min(distance to the nearest endpoint, L/4).
WeightedNormResult weighted_jump_norm(const std::vector<SegmentPoly>& f, const Fault& fault);

// Segment-on-segment helpers shared with the mesher.
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d, double tol = 0.0);
bool point_in_polygon(const Vec2& p, const Polyline& poly);
double signed_area(const Polyline& poly);

// Validates the fault against the domain: simple, strictly inside, corners
// interior to a layer. Throws ValidationError.
void validate_fault(const Fault& fault, const LayeredDomain& domain);

}  // namespace disloc
