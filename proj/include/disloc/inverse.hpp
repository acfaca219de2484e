#pragma once

#include "disloc/forward.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace disloc {

enum class FaultFamily { OpenPolyline, ClosedConvex };

// Per-segment constant jump vectors. For open faults with taper_tips the first
// and last segments ramp linearly to zero at the tips, which keeps the
// rho^{-1/2}-weighted norm finite.
struct JumpModel {
    std::vector<Vec2> f;  // one per segment; a single entry is broadcast
    std::vector<Vec2> g;
    bool taper_tips = true;

    JumpData jump_data(const Fault& fault) const;
};

struct FaultParameterization {
    FaultFamily family = FaultFamily::OpenPolyline;
    int vertices = 3;
    JumpModel jumps;
    bool unknown_f = false;  // append per-segment f (2 entries each) to the parameter vector

    int geometry_size() const { return 2 * vertices; }
    int segments() const { return family == FaultFamily::ClosedConvex ? vertices : vertices - 1; }
    int size() const { return geometry_size() + (unknown_f ? 2 * segments() : 0); }

    Fault decode(const Eigen::VectorXd& p) const;
    JumpData decode_jumps(const Eigen::VectorXd& p) const;
    Eigen::VectorXd encode(const Fault& fault) const;
    // validate_fault plus convexity for the closed family; throws ValidationError
    void validate(const Eigen::VectorXd& p, const LayeredDomain& domain) const;
    bool is_valid(const Eigen::VectorXd& p, const LayeredDomain& domain) const;
};

bool is_convex(const Polyline& poly);

// L2 distance over the measurement arc, trapezoidal in arc length.
double misfit(const BoundaryMeasurement& a, const BoundaryMeasurement& b);

struct ForwardMapOptions {
    double h = 0.04;
    int n_samples = 201;
    ForwardOptions forward;
    // Reuse one mesh and move its nodes with the fault (harmonic extension)
    // so that the map is smooth in the vertex parameters.
    bool morph = true;
    double morph_min_angle_deg = 8.0;
};

// Parameters -> boundary measurement. Thread safe for concurrent calls.
class ForwardMap {
public:
    ForwardMap(LayeredDomain domain, FaultParameterization family, ForwardMapOptions opt = {});

    BoundaryMeasurement operator()(const Eigen::VectorXd& p) const;
    // Re-anchors the morphing mesh at p. Called by the optimizer between iterations.
    void anchor(const Eigen::VectorXd& p);
    // True if the anchor mesh can be morphed to p with acceptable quality.
    bool morphable(const Eigen::VectorXd& p) const;
    long solves() const;
    const LayeredDomain& domain() const { return domain_; }
    const FaultParameterization& family() const { return family_; }
    const ForwardMapOptions& options() const { return opt_; }

private:
    struct Anchor {
        Eigen::VectorXd params;
        std::shared_ptr<const Mesh> mesh;
        Eigen::MatrixXd weights;  // node x fault-vertex harmonic weights
    };
    std::shared_ptr<const Mesh> mesh_for(const Eigen::VectorXd& p) const;
    std::shared_ptr<const Mesh> morphed(const Anchor& a, const Eigen::VectorXd& p) const;

    LayeredDomain domain_;
    FaultParameterization family_;
    ForwardMapOptions opt_;
    std::shared_ptr<const Anchor> anchor_;
    mutable std::mutex mu_;
    mutable long solves_ = 0;
};

// Harmonic extension weights: node i moves by sum_k W(i, k) * (displacement of vertex k).
Eigen::MatrixXd morph_weights(const Mesh& mesh, const Fault& fault);

struct ExperimentConfig2D {
    LayeredDomain domain;
    Fault fault;
    JumpData jumps;
};

struct DistinguishabilityResult {
    bool applicable = true;  // false for identical configurations
    std::string note;
    double misfit = 0.0;
    double convergence_error = 0.0;  // misfit between h and h/2 solves of configuration A
    double floor = 0.0;              // floor_factor * convergence_error
    bool threshold_pass = false;
    bool admissible_a = false, admissible_b = false;
};

DistinguishabilityResult distinguishability_test(const ExperimentConfig2D& a, const ExperimentConfig2D& b, double h,
                                                 int n_samples = 301, double floor_factor = 10.0,
                                                 const ForwardOptions& fo = {});

struct ReconstructOptions {
    int max_solves = 200;
    double fd_step_rel = 1e-4;       // times the domain diameter
    double grad_tol_rel = 1e-8;      // times the initial gradient norm
    double misfit_abs_tol = 1e-12;   // times the measurement norm
    double stall_rel = 1e-9;
    int max_backtracks = 8;
    int threads = 1;
};

struct ReconstructIteration {
    int iteration = 0;
    double misfit = 0.0;
    double gradient_norm = 0.0;
    double step_length = 0.0;
    double damping = 0.0;
    long solves = 0;
    bool reanchored = false;
};

struct ReconstructResult {
    Eigen::VectorXd best;
    double best_misfit = 0.0;
    std::vector<ReconstructIteration> history;
    long solves = 0;
    bool converged = false;
    std::string stop_reason;
};

ReconstructResult reconstruct(const BoundaryMeasurement& measured, ForwardMap& map, const Eigen::VectorXd& init,
                              const ReconstructOptions& opt = {});

// Synthetic data for a planted parameter vector. With avoid_inverse_crime the
// data mesh is twice as fine as the inversion mesh and is not morphed.
BoundaryMeasurement synthesize(const ForwardMap& map, const Eigen::VectorXd& truth, bool avoid_inverse_crime = true);

// Initial guess: each vertex coordinate perturbed uniformly by up to
// rel_noise times the domain's bounding-box size; redrawn until valid.
Eigen::VectorXd perturbed_init(const FaultParameterization& fam, const LayeredDomain& domain,
                               const Eigen::VectorXd& truth, double rel_noise, std::uint64_t seed);

double max_vertex_error(const FaultParameterization& fam, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Jump-difference relations around a closed polygon with piecewise-constant data.
enum class RelationMatrix { Rotation, Theta };

// g_{k+1} = M(theta_k) g_k across vertex k + 1 (between segments k and k + 1),
// theta_k the interior angle there. Rotation: M = -R(theta); Theta: the reflection.
Mat2 relation_matrix(double theta, RelationMatrix kind);

struct JumpRelationReport {
    double max_f_violation = 0.0;
    double max_g_violation = 0.0;
    std::vector<double> f_violation, g_violation;  // per vertex
    int fixed_space_dim = 0;  // dim ker(prod M - I)
    Mat2 product = Mat2::Identity();
};

JumpRelationReport jump_relation_check(const Fault& polygon, const std::vector<Vec2>& f1, const std::vector<Vec2>& f2,
                                       const std::vector<Vec2>& g1, const std::vector<Vec2>& g2,
                                       RelationMatrix kind = RelationMatrix::Rotation);

// Interior angle at each vertex of a closed polygon.
std::vector<double> interior_angles(const Fault& polygon);

// g differences generated from g0 on segment 0 by the relation.
std::vector<Vec2> generate_consistent_g(const Fault& polygon, const Vec2& g0,
                                        RelationMatrix kind = RelationMatrix::Rotation);

}  // namespace disloc
