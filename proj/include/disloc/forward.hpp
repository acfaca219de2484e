#pragma once

#include "disloc/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>

namespace disloc {

// Jump data as functions of (fault segment, arc length from its start).
struct FaultJumpFunctions {
    std::function<CVec2(int, double)> f;  // [u] = u+ - u-
    std::function<CVec2(int, double)> g;  // [T u] = T u+ - T u-

    static FaultJumpFunctions from(const JumpData& j);
    static FaultJumpFunctions zero() { return {}; }
};

// Optional inhomogeneous boundary data; empty functions mean zero.
struct BoundaryConditions {
    std::function<CVec2(const Vec2&)> dirichlet;
    std::function<CVec2(const Vec2&, const Vec2&)> traction;  // (x, outward normal)
};

struct LinearSystem {
    int ndof = 0;
    double omega2 = 0.0;
    Eigen::SparseMatrix<double> K, M, A;  // A = K - omega^2 M
    Eigen::VectorXcd rhs;
    // Full-dof bookkeeping: a dof is free, tied to another dof, or fixed.
    std::vector<int> tied_to;     // -1 unless this plus-copy dof follows a minus-copy dof
    std::vector<char> fixed;      // Dirichlet
    Eigen::VectorXcd lift;        // jump value at tied dofs, Dirichlet value at fixed dofs
};

LinearSystem assemble(const Mesh& mesh, const LayeredDomain& domain);
void apply_jumps(LinearSystem& sys, const Mesh& mesh, const FaultJumpFunctions& jumps);
void apply_boundary(LinearSystem& sys, const Mesh& mesh, const BoundaryConditions& bc);

struct SolveOptions {
    bool check_resonance = true;
    double resonance_gap = 1e-8;
    double max_residual = 1e-10;
};

struct SolveStats {
    double residual = 0.0;        // relative, reduced system
    double nearest_eigen_gap = -1.0;  // |lambda - omega^2| / lambda for the nearest pencil eigenvalue
    double condition_estimate = -1.0;
    bool definite = true;
    bool used_lu = false;
    std::vector<std::string> warnings;
};

Eigen::VectorXcd solve(const LinearSystem& sys, const SolveOptions& opt = {}, SolveStats* stats = nullptr);

class DisplacementField {
public:
    DisplacementField(std::shared_ptr<const Mesh> mesh, Eigen::VectorXcd u);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    const Eigen::VectorXcd& values() const { return u_; }
    CVec2 nodal(int n) const { return CVec2(u_(2 * n), u_(2 * n + 1)); }

    // side: +1 / -1 selects the fault side for points on the fault, 0 any.
    std::optional<CVec2> eval(const Vec2& x, int side = 0) const;
    CVec2 eval_in(int tri, const std::array<double, 3>& bary) const;
    CMat2 gradient(int tri) const;
    int locate(const Vec2& x, int side = 0, std::array<double, 3>* bary = nullptr) const {
        return locator_.locate_side(x, side, bary, 1e-9);
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    Eigen::VectorXcd u_;
    TriangleLocator locator_;
};

// Largest |(u+ - u-) - f| over duplicated pairs.
double max_jump_error(const DisplacementField& u, const FaultJumpFunctions& jumps);
// Jump value imposed at a duplicated pair (average of one-sided values at fault vertices).
CVec2 pair_jump(const DuplicatePair& p, const FaultJumpFunctions& jumps);

// L2 norm of u - exact, exact evaluated per triangle (so piecewise fields can
// pick their branch by triangle).
double l2_error(const DisplacementField& u, const std::function<CVec2(const Vec2&, int)>& exact);
double l2_norm(const DisplacementField& u);

struct BoundaryMeasurement {
    std::vector<double> s;
    std::vector<CVec2> u;
    void write_csv(std::ostream& os) const;
};

BoundaryMeasurement measure(const DisplacementField& u, const LayeredDomain& domain, int n_samples);

struct ForwardOptions {
    BoundaryConditions bc;
    MeshOptions mesh;
    SolveOptions solve;
};

struct ForwardResult {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<DisplacementField> field;
    SolveStats stats;
};

ForwardResult solve_on_mesh(std::shared_ptr<const Mesh> mesh, const LayeredDomain& domain,
                            const FaultJumpFunctions& jumps, const ForwardOptions& opt = {});
ForwardResult solve_forward(const LayeredDomain& domain, const Fault* fault, const FaultJumpFunctions& jumps,
                            double h, const ForwardOptions& opt = {});

// Discrete Betti pairing over the traction part of the outer boundary:
// integral of (T u . v - u . T v) with tractions from element gradients.
Complex boundary_betti(const DisplacementField& u, const DisplacementField& v, const LayeredDomain& domain);

}  // namespace disloc
