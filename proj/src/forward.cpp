#include "disloc/forward.hpp"

#include "disloc/quadrature.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

#include <map>
#include <ostream>

namespace disloc {

FaultJumpFunctions FaultJumpFunctions::from(const JumpData& j) {
    FaultJumpFunctions out;
    auto fs = j.f;
    auto gs = j.g;
    if (!fs.empty())
        out.f = [fs](int k, double s) -> CVec2 {
            if (k < 0 || k >= static_cast<int>(fs.size())) throw ValidationError("jump data missing on a fault segment");
            return fs[k].eval(s).cast<Complex>();
        };
    if (!gs.empty())
        out.g = [gs](int k, double s) -> CVec2 {
            if (k < 0 || k >= static_cast<int>(gs.size())) throw ValidationError("jump data missing on a fault segment");
            return gs[k].eval(s).cast<Complex>();
        };
    return out;
}

namespace {

struct P1 {
    std::array<Vec2, 3> grad;  // gradients of the barycentric coordinates
    double area;
};

P1 p1_element(const Mesh& m, int t) {
    const auto& k = m.tris[t];
    const Vec2 &a = m.nodes[k[0]], &b = m.nodes[k[1]], &c = m.nodes[k[2]];
    const double det = cross2(b - a, c - a);
    P1 e;
    e.area = 0.5 * det;
    e.grad[0] = Vec2(b.y() - c.y(), c.x() - b.x()) / det;
    e.grad[1] = Vec2(c.y() - a.y(), a.x() - c.x()) / det;
    e.grad[2] = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
    return e;
}

Vec2 outward_normal(const Vec2& a, const Vec2& b) {
    const Vec2 t = (b - a).normalized();
    return Vec2(t.y(), -t.x());  // outer boundary is counterclockwise
}

}  // namespace

LinearSystem assemble(const Mesh& mesh, const LayeredDomain& domain) {
    for (std::size_t l = 0; l < domain.layers.size(); ++l) {
        const auto r = validate_lame(domain.layers[l], 2);
        if (!r.ok()) throw ValidationError("layer " + std::to_string(l) + ": " + r.summary(), "/layers/" + std::to_string(l));
    }
    LinearSystem sys;
    sys.ndof = 2 * mesh.node_count();
    std::vector<Eigen::Triplet<double>> kt, mt;
    kt.reserve(36 * mesh.tris.size());
    mt.reserve(12 * mesh.tris.size());
    for (int t = 0; t < mesh.tri_count(); ++t) {
        const int layer = mesh.tri_layer[t];
        if (layer < 0 || layer >= static_cast<int>(domain.layers.size()))
            throw ValidationError("mesh layer tag out of range");
        const auto& p = domain.layers[layer];
        const P1 e = p1_element(mesh, t);
        const auto& k = mesh.tris[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const Vec2 &gi = e.grad[i], &gj = e.grad[j];
                const double gg = gi.dot(gj);
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        // lambda div u div v + 2 mu eps(u):eps(v)
                        double v = p.lambda * gi(a) * gj(b) + p.mu * gi(b) * gj(a);
                        if (a == b) v += p.mu * gg;
                        kt.emplace_back(2 * k[i] + a, 2 * k[j] + b, e.area * v);
                    }
                const double mv = e.area / 12.0 * (i == j ? 2.0 : 1.0);
                for (int a = 0; a < 2; ++a) mt.emplace_back(2 * k[i] + a, 2 * k[j] + a, mv);
            }
    }
    sys.K.resize(sys.ndof, sys.ndof);
    sys.M.resize(sys.ndof, sys.ndof);
    sys.K.setFromTriplets(kt.begin(), kt.end());
    sys.M.setFromTriplets(mt.begin(), mt.end());
    sys.omega2 = domain.omega * domain.omega;
    sys.A = sys.K - sys.omega2 * sys.M;
    sys.rhs = Eigen::VectorXcd::Zero(sys.ndof);
    sys.tied_to.assign(sys.ndof, -1);
    sys.fixed.assign(sys.ndof, 0);
    sys.lift = Eigen::VectorXcd::Zero(sys.ndof);
    return sys;
}

CVec2 pair_jump(const DuplicatePair& p, const FaultJumpFunctions& jumps) {
    if (!jumps.f) return CVec2::Zero();
    CVec2 acc = CVec2::Zero();
    for (const auto& w : p.where) acc += jumps.f(w.segment, w.s);
    return acc / static_cast<double>(p.where.size());
}

void apply_jumps(LinearSystem& sys, const Mesh& mesh, const FaultJumpFunctions& jumps) {
    for (const auto& p : mesh.pairs) {
        const CVec2 f = pair_jump(p, jumps);
        for (int a = 0; a < 2; ++a) {
            sys.tied_to[2 * p.plus + a] = 2 * p.minus + a;
            sys.lift(2 * p.plus + a) = f(a);
        }
    }
    if (!jumps.g) return;
    const GaussRule q = gauss_legendre(4, 0.0, 1.0);
    for (const auto& fe : mesh.fault_edges) {
        const double len = fe.s[1] - fe.s[0];
        for (std::size_t i = 0; i < q.x.size(); ++i) {
            const double x = q.x[i];
            const CVec2 g = jumps.g(fe.segment, fe.s[0] + x * len);
            const double phi[2] = {1.0 - x, x};
            for (int k = 0; k < 2; ++k)
                for (int a = 0; a < 2; ++a) sys.rhs(2 * fe.minus[k] + a) -= q.w[i] * len * phi[k] * g(a);
        }
    }
}

void apply_boundary(LinearSystem& sys, const Mesh& mesh, const BoundaryConditions& bc) {
    const GaussRule q = gauss_legendre(4, 0.0, 1.0);
    for (const auto& be : mesh.boundary) {
        if (be.tag == BoundaryTag::Dirichlet) {
            for (int n : {be.a, be.b}) {
                const CVec2 v = bc.dirichlet ? bc.dirichlet(mesh.nodes[n]) : CVec2::Zero();
                for (int a = 0; a < 2; ++a) {
                    sys.fixed[2 * n + a] = 1;
                    sys.lift(2 * n + a) = v(a);
                }
            }
        } else if (bc.traction) {
            const Vec2 A = mesh.nodes[be.a], B = mesh.nodes[be.b];
            const double len = (B - A).norm();
            const Vec2 nu = outward_normal(A, B);
            for (std::size_t i = 0; i < q.x.size(); ++i) {
                const double x = q.x[i];
                const CVec2 t = bc.traction(A + x * (B - A), nu);
                const double phi[2] = {1.0 - x, x};
                const int nodes[2] = {be.a, be.b};
                for (int k = 0; k < 2; ++k)
                    for (int a = 0; a < 2; ++a) sys.rhs(2 * nodes[k] + a) += q.w[i] * len * phi[k] * t(a);
            }
        }
    }
}

Eigen::VectorXcd solve(const LinearSystem& sys, const SolveOptions& opt, SolveStats* stats) {
    SolveStats local;
    SolveStats& st = stats ? *stats : local;
    const int n = sys.ndof;
    std::vector<int> red(n, -1);
    int nred = 0;
    for (int i = 0; i < n; ++i)
        if (!sys.fixed[i] && sys.tied_to[i] < 0) red[i] = nred++;
    std::vector<Eigen::Triplet<double>> tt;
    for (int i = 0; i < n; ++i) {
        if (sys.fixed[i]) continue;
        const int r = sys.tied_to[i] >= 0 ? red[sys.tied_to[i]] : red[i];
        if (r < 0) throw NumericalError("constraint chain: tied dof does not map to a free dof");
        tt.emplace_back(i, r, 1.0);
    }
    Eigen::SparseMatrix<double> T(n, nred);
    T.setFromTriplets(tt.begin(), tt.end());
    const Eigen::SparseMatrix<double> Ar = T.transpose() * sys.A * T;
    const Eigen::VectorXcd b = T.transpose() * (sys.rhs - sys.A.cast<Complex>() * sys.lift);

    Eigen::MatrixXd B(nred, 2);
    B.col(0) = b.real();
    B.col(1) = b.imag();
    Eigen::MatrixXd Y;
    auto residual = [&](const Eigen::MatrixXd& y) {
        const double nb = B.norm();
        return nb > 0 ? (Ar * y - B).norm() / nb : (Ar * y).norm();
    };

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(Ar);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        st.definite = (ldlt.vectorD().array() > 0.0).all();
        Y = ldlt.solve(B);
        st.residual = residual(Y);
        ok = std::isfinite(st.residual) && st.residual <= opt.max_residual;
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    if (!ok) {
        lu.compute(Ar);
        if (lu.info() != Eigen::Success) throw NumericalError("sparse factorization failed (singular system)");
        Y = lu.solve(B);
        st.residual = residual(Y);
        st.used_lu = true;
        if (!(st.residual <= opt.max_residual))
            throw NumericalError("linear solve did not reach residual 1e-10 (got " + std::to_string(st.residual) + ")");
    }
    if (!st.definite) st.warnings.push_back("reduced operator K - omega^2 M is indefinite");

    auto apply_inv = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return st.used_lu ? Eigen::VectorXd(lu.solve(x)) : Eigen::VectorXd(ldlt.solve(x));
    };
    if (opt.check_resonance && sys.omega2 > 0.0 && nred > 0) {
        // Inverse iteration on the pencil (K - omega^2 M, M): the dominant
        // eigenvalue of (K - omega^2 M)^{-1} M is 1 / (lambda - omega^2).
        const Eigen::SparseMatrix<double> Mr = T.transpose() * sys.M * T;
        Eigen::VectorXd x = Eigen::VectorXd::Ones(nred).normalized();
        double mu = 0.0;
        for (int it = 0; it < 15; ++it) {
            const Eigen::VectorXd y = apply_inv(Mr * x);
            mu = x.dot(Mr * y) / x.dot(Mr * x);
            x = y.normalized();
        }
        const double lam = sys.omega2 + 1.0 / mu;
        st.nearest_eigen_gap = std::abs(1.0 / mu) / std::max(std::abs(lam), 1e-300);
        if (st.nearest_eigen_gap < opt.resonance_gap) {
            Eigen::VectorXd v = Eigen::VectorXd::Ones(nred).normalized();
            double lmin = 0.0, lmax = 0.0;
            for (int it = 0; it < 12; ++it) {
                const Eigen::VectorXd y = apply_inv(v);
                lmin = 1.0 / y.norm();
                v = y.normalized();
            }
            v = Eigen::VectorXd::Ones(nred).normalized();
            for (int it = 0; it < 12; ++it) {
                const Eigen::VectorXd y = Ar * v;
                lmax = y.norm();
                v = y.normalized();
            }
            st.condition_estimate = lmax / lmin;
            st.warnings.push_back("omega^2 within " + std::to_string(st.nearest_eigen_gap) +
                                  " (relative) of a discrete eigenvalue; condition estimate " +
                                  std::to_string(st.condition_estimate));
        }
    }
    for (const auto& w : st.warnings) spdlog::warn("{}", w);

    const Eigen::VectorXcd y = Y.col(0).cast<Complex>() + kI * Y.col(1).cast<Complex>();
    return T.cast<Complex>() * y + sys.lift;
}

DisplacementField::DisplacementField(std::shared_ptr<const Mesh> mesh, Eigen::VectorXcd u)
    : mesh_(std::move(mesh)), u_(std::move(u)), locator_(*mesh_) {
    if (u_.size() != 2 * mesh_->node_count()) throw ValidationError("field size does not match the mesh");
}

CVec2 DisplacementField::eval_in(int tri, const std::array<double, 3>& l) const {
    const auto& k = mesh_->tris[tri];
    return l[0] * nodal(k[0]) + l[1] * nodal(k[1]) + l[2] * nodal(k[2]);
}

std::optional<CVec2> DisplacementField::eval(const Vec2& x, int side) const {
    std::array<double, 3> l{};
    const int t = locate(x, side, &l);
    if (t < 0) return std::nullopt;
    return eval_in(t, l);
}

CMat2 DisplacementField::gradient(int tri) const {
    const P1 e = p1_element(*mesh_, tri);
    CMat2 g = CMat2::Zero();
    for (int i = 0; i < 3; ++i) {
        const CVec2 u = nodal(mesh_->tris[tri][i]);
        for (int a = 0; a < 2; ++a)
            for (int j = 0; j < 2; ++j) g(a, j) += u(a) * e.grad[i](j);
    }
    return g;
}

double max_jump_error(const DisplacementField& u, const FaultJumpFunctions& jumps) {
    double err = 0.0;
    for (const auto& p : u.mesh().pairs)
        err = std::max(err, (u.nodal(p.plus) - u.nodal(p.minus) - pair_jump(p, jumps)).norm());
    return err;
}

namespace {
// Degree-5 seven-point rule on the reference triangle (barycentric, weights sum to 1).
struct TriRule {
    std::array<std::array<double, 3>, 7> l;
    std::array<double, 7> w;
};
const TriRule& tri7() {
    static const TriRule r = [] {
        TriRule q;
        const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
        q.l = {{{1.0 / 3, 1.0 / 3, 1.0 / 3}, {a1, b1, b1}, {b1, a1, b1}, {b1, b1, a1}, {a2, b2, b2}, {b2, a2, b2}, {b2, b2, a2}}};
        q.w = {0.225, w1, w1, w1, w2, w2, w2};
        return q;
    }();
    return r;
}
}  // namespace

double l2_error(const DisplacementField& u, const std::function<CVec2(const Vec2&, int)>& exact) {
    const Mesh& m = u.mesh();
    const TriRule& q = tri7();
    double acc = 0.0;
    for (int t = 0; t < m.tri_count(); ++t) {
        const auto& k = m.tris[t];
        const double A = m.tri_area(t);
        for (int i = 0; i < 7; ++i) {
            const Vec2 x = q.l[i][0] * m.nodes[k[0]] + q.l[i][1] * m.nodes[k[1]] + q.l[i][2] * m.nodes[k[2]];
            const CVec2 e = u.eval_in(t, q.l[i]) - (exact ? exact(x, t) : CVec2::Zero());
            acc += A * q.w[i] * e.squaredNorm();
        }
    }
    return std::sqrt(acc);
}

double l2_norm(const DisplacementField& u) { return l2_error(u, nullptr); }

void BoundaryMeasurement::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "s,u1_re,u1_im,u2_re,u2_im\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << s[i] << "," << u[i](0).real() << "," << u[i](0).imag() << "," << u[i](1).real() << "," << u[i](1).imag()
           << "\n";
}

BoundaryMeasurement measure(const DisplacementField& u, const LayeredDomain& domain, int n_samples) {
    if (domain.measurement.edges.empty()) throw ValidationError("measurement arc is empty", "/measurement");
    if (n_samples < 2) throw ValidationError("at least two measurement samples required", "/n_samples");
    BoundaryMeasurement bm;
    const double L = domain.measurement_length();
    const double s0 = domain.measurement_start();
    const double P = domain.perimeter();
    for (int k = 0; k < n_samples; ++k) {
        const double s = L * k / (n_samples - 1);
        const Vec2 x = domain.boundary_point(std::fmod(s0 + s, P));
        auto v = u.eval(x);
        if (!v) throw NumericalError("measurement point outside the mesh");
        bm.s.push_back(s);
        bm.u.push_back(*v);
    }
    return bm;
}

ForwardResult solve_on_mesh(std::shared_ptr<const Mesh> mesh, const LayeredDomain& domain,
                            const FaultJumpFunctions& jumps, const ForwardOptions& opt) {
    LinearSystem sys = assemble(*mesh, domain);
    apply_jumps(sys, *mesh, jumps);
    apply_boundary(sys, *mesh, opt.bc);
    ForwardResult r;
    r.mesh = mesh;
    Eigen::VectorXcd u = solve(sys, opt.solve, &r.stats);
    r.field = std::make_shared<DisplacementField>(mesh, std::move(u));
    return r;
}

ForwardResult solve_forward(const LayeredDomain& domain, const Fault* fault, const FaultJumpFunctions& jumps,
                            double h, const ForwardOptions& opt) {
    auto mesh = std::make_shared<const Mesh>(generate_mesh(domain, fault, h, opt.mesh));
    return solve_on_mesh(mesh, domain, jumps, opt);
}

Complex boundary_betti(const DisplacementField& u, const DisplacementField& v, const LayeredDomain& domain) {
    const Mesh& m = u.mesh();
    if (&m != &v.mesh() && m.node_count() != v.mesh().node_count())
        throw ValidationError("boundary_betti: fields live on different meshes");
    std::map<std::pair<int, int>, int> edge_tri;
    for (int t = 0; t < m.tri_count(); ++t)
        for (int i = 0; i < 3; ++i) {
            const int a = m.tris[t][i], b = m.tris[t][(i + 1) % 3];
            edge_tri[std::minmax(a, b)] = t;
        }
    const GaussRule q = gauss_legendre(2, 0.0, 1.0);
    Complex acc = 0.0;
    for (const auto& be : m.boundary) {
        if (be.tag != BoundaryTag::Traction) continue;
        const int t = edge_tri.at(std::minmax(be.a, be.b));
        const auto& p = domain.layers[m.tri_layer[t]];
        const Vec2 A = m.nodes[be.a], B = m.nodes[be.b];
        const Vec2 nu = outward_normal(A, B);
        const CVec2 tu = traction(u.gradient(t), nu, p), tv = traction(v.gradient(t), nu, p);
        const double len = (B - A).norm();
        for (std::size_t i = 0; i < q.x.size(); ++i) {
            const double x = q.x[i];
            const CVec2 uu = (1 - x) * u.nodal(be.a) + x * u.nodal(be.b);
            const CVec2 vv = (1 - x) * v.nodal(be.a) + x * v.nodal(be.b);
            acc += q.w[i] * len * (bdot(tu, vv) - bdot(uu, tv));
        }
    }
    return acc;
}

}  // namespace disloc
