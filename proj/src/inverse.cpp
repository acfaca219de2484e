#include "disloc/inverse.hpp"

#include "disloc/probe.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

namespace disloc {

// ---------------------------------------------------------------- parameterization

JumpData JumpModel::jump_data(const Fault& fault) const {
    const int ns = fault.segment_count();
    auto pick = [&](const std::vector<Vec2>& v, int k) -> Vec2 {
        if (v.empty()) return Vec2::Zero();
        if (v.size() == 1) return v[0];
        if (static_cast<int>(v.size()) != ns) throw ValidationError("jump model needs one value per segment", "/jumps");
        return v[k];
    };
    JumpData j;
    for (int k = 0; k < ns; ++k) {
        SegmentPoly pf = SegmentPoly::constant(pick(f, k));
        if (taper_tips && !fault.closed) {
            const double L = fault.seg_length(k);
            const Vec2 c = pick(f, k);
            if (ns == 1) {
                // 4 t (1 - t)
                pf = SegmentPoly{};
                pf.c[1] = 4.0 * c / L;
                pf.c[2] = -4.0 * c / (L * L);
            } else if (k == 0) {
                pf = SegmentPoly{};
                pf.c[1] = c / L;
            } else if (k == ns - 1) {
                pf = SegmentPoly{};
                pf.c[0] = c;
                pf.c[1] = -c / L;
            }
        }
        j.f.push_back(pf);
        j.g.push_back(SegmentPoly::constant(pick(g, k)));
    }
    j.regularity.assign(ns, CornerRegularity{});
    return j;
}

Fault FaultParameterization::decode(const Eigen::VectorXd& p) const {
    if (p.size() != size()) throw ValidationError("parameter vector has the wrong length", "/init");
    Fault f;
    f.closed = family == FaultFamily::ClosedConvex;
    for (int k = 0; k < vertices; ++k) f.vertices.emplace_back(p(2 * k), p(2 * k + 1));
    return f;
}

JumpData FaultParameterization::decode_jumps(const Eigen::VectorXd& p) const {
    JumpModel m = jumps;
    if (unknown_f) {
        m.f.clear();
        for (int k = 0; k < segments(); ++k) m.f.emplace_back(p(geometry_size() + 2 * k), p(geometry_size() + 2 * k + 1));
    }
    return m.jump_data(decode(p));
}

Eigen::VectorXd FaultParameterization::encode(const Fault& fault) const {
    if (static_cast<int>(fault.vertices.size()) != vertices) throw ValidationError("vertex count mismatch", "/fault/vertices");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(size());
    for (int k = 0; k < vertices; ++k) p.segment<2>(2 * k) = fault.vertices[k];
    if (unknown_f) {
        for (int k = 0; k < segments(); ++k) {
            const Vec2 v = jumps.f.empty() ? Vec2::Zero() : jumps.f.size() == 1 ? jumps.f[0] : jumps.f[k];
            p.segment<2>(geometry_size() + 2 * k) = v;
        }
    }
    return p;
}

bool is_convex(const Polyline& poly) {
    const int n = static_cast<int>(poly.size());
    if (n < 3) return false;
    int sign = 0;
    for (int k = 0; k < n; ++k) {
        const Vec2 a = poly[k], b = poly[(k + 1) % n], c = poly[(k + 2) % n];
        const double cr = cross2(b - a, c - b);
        if (cr == 0.0) continue;
        const int s = cr > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return sign != 0;
}

void FaultParameterization::validate(const Eigen::VectorXd& p, const LayeredDomain& domain) const {
    const Fault f = decode(p);
    validate_fault(f, domain);
    if (family == FaultFamily::ClosedConvex && !is_convex(f.vertices))
        throw ValidationError("closed fault is not a convex polygon", "/fault/vertices");
}

bool FaultParameterization::is_valid(const Eigen::VectorXd& p, const LayeredDomain& domain) const {
    try {
        validate(p, domain);
        return true;
    } catch (const ValidationError&) {
        return false;
    }
}

double misfit(const BoundaryMeasurement& a, const BoundaryMeasurement& b) {
    if (a.s.size() != b.s.size() || a.u.size() != a.s.size() || b.u.size() != b.s.size())
        throw ValidationError("measurements are sampled on different grids");
    for (size_t i = 0; i < a.s.size(); ++i)
        if (std::abs(a.s[i] - b.s[i]) > 1e-12 * (1.0 + std::abs(a.s[i])))
            throw ValidationError("measurements are sampled on different grids");
    double acc = 0.0;
    for (size_t i = 0; i + 1 < a.s.size(); ++i) {
        const double d0 = (a.u[i] - b.u[i]).squaredNorm(), d1 = (a.u[i + 1] - b.u[i + 1]).squaredNorm();
        acc += 0.5 * (d0 + d1) * (a.s[i + 1] - a.s[i]);
    }
    return std::sqrt(acc);
}

// ---------------------------------------------------------------- morphing

Eigen::MatrixXd morph_weights(const Mesh& mesh, const Fault& fault) {
    const int n = mesh.node_count();
    const int nv = static_cast<int>(fault.vertices.size());
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, nv);
    std::vector<char> fixed(n, 0);
    for (const auto& e : mesh.boundary) fixed[e.a] = fixed[e.b] = 1;
    for (const auto& e : mesh.interface_edges) fixed[e.a] = fixed[e.b] = 1;
    std::vector<char> on_fault(n, 0);
    for (const auto& fe : mesh.fault_edges) {
        const double L = fault.seg_length(fe.segment);
        const int va = fe.segment, vb = (fe.segment + 1) % nv;
        for (int end = 0; end < 2; ++end) {
            const double t = fe.s[end] / L;
            for (int node : {fe.plus[end], fe.minus[end]}) {
                if (fixed[node] && !on_fault[node])
                    throw ValidationError("fault meets the boundary or an interface; mesh morphing unavailable");
                on_fault[node] = 1;
                fixed[node] = 1;
                W.row(node).setZero();
                W(node, va) = 1.0 - t;
                W(node, vb) = t;
            }
        }
    }
    // free nodes: P1 Laplace with the fixed values as Dirichlet data
    std::vector<int> idx(n, -1);
    int nf = 0;
    for (int i = 0; i < n; ++i)
        if (!fixed[i]) idx[i] = nf++;
    if (nf == 0) return W;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nf, nv);
    for (const auto& t : mesh.tris) {
        const Vec2 p[3] = {mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]};
        const double area = 0.5 * cross2(p[1] - p[0], p[2] - p[0]);
        Eigen::Matrix<double, 3, 2> grad;
        for (int a = 0; a < 3; ++a) {
            const Vec2 e = p[(a + 2) % 3] - p[(a + 1) % 3];
            grad.row(a) = Vec2(-e.y(), e.x()).transpose() / (2.0 * area);
        }
        const Eigen::Matrix3d K = area * grad * grad.transpose();
        for (int a = 0; a < 3; ++a) {
            if (idx[t[a]] < 0) continue;
            for (int b = 0; b < 3; ++b) {
                if (idx[t[b]] >= 0) trip.emplace_back(idx[t[a]], idx[t[b]], K(a, b));
                else rhs.row(idx[t[a]]) -= K(a, b) * W.row(t[b]);
            }
        }
    }
    Eigen::SparseMatrix<double> A(nf, nf);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw NumericalError("mesh morphing system is singular");
    const Eigen::MatrixXd X = solver.solve(rhs);
    for (int i = 0; i < n; ++i)
        if (idx[i] >= 0) W.row(i) = X.row(idx[i]);
    return W;
}

namespace {

bool mesh_quality_ok(const Mesh& m, double min_angle_deg) {
    for (int t = 0; t < m.tri_count(); ++t)
        if (!(m.tri_area(t) > 0.0)) return false;
    return m.min_angle_deg() >= min_angle_deg;
}

}  // namespace

ForwardMap::ForwardMap(LayeredDomain domain, FaultParameterization family, ForwardMapOptions opt)
    : domain_(std::move(domain)), family_(std::move(family)), opt_(std::move(opt)) {
    if (!(opt_.h > 0.0)) throw ValidationError("mesh size must be positive", "/h");
    if (opt_.n_samples < 2) throw ValidationError("at least two samples required", "/n_samples");
}

void ForwardMap::anchor(const Eigen::VectorXd& p) {
    if (!opt_.morph) return;
    family_.validate(p, domain_);
    const Fault f = family_.decode(p);
    auto a = std::make_shared<Anchor>();
    a->params = p;
    a->mesh = std::make_shared<const Mesh>(generate_mesh(domain_, &f, opt_.h, opt_.forward.mesh));
    try {
        a->weights = morph_weights(*a->mesh, f);
    } catch (const ValidationError& e) {
        spdlog::debug("morphing disabled: {}", e.what());
        opt_.morph = false;
        return;
    }
    std::lock_guard<std::mutex> lock(mu_);
    anchor_ = std::move(a);
}

std::shared_ptr<const Mesh> ForwardMap::morphed(const Anchor& a, const Eigen::VectorXd& p) const {
    const Fault f0 = family_.decode(a.params);
    const Fault f1 = family_.decode(p);
    const int nv = family_.vertices;
    Eigen::MatrixXd D(nv, 2);
    for (int k = 0; k < nv; ++k) D.row(k) = (f1.vertices[k] - f0.vertices[k]).transpose();
    auto m = std::make_shared<Mesh>(*a.mesh);
    const Eigen::MatrixXd shift = a.weights * D;
    for (int i = 0; i < m->node_count(); ++i) m->nodes[i] += shift.row(i).transpose();
    // arc-length coordinates scale with the segment
    std::vector<double> ratio(f0.segment_count());
    for (int k = 0; k < f0.segment_count(); ++k) ratio[k] = f1.seg_length(k) / f0.seg_length(k);
    for (auto& fe : m->fault_edges)
        for (double& s : fe.s) s *= ratio[fe.segment];
    for (auto& pr : m->pairs)
        for (auto& w : pr.where) w.s *= ratio[w.segment];
    if (!mesh_quality_ok(*m, opt_.morph_min_angle_deg)) return nullptr;
    return m;
}

bool ForwardMap::morphable(const Eigen::VectorXd& p) const {
    std::shared_ptr<const Anchor> a;
    {
        std::lock_guard<std::mutex> lock(mu_);
        a = anchor_;
    }
    return opt_.morph && a && morphed(*a, p) != nullptr;
}

std::shared_ptr<const Mesh> ForwardMap::mesh_for(const Eigen::VectorXd& p) const {
    std::shared_ptr<const Anchor> a;
    {
        std::lock_guard<std::mutex> lock(mu_);
        a = anchor_;
    }
    if (opt_.morph && a) {
        if (auto m = morphed(*a, p)) return m;
    }
    const Fault f = family_.decode(p);
    return std::make_shared<const Mesh>(generate_mesh(domain_, &f, opt_.h, opt_.forward.mesh));
}

BoundaryMeasurement ForwardMap::operator()(const Eigen::VectorXd& p) const {
    family_.validate(p, domain_);
    const auto mesh = mesh_for(p);
    const auto jumps = FaultJumpFunctions::from(family_.decode_jumps(p));
    try {
        const ForwardResult r = solve_on_mesh(mesh, domain_, jumps, opt_.forward);
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++solves_;
        }
        return measure(*r.field, domain_, opt_.n_samples);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (forward map at parameters of norm " +
                             std::to_string(p.norm()) + ")");
    }
}

long ForwardMap::solves() const {
    std::lock_guard<std::mutex> lock(mu_);
    return solves_;
}

BoundaryMeasurement synthesize(const ForwardMap& map, const Eigen::VectorXd& truth, bool avoid_inverse_crime) {
    ForwardMapOptions o = map.options();
    o.morph = false;
    if (avoid_inverse_crime) o.h /= 2.0;
    ForwardMap data(map.domain(), map.family(), o);
    return data(truth);
}

// ---------------------------------------------------------------- distinguishability

DistinguishabilityResult distinguishability_test(const ExperimentConfig2D& a, const ExperimentConfig2D& b, double h,
                                                 int n_samples, double floor_factor, const ForwardOptions& fo) {
    DistinguishabilityResult r;
    r.admissible_a = check_admissibility(a.fault, a.jumps, a.domain).overall;
    r.admissible_b = check_admissibility(b.fault, b.jumps, b.domain).overall;
    if (!r.admissible_a || !r.admissible_b)
        throw ValidationError(std::string("configuration ") + (r.admissible_a ? "B" : "A") + " is not admissible");
    if (a.domain.measurement.edges != b.domain.measurement.edges || a.domain.outer != b.domain.outer)
        throw ValidationError("configurations must share the domain boundary and measurement arc");
    auto run = [&](const ExperimentConfig2D& c, double hh) {
        validate_fault(c.fault, c.domain);
        const auto res = solve_forward(c.domain, &c.fault, FaultJumpFunctions::from(c.jumps), hh, fo);
        return measure(*res.field, c.domain, n_samples);
    };
    const auto ma = run(a, h);
    const auto mb = run(b, h);
    r.misfit = misfit(ma, mb);
    const auto ma2 = run(a, h / 2.0);
    r.convergence_error = misfit(ma, ma2);
    r.floor = floor_factor * r.convergence_error;
    const double scale = misfit(ma, BoundaryMeasurement{ma.s, std::vector<CVec2>(ma.s.size(), CVec2::Zero())});
    if (r.misfit < 1e-12 * std::max(1.0, scale)) {
        r.applicable = false;
        r.note = "configurations produce identical data; test not applicable";
        return r;
    }
    r.threshold_pass = r.misfit > r.floor;
    return r;
}

// ---------------------------------------------------------------- reconstruction

namespace {

Eigen::VectorXd residual_vector(const BoundaryMeasurement& m, const BoundaryMeasurement& d) {
    const int n = static_cast<int>(m.s.size());
    Eigen::VectorXd r(4 * n);
    for (int i = 0; i < n; ++i) {
        double w = 0.0;
        if (i > 0) w += 0.5 * (m.s[i] - m.s[i - 1]);
        if (i + 1 < n) w += 0.5 * (m.s[i + 1] - m.s[i]);
        const double sw = std::sqrt(w);
        const CVec2 e = m.u[i] - d.u[i];
        r.segment<4>(4 * i) << sw * e(0).real(), sw * e(0).imag(), sw * e(1).real(), sw * e(1).imag();
    }
    return r;
}

}  // namespace

ReconstructResult reconstruct(const BoundaryMeasurement& measured, ForwardMap& map, const Eigen::VectorXd& init,
                              const ReconstructOptions& opt) {
    const auto& fam = map.family();
    const auto& dom = map.domain();
    fam.validate(init, dom);
    const long solves0 = map.solves();
    auto used = [&] { return map.solves() - solves0; };
    const double diam = dom.diameter();
    const double fd = opt.fd_step_rel * diam;
    const double data_norm =
        misfit(measured, BoundaryMeasurement{measured.s, std::vector<CVec2>(measured.s.size(), CVec2::Zero())});

    ReconstructResult out;
    Eigen::VectorXd p = init;
    map.anchor(p);
    Eigen::VectorXd r = residual_vector(map(p), measured);
    double phi = r.norm();
    out.best = p;
    out.best_misfit = phi;
    double g0 = -1.0;
    double lambda = 1e-3;
    const int np = fam.size();

    for (int it = 0;; ++it) {
        ReconstructIteration rec;
        rec.iteration = it;
        rec.misfit = phi;
        if (phi <= opt.misfit_abs_tol * std::max(data_norm, 1e-300)) {
            out.converged = true;
            out.stop_reason = "misfit at tolerance";
            rec.solves = used();
            out.history.push_back(rec);
            break;
        }
        if (used() + np > opt.max_solves) {
            out.stop_reason = "forward-solve budget exhausted";
            rec.solves = used();
            out.history.push_back(rec);
            break;
        }
        // forward-difference Jacobian; columns are independent solves
        Eigen::MatrixXd J(r.size(), np);
        std::vector<int> sign(np, 1);
        std::vector<Eigen::VectorXd> pert(np);
        for (int j = 0; j < np; ++j) {
            pert[j] = p;
            pert[j](j) += fd;
            if (!fam.is_valid(pert[j], dom)) {
                pert[j](j) = p(j) - fd;
                sign[j] = -1;
            }
        }
        std::vector<Eigen::VectorXd> cols(np);
        const int nt = std::max(1, opt.threads);
        for (int j0 = 0; j0 < np; j0 += nt) {
            std::vector<std::future<Eigen::VectorXd>> fut;
            for (int j = j0; j < std::min(np, j0 + nt); ++j)
                fut.push_back(std::async(nt > 1 ? std::launch::async : std::launch::deferred,
                                         [&, j] { return residual_vector(map(pert[j]), measured); }));
            for (int j = j0; j < std::min(np, j0 + nt); ++j) cols[j] = fut[j - j0].get();
        }
        for (int j = 0; j < np; ++j) J.col(j) = sign[j] * (cols[j] - r) / fd;
        const Eigen::VectorXd grad = J.transpose() * r;
        rec.gradient_norm = grad.norm();
        if (g0 < 0.0) g0 = rec.gradient_norm;
        if (rec.gradient_norm <= opt.grad_tol_rel * g0 && it > 0) {
            out.converged = true;
            out.stop_reason = "gradient below tolerance";
            rec.solves = used();
            out.history.push_back(rec);
            break;
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        bool accepted = false;
        Eigen::VectorXd p_new;
        Eigen::VectorXd r_new;
        double phi_new = phi;
        while (!accepted && lambda < 1e10 && used() < opt.max_solves) {
            Eigen::MatrixXd A = JtJ;
            for (int j = 0; j < np; ++j) A(j, j) += lambda * std::max(JtJ(j, j), 1e-12 * JtJ.diagonal().maxCoeff());
            const Eigen::VectorXd step = A.ldlt().solve(-grad);
            double alpha = 1.0;
            for (int bt = 0; bt <= opt.max_backtracks && used() < opt.max_solves; ++bt, alpha *= 0.5) {
                const Eigen::VectorXd trial = p + alpha * step;
                if (!fam.is_valid(trial, dom)) continue;  // projection: shorten until valid
                const Eigen::VectorXd rt = residual_vector(map(trial), measured);
                const double pt = rt.norm();
                if (pt * pt <= phi * phi + 1e-4 * alpha * grad.dot(step) && pt < phi) {
                    accepted = true;
                    p_new = trial;
                    r_new = rt;
                    phi_new = pt;
                    rec.step_length = (alpha * step).head(fam.geometry_size()).norm();
                    break;
                }
            }
            if (!accepted) lambda *= 10.0;
        }
        rec.damping = lambda;
        if (!accepted) {
            out.stop_reason = used() >= opt.max_solves ? "forward-solve budget exhausted" : "no descent step found";
            rec.solves = used();
            out.history.push_back(rec);
            break;
        }
        lambda = std::max(lambda / 10.0, 1e-9);
        const double rel_decrease = (phi - phi_new) / phi;
        p = p_new;
        r = r_new;
        phi = phi_new;
        // re-anchor the morphing mesh when the current iterate drifts too far
        if (!map.morphable(p) || rec.step_length > 2.0 * map.options().h) {
            map.anchor(p);
            r = residual_vector(map(p), measured);
            phi = r.norm();
            rec.reanchored = true;
        }
        rec.solves = used();
        out.history.push_back(rec);
        if (rel_decrease < opt.stall_rel) {
            out.converged = true;
            out.stop_reason = "misfit stalled";
            break;
        }
    }
    out.best = p;
    out.best_misfit = phi;
    out.solves = used();
    return out;
}

Eigen::VectorXd perturbed_init(const FaultParameterization& fam, const LayeredDomain& domain,
                               const Eigen::VectorXd& truth, double rel_noise, std::uint64_t seed) {
    double w = 0.0;
    for (const auto& a : domain.outer)
        for (const auto& b : domain.outer) w = std::max(w, (a - b).cwiseAbs().maxCoeff());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::VectorXd p = truth;
        for (int k = 0; k < fam.geometry_size(); ++k) p(k) += rel_noise * w * U(rng);
        if (fam.is_valid(p, domain)) return p;
    }
    throw ValidationError("could not draw a valid perturbed initial guess");
}

double max_vertex_error(const FaultParameterization& fam, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double e = 0.0;
    for (int k = 0; k < fam.vertices; ++k) e = std::max(e, (a.segment<2>(2 * k) - b.segment<2>(2 * k)).norm());
    return e;
}

// ---------------------------------------------------------------- jump relations

Mat2 relation_matrix(double theta, RelationMatrix kind) {
    return kind == RelationMatrix::Theta ? theta_matrix(theta) : identity_rotation(theta);
}

std::vector<double> interior_angles(const Fault& polygon) {
    if (!polygon.closed) throw ValidationError("jump relations need a closed polygon", "/fault/closed");
    const int n = static_cast<int>(polygon.vertices.size());
    std::vector<double> out(n);
    for (int v = 0; v < n; ++v) {
        const Vec2 p = polygon.vertices[v];
        const Vec2 a = polygon.vertices[(v - 1 + n) % n] - p, b = polygon.vertices[(v + 1) % n] - p;
        out[v] = std::atan2(std::abs(cross2(a, b)), a.dot(b));
    }
    return out;
}

std::vector<Vec2> generate_consistent_g(const Fault& polygon, const Vec2& g0, RelationMatrix kind) {
    const auto ang = interior_angles(polygon);
    const int n = static_cast<int>(ang.size());
    std::vector<Vec2> g(n);
    g[0] = g0;
    for (int k = 1; k < n; ++k) g[k] = relation_matrix(ang[k], kind) * g[k - 1];
    return g;
}

JumpRelationReport jump_relation_check(const Fault& polygon, const std::vector<Vec2>& f1, const std::vector<Vec2>& f2,
                                       const std::vector<Vec2>& g1, const std::vector<Vec2>& g2,
                                       RelationMatrix kind) {
    const auto ang = interior_angles(polygon);
    const int n = static_cast<int>(ang.size());
    for (const auto* v : {&f1, &f2, &g1, &g2})
        if (static_cast<int>(v->size()) != n)
            throw ValidationError("jump data must be one constant per polygon edge", "/jumps");
    JumpRelationReport rep;
    rep.f_violation.resize(n);
    rep.g_violation.resize(n);
    for (int v = 0; v < n; ++v) {
        // vertex v joins segment v - 1 (incoming) and segment v (outgoing)
        const int in = (v - 1 + n) % n, out = v;
        const Mat2 M = relation_matrix(ang[v], kind);
        const Vec2 df_in = f1[in] - f2[in], df_out = f1[out] - f2[out];
        const Vec2 dg_in = g1[in] - g2[in], dg_out = g1[out] - g2[out];
        rep.f_violation[v] = (df_out - df_in).norm();
        rep.g_violation[v] = (dg_out - M * dg_in).norm();
        rep.max_f_violation = std::max(rep.max_f_violation, rep.f_violation[v]);
        rep.max_g_violation = std::max(rep.max_g_violation, rep.g_violation[v]);
    }
    // going once around from segment 0: g_0 = M_0 M_{n-1} ... M_1 g_0
    Mat2 P = Mat2::Identity();
    for (int k = 1; k <= n; ++k) P = relation_matrix(ang[k % n], kind) * P;
    rep.product = P;
    Eigen::JacobiSVD<Mat2> svd(P - Mat2::Identity());
    for (int i = 0; i < 2; ++i)
        if (svd.singularValues()(i) <= 1e-10) ++rep.fixed_space_dim;
    return rep;
}

}  // namespace disloc
