#pragma once

#include "disloc/cgo.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace disloc {

// Corner neighborhood in its local frame: corner at the origin, the minus edge
// along +x (theta_min = 0), the plus edge at angle theta. The sector between
// them has exterior normals nu_plus = (-sin theta, cos theta), nu_minus = (0, -1).
struct CornerSetup {
    double theta = kPi / 2;
    double h = 0.1;
    LameParameters lame;
    double omega = 0.0;

    Vec2 dir_plus() const { return Vec2(std::cos(theta), std::sin(theta)); }
    Vec2 dir_minus() const { return Vec2(1.0, 0.0); }
    Vec2 nu_plus() const { return Vec2(-std::sin(theta), std::cos(theta)); }
    Vec2 nu_minus() const { return Vec2(0.0, -1.0); }
};

// Jump data along one corner edge as functions of the distance r from the corner.
struct EdgeData {
    std::function<CVec2(double)> f;
    std::function<CVec2(double)> g;
    CVec2 f0 = CVec2::Zero();   // f(0)
    CVec2 df0 = CVec2::Zero();  // f'(0) along the edge
    CVec2 g0 = CVec2::Zero();   // g(0)

    static EdgeData constant(const CVec2& f, const CVec2& g);
    // f(r) = f0 + df0 r + c r^p, g(r) = g0 + cg r^q
    static EdgeData expansion(const CVec2& f0, const CVec2& df0, const CVec2& c, double p, const CVec2& g0,
                              const CVec2& cg = CVec2::Zero(), double q = 1.0);
    EdgeData real_part() const;
    EdgeData imag_part() const;
};

// Edge data induced by a field difference D = w - v (outside minus inside),
// given in the corner-local frame: f = D, g = T_nu D with the sector's exterior normal.
EdgeData edge_data_from_field(const VectorField& D, const CornerSetup& c, bool plus_edge);

struct IdentityTerms {
    Complex lhs;
    std::map<int, Complex> R;  // R[1] .. R[14]; R[9] is the arc term (closure) or the edge pairing (planted)
    Complex edge_pairing;      // sum over edges of (g . u0 - f . T u0)
    Complex residual() const;  // lhs - sum of R
    double scale() const;      // largest term magnitude
};

// Evaluates the corner identity for one CGO parameter set. With a field D the
// arc term is integrated over the circle |x| = h; otherwise R9 is the edge pairing.
IdentityTerms probe_identity(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                             const ElasticCgoParams& params, const VectorField* D = nullptr, double rel_tol = 1e-11);

// Sum over both edges of the integral of (g . u0 - f . T u0).
Complex edge_pairing(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus, const ElasticCgo& u0,
                     double rel_tol = 1e-11);

struct Extrapolation {
    Complex limit;
    double error_estimate = 0.0;
    double fitted_rate = 0.0;
    bool inconclusive = false;
    std::vector<std::vector<Complex>> table;
};

// Richardson extrapolation in powers first_power, first_power + 1, ... of 1/param.
Extrapolation sweep_and_extrapolate(const std::vector<double>& params, const std::vector<Complex>& values,
                                    int first_power = 1);

struct JumpRecovery {
    CVec2 delta_f = CVec2::Zero();  // f_plus(0) - f_minus(0) in the local frame
    double error_estimate = 0.0;
    bool inconclusive = false;
    std::vector<double> taus;
    std::vector<CVec2> per_direction;  // estimate for each probe direction
    std::vector<std::vector<Complex>> pairings;  // E(tau) per direction
};

// taus_scaled are multiplied by 1/h. theta0 lists absolute angles of d.
JumpRecovery recover_displacement_jump(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                                       const std::vector<double>& taus_scaled = {20, 40, 80, 160},
                                       std::vector<double> theta0 = {});

// 2x2 system [[sin(2t0 - t), cos(2t0 - t)], [cos(2t0 - t), -sin(2t0 - t)]] (d_perp . df, d . df) = (Re N, Im N)
// with N = e^{i(theta - 2 theta0)} E_inf / (2 mu). Returns delta f (real data).
Vec2 solve_jump_system(double theta, double theta0, Complex e_inf, double mu);

struct RotationRecovery {
    bool refused = false;
    std::string diagnostic;
    // L = lim tau E(tau) = i (e^{-i theta} G_plus + G_minus), G = g1 + i g2.
    CVec2 limit = CVec2::Zero();  // real and imaginary data parts
    // |g_plus - Q g_minus|, Q = -R(theta): the relation the identity enforces.
    double residual = 0.0;
    double error_estimate = 0.0;
    bool inconclusive = false;
    std::vector<double> taus;
};

RotationRecovery recover_traction_rotation(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                                           const std::vector<double>& taus_scaled = {20, 40, 80, 160},
                                           double jump_tol = 1e-3);

// Q(theta) = -R(theta)
Mat2 identity_rotation(double theta);

struct InterfaceProbeReport {
    std::vector<double> s;
    std::vector<Complex> t_eff;     // P(s) / (EI(theta) + EI(0))
    std::vector<double> volume_term;  // |omega^2 int_S u . u0|
    double volume_decay_rate = 0.0;   // fitted power p in |volume| ~ s^{-p}
    Extrapolation extrapolated;
    Complex t_reference;            // [(t+)_c e^{-i theta} + (t-)_c] / (e^{-i theta} + 1) from the analytic field
    Vec2 t_estimate = Vec2::Zero();  // (Re, Im) of the extrapolated limit
};

// u is given in global coordinates; the corner at xc with the minus edge at
// absolute angle dir_min.
InterfaceProbeReport interface_corner_probe(const VectorField& u, const LameParameters& lame1,
                                            const LameParameters& lame2, const Vec2& xc, double dir_min,
                                            const CornerSetup& c,
                                            const std::vector<double>& s_sweep = {16, 64, 256, 1024});

// View of a global-frame field in a corner-local frame.
class LocalField final : public VectorField {
public:
    LocalField(const VectorField& u, Vec2 xc, double alpha) : u_(u), xc_(std::move(xc)), R_(rotation(alpha)) {}
    CVec2 value(const Vec2& y) const override;
    CMat2 gradient(const Vec2& y) const override;
    std::array<CMat2, 2> hessian(const Vec2& y) const override;

private:
    const VectorField& u_;
    Vec2 xc_;
    Mat2 R_;
};

// Weighted sum of fields.
class SumField final : public VectorField {
public:
    void add(std::shared_ptr<const VectorField> f, Complex w) { parts_.push_back({std::move(f), w}); }
    CVec2 value(const Vec2& x) const override;
    CMat2 gradient(const Vec2& x) const override;
    std::array<CMat2, 2> hessian(const Vec2& x) const override;

private:
    std::vector<std::pair<std::shared_ptr<const VectorField>, Complex>> parts_;
};

// Least-squares slope of log y against x (exponential rate) or log x (power).
double fit_exponential_rate(const std::vector<double>& x, const std::vector<double>& y);
double fit_power_rate(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace disloc
