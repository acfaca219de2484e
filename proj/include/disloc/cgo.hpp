#pragma once

#include "disloc/common.hpp"

#include <array>
#include <memory>
#include <vector>

namespace disloc {

// Complex vector field with analytic first and second derivatives.
class VectorField {
public:
    virtual ~VectorField() = default;
    virtual CVec2 value(const Vec2& x) const = 0;
    // grad(i, j) = d u_i / d x_j
    virtual CMat2 gradient(const Vec2& x) const = 0;
    // H[k](i, j) = d^2 u_i / (d x_j d x_k)
    virtual std::array<CMat2, 2> hessian(const Vec2& x) const = 0;

    CVec2 traction(const Vec2& x, const Vec2& nu, const LameParameters& p) const {
        return disloc::traction(gradient(x), nu, p);
    }
};

// mu Laplace u + (lambda + mu) grad div u, from the analytic Hessian.
CVec2 lame_operator(const VectorField& u, const Vec2& x, const LameParameters& p);

// Corner-local frame: local = R(-alpha) (x - xc). Sectors are described by
// local polar angles in (-pi, pi), so the principal square-root cut (the
// negative local x axis) stays outside them.
struct CornerFrame {
    Vec2 xc = Vec2::Zero();
    double alpha = 0.0;
    Vec2 to_local(const Vec2& x) const { return rotation(-alpha) * (x - xc); }
    Vec2 to_global(const Vec2& y) const { return xc + rotation(alpha) * y; }
};

struct ElasticCgoParams {
    double tau = 1.0;
    Vec2 d = Vec2(1.0, 0.0);
    Vec2 d_perp = Vec2(0.0, 1.0);
    Vec2 xc = Vec2::Zero();
    double omega = 0.0;
    LameParameters lame;

    double kappa_s() const { return omega * std::sqrt(1.0 / lame.mu); }
    double kappa_p() const { return omega * std::sqrt(1.0 / (lame.lambda + 2.0 * lame.mu)); }
    CVec2 xi() const;
    CVec2 eta() const;
    void validate() const;

    // d_perp is the counterclockwise perpendicular of d.
    static ElasticCgoParams make(double tau, const Vec2& d, const Vec2& xc, double omega, const LameParameters& lame);
};

// u0(x) = exp(xi . (x - xc)) eta
class ElasticCgo final : public VectorField {
public:
    explicit ElasticCgo(const ElasticCgoParams& p);
    const ElasticCgoParams& params() const { return p_; }
    const CVec2& xi() const { return xi_; }
    const CVec2& eta() const { return eta_; }
    Complex phase(const Vec2& x) const { return std::exp(bdot(xi_, (x - p_.xc).cast<Complex>())); }

    CVec2 value(const Vec2& x) const override;
    CMat2 gradient(const Vec2& x) const override;
    std::array<CMat2, 2> hessian(const Vec2& x) const override;
    // Closed-form traction: 2 mu eta e (xi . nu) + (mu kappa_s^2 / tau) e det[d, d_perp] nu_perp.
    CVec2 traction_closed_form(const Vec2& x, const Vec2& nu) const;

private:
    ElasticCgoParams p_;
    CVec2 xi_, eta_;
};

// Scalar u0 = exp(-sqrt(s z)), z the complex local coordinate; harmonic off the cut.
class HarmonicCgo {
public:
    HarmonicCgo(double s, CornerFrame frame);
    Complex value(const Vec2& x) const;
    CVec2 gradient(const Vec2& x) const;  // global frame
    Complex laplacian(const Vec2& x) const;
    double s() const { return s_; }
    const CornerFrame& frame() const { return frame_; }

private:
    Complex z_of(const Vec2& x) const;
    double s_;
    CornerFrame frame_;
};

// u0 = (exp(-s sqrt z), i exp(-s sqrt z)) in the local frame, rotated to global.
class LameZeroCgo final : public VectorField {
public:
    LameZeroCgo(double s, CornerFrame frame);
    CVec2 value(const Vec2& x) const override;
    CMat2 gradient(const Vec2& x) const override;
    std::array<CMat2, 2> hessian(const Vec2& x) const override;
    double s() const { return s_; }
    const CornerFrame& frame() const { return frame_; }
    Complex scalar(const Vec2& x) const;  // exp(-s sqrt z)

private:
    Complex z_of(const Vec2& x) const;
    double s_;
    CornerFrame frame_;
};

// u(x) = a + B (x - x0)
class LinearField final : public VectorField {
public:
    LinearField(CVec2 a, CMat2 B, Vec2 x0 = Vec2::Zero()) : a_(std::move(a)), B_(std::move(B)), x0_(std::move(x0)) {}
    CVec2 value(const Vec2& x) const override { return a_ + B_ * (x - x0_).cast<Complex>(); }
    CMat2 gradient(const Vec2&) const override { return B_; }
    std::array<CMat2, 2> hessian(const Vec2&) const override { return {CMat2::Zero(), CMat2::Zero()}; }

private:
    CVec2 a_;
    CMat2 B_;
    Vec2 x0_;
};

// 2 s^{-2} (m^{-2} - m^{-2} e^{-s sqrt(h) m} - m^{-1} s sqrt(h) e^{-s sqrt(h) m}), m = e^{i theta / 2}:
// the integral of exp(-s sqrt(r) e^{i theta/2}) over r in (0, h).
Complex edge_integral_exact(double s, double h, double theta);

struct GammaTail {
    Complex leading;    // Gamma(alpha + 1) / zeta^{alpha + 1}
    double tail_bound;  // (2 / Re zeta) exp(-h Re zeta / 2)
};
GammaTail gamma_tail(double alpha, double h, Complex zeta);

// 6i (e^{-2 i theta_max} - e^{-2 i theta_min}) s^{-power}
Complex sector_integral_exact(double theta_min, double theta_max, double s, int power);

struct DecayReport {
    std::vector<double> taus;
    std::vector<double> magnitudes;
    double fitted_exponent = 0.0;
    double zeta0 = 0.0;  // max of d . x_hat over the sector (negative)
};

// Sector (theta_min, theta_max) of radius h about params.xc in global angles.
// weight_power B > 0 multiplies the integrand by |x - xc|^B.
DecayReport volume_decay_check(const ElasticCgoParams& params, double theta_min, double theta_max, double h,
                               const std::vector<double>& taus, double weight_power = 0.0);

// max over the closed sector of d . x_hat
double sector_separation(const Vec2& d, double theta_min, double theta_max);

// Unit vector opposite to the sector bisector.
Vec2 default_direction(double theta_min, double theta_max);

}  // namespace disloc
