#include "disloc/cgo.hpp"

#include "disloc/geometry.hpp"
#include "disloc/quadrature.hpp"

#include <cmath>

namespace disloc {

CVec2 lame_operator(const VectorField& u, const Vec2& x, const LameParameters& p) {
    const auto H = u.hessian(x);
    CVec2 lap, grad_div;
    for (int i = 0; i < 2; ++i) lap(i) = H[0](i, 0) + H[1](i, 1);
    for (int k = 0; k < 2; ++k) grad_div(k) = H[k](0, 0) + H[k](1, 1);
    return p.mu * lap + (p.lambda + p.mu) * grad_div;
}

CVec2 ElasticCgoParams::xi() const {
    const double k2 = kappa_s() * kappa_s();
    return tau * d.cast<Complex>() + kI * std::sqrt(k2 + tau * tau) * d_perp.cast<Complex>();
}

CVec2 ElasticCgoParams::eta() const {
    const double k2 = kappa_s() * kappa_s();
    return d_perp.cast<Complex>() - kI * std::sqrt(1.0 + k2 / (tau * tau)) * d.cast<Complex>();
}

void ElasticCgoParams::validate() const {
    const auto r = validate_lame(lame, 2);
    if (!r.ok()) throw ValidationError("CGO Lame parameters: " + r.summary());
    if (!(tau > kappa_s())) throw ValidationError("CGO requires tau > kappa_s");
    if (std::abs(d.norm() - 1.0) > 1e-12 || std::abs(d_perp.norm() - 1.0) > 1e-12 || std::abs(d.dot(d_perp)) > 1e-12)
        throw ValidationError("CGO directions must be orthonormal");
}

ElasticCgoParams ElasticCgoParams::make(double tau, const Vec2& d, const Vec2& xc, double omega,
                                        const LameParameters& lame) {
    ElasticCgoParams p;
    p.tau = tau;
    p.d = d.normalized();
    p.d_perp = perp_ccw(p.d);
    p.xc = xc;
    p.omega = omega;
    p.lame = lame;
    return p;
}

ElasticCgo::ElasticCgo(const ElasticCgoParams& p) : p_(p) {
    p_.validate();
    xi_ = p_.xi();
    eta_ = p_.eta();
}

CVec2 ElasticCgo::value(const Vec2& x) const { return phase(x) * eta_; }

CMat2 ElasticCgo::gradient(const Vec2& x) const { return phase(x) * eta_ * xi_.transpose(); }

std::array<CMat2, 2> ElasticCgo::hessian(const Vec2& x) const {
    const Complex e = phase(x);
    const CMat2 g = eta_ * xi_.transpose();
    return {e * xi_(0) * g, e * xi_(1) * g};
}

CVec2 ElasticCgo::traction_closed_form(const Vec2& x, const Vec2& nu) const {
    const Complex e = phase(x);
    const double k2 = p_.kappa_s() * p_.kappa_s();
    const double c = cross2(p_.d, p_.d_perp);
    const Complex xn = bdot(xi_, nu.cast<Complex>());
    return 2.0 * p_.lame.mu * e * xn * eta_ + (p_.lame.mu * k2 / p_.tau) * e * c * perp_ccw(nu).cast<Complex>();
}

namespace {
Complex local_z(const CornerFrame& f, const Vec2& x) {
    const Vec2 y = f.to_local(x);
    if (y.y() == 0.0 && y.x() <= 0.0) throw ValidationError("CGO evaluated on its branch cut");
    return Complex(y.x(), y.y());
}
}  // namespace

HarmonicCgo::HarmonicCgo(double s, CornerFrame frame) : s_(s), frame_(frame) {
    if (!(s > 0.0)) throw ValidationError("harmonic CGO requires s > 0");
}

Complex HarmonicCgo::z_of(const Vec2& x) const { return local_z(frame_, x); }

Complex HarmonicCgo::value(const Vec2& x) const { return std::exp(-std::sqrt(s_ * z_of(x))); }

CVec2 HarmonicCgo::gradient(const Vec2& x) const {
    const Complex z = z_of(x);
    const Complex rz = std::sqrt(z);
    const Complex fp = -std::sqrt(s_) / (2.0 * rz) * std::exp(-std::sqrt(s_) * rz);
    const CVec2 gl(fp, kI * fp);
    return rotation(frame_.alpha).cast<Complex>() * gl;
}

Complex HarmonicCgo::laplacian(const Vec2& x) const {
    const Complex z = z_of(x);
    const Complex rz = std::sqrt(z);
    const double rs = std::sqrt(s_);
    const Complex F = std::exp(-rs * rz);
    const Complex fpp = (s_ / (4.0 * z) + rs / (4.0 * z * rz)) * F;
    CMat2 Hl;
    Hl << fpp, kI * fpp, kI * fpp, -fpp;
    const CMat2 R = rotation(frame_.alpha).cast<Complex>();
    const CMat2 H = R * Hl * R.transpose();
    return H(0, 0) + H(1, 1);
}

LameZeroCgo::LameZeroCgo(double s, CornerFrame frame) : s_(s), frame_(frame) {
    if (!(s > 0.0)) throw ValidationError("Lame CGO requires s > 0");
}

Complex LameZeroCgo::z_of(const Vec2& x) const { return local_z(frame_, x); }

Complex LameZeroCgo::scalar(const Vec2& x) const { return std::exp(-s_ * std::sqrt(z_of(x))); }

CVec2 LameZeroCgo::value(const Vec2& x) const {
    const Complex F = scalar(x);
    return rotation(frame_.alpha).cast<Complex>() * CVec2(F, kI * F);
}

CMat2 LameZeroCgo::gradient(const Vec2& x) const {
    const Complex z = z_of(x);
    const Complex rz = std::sqrt(z);
    const Complex fp = -s_ / (2.0 * rz) * std::exp(-s_ * rz);
    CMat2 Gl;
    Gl << fp, kI * fp, kI * fp, -fp;
    const CMat2 R = rotation(frame_.alpha).cast<Complex>();
    return R * Gl * R.transpose();
}

std::array<CMat2, 2> LameZeroCgo::hessian(const Vec2& x) const {
    const Complex z = z_of(x);
    const Complex rz = std::sqrt(z);
    const Complex F = std::exp(-s_ * rz);
    const Complex fpp = (s_ * s_ / (4.0 * z) + s_ / (4.0 * z * rz)) * F;
    const CVec2 c(1.0, kI);  // d/dx1 -> 1, d/dx2 -> i on holomorphic functions
    std::array<CMat2, 2> Hl;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) Hl[k](i, j) = c(i) * fpp * c(j) * c(k);
    const CMat2 R = rotation(frame_.alpha).cast<Complex>();
    std::array<CMat2, 2> H{CMat2::Zero(), CMat2::Zero()};
    for (int k = 0; k < 2; ++k)
        for (int c2 = 0; c2 < 2; ++c2) H[k] += R(k, c2) * (R * Hl[c2] * R.transpose());
    return H;
}

Complex edge_integral_exact(double s, double h, double theta) {
    if (!(s > 0.0 && h > 0.0)) throw ValidationError("edge_integral_exact requires s, h > 0");
    const Complex m = std::exp(kI * (theta / 2.0));
    const double a = s * std::sqrt(h);
    const Complex e = std::exp(-a * m);
    return 2.0 / (s * s) * (1.0 / (m * m) - e / (m * m) - a * e / m);
}

GammaTail gamma_tail(double alpha, double h, Complex zeta) {
    if (!(alpha >= 0.0)) throw ValidationError("gamma_tail requires alpha >= 0");
    if (!(h > 0.0 && h < std::exp(1.0))) throw ValidationError("gamma_tail requires h in (0, e)");
    if (!(zeta.real() > 0.0)) throw ValidationError("gamma_tail requires Re zeta > 0");
    GammaTail r;
    r.leading = std::tgamma(alpha + 1.0) / std::pow(zeta, alpha + 1.0);
    r.tail_bound = 2.0 / zeta.real() * std::exp(-h * zeta.real() / 2.0);
    return r;
}

Complex sector_integral_exact(double theta_min, double theta_max, double s, int power) {
    return 6.0 * kI * (std::exp(-2.0 * kI * theta_max) - std::exp(-2.0 * kI * theta_min)) * std::pow(s, -power);
}

double sector_separation(const Vec2& d, double theta_min, double theta_max) {
    const double phid = std::atan2(d.y(), d.x());
    double rel = std::fmod(phid - theta_min, 2.0 * kPi);
    if (rel < 0) rel += 2.0 * kPi;
    if (rel <= theta_max - theta_min) return 1.0;
    return std::max(d.dot(Vec2(std::cos(theta_min), std::sin(theta_min))),
                    d.dot(Vec2(std::cos(theta_max), std::sin(theta_max))));
}

Vec2 default_direction(double theta_min, double theta_max) {
    const double b = 0.5 * (theta_min + theta_max);
    return -Vec2(std::cos(b), std::sin(b));
}

DecayReport volume_decay_check(const ElasticCgoParams& params, double theta_min, double theta_max, double h,
                               const std::vector<double>& taus, double weight_power) {
    DecayReport rep;
    rep.zeta0 = sector_separation(params.d, theta_min, theta_max);
    if (!(rep.zeta0 < 0.0)) throw ValidationError("no negative separation: d points into the sector");
    if (taus.size() < 2) throw ValidationError("volume_decay_check needs at least two tau values");
    for (double tau : taus) {
        ElasticCgoParams p = params;
        p.tau = tau;
        const ElasticCgo u(p);
        const CVec2 xi = u.xi();
        auto f = [&](double r, double phi) {
            const Complex e = std::exp(r * (xi(0) * std::cos(phi) + xi(1) * std::sin(phi)));
            return weight_power > 0 ? e * std::pow(r, weight_power) : e;
        };
        const QuadResult q = integrate_sector(f, theta_min, theta_max, h, 1e-10, 1e-300);
        rep.taus.push_back(tau);
        rep.magnitudes.push_back(std::abs(q.value) * u.eta().norm());
    }
    // least-squares slope of log|I| against log tau
    const std::size_t n = rep.taus.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(rep.taus[i]), y = std::log(rep.magnitudes[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.fitted_exponent = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

}  // namespace disloc
