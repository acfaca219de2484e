#include "disloc/dimred.hpp"

#include "disloc/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace disloc {

double CutoffProfile::value(double x3) const {
    const double t = (x3 - center) / half_width;
    if (std::abs(t) >= 1.0) return 0.0;
    return amplitude * std::pow(1.0 - t * t, power);
}

double CutoffProfile::d1(double x3) const {
    const double t = (x3 - center) / half_width;
    if (std::abs(t) >= 1.0) return 0.0;
    return amplitude * power * std::pow(1.0 - t * t, power - 1) * (-2.0 * t) / half_width;
}

double CutoffProfile::d2(double x3) const {
    const double t = (x3 - center) / half_width;
    if (std::abs(t) >= 1.0) return 0.0;
    const double u = 1.0 - t * t;
    const double p = power;
    // d2/dt2 (1 - t^2)^p = p (p - 1) u^{p-2} 4 t^2 - 2 p u^{p-1}
    return amplitude * (p * (p - 1.0) * std::pow(u, p - 2) * 4.0 * t * t - 2.0 * p * std::pow(u, p - 1)) /
           (half_width * half_width);
}

namespace {
// Moments are taken in the reference variable t in extended precision: the
// integrand of int phi'' has large cancelling lobes and a double sum leaves
// ~1e-13 of rounding.
template <int D>
long double reference_moment(int power) {
    auto q = [power](long double t) {
        const long double u = 1.0L - t * t, p = power;
        if constexpr (D == 0) return std::pow(u, p);
        else if constexpr (D == 1) return -2.0L * p * t * std::pow(u, p - 1);
        else return p * (p - 1) * std::pow(u, p - 2) * 4.0L * t * t - 2.0L * p * std::pow(u, p - 1);
    };
    return boost::math::quadrature::gauss<long double, 30>::integrate(q, -1.0L, 1.0L);
}
}  // namespace

double CutoffProfile::integral() const {
    return static_cast<double>(amplitude * half_width * reference_moment<0>(power));
}
double CutoffProfile::moment_d1() const { return static_cast<double>(amplitude * reference_moment<1>(power)); }
double CutoffProfile::moment_d2() const {
    return static_cast<double>(amplitude / half_width * reference_moment<2>(power));
}

CutoffProfile CutoffProfile::normalized(double center, double half_width, int power, double mass) {
    if (!(half_width > 0.0)) throw ValidationError("cutoff half width must be positive");
    if (power < 3) throw ValidationError("cutoff power must be at least 3 for a C2 profile");
    CutoffProfile p{center, half_width, 1.0, power};
    p.amplitude = mass / p.integral();
    return p;
}

CutoffProfile CutoffProfile::for_slab(double center, double slab_M, double edge_length, int power) {
    CutoffProfile p = normalized(center, std::min(slab_M / 2.0, edge_length / 4.0), power);
    p.check_inside_slab(slab_M);
    return p;
}

void CutoffProfile::check_inside_slab(double slab_M) const {
    if (!(center - half_width > -slab_M && center + half_width < slab_M))
        throw ValidationError("cutoff support exceeds the slab (-M, M)");
}

CVec3 lame3d_residual(const Field3D& u, const Vec3& x, const LameParameters& lame, double omega) {
    const auto H = u.hessian(x);
    CVec3 lap = CVec3::Zero(), gd = CVec3::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) lap(i) += H[j](i, j);
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) gd(k) += H[k](j, j);
    return lame.mu * lap + (lame.lambda + lame.mu) * gd + omega * omega * u.value(x);
}

namespace {
Complex bdot3(const CVec3& a, const CVec3& b) { return a(0) * b(0) + a(1) * b(1) + a(2) * b(2); }
}  // namespace

CVec3 PlaneWave3D::value(const Vec3& x) const { return std::exp(bdot3(k_, x.cast<Complex>())) * a_; }

CMat3 PlaneWave3D::gradient(const Vec3& x) const {
    return std::exp(bdot3(k_, x.cast<Complex>())) * a_ * k_.transpose();
}

std::array<CMat3, 3> PlaneWave3D::hessian(const Vec3& x) const {
    const Complex e = std::exp(bdot3(k_, x.cast<Complex>()));
    const CMat3 g = a_ * k_.transpose();
    return {e * k_(0) * g, e * k_(1) * g, e * k_(2) * g};
}

PlaneWave3D PlaneWave3D::shear(double kz, const Vec2& e, double omega, const LameParameters& lame, Complex amp) {
    const Vec2 u = e.normalized();
    const Complex beta = std::sqrt(Complex(kz * kz - omega * omega / lame.mu));
    const CVec3 k(beta * u.x(), beta * u.y(), kI * kz);
    const CVec3 a(-u.y() * amp, u.x() * amp, 0.0);
    return PlaneWave3D(a, k);
}

PlaneWave3D PlaneWave3D::pressure(double kz, const Vec2& e, double omega, const LameParameters& lame, Complex amp) {
    const Vec2 u = e.normalized();
    const Complex beta = std::sqrt(Complex(kz * kz - omega * omega / (lame.lambda + 2.0 * lame.mu)));
    const CVec3 k(beta * u.x(), beta * u.y(), kI * kz);
    return PlaneWave3D(amp * k, k);
}

CVec3 ExtrudedField::value(const Vec3& x) const {
    const Vec2 xp = x.head<2>();
    const CVec2 v = inplane_->value(xp);
    return CVec3(v(0), v(1), u3_(xp));
}

CMat3 ExtrudedField::gradient(const Vec3& x) const {
    const Vec2 xp = x.head<2>();
    CMat3 G = CMat3::Zero();
    G.topLeftCorner<2, 2>() = inplane_->gradient(xp);
    G.block<1, 2>(2, 0) = g3_(xp).transpose();
    return G;
}

std::array<CMat3, 3> ExtrudedField::hessian(const Vec3& x) const {
    const Vec2 xp = x.head<2>();
    const auto H = inplane_->hessian(xp);
    const CMat2 h3 = h3_(xp);
    std::array<CMat3, 3> out{CMat3::Zero(), CMat3::Zero(), CMat3::Zero()};
    for (int k = 0; k < 2; ++k) {
        out[k].topLeftCorner<2, 2>() = H[k];
        out[k].block<1, 2>(2, 0) = h3.row(k);
    }
    return out;
}

CVec3 SumField3D::value(const Vec3& x) const {
    CVec3 s = CVec3::Zero();
    for (const auto& [f, w] : parts_) s += w * f->value(x);
    return s;
}

CMat3 SumField3D::gradient(const Vec3& x) const {
    CMat3 s = CMat3::Zero();
    for (const auto& [f, w] : parts_) s += w * f->gradient(x);
    return s;
}

std::array<CMat3, 3> SumField3D::hessian(const Vec3& x) const {
    std::array<CMat3, 3> s{CMat3::Zero(), CMat3::Zero(), CMat3::Zero()};
    for (const auto& [f, w] : parts_) {
        const auto h = f->hessian(x);
        for (int k = 0; k < 3; ++k) s[k] += w * h[k];
    }
    return s;
}

Complex dimension_reduce(const std::function<Complex(double)>& h_of_x3, const CutoffProfile& phi, int n) {
    const GaussRule g = gauss_legendre(n, phi.center - phi.half_width, phi.center + phi.half_width);
    Complex s = 0.0;
    for (int k = 0; k < n; ++k) s += g.w[k] * phi.value(g.x[k]) * h_of_x3(g.x[k]);
    return s;
}

CVec3 dimension_reduce(const Field3D& u, const Vec2& xp, const CutoffProfile& phi, int n) {
    const GaussRule g = gauss_legendre(n, phi.center - phi.half_width, phi.center + phi.half_width);
    CVec3 s = CVec3::Zero();
    for (int k = 0; k < n; ++k) s += g.w[k] * phi.value(g.x[k]) * u.value(Vec3(xp.x(), xp.y(), g.x[k]));
    return s;
}

ReducedResidual reduced_residual(const Field3D& u, const Vec2& xp, const CutoffProfile& phi,
                                 const LameParameters& lame, double omega, int n, double tol_3d) {
    const GaussRule g = gauss_legendre(n, phi.center - phi.half_width, phi.center + phi.half_width);
    const double lam = lame.lambda, mu = lame.mu, w2 = omega * omega;

    // weighted moments of the field, its gradient and Hessian against phi, phi', phi''
    CVec3 P0 = CVec3::Zero(), P2 = CVec3::Zero();
    CMat3 G1 = CMat3::Zero();
    std::array<CMat3, 3> H0{CMat3::Zero(), CMat3::Zero(), CMat3::Zero()};
    double res3d = 0.0, scale3d = 0.0;
    for (int k = 0; k < n; ++k) {
        const Vec3 x(xp.x(), xp.y(), g.x[k]);
        const CVec3 v = u.value(x);
        const CMat3 G = u.gradient(x);
        const auto H = u.hessian(x);
        const double w = g.w[k];
        P0 += w * phi.value(x.z()) * v;
        P2 += w * phi.d2(x.z()) * v;
        G1 += w * phi.d1(x.z()) * G;
        for (int j = 0; j < 3; ++j) H0[j] += w * phi.value(x.z()) * H[j];
        if (k % 8 == 0) {
            res3d = std::max(res3d, lame3d_residual(u, x, lame, omega).norm());
            double hn = 0.0;
            for (const auto& h : H) hn = std::max(hn, h.norm());
            scale3d = std::max(scale3d, (lam + 2.0 * mu) * hn + w2 * v.norm());
        }
    }
    if (res3d > tol_3d * std::max(scale3d, 1e-300))
        throw ValidationError("input field does not solve the 3D elastic system (relative residual " +
                              std::to_string(res3d / std::max(scale3d, 1e-300)) + ")");

    // in-plane second derivatives of P(u): d_j d_k P(u_i) = H0[k](i, j)
    auto d2 = [&](int i, int j, int k) { return H0[k](i, j); };
    ReducedResidual r;
    auto assemble = [&](double a_lap, double a_gd, double c_phi2_12, double c_phi2_3, CVec2& res12, Complex& res3,
                        CVec2* G12out, Complex* G3out, double* scale) {
        CVec2 op12;
        for (int i = 0; i < 2; ++i)
            op12(i) = a_lap * (d2(i, 0, 0) + d2(i, 1, 1)) + a_gd * (d2(0, 0, i) + d2(1, 1, i)) + w2 * P0(i);
        const Complex op3 = a_lap * (d2(2, 0, 0) + d2(2, 1, 1)) + w2 * P0(2);
        // int phi' d_i u3 and int phi' (d1 u1 + d2 u2)
        const CVec2 G12 = -c_phi2_12 * P2.head<2>() + (lam + mu) * CVec2(G1(2, 0), G1(2, 1));
        const Complex G3 = -c_phi2_3 * P2(2) + (lam + mu) * (G1(0, 0) + G1(1, 1));
        res12 = op12 - G12;
        res3 = op3 - G3;
        if (G12out) *G12out = G12;
        if (G3out) *G3out = G3;
        if (scale) *scale = std::max({op12.norm(), std::abs(op3), G12.norm(), std::abs(G3), w2 * P0.norm()});
    };
    assemble(mu, lam + mu, mu, lam + 2.0 * mu, r.res_12, r.res_3, &r.G_12, &r.G_3, &r.scale);
    assemble(lam, lam + mu, lam, 2.0 * lam + mu, r.swapped_res_12, r.swapped_res_3, nullptr, nullptr, nullptr);
    return r;
}

ReducedResiduals reduced_residuals(const Field3D& v, const Field3D& w, const Vec2& xp, const CutoffProfile& phi,
                                   const LameParameters& lame, double omega, int n) {
    ReducedResiduals out;
    out.v = reduced_residual(v, xp, phi, lame, omega, n);
    out.w = reduced_residual(w, xp, phi, lame, omega, n);
    for (const ReducedResidual* r : {&out.v, &out.w}) {
        const double s = std::max(r->scale, 1e-300);
        out.max_relative = std::max({out.max_relative, r->res_12.norm() / s, std::abs(r->res_3) / s});
    }
    return out;
}

ScalarEdgeData ScalarEdgeData::constant(Complex f, Complex g) {
    ScalarEdgeData e;
    e.f = [f](double) { return f; };
    e.g = [g](double) { return g; };
    e.f0 = f;
    e.g0 = g;
    return e;
}

ScalarEdgeData ScalarEdgeData::expansion(Complex f0, Complex df0, Complex c, double p, Complex g0, Complex cg,
                                         double q) {
    ScalarEdgeData e;
    e.f = [=](double r) { return f0 + r * df0 + c * std::pow(r, p); };
    e.g = [=](double r) { return g0 + cg * std::pow(r, q); };
    e.f0 = f0;
    e.df0 = df0;
    e.g0 = g0;
    return e;
}

Complex ScalarIdentityTerms::residual() const {
    Complex s = lhs;
    for (const auto& [k, v] : R) s -= v;
    return s;
}

namespace {

// int_0^h F(r) dr with r = rho^2, which removes the r^{-1/2} behavior of d_nu u0
// and turns exp(-sqrt(s r) Z) into an exponential in rho.
Complex sqrt_edge_integral(const std::function<Complex(double)>& F, double h, double s, double rel_tol,
                           double abs_tol) {
    const double rh = std::sqrt(h);
    const double scale = 1.0 / std::sqrt(s);
    std::vector<double> pts{0.0};
    std::vector<double> inner;
    for (double r = rh / 2; r > 1e-3 * scale && r > 1e-12 * rh; r /= 2) inner.push_back(r);
    std::reverse(inner.begin(), inner.end());
    pts.insert(pts.end(), inner.begin(), inner.end());
    pts.push_back(rh);
    return integrate_pieces([&](double rho) { return 2.0 * rho * F(rho * rho); }, pts, rel_tol, abs_tol, 12).value;
}

}  // namespace

ScalarIdentityTerms scalar_identity(const CornerSetup& c, const ScalarEdgeData& plus, const ScalarEdgeData& minus,
                                    double s, double mass, double rel_tol) {
    if (!(c.theta > 0.0 && c.theta < kPi)) throw ValidationError("corner opening must lie in (0, pi)");
    if (!(s > 0.0)) throw ValidationError("harmonic CGO requires s > 0");
    const double rs = std::sqrt(s);
    const double mu = c.lame.mu;
    ScalarIdentityTerms out;
    out.lhs = 0.0;
    out.edge_pairing = 0.0;
    struct Side {
        const ScalarEdgeData* e;
        double phi;
        Complex cnu;  // nu1 + i nu2
        int tail_id, delta_f_id, delta_g_id, df_id;
    };
    const Side sides[2] = {{&plus, c.theta, kI * std::exp(kI * c.theta), 1, 6, 8, 10},
                           {&minus, 0.0, -kI, 2, 7, 9, 11}};
    double mag = 0.0;
    Complex r4 = 0.0;
    for (const Side& sd : sides) {
        const Complex Z = Z_function(sd.phi);
        const Complex eph = std::exp(kI * sd.phi);
        const Complex G0 = mass * sd.e->g0 / mu, F0 = mass * sd.e->f0, dF0 = mass * sd.e->df0;
        const Complex a = rs * std::sqrt(c.h) * Z;
        out.lhs += 2.0 * G0 / (s * Z * Z);
        out.R[sd.tail_id] = G0 * 2.0 / s * std::exp(-a) * (a / (Z * Z) + 1.0 / (Z * Z));
        // int_0^h d_nu u0 dr = cnu e^{-i phi} (u0(h) - 1)
        out.lhs += -F0 * (sd.cnu / eph) * (-1.0);
        r4 += F0 * (sd.cnu / eph) * std::exp(-a);
        mag = std::max({mag, std::abs(2.0 * G0 / (s * Z * Z)), std::abs(F0), std::abs(dF0) / s});
    }
    out.R[4] = r4;
    const double abs_tol = rel_tol * std::max(mag, 1e-300);
    for (const Side& sd : sides) {
        const Complex Z = Z_function(sd.phi);
        const ScalarEdgeData& e = *sd.e;
        auto u0 = [&](double r) { return std::exp(-rs * std::sqrt(r) * Z); };
        auto dnu = [&](double r) {
            if (r == 0.0) return Complex(0.0);
            return -rs / (2.0 * std::sqrt(r) * Z) * u0(r) * sd.cnu;
        };
        out.edge_pairing += sqrt_edge_integral(
            [&](double r) { return mass * e.g(r) / mu * u0(r) - mass * e.f(r) * dnu(r); }, c.h, s, rel_tol, 1e-300);
        out.R[sd.delta_f_id] = sqrt_edge_integral(
            [&](double r) { return mass * (e.f(r) - e.f0 - r * e.df0) * dnu(r); }, c.h, s, rel_tol, abs_tol);
        out.R[sd.delta_g_id] =
            -sqrt_edge_integral([&](double r) { return mass * (e.g(r) - e.g0) / mu * u0(r); }, c.h, s, rel_tol, abs_tol);
        out.R[sd.df_id] =
            sqrt_edge_integral([&](double r) { return mass * r * e.df0 * dnu(r); }, c.h, s, rel_tol, abs_tol);
    }
    out.R[3] = out.edge_pairing;
    return out;
}

ThirdComponentRecovery recover_third_component(const CornerSetup& c, const ScalarEdgeData& plus,
                                               const ScalarEdgeData& minus, double mass,
                                               const std::vector<double>& sh_sweep, double jump_tol) {
    ThirdComponentRecovery out;
    for (double v : sh_sweep) out.s_values.push_back(v / c.h);
    auto pairing = [&](const ScalarEdgeData& p, const ScalarEdgeData& m, double s) {
        return scalar_identity(c, p, m, s, mass).edge_pairing;
    };
    auto split = [](const ScalarEdgeData& e, bool im) {
        ScalarEdgeData r;
        auto f = e.f;
        auto g = e.g;
        auto part = [im](Complex z) { return Complex(im ? z.imag() : z.real()); };
        r.f = [f, part](double x) { return part(f(x)); };
        r.g = [g, part](double x) { return part(g(x)); };
        r.f0 = part(e.f0);
        r.df0 = part(e.df0);
        r.g0 = part(e.g0);
        return r;
    };
    const ScalarEdgeData parts[2][2] = {{split(plus, false), split(minus, false)}, {split(plus, true), split(minus, true)}};

    // Stage A: E(s) -> i P(df3)
    Complex dPf = 0.0;
    for (int k = 0; k < 2; ++k) {
        std::vector<Complex> E;
        for (double s : out.s_values) E.push_back(pairing(parts[k][0], parts[k][1], s));
        const Extrapolation ex = sweep_and_extrapolate(out.s_values, E, 1);
        const Complex d = -kI * ex.limit;
        dPf += (k == 0 ? 1.0 : kI) * d.real();
        out.delta_Pf3_error = std::hypot(out.delta_Pf3_error, ex.error_estimate);
        if (ex.inconclusive) out.inconclusive = true;
    }
    out.delta_Pf3 = dPf;

    if (std::abs(plus.df0) > 0.0 || std::abs(minus.df0) > 0.0) {
        out.diagnostic = "tangential derivative of f3 must vanish at the corner for the traction stage";
        return out;
    }
    if (std::abs(out.delta_Pf3) > jump_tol * std::max(1.0, mass)) {
        out.diagnostic = "third-component displacement jump is not zero";
        return out;
    }
    // Stage B: s E(s) -> (2 / mu) (P g3+ e^{-i theta} + P g3-)
    out.stage_b = true;
    const double th = c.theta;
    for (int k = 0; k < 2; ++k) {
        std::vector<Complex> E;
        for (double s : out.s_values) E.push_back(s * pairing(parts[k][0], parts[k][1], s));
        const Extrapolation ex = sweep_and_extrapolate(out.s_values, E, 1);
        const Complex C = c.lame.mu * ex.limit / 2.0;
        const double gp = -C.imag() / std::sin(th);
        const double gm = C.real() - std::cos(th) * gp;
        out.Pg3_plus += (k == 0 ? 1.0 : kI) * gp;
        out.Pg3_minus += (k == 0 ? 1.0 : kI) * gm;
        out.g3_error = std::hypot(out.g3_error, c.lame.mu * ex.error_estimate / std::sin(th));
        if (ex.inconclusive) out.inconclusive = true;
    }
    return out;
}

Recovery3D recover_jump_3d(const CornerSetup& c, const EdgeData3& plus, const EdgeData3& minus,
                           const CutoffProfile& phi) {
    Recovery3D out;
    out.mass = phi.integral();
    if (!(out.mass > 0.0)) throw ValidationError("cutoff profile has zero mass");
    auto scale_edge = [m = out.mass](const EdgeData& e) {
        EdgeData r;
        auto f = e.f;
        auto g = e.g;
        r.f = [f, m](double x) -> CVec2 { return m * f(x); };
        r.g = [g, m](double x) -> CVec2 { return m * g(x); };
        r.f0 = m * e.f0;
        r.df0 = m * e.df0;
        r.g0 = m * e.g0;
        return r;
    };
    const JumpRecovery jr = recover_displacement_jump(c, scale_edge(plus.inplane), scale_edge(minus.inplane));
    out.delta_Pf12 = jr.delta_f;
    out.delta_f12 = jr.delta_f / out.mass;
    out.jump_error = jr.error_estimate / out.mass;
    out.rotation = recover_traction_rotation(c, plus.inplane, minus.inplane);
    out.third = recover_third_component(c, plus.third, minus.third, out.mass);
    out.delta_Pf3 = out.third.delta_Pf3;
    out.delta_f3 = out.third.delta_Pf3 / out.mass;
    out.g3_plus = out.third.Pg3_plus / out.mass;
    out.g3_minus = out.third.Pg3_minus / out.mass;
    return out;
}

}  // namespace disloc
