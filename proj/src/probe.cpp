#include "disloc/probe.hpp"

#include "disloc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace disloc {

EdgeData EdgeData::constant(const CVec2& f, const CVec2& g) {
    EdgeData e;
    e.f = [f](double) { return f; };
    e.g = [g](double) { return g; };
    e.f0 = f;
    e.g0 = g;
    return e;
}

EdgeData EdgeData::expansion(const CVec2& f0, const CVec2& df0, const CVec2& c, double p, const CVec2& g0,
                             const CVec2& cg, double q) {
    EdgeData e;
    e.f = [=](double r) -> CVec2 { return f0 + r * df0 + std::pow(r, p) * c; };
    e.g = [=](double r) -> CVec2 { return g0 + std::pow(r, q) * cg; };
    e.f0 = f0;
    e.df0 = df0;
    e.g0 = g0;
    return e;
}

EdgeData EdgeData::real_part() const {
    EdgeData e;
    auto ff = f;
    auto gg = g;
    e.f = [ff](double r) -> CVec2 { return ff(r).real().cast<Complex>(); };
    e.g = [gg](double r) -> CVec2 { return gg(r).real().cast<Complex>(); };
    e.f0 = f0.real().cast<Complex>();
    e.df0 = df0.real().cast<Complex>();
    e.g0 = g0.real().cast<Complex>();
    return e;
}

EdgeData EdgeData::imag_part() const {
    EdgeData e;
    auto ff = f;
    auto gg = g;
    e.f = [ff](double r) -> CVec2 { return ff(r).imag().cast<Complex>(); };
    e.g = [gg](double r) -> CVec2 { return gg(r).imag().cast<Complex>(); };
    e.f0 = f0.imag().cast<Complex>();
    e.df0 = df0.imag().cast<Complex>();
    e.g0 = g0.imag().cast<Complex>();
    return e;
}

EdgeData edge_data_from_field(const VectorField& D, const CornerSetup& c, bool plus_edge) {
    const Vec2 t = plus_edge ? c.dir_plus() : c.dir_minus();
    const Vec2 nu = plus_edge ? c.nu_plus() : c.nu_minus();
    const LameParameters lame = c.lame;
    EdgeData e;
    e.f = [&D, t](double r) { return D.value(r * t); };
    e.g = [&D, t, nu, lame](double r) { return D.traction(r * t, nu, lame); };
    e.f0 = D.value(Vec2::Zero());
    e.df0 = D.gradient(Vec2::Zero()) * t.cast<Complex>();
    e.g0 = D.traction(Vec2::Zero(), nu, lame);
    return e;
}

Complex IdentityTerms::residual() const {
    Complex s = lhs;
    for (const auto& [k, v] : R) s -= v;
    return s;
}

double IdentityTerms::scale() const {
    double m = std::abs(lhs);
    for (const auto& [k, v] : R) m = std::max(m, std::abs(v));
    return m;
}

namespace {

// Geometric breakpoints toward r = 0 so the adaptive rule sees the boundary layer of width `scale`.
std::vector<double> edge_points(double h, double scale) {
    std::vector<double> pts{0.0};
    std::vector<double> inner;
    for (double r = h / 2; r > 1e-3 * scale && r > 1e-12 * h; r /= 2) inner.push_back(r);
    std::reverse(inner.begin(), inner.end());
    pts.insert(pts.end(), inner.begin(), inner.end());
    pts.push_back(h);
    return pts;
}

// abs_tol guards integrands built from cancelling differences (f - f0 - r f'(0)),
// which carry rounding noise that no relative tolerance can resolve.
Complex edge_integral(const std::function<Complex(double)>& f, double h, double scale, double rel_tol,
                      double abs_tol = 1e-300) {
    return integrate_pieces(f, edge_points(h, scale), rel_tol, abs_tol, 12).value;
}

}  // namespace

Complex edge_pairing(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus, const ElasticCgo& u0,
                     double rel_tol) {
    const double scale = 1.0 / u0.params().tau;
    Complex sum = 0.0;
    for (int side = 0; side < 2; ++side) {
        const EdgeData& e = side == 0 ? plus : minus;
        const Vec2 t = side == 0 ? c.dir_plus() : c.dir_minus();
        const Vec2 nu = side == 0 ? c.nu_plus() : c.nu_minus();
        sum += edge_integral(
            [&](double r) {
                const Vec2 x = r * t;
                return bdot(e.g(r), u0.value(x)) - bdot(e.f(r), u0.traction(x, nu, c.lame));
            },
            c.h, scale, rel_tol);
    }
    return sum;
}

IdentityTerms probe_identity(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                             const ElasticCgoParams& params, const VectorField* D, double rel_tol) {
    if (!(c.theta > 0.0 && c.theta < kPi)) throw ValidationError("corner opening must lie in (0, pi)");
    if (sector_separation(params.d, 0.0, c.theta) >= 0.0)
        throw ValidationError("no negative separation: d points into the sector");
    ElasticCgoParams p = params;
    p.xc = Vec2::Zero();
    p.lame = c.lame;
    p.omega = c.omega;
    const ElasticCgo u0(p);
    const CVec2 xi = u0.xi(), eta = u0.eta();
    const double mu = c.lame.mu;
    const double K = mu * p.kappa_s() * p.kappa_s() / p.tau * cross2(p.d, p.d_perp);
    const double scale = 1.0 / p.tau;

    IdentityTerms out;
    out.lhs = 0.0;
    out.edge_pairing = edge_pairing(c, plus, minus, u0, rel_tol);
    Complex r11 = 0.0;
    // plus edge: R1 R2 R5 R6 R12 R14; minus edge: R3 R4 R7 R8 R10 R13
    const int ids[2][6] = {{1, 2, 5, 6, 12, 14}, {3, 4, 7, 8, 10, 13}};
    struct Geo {
        Vec2 t, nu;
        CVec2 nupc;
        Complex a, xn, tail;
    };
    Geo geo[2];
    double mag = std::abs(out.edge_pairing);
    for (int side = 0; side < 2; ++side) {
        const EdgeData& e = side == 0 ? plus : minus;
        Geo& G = geo[side];
        G.t = side == 0 ? c.dir_plus() : c.dir_minus();
        G.nu = side == 0 ? c.nu_plus() : c.nu_minus();
        G.nupc = perp_ccw(G.nu).cast<Complex>();
        G.a = bdot(xi, G.t.cast<Complex>());
        G.xn = bdot(xi, G.nu.cast<Complex>());
        G.tail = std::exp(c.h * G.a) / (-G.a);
        const Complex g_term = bdot(e.g0, eta) / (-G.a), f_term = 2.0 * mu * bdot(e.f0, eta) * G.xn / G.a;
        out.lhs += g_term + f_term;
        mag = std::max({mag, std::abs(g_term), std::abs(f_term)});
        const auto* id = ids[side];
        out.R[id[0]] = -2.0 * mu * bdot(e.f0, eta) * G.xn * G.tail;
        out.R[id[1]] = bdot(e.g0, eta) * G.tail;
        out.R[id[2]] = -K * bdot(e.f0, G.nupc) * G.tail;
        r11 -= K * bdot(e.f0, G.nupc) / G.a;
        // scale of the df0 term: |df0| |T u0| / |a|^2
        mag = std::max(mag, e.df0.norm() * 2.0 * mu * std::abs(G.xn) * eta.norm() / std::norm(G.a));
    }
    const double abs_tol = rel_tol * std::max(mag, 1e-300);
    for (int side = 0; side < 2; ++side) {
        const EdgeData& e = side == 0 ? plus : minus;
        const Geo& G = geo[side];
        const auto* id = ids[side];
        out.R[id[3]] = edge_integral(
            [&](double r) {
                const CVec2 df = e.f(r) - e.f0 - r * e.df0;
                return bdot(df, u0.traction(r * G.t, G.nu, c.lame));
            },
            c.h, scale, rel_tol, abs_tol);
        out.R[id[4]] = -edge_integral([&](double r) { return bdot(e.g(r) - e.g0, u0.value(r * G.t)); }, c.h, scale,
                                      rel_tol, abs_tol);
        out.R[id[5]] = edge_integral(
            [&](double r) { return r * bdot(e.df0, u0.traction(r * G.t, G.nu, c.lame)); }, c.h, scale, rel_tol,
            abs_tol);
    }
    out.R[11] = r11;
    if (D) {
        // minus the Betti form of (D, u0) over the arc, exterior normal x_hat
        auto arc = [&](double phi) {
            const Vec2 n(std::cos(phi), std::sin(phi));
            const Vec2 x = c.h * n;
            return c.h * (bdot(D->traction(x, n, c.lame), u0.value(x)) - bdot(D->value(x), u0.traction(x, n, c.lame)));
        };
        out.R[9] = -integrate(arc, 0.0, c.theta, rel_tol, abs_tol).value;
    } else {
        out.R[9] = out.edge_pairing;
    }
    return out;
}

Extrapolation sweep_and_extrapolate(const std::vector<double>& params, const std::vector<Complex>& values,
                                    int first_power) {
    const std::size_t n = params.size();
    if (n < 4) throw ValidationError("extrapolation needs at least four sweep values");
    if (values.size() != n) throw ValidationError("extrapolation: parameter and value counts differ");
    for (std::size_t i = 1; i < n; ++i)
        if (!(params[i] > params[i - 1])) throw ValidationError("extrapolation parameters must increase");
    const double ratio = params[1] / params[0];
    for (std::size_t i = 2; i < n; ++i)
        if (std::abs(params[i] / params[i - 1] - ratio) > 1e-9 * ratio)
            throw ValidationError("extrapolation parameters must be geometrically spaced");

    Extrapolation ex;
    ex.table.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        ex.table[i].push_back(values[i]);
        for (std::size_t j = 1; j <= i; ++j) {
            const double k = first_power + static_cast<double>(j) - 1.0;
            const double r = std::pow(params[i] / params[i - 1], k);
            const Complex cur = ex.table[i][j - 1], prev = ex.table[i - 1][j - 1];
            ex.table[i].push_back(cur + (cur - prev) / (r - 1.0));
        }
    }
    ex.limit = ex.table[n - 1][n - 1];

    double vmax = 0.0;
    for (const auto& v : values) vmax = std::max(vmax, std::abs(v));
    // Final Richardson weights w (sum 1, annihilating each modelled power) and the
    // residual of the fit that drops the last power (one degree of freedom): a noise probe.
    Eigen::MatrixXd W(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) W(i, j) = j == 0 ? 1.0 : std::pow(params[i], -(first_power + double(j) - 1.0));
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
    e1(0) = 1.0;
    const Eigen::VectorXd w = W.transpose().fullPivLu().solve(e1);
    const Eigen::MatrixXd V = W.leftCols(n - 1);
    Eigen::VectorXd yr(n), yi(n);
    for (std::size_t i = 0; i < n; ++i) {
        yr(i) = values[i].real();
        yi(i) = values[i].imag();
    }
    const auto qr = V.colPivHouseholderQr();
    const double res = std::sqrt((yr - V * qr.solve(yr)).squaredNorm() + (yi - V * qr.solve(yi)).squaredNorm());
    const double last = std::abs(ex.table[n - 1][n - 1] - ex.table[n - 1][n - 2]);
    // factor 8 gives about 95% coverage for independent Gaussian noise on geometric sweeps
    ex.error_estimate = last + 8.0 * w.norm() * res + 16.0 * std::numeric_limits<double>::epsilon() * w.lpNorm<1>() * vmax;

    // rate from successive differences; differences at rounding level count as converged
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(vmax, 1e-300);
    std::vector<double> px, dy;
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = std::abs(values[i + 1] - values[i]);
        if (d <= floor) continue;
        if (d > prev * (1.0 + 1e-9)) monotone = false;
        prev = d;
        px.push_back(params[i]);
        dy.push_back(d);
    }
    ex.fitted_rate = px.size() >= 2 ? fit_power_rate(px, dy) : std::numeric_limits<double>::infinity();
    ex.inconclusive = !monotone;
    // already converged to rounding: extrapolating would only amplify the noise
    if (std::abs(values[n - 1] - values[n - 2]) <= floor) {
        ex.limit = values[n - 1];
        ex.error_estimate = floor;
        ex.inconclusive = false;
    }
    return ex;
}

double fit_power_rate(const std::vector<double>& x, const std::vector<double>& y) {
    // returns p with y ~ C x^{-p}
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double fit_exponential_rate(const std::vector<double>& x, const std::vector<double>& y) {
    // returns rho with y ~ C exp(-rho x)
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ly = std::log(y[i]);
        sx += x[i];
        sy += ly;
        sxx += x[i] * x[i];
        sxy += x[i] * ly;
    }
    return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Vec2 solve_jump_system(double theta, double theta0, Complex e_inf, double mu) {
    const double b = 2.0 * theta0 - theta;
    const Complex N = std::exp(kI * (theta - 2.0 * theta0)) * e_inf / (2.0 * mu);
    Mat2 M;
    M << std::sin(b), std::cos(b), std::cos(b), -std::sin(b);
    const Vec2 x = M.inverse() * Vec2(N.real(), N.imag());  // (d_perp . df, d . df)
    const Vec2 d(std::cos(theta0), std::sin(theta0));
    return x(1) * d + x(0) * perp_ccw(d);
}

namespace {

std::vector<double> default_theta0(double theta) {
    // admissible d: angle in (theta + pi/2, 3 pi/2)
    const double mid = 0.5 * theta + kPi;
    const double w = kPi - theta;
    return {mid, mid - 0.1 * w, mid + 0.1 * w};
}

bool has_imaginary(const EdgeData& e, double h) {
    if (e.f0.imag().norm() > 0 || e.df0.imag().norm() > 0 || e.g0.imag().norm() > 0) return true;
    for (double r : {0.1 * h, 0.37 * h, 0.8 * h, h})
        if (e.f(r).imag().norm() > 0 || e.g(r).imag().norm() > 0) return true;
    return false;
}

struct RealRecovery {
    Vec2 df = Vec2::Zero();
    double err = 0.0;
    bool inconclusive = false;
    std::vector<Vec2> per_dir;
    std::vector<std::vector<Complex>> pairings;
};

RealRecovery recover_real(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                          const std::vector<double>& taus, const std::vector<double>& theta0) {
    RealRecovery out;
    for (double t0 : theta0) {
        const Vec2 d(std::cos(t0), std::sin(t0));
        std::vector<Complex> E;
        for (double tau : taus) {
            const auto p = ElasticCgoParams::make(tau, d, Vec2::Zero(), c.omega, c.lame);
            E.push_back(edge_pairing(c, plus, minus, ElasticCgo(p)));
        }
        const Extrapolation ex = sweep_and_extrapolate(taus, E, 1);
        const Vec2 df = solve_jump_system(c.theta, t0, ex.limit, c.lame.mu);
        out.per_dir.push_back(df);
        out.pairings.push_back(E);
        out.err = std::max(out.err, ex.error_estimate / (2.0 * c.lame.mu));
        if (ex.inconclusive || ex.fitted_rate < 0.5) out.inconclusive = true;
    }
    for (const auto& v : out.per_dir) out.df += v / static_cast<double>(out.per_dir.size());
    for (const auto& v : out.per_dir) out.err = std::max(out.err, (v - out.df).norm());
    return out;
}

}  // namespace

JumpRecovery recover_displacement_jump(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                                       const std::vector<double>& taus_scaled, std::vector<double> theta0) {
    if (!(c.theta > 0.0 && c.theta < kPi)) throw ValidationError("corner opening must lie in (0, pi)");
    if (theta0.empty()) theta0 = default_theta0(c.theta);
    for (double t0 : theta0)
        if (sector_separation(Vec2(std::cos(t0), std::sin(t0)), 0.0, c.theta) >= 0.0)
            throw ValidationError("no negative separation: d points into the sector");
    JumpRecovery out;
    for (double s : taus_scaled) out.taus.push_back(s / c.h);

    const RealRecovery re = recover_real(c, plus.real_part(), minus.real_part(), out.taus, theta0);
    out.delta_f = re.df.cast<Complex>();
    out.error_estimate = re.err;
    out.inconclusive = re.inconclusive;
    out.pairings = re.pairings;
    for (const auto& v : re.per_dir) out.per_direction.push_back(v.cast<Complex>());
    if (has_imaginary(plus, c.h) || has_imaginary(minus, c.h)) {
        const RealRecovery im = recover_real(c, plus.imag_part(), minus.imag_part(), out.taus, theta0);
        out.delta_f += kI * im.df.cast<Complex>();
        out.error_estimate = std::hypot(out.error_estimate, im.err);
        out.inconclusive = out.inconclusive || im.inconclusive;
        for (std::size_t i = 0; i < im.per_dir.size(); ++i) out.per_direction[i] += kI * im.per_dir[i].cast<Complex>();
    }
    return out;
}

Mat2 identity_rotation(double theta) { return -rotation(theta); }

RotationRecovery recover_traction_rotation(const CornerSetup& c, const EdgeData& plus, const EdgeData& minus,
                                           const std::vector<double>& taus_scaled, double jump_tol) {
    RotationRecovery out;
    for (double s : taus_scaled) out.taus.push_back(s / c.h);
    if (plus.df0.norm() > 0.0 || minus.df0.norm() > 0.0) {
        out.refused = true;
        out.diagnostic = "tangential derivative of the displacement jump must vanish at the corner";
        return out;
    }
    const JumpRecovery jr = recover_displacement_jump(c, plus, minus, taus_scaled);
    if (jr.delta_f.norm() > jump_tol) {
        out.refused = true;
        out.diagnostic = "displacement jump at the corner is not zero (|df| = " + std::to_string(jr.delta_f.norm()) + ")";
        return out;
    }
    const std::vector<double> t0s = default_theta0(c.theta);
    auto run = [&](const EdgeData& p, const EdgeData& m) {
        Complex L = 0.0;
        for (double t0 : t0s) {
            const Vec2 d(std::cos(t0), std::sin(t0));
            std::vector<Complex> v;
            for (double tau : out.taus) {
                const auto prm = ElasticCgoParams::make(tau, d, Vec2::Zero(), c.omega, c.lame);
                v.push_back(tau * edge_pairing(c, p, m, ElasticCgo(prm)));
            }
            const Extrapolation ex = sweep_and_extrapolate(out.taus, v, 1);
            L += ex.limit / static_cast<double>(t0s.size());
            out.error_estimate = std::max(out.error_estimate, ex.error_estimate);
            if (ex.inconclusive) out.inconclusive = true;
        }
        return L;
    };
    out.limit(0) = run(plus.real_part(), minus.real_part());
    if (has_imaginary(plus, c.h) || has_imaginary(minus, c.h)) out.limit(1) = run(plus.imag_part(), minus.imag_part());
    // |g_plus - Q g_minus| = |L| for each of the real and imaginary data parts
    out.residual = std::hypot(std::abs(out.limit(0)), std::abs(out.limit(1)));
    return out;
}

CVec2 LocalField::value(const Vec2& y) const { return R_.transpose().cast<Complex>() * u_.value(xc_ + R_ * y); }

CMat2 LocalField::gradient(const Vec2& y) const {
    const CMat2 R = R_.cast<Complex>();
    return R.transpose() * u_.gradient(xc_ + R_ * y) * R;
}

std::array<CMat2, 2> LocalField::hessian(const Vec2& y) const {
    const CMat2 R = R_.cast<Complex>();
    const auto H = u_.hessian(xc_ + R_ * y);
    std::array<CMat2, 2> out{CMat2::Zero(), CMat2::Zero()};
    for (int k = 0; k < 2; ++k)
        for (int c = 0; c < 2; ++c) out[k] += R_(c, k) * (R.transpose() * H[c] * R);
    return out;
}

CVec2 SumField::value(const Vec2& x) const {
    CVec2 s = CVec2::Zero();
    for (const auto& [f, w] : parts_) s += w * f->value(x);
    return s;
}

CMat2 SumField::gradient(const Vec2& x) const {
    CMat2 s = CMat2::Zero();
    for (const auto& [f, w] : parts_) s += w * f->gradient(x);
    return s;
}

std::array<CMat2, 2> SumField::hessian(const Vec2& x) const {
    std::array<CMat2, 2> s{CMat2::Zero(), CMat2::Zero()};
    for (const auto& [f, w] : parts_) {
        const auto h = f->hessian(x);
        s[0] += w * h[0];
        s[1] += w * h[1];
    }
    return s;
}

InterfaceProbeReport interface_corner_probe(const VectorField& u, const LameParameters& lame1,
                                            const LameParameters& lame2, const Vec2& xc, double dir_min,
                                            const CornerSetup& c, const std::vector<double>& s_sweep) {
    if (!(c.theta > 0.0 && c.theta < kPi)) throw ValidationError("corner opening must lie in (0, pi)");
    const LocalField ul(u, xc, dir_min);
    InterfaceProbeReport rep;
    rep.s = s_sweep;

    auto jump_traction = [&](const Vec2& y, const Vec2& nu) {
        const CMat2 G = ul.gradient(y);
        return CVec2(traction(G, nu, lame2) - traction(G, nu, lame1));
    };
    auto complexify = [](const CVec2& t) { return t(0) + kI * t(1); };
    {
        const Complex tp = complexify(jump_traction(Vec2::Zero(), c.nu_plus()));
        const Complex tm = complexify(jump_traction(Vec2::Zero(), c.nu_minus()));
        const Complex e = std::exp(-kI * c.theta);
        rep.t_reference = (tp * e + tm) / (e + 1.0);
    }

    std::vector<double> vol_s, vol_m;
    for (double s : s_sweep) {
        const LameZeroCgo u0(s, CornerFrame{});
        Complex P = 0.0;
        const double scale = 1.0 / (s * s);
        for (int side = 0; side < 2; ++side) {
            const Vec2 t = side == 0 ? c.dir_plus() : c.dir_minus();
            const Vec2 nu = side == 0 ? c.nu_plus() : c.nu_minus();
            P += edge_integral([&](double r) { return bdot(jump_traction(r * t, nu), u0.value(r * t)); }, c.h, scale,
                               1e-12);
        }
        rep.t_eff.push_back(P / (edge_integral_exact(s, c.h, c.theta) + edge_integral_exact(s, c.h, 0.0)));

        const QuadResult vol = integrate_sector(
            [&](double r, double phi) {
                if (r == 0.0) return Complex(0.0);
                const Vec2 y = r * Vec2(std::cos(phi), std::sin(phi));
                return bdot(ul.value(y), u0.value(y));
            },
            0.0, c.theta, c.h, 1e-10, 1e-300);
        const double m = c.omega * c.omega * std::abs(vol.value);
        rep.volume_term.push_back(m);
        if (m > 0.0) {
            vol_s.push_back(s);
            vol_m.push_back(m);
        }
    }
    rep.volume_decay_rate = vol_s.size() >= 2 ? fit_power_rate(vol_s, vol_m) : 0.0;
    rep.extrapolated = sweep_and_extrapolate(s_sweep, rep.t_eff, 1);
    rep.t_estimate = Vec2(rep.extrapolated.limit.real(), rep.extrapolated.limit.imag());
    return rep;
}

}  // namespace disloc
