#include "disloc/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <limits>
#include <map>
#include <mutex>
#include <queue>

namespace disloc {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

std::string fmt_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct Piece {
    double a, b;
    Complex v;
    double err, l1;
    bool operator<(const Piece& o) const { return err < o.err; }
};

// One Kronrod 15 / Gauss 7 pair with err = |K - G|. (boost's own estimate carries a
// fixed absolute floor near 1e-13, which breaks bisection on short pieces.)
Piece rule(const std::function<Complex(double)>& f, double a, double b) {
    static const auto& xk = GK::abscissa();
    static const auto& wk = GK::weights();
    static const auto& wg = boost::math::quadrature::gauss<double, 7>::weights();
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    Complex K = 0.0, G = 0.0;
    double l1 = 0.0;
    const Complex f0 = f(c);
    K += wk[0] * f0;
    G += wg[0] * f0;
    l1 += wk[0] * std::abs(f0);
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const Complex fp = f(c + hw * xk[i]), fm = f(c - hw * xk[i]);
        K += wk[i] * (fp + fm);
        l1 += wk[i] * (std::abs(fp) + std::abs(fm));
        if (i % 2 == 0) G += wg[i / 2] * (fp + fm);
    }
    Piece p{a, b, K * hw, std::abs(K - G) * hw, l1 * hw};
    return p;
}

// Global adaptive bisection on the piece with the largest error estimate. Stops
// when the summed error meets max(abs_tol, rel_tol * L1); boost's own driver has no
// absolute floor, so integrands that are pure rounding noise would recurse forever.
QuadResult gk(const std::function<Complex(double)>& f, double a, double b, double rel_tol,
              double abs_tol, unsigned depth) {
    if (std::isinf(b)) {
        // x = a + t / (1 - t) maps [0, 1) onto [a, inf); Kronrod nodes never touch t = 1
        auto g = [&](double t) {
            const double u = 1.0 - t;
            return f(a + t / u) / (u * u);
        };
        return gk(g, 0.0, 1.0, rel_tol, abs_tol, depth);
    }
    const std::size_t budget = std::size_t(1) << std::min(depth, 14u);
    std::priority_queue<Piece> q;
    q.push(rule(f, a, b));
    Complex total = q.top().v;
    double err = q.top().err, l1 = q.top().l1;
    while (err > std::max(abs_tol, rel_tol * l1) && q.size() < budget) {
        Piece p = q.top();
        q.pop();
        const double m = 0.5 * (p.a + p.b);
        if (!(m > p.a && m < p.b)) {
            q.push(p);
            break;
        }
        Piece L = rule(f, p.a, m), R = rule(f, m, p.b);
        total += L.v + R.v - p.v;
        err += L.err + R.err - p.err;
        l1 += L.l1 + R.l1 - p.l1;
        q.push(L);
        q.push(R);
    }
    if (!std::isfinite(total.real()) || !std::isfinite(total.imag()))
        throw NumericalError("quadrature produced a non-finite value");
    // recompute the error sum to shed cancellation drift
    double e = 0.0;
    for (auto c = q; !c.empty(); c.pop()) e += c.top().err;
    if (e > std::max(abs_tol, rel_tol * l1) * 10.0 && e > 1e3 * std::numeric_limits<double>::epsilon() * l1)
        throw NumericalError("adaptive quadrature did not converge on [" + fmt_g(a) + ", " +
                             fmt_g(b) + "] (error " + fmt_g(e) + ", L1 " + fmt_g(l1) + ")");
    return {total, e};
}

}  // namespace

QuadResult integrate(const std::function<Complex(double)>& f, double a, double b, double rel_tol,
                     double abs_tol, unsigned max_depth) {
    if (a == b) return {Complex(0.0), 0.0};
    return gk(f, a, b, rel_tol, abs_tol, max_depth);
}

QuadResult integrate_pieces(const std::function<Complex(double)>& f, std::vector<double> points,
                            double rel_tol, double abs_tol, unsigned max_depth) {
    std::sort(points.begin(), points.end());
    QuadResult total{Complex(0.0), 0.0};
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        if (points[k + 1] <= points[k]) continue;
        auto r = integrate(f, points[k], points[k + 1], rel_tol, abs_tol, max_depth);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

QuadResult integrate_sector(const std::function<Complex(double, double)>& f, double phi0,
                            double phi1, double R, double rel_tol, double abs_tol) {
    double inner_err = 0.0;
    auto outer = [&](double phi) {
        auto g = [&](double r) { return f(r, phi) * r; };
        auto res = integrate(g, 0.0, R, rel_tol * 0.1, abs_tol * 0.1);
        inner_err = std::max(inner_err, res.error);
        return res.value;
    };
    auto res = integrate(outer, phi0, phi1, rel_tol, abs_tol);
    res.error += inner_err * std::abs(phi1 - phi0);
    return res;
}

GaussRule gauss_legendre(int n, double a, double b) {
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    GaussRule ref;
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(n);
        if (it != cache.end()) ref = it->second;
    }
    if (ref.x.empty()) {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double beta = k / std::sqrt(4.0 * k * k - 1.0);
            J(k, k - 1) = J(k - 1, k) = beta;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        ref.x.resize(n);
        ref.w.resize(n);
        for (int k = 0; k < n; ++k) {
            ref.x[k] = es.eigenvalues()(k);
            ref.w[k] = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
        }
        std::lock_guard<std::mutex> lock(mtx);
        cache[n] = ref;
    }
    GaussRule out = ref;
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    for (int k = 0; k < n; ++k) {
        out.x[k] = c + hw * ref.x[k];
        out.w[k] = hw * ref.w[k];
    }
    return out;
}

}  // namespace disloc
