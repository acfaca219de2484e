#pragma once

#include "disloc/common.hpp"

#include <functional>
#include <vector>

namespace disloc {

struct QuadResult {
    Complex value;
    double error = 0.0;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]; b may be +infinity.
// Converged when error <= max(abs_tol, rel_tol * L1).
QuadResult integrate(const std::function<Complex(double)>& f, double a, double b,
                     double rel_tol = 1e-10, double abs_tol = 1e-12, unsigned max_depth = 30);

// Same, with the interval split at the given interior breakpoints.
QuadResult integrate_pieces(const std::function<Complex(double)>& f, std::vector<double> points,
                            double rel_tol = 1e-10, double abs_tol = 1e-12, unsigned max_depth = 30);

// Nested adaptive rule over an angular sector in polar coordinates:
// int_{phi0}^{phi1} int_{0}^{R} f(r, phi) r dr dphi.  R may be +infinity.
QuadResult integrate_sector(const std::function<Complex(double, double)>& f, double phi0,
                            double phi1, double R, double rel_tol = 1e-10, double abs_tol = 1e-14);

struct GaussRule {
    std::vector<double> x, w;
};

// n-point Gauss-Legendre on [a, b] (Golub-Welsch).
GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

}  // namespace disloc
