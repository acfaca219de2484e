#include "disloc/quadrature.hpp"

#include <doctest.h>

#include <limits>

using namespace disloc;

TEST_CASE("adaptive quadrature on smooth and singular integrands") {
    auto r = integrate([](double x) { return Complex(std::exp(x)); }, 0.0, 1.0, 1e-13, 0.0);
    CHECK(std::abs(r.value - (std::exp(1.0) - 1.0)) < 1e-13);
    r = integrate_pieces([](double x) { return Complex(1.0 / std::sqrt(x)); }, {0.0, 1e-8, 1e-4, 1.0}, 1e-12, 1e-300);
    CHECK(std::abs(r.value - 2.0) < 1e-7);
    r = integrate([](double x) { return std::exp(Complex(-1.0, 3.0) * x); }, 0.0, std::numeric_limits<double>::infinity(),
                  1e-12, 1e-300);
    CHECK(std::abs(r.value - 1.0 / Complex(1.0, -3.0)) < 1e-12);
}

TEST_CASE("Gauss-Legendre is exact to degree 2n - 1") {
    const GaussRule g = gauss_legendre(8, 0.0, 2.0);
    double s = 0.0, w = 0.0;
    for (int k = 0; k < 8; ++k) {
        s += g.w[k] * std::pow(g.x[k], 15);
        w += g.w[k];
    }
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s == doctest::Approx(std::pow(2.0, 16) / 16.0).epsilon(1e-13));
}

TEST_CASE("sector quadrature of a polynomial over a finite wedge") {
    // int_0^{pi/2} int_0^1 r^2 cos(phi) r dr dphi = 1/4
    const auto r = integrate_sector([](double rr, double phi) { return Complex(rr * rr * std::cos(phi)); }, 0.0, kPi / 2, 1.0,
                                    1e-12, 1e-300);
    CHECK(std::abs(r.value - 0.25) < 1e-12);
}
