#include "disloc/cgo.hpp"

#include <doctest.h>

#include <random>

using namespace disloc;

// reference values from 40-digit quadrature
TEST_CASE("edge integral matches high-precision quadrature") {
    struct Ref {
        double s, h, theta, re, im;
    };
    const Ref refs[] = {
        {4, 0.25, 0.0, 0.07424926878627024054, 0.0},
        {16, 1.0, kPi / 4, 0.0055242230485032775495, -0.0055242590355409816544},
        {64, 1.0, kPi / 2, 3.3489099367291270306e-22, -0.00048828124999999999938},
    };
    for (const auto& r : refs) {
        const Complex v = edge_integral_exact(r.s, r.h, r.theta);
        CHECK(std::abs(v - Complex(r.re, r.im)) <= 1e-13 * std::abs(Complex(r.re, r.im)));
    }
}

TEST_CASE("sector integral closed form") {
    // (0, pi/2), s = 16, harmonic family: -12 i / 256
    const Complex v = sector_integral_exact(0.0, kPi / 2, 16.0, 2);
    CHECK(std::abs(v - Complex(0.0, -12.0 / 256.0)) < 1e-16);
    // s^-4 scaling for the Lame-zero family
    const Complex a = sector_integral_exact(-0.3, 1.1, 2.0, 4), b = sector_integral_exact(-0.3, 1.1, 4.0, 4);
    CHECK(std::abs(a / b - 16.0) < 1e-13);
}

TEST_CASE("gamma tail leading term and bound") {
    const GammaTail g = gamma_tail(1.5, 1.0, Complex(10, 5));
    // head integral over (0, 1) from 40-digit quadrature
    const Complex head(0.0012693716377481885642, -0.0029179496327861125064);
    CHECK(std::abs(head - g.leading) <= g.tail_bound);
    CHECK(g.tail_bound == doctest::Approx(2.0 / 10.0 * std::exp(-5.0)));
}

TEST_CASE("elastic CGO: xi . eta = 0, xi . xi = -ks^2, |eta| <= sqrt 3") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 40; ++k) {
        const LameParameters lame{0.5 + 2 * U(rng), 0.5 + 2 * U(rng)};
        const double omega = 2 * U(rng), ks = omega / std::sqrt(lame.mu);
        const double a = 6.3 * U(rng);
        const auto p = ElasticCgoParams::make(ks + 0.2 + 10 * U(rng), Vec2(std::cos(a), std::sin(a)), Vec2(U(rng), U(rng)), omega, lame);
        const ElasticCgo u(p);
        CHECK(std::abs(bdot(u.xi(), u.eta())) < 1e-12 * u.xi().norm());
        CHECK(std::abs(bdot(u.xi(), u.xi()) + ks * ks) < 1e-12 * u.xi().squaredNorm());
        CHECK(u.eta().norm() <= std::sqrt(3.0) + 1e-12);
        const Vec2 x(U(rng), U(rng)), nu(0.6, 0.8);
        const CVec2 t1 = u.traction(x, nu, lame), t2 = u.traction_closed_form(x, nu);
        CHECK((t1 - t2).norm() < 1e-11 * t1.norm());
        const CVec2 res = lame_operator(u, x, lame) + omega * omega * u.value(x);
        CHECK(res.norm() < 1e-11 * (lame.lambda + 2 * lame.mu) * u.hessian(x)[0].norm());
    }
}

TEST_CASE("tau below the shear wavenumber is rejected") {
    const LameParameters lame{1, 1};
    CHECK_THROWS_AS(ElasticCgoParams::make(0.5, Vec2(1, 0), Vec2::Zero(), 1.0, lame).validate(), ValidationError);
}

TEST_CASE("harmonic and Lame-zero CGOs solve their equations off the cut") {
    const CornerFrame fr{Vec2(0.3, -0.1), 0.7};
    const HarmonicCgo h(9.0, fr);
    const LameZeroCgo z(5.0, fr);
    const LameParameters lame{2, 1};
    for (double phi : {-2.5, -1.0, 0.0, 0.8, 2.9}) {
        for (double r : {0.05, 0.4, 1.0}) {
            const Vec2 x = fr.to_global(r * Vec2(std::cos(phi), std::sin(phi)));
            CHECK(std::abs(h.laplacian(x)) < 1e-10 * std::abs(h.value(x)) / (r * r) + 1e-300);
            CHECK(lame_operator(z, x, lame).norm() < 1e-10 * z.hessian(x)[0].norm() + 1e-300);
        }
    }
}

TEST_CASE("linear field: traction by hand") {
    CMat2 B;
    B << 1, 0, 0, 0;
    const LinearField u(CVec2::Zero(), B);
    const LameParameters lame{3, 2};
    // sigma = lambda tr(B) I + mu (B + B^T) = diag(7, 3)
    const CVec2 t = u.traction(Vec2::Zero(), Vec2(1, 0), lame);
    CHECK(std::abs(t(0) - 7.0) < 1e-15);
    CHECK(std::abs(u.traction(Vec2::Zero(), Vec2(0, 1), lame)(1) - 3.0) < 1e-15);
}
