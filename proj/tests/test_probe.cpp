#include "disloc/probe.hpp"

#include <doctest.h>

#include <memory>

using namespace disloc;

namespace {
CornerSetup corner(double theta, double h = 0.2) {
    CornerSetup c;
    c.theta = theta;
    c.h = h;
    c.lame = {2, 1};
    c.omega = 1.0;
    return c;
}
}  // namespace

TEST_CASE("identity closes for a smooth field difference") {
    const CornerSetup c = corner(2 * kPi / 3);
    auto z = std::make_shared<ElasticCgo>(ElasticCgoParams::make(1.3, Vec2(0.6, 0.8), Vec2(0.1, -0.2), 1.0, c.lame));
    SumField D;
    D.add(z, 1.0);
    const auto P = edge_data_from_field(D, c, true), M = edge_data_from_field(D, c, false);
    for (double tau : {10.0, 40.0}) {
        const auto prm = ElasticCgoParams::make(tau, default_direction(0.0, c.theta), Vec2::Zero(), c.omega, c.lame);
        const auto I = probe_identity(c, P, M, prm, &D);
        CHECK(std::abs(I.residual()) < 1e-10 * I.scale());
    }
}

TEST_CASE("Richardson removes a 1/tau error") {
    std::vector<double> t{10, 20, 40, 80};
    std::vector<Complex> v;
    for (double x : t) v.push_back(Complex(2.0, -1.0) + 3.0 / x + 1.0 / (x * x));
    const auto e = sweep_and_extrapolate(t, v);
    CHECK(std::abs(e.limit - Complex(2.0, -1.0)) < 1e-10);
    CHECK_FALSE(e.inconclusive);
}

TEST_CASE("jump system inverts the forward relation") {
    // E_inf = 2 mu zeta . df with the sign conventions of the probe; round trip through random data
    for (double theta : {0.4, 1.2, 2.5})
        for (double t0 : {0.1, 0.3}) {
            const Vec2 df(0.7, -1.3);
            const double a = 2 * t0 - theta;
            const Mat2 S = (Mat2() << std::sin(a), std::cos(a), std::cos(a), -std::sin(a)).finished();
            const Vec2 d(std::cos(t0), std::sin(t0)), dp(-std::sin(t0), std::cos(t0));
            const Vec2 rhs = S * Vec2(dp.dot(df), d.dot(df));
            const Complex N(rhs.x(), rhs.y());
            const Complex e_inf = N * 2.0 * 1.5 / std::exp(kI * (theta - 2 * t0));
            CHECK((solve_jump_system(theta, t0, e_inf, 1.5) - df).norm() < 1e-13);
        }
}

TEST_CASE("planted corner slip is recovered") {
    const CornerSetup c = corner(kPi / 2, 0.1);
    const auto r = recover_displacement_jump(c, EdgeData::constant(CVec2(1, 0), CVec2(0.3, 0.1)),
                                             EdgeData::constant(CVec2(0, 0), CVec2(-0.2, 0.4)));
    CHECK((r.delta_f - CVec2(1, 0)).norm() < 1e-3);
    const auto e = recover_displacement_jump(
        c, EdgeData::expansion(CVec2(1, 2), CVec2(0.5, -1), CVec2(0.2, 0.1), 1.5, CVec2(0, 0)),
        EdgeData::expansion(CVec2(1, 2), CVec2(-0.4, 0.3), CVec2(-0.3, 0.2), 2.0, CVec2(1, 0)));
    CHECK(e.delta_f.norm() < 1e-3);
}

TEST_CASE("traction relation: the probe sees g+ - Q g-") {
    const CornerSetup c = corner(kPi / 3, 0.1);
    const Mat2 Q = identity_rotation(c.theta);
    CHECK(Q.determinant() == doctest::Approx(1.0));
    const Vec2 gm(0.7, 0.2);
    const auto ok = recover_traction_rotation(c, EdgeData::constant(CVec2(0.4, -0.3), (Q * gm).cast<Complex>()),
                                              EdgeData::constant(CVec2(0.4, -0.3), gm.cast<Complex>()));
    REQUIRE_FALSE(ok.refused);
    CHECK(ok.residual < 1e-3);
    const auto bad = recover_traction_rotation(
        c, EdgeData::constant(CVec2(0.4, -0.3), (Q * gm + Vec2(0.5, 0)).cast<Complex>()),
        EdgeData::constant(CVec2(0.4, -0.3), gm.cast<Complex>()));
    CHECK(bad.residual > 0.1);
    // slip jump present: the traction stage refuses
    const auto ref = recover_traction_rotation(c, EdgeData::constant(CVec2(1, 0), CVec2(0, 0)),
                                               EdgeData::constant(CVec2(0, 0), CVec2(0, 0)));
    CHECK(ref.refused);
}

TEST_CASE("interface probe: identical layers give no traction mismatch") {
    CMat2 B;
    B << 1, 0, 0, 0;
    const LinearField u(CVec2::Zero(), B);
    CornerSetup c;
    c.theta = kPi / 3;
    c.h = 0.25;
    c.omega = 1.0;
    const auto same = interface_corner_probe(u, {1, 1}, {1, 1}, Vec2(0.2, 0.1), 0.4, c);
    CHECK(same.t_estimate.norm() < 1e-6);
    const auto diff = interface_corner_probe(u, {1, 1}, {3, 2}, Vec2(0.2, 0.1), 0.4, c);
    CHECK(std::abs(Complex(diff.t_estimate.x(), diff.t_estimate.y()) - diff.t_reference) < 1e-3);
    CHECK(std::abs(diff.t_reference) > 0.1);
}
