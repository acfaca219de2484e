#include "disloc/dimred.hpp"

#include <doctest.h>

#include <memory>

using namespace disloc;

TEST_CASE("cutoff profile: unit mass and vanishing derivative moments") {
    for (double hw : {0.1, 0.25, 0.4}) {
        const CutoffProfile p = CutoffProfile::normalized(0.05, hw, 4);
        CHECK(p.integral() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(p.moment_d1()) <= 1e-14);
        CHECK(std::abs(p.moment_d2()) <= 1e-14);
        CHECK(p.value(p.center + hw) == 0.0);
    }
    CHECK_THROWS_AS(CutoffProfile::for_slab(0.9, 1.0, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(CutoffProfile::normalized(0.0, 0.2, 2), ValidationError);
}

TEST_CASE("reduced system holds for 3D plane waves; the exchanged splitting does not") {
    const LameParameters lame{2, 1};
    const double omega = 1.0;
    const CutoffProfile phi = CutoffProfile::for_slab(0.0, 1.0, 1.0, 4);
    for (double kz : {1.0, 2.5}) {
        const PlaneWave3D s = PlaneWave3D::shear(kz, Vec2(1, 0.3), omega, lame);
        const PlaneWave3D p = PlaneWave3D::pressure(kz, Vec2(-0.2, 1), omega, lame, 0.5);
        for (const PlaneWave3D* w : {&s, &p}) {
            const Vec3 x(0.1, 0.2, 0.0);
            CHECK(lame3d_residual(*w, x, lame, omega).norm() <= 1e-12 * (w->hessian(x)[0].norm() + w->hessian(x)[2].norm()));
            const ReducedResidual r = reduced_residual(*w, Vec2(0.3, -0.2), phi, lame, omega, 128);
            CHECK(r.res_12.norm() < 1e-9 * r.scale);
            CHECK(std::abs(r.res_3) < 1e-9 * r.scale);
        }
        const ReducedResidual r = reduced_residual(p, Vec2(0.3, -0.2), phi, lame, omega, 128);
        CHECK(std::max(r.swapped_res_12.norm(), std::abs(r.swapped_res_3)) > 1e-3 * r.scale);
    }
}

TEST_CASE("scalar corner identity closes") {
    CornerSetup c;
    c.theta = kPi / 3;
    c.h = 0.5;
    c.lame = {2, 1};
    const auto P = ScalarEdgeData::expansion(0.7, 0.0, 0.3, 2.0, 0.4, 0.2, 1.0);
    const auto M = ScalarEdgeData::expansion(0.0, 0.0, -0.1, 2.0, 0.1, 0.1, 1.0);
    for (double s : {256.0, 1024.0}) {
        const auto I = scalar_identity(c, P, M, s, 1.0);
        CHECK(std::abs(I.residual()) < 1e-9 * std::abs(I.lhs));
    }
}

TEST_CASE("third component: slip first, then traction once the slip jump vanishes") {
    CornerSetup c;
    c.theta = kPi / 3;
    c.h = 0.5;
    c.lame = {2, 1};
    const auto slip = recover_third_component(c, ScalarEdgeData::expansion(0.7, 0.0, 0.3, 2.0, 0.1, 0.2, 1.0),
                                              ScalarEdgeData::expansion(0.0, 0.0, -0.1, 2.0, 0.1, 0.1, 1.0), 1.0);
    CHECK(std::abs(slip.delta_Pf3 - 0.7) < 5e-3);
    CHECK_FALSE(slip.stage_b);
    const auto tr = recover_third_component(c, ScalarEdgeData::expansion(0.3, 0.0, 0.3, 2.0, 0.4, 0.2, 1.0),
                                            ScalarEdgeData::expansion(0.3, 0.0, -0.1, 2.0, 0.1, 0.1, 1.0), 1.0);
    REQUIRE(tr.stage_b);
    CHECK(std::abs(tr.Pg3_plus - 0.4) < 5e-3);
    CHECK(std::abs(tr.Pg3_minus - 0.1) < 5e-3);
}
