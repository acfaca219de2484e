#include "disloc/geometry.hpp"

#include <doctest.h>

using namespace disloc;

namespace {
LayeredDomain unit_square() {
    LayeredDomain d;
    d.outer = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    d.layers = {LameParameters{2, 1}};
    d.dirichlet_edges = {0};
    d.measurement.edges = {2};
    return d;
}
}  // namespace

TEST_CASE("theta matrix is a reflection") {
    for (double t : {0.3, 1.0, kPi / 2, 2.5}) {
        const Mat2 T = theta_matrix(t);
        CHECK(T.determinant() == doctest::Approx(-1.0).epsilon(1e-15));
        CHECK((T * T - Mat2::Identity()).norm() < 1e-15);
        CHECK((T - T.transpose()).norm() == 0.0);
    }
    const Mat2 T = theta_matrix(kPi / 2);
    CHECK(std::abs(T(0, 1) + 1.0) < 1e-15);
    CHECK(std::abs(T(0, 0)) < 1e-15);
}

TEST_CASE("strong convexity of Lame parameters") {
    CHECK(validate_lame({2, 1}, 2).ok());
    CHECK(validate_lame({-0.9, 1}, 2).ok());
    CHECK_FALSE(validate_lame({-1.5, 1}, 2).ok());
    CHECK_FALSE(validate_lame({1, 0}, 2).ok());
    CHECK_FALSE(validate_lame({1, -1}, 3).ok());
}

TEST_CASE("partition validation") {
    LayeredDomain d = unit_square();
    CHECK(validate_partition(d).ok());
    CHECK(d.area() == doctest::Approx(1.0));
    d.interfaces = {{Vec2(1, 0.5), Vec2(0, 0.5)}};
    CHECK_FALSE(validate_partition(d).ok());  // two layers needed now
    d.layers.push_back({3, 2});
    CHECK(validate_partition(d).ok());
    CHECK(d.layer_of(Vec2(0.5, 0.2)) != d.layer_of(Vec2(0.5, 0.8)));
    d.interfaces = {{Vec2(1, 0.5), Vec2(0.5, 0.5)}};  // ends inside
    CHECK_FALSE(validate_partition(d).ok());
}

TEST_CASE("corner angles of a closed fault sum to (n - 2) pi") {
    const LayeredDomain d = unit_square();
    Fault f;
    f.vertices = {Vec2(0.2, 0.2), Vec2(0.8, 0.25), Vec2(0.7, 0.7), Vec2(0.3, 0.6)};
    f.closed = true;
    validate_fault(f, d);
    const auto cs = detect_corners(f, d);
    REQUIRE(cs.size() == 4);
    double sum = 0.0;
    for (const auto& c : cs) {
        CHECK(c.theta > 0.0);
        CHECK(c.theta < kPi);
        sum += c.theta;
    }
    CHECK(sum == doctest::Approx(2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("fault validation rejects faults touching the boundary or self-intersecting") {
    const LayeredDomain d = unit_square();
    Fault f;
    f.vertices = {Vec2(0.2, 0.2), Vec2(1.0, 0.5)};
    CHECK_THROWS_AS(validate_fault(f, d), ValidationError);
    f.vertices = {Vec2(0.2, 0.2), Vec2(0.8, 0.8), Vec2(0.8, 0.2), Vec2(0.2, 0.8)};
    f.closed = true;
    CHECK_THROWS_AS(validate_fault(f, d), ValidationError);
}

TEST_CASE("admissibility needs a slip jump at every corner") {
    const LayeredDomain d = unit_square();
    Fault f;
    f.vertices = {Vec2(0.3, 0.3), Vec2(0.7, 0.3), Vec2(0.7, 0.7), Vec2(0.3, 0.7)};
    f.closed = true;
    // constant slip on a closed fault: no jump between edges at any corner
    const auto flat = check_admissibility(f, JumpData::constant(4, Vec2(1, 0), Vec2(0, 0)), d);
    CHECK_FALSE(flat.overall);
    JumpData jd = JumpData::constant(4, Vec2(1, 0), Vec2(0, 0));
    for (int k = 0; k < 4; ++k) jd.f[k] = SegmentPoly::constant(Vec2(k, 0.5 * k * k));
    jd.f[0] = SegmentPoly::constant(Vec2(7, -1));
    CHECK(check_admissibility(f, jd, d).overall);
}

TEST_CASE("weighted norm diverges for slip that does not vanish at the tips") {
    Fault f;
    f.vertices = {Vec2(0.2, 0.5), Vec2(0.8, 0.5)};
    std::vector<SegmentPoly> c{SegmentPoly::constant(Vec2(1, 0))};
    CHECK(weighted_jump_norm(c, f).divergent);
    // s (L - s): vanishes linearly at both tips
    SegmentPoly p;
    p.c[1] = Vec2(0.6, 0);
    p.c[2] = Vec2(-1, 0);
    const auto r = weighted_jump_norm({p}, f);
    CHECK_FALSE(r.divergent);
    CHECK(r.value > 0.0);
}
