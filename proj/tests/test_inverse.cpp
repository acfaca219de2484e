#include "disloc/inverse.hpp"

#include <doctest.h>

using namespace disloc;

namespace {
LayeredDomain square() {
    LayeredDomain d;
    d.outer = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    d.layers = {LameParameters{2, 1}};
    d.dirichlet_edges = {0};
    d.measurement.edges = {1, 2, 3};
    d.omega = 0.5;
    return d;
}
Fault unit_square_fault() {
    Fault f;
    f.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    f.closed = true;
    return f;
}
}  // namespace

TEST_CASE("parameter vector round trip and convexity") {
    FaultParameterization fam;
    fam.family = FaultFamily::ClosedConvex;
    fam.vertices = 4;
    Fault f;
    f.vertices = {Vec2(0.3, 0.35), Vec2(0.7, 0.3), Vec2(0.65, 0.7), Vec2(0.35, 0.65)};
    f.closed = true;
    const auto p = fam.encode(f);
    CHECK(p.size() == 8);
    const Fault g = fam.decode(p);
    for (int k = 0; k < 4; ++k) CHECK((g.vertices[k] - f.vertices[k]).norm() == 0.0);
    CHECK(fam.is_valid(p, square()));
    CHECK(is_convex(f.vertices));
    Fault dart = f;
    dart.vertices[2] = Vec2(0.5, 0.4);
    CHECK_FALSE(is_convex(dart.vertices));
    CHECK_FALSE(fam.is_valid(fam.encode(dart), square()));
}

TEST_CASE("tapered jump model vanishes at open tips and jumps at the interior corner") {
    Fault f;
    f.vertices = {Vec2(0.25, 0.4), Vec2(0.5, 0.65), Vec2(0.75, 0.45)};
    JumpModel m;
    m.f = {Vec2(1, 0), Vec2(0.5, 0)};
    m.g = {Vec2(0, 0)};
    const JumpData jd = m.jump_data(f);
    CHECK(jd.f[0].eval(0.0).norm() == 0.0);
    CHECK(jd.f[1].eval(f.seg_length(1)).norm() < 1e-15);
    CHECK((jd.f[0].eval(f.seg_length(0)) - jd.f[1].eval(0.0)).norm() > 0.4);
    CHECK(check_admissibility(f, jd, square()).overall);
}

TEST_CASE("misfit is a metric on a shared grid") {
    BoundaryMeasurement a, b;
    for (int k = 0; k <= 10; ++k) {
        a.s.push_back(0.1 * k);
        a.u.push_back(CVec2(1.0, 0.0));
        b.s.push_back(0.1 * k);
        b.u.push_back(CVec2(1.0, Complex(0.0, 2.0)));
    }
    CHECK(misfit(a, a) == 0.0);
    CHECK(misfit(a, b) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(misfit(a, b) == misfit(b, a));
    b.s.pop_back();
    b.u.pop_back();
    CHECK_THROWS_AS(misfit(a, b), ValidationError);
}

TEST_CASE("perturbed initial guesses are reproducible and admissible") {
    FaultParameterization fam;
    fam.vertices = 3;
    Fault f;
    f.vertices = {Vec2(0.25, 0.4), Vec2(0.5, 0.65), Vec2(0.75, 0.45)};
    const auto t = fam.encode(f);
    const auto a = perturbed_init(fam, square(), t, 0.1, 11), b = perturbed_init(fam, square(), t, 0.1, 11);
    CHECK((a - b).norm() == 0.0);
    CHECK(fam.is_valid(a, square()));
    CHECK(max_vertex_error(fam, a, t) <= 0.1 * std::sqrt(2.0) + 1e-12);
    CHECK((perturbed_init(fam, square(), t, 0.1, 12) - a).norm() > 0.0);
}

TEST_CASE("jump relations on the square") {
    const Fault sq = unit_square_fault();
    const auto g = generate_consistent_g(sq, Vec2(1, 0), RelationMatrix::Rotation);
    const std::vector<Vec2> expected{Vec2(1, 0), Vec2(0, -1), Vec2(-1, 0), Vec2(0, 1)};
    for (int k = 0; k < 4; ++k) CHECK((g[k] - expected[k]).norm() < 1e-15);
    std::vector<Vec2> zero(4, Vec2::Zero()), f1(4, Vec2(1, 1));
    const auto r = jump_relation_check(sq, f1, zero, g, zero);
    CHECK(r.max_f_violation <= 1e-14);
    CHECK(r.max_g_violation <= 1e-14);
    // a single perturbed edge is seen at its two vertices with size in [eps/2, 2 eps]
    auto gp = g;
    gp[2] += Vec2(1e-3, 0);
    const auto q = jump_relation_check(sq, f1, zero, gp, zero);
    CHECK(q.max_g_violation >= 0.5e-3);
    CHECK(q.max_g_violation <= 2e-3);
}

TEST_CASE("the reflection relation has a one-dimensional fixed space on a triangle") {
    Fault tri;
    tri.vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(0.3, 0.8)};
    tri.closed = true;
    std::vector<Vec2> z(3, Vec2::Zero());
    CHECK(jump_relation_check(tri, z, z, z, z, RelationMatrix::Theta).fixed_space_dim == 1);
    // rotations compose to -R(sum of angles) = -R(pi) = I: every start is consistent
    CHECK(jump_relation_check(tri, z, z, z, z, RelationMatrix::Rotation).fixed_space_dim == 2);
    for (double t : {0.4, 1.3}) CHECK((relation_matrix(t, RelationMatrix::Theta) - theta_matrix(t)).norm() == 0.0);
}

TEST_CASE("forward map counts solves and a morphed mesh stays close to a remesh") {
    FaultParameterization fam;
    fam.vertices = 3;
    fam.jumps.f = {Vec2(1, 0), Vec2(0.5, 0)};
    fam.jumps.g = {Vec2(0, 0)};
    ForwardMapOptions o;
    o.h = 0.06;
    o.n_samples = 51;
    ForwardMap map(square(), fam, o);
    Fault f;
    f.vertices = {Vec2(0.25, 0.4), Vec2(0.5, 0.65), Vec2(0.75, 0.45)};
    const auto p = fam.encode(f);
    const auto m0 = map(p);
    CHECK(map.solves() == 1);
    auto q = p;
    q(2) += 1e-3;
    const auto m1 = map(q);
    CHECK(map.solves() == 2);
    CHECK(misfit(m0, m1) > 0.0);
    CHECK(misfit(m0, m1) < 0.05 * misfit(m0, BoundaryMeasurement{m0.s, std::vector<CVec2>(m0.s.size(), CVec2::Zero())}));
}
