#include "disloc/cgo.hpp"
#include "disloc/forward.hpp"
#include "disloc/mesh.hpp"

#include <doctest.h>

using namespace disloc;

namespace {
LayeredDomain square(std::vector<int> dirichlet, std::vector<int> measured) {
    LayeredDomain d;
    d.outer = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    d.layers = {LameParameters{2, 1}};
    d.dirichlet_edges = std::move(dirichlet);
    d.measurement.edges = std::move(measured);
    return d;
}
Fault wedge() {
    Fault f;
    f.vertices = {Vec2(0.25, 0.4), Vec2(0.5, 0.65), Vec2(0.75, 0.45)};
    return f;
}
}  // namespace

TEST_CASE("mesh covers the domain and doubles the fault nodes") {
    const LayeredDomain d = square({0}, {2});
    const Fault f = wedge();
    const Mesh m = generate_mesh(d, &f, 0.08);
    double area = 0.0;
    for (int t = 0; t < m.tri_count(); ++t) {
        CHECK(m.tri_area(t) > 0.0);
        area += m.tri_area(t);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.min_angle_deg() > 20.0);
    CHECK(m.tips.size() == 2);
    for (const auto& p : m.pairs) CHECK((m.nodes[p.plus] - m.nodes[p.minus]).norm() == 0.0);
    const Mesh r = refine(m);
    CHECK(r.tri_count() == 4 * m.tri_count());
    double ar = 0.0;
    for (int t = 0; t < r.tri_count(); ++t) ar += r.tri_area(t);
    CHECK(ar == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interface edges follow the interface polyline") {
    LayeredDomain d = square({0}, {2});
    d.interfaces = {{Vec2(1, 0.4), Vec2(0.5, 0.5), Vec2(0, 0.4)}};
    d.layers.push_back({20, 10});
    const Mesh m = generate_mesh(d, nullptr, 0.08);
    double len = 0.0;
    for (const auto& e : m.interface_edges) len += (m.nodes[e.a] - m.nodes[e.b]).norm();
    CHECK(len == doctest::Approx(2.0 * std::hypot(0.5, 0.1)).epsilon(1e-12));
}

TEST_CASE("patch test: linear fields are reproduced exactly") {
    const LayeredDomain d = square({0, 3}, {2});
    CMat2 B;
    B << 0.3, -0.2, 0.5, 0.1;
    const LinearField u(CVec2(0.1, -0.4), B);
    const LameParameters lp = d.layers[0];
    ForwardOptions o;
    o.bc.dirichlet = [&](const Vec2& x) { return u.value(x); };
    o.bc.traction = [&](const Vec2& x, const Vec2& nu) { return u.traction(x, nu, lp); };
    const auto r = solve_forward(d, nullptr, FaultJumpFunctions::zero(), 0.1, o);
    double err = 0.0;
    for (int n = 0; n < r.mesh->node_count(); ++n) err = std::max(err, (r.field->nodal(n) - u.value(r.mesh->nodes[n])).norm());
    CHECK(err < 1e-12);
}

TEST_CASE("zero data gives the zero field; slip is imposed exactly") {
    const LayeredDomain d = square({0}, {1, 2, 3});
    const Fault f = wedge();
    const auto z = solve_forward(d, &f, FaultJumpFunctions::zero(), 0.08);
    CHECK(z.field->values().norm() == 0.0);
    JumpData jd = JumpData::constant(2, Vec2(0, 0), Vec2(0, 0));
    jd.f[0].c[1] = Vec2(2.0, 0.5);
    jd.f[1].c[0] = Vec2(2.0 * f.seg_length(0), 0.5 * f.seg_length(0));
    const auto J = FaultJumpFunctions::from(jd);
    const auto r = solve_forward(d, &f, J, 0.08);
    CHECK(max_jump_error(*r.field, J) < 1e-14);
    CHECK(r.field->values().norm() > 0.0);
}

TEST_CASE("measurement sampling is uniform on the arc") {
    const LayeredDomain d = square({0}, {1, 2});
    const auto r = solve_forward(d, nullptr, FaultJumpFunctions::zero(), 0.1);
    const auto m = measure(*r.field, d, 21);
    REQUIRE(m.s.size() == 21);
    CHECK(m.s.back() - m.s.front() == doctest::Approx(2.0));
}
