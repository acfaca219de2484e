#include "disloc/experiments.hpp"

#include <doctest.h>

using namespace disloc;

namespace {
json forward_cfg() {
    return json::parse(R"({
        "kind": "forward", "h": 0.1,
        "outer": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "layers": [{"lambda": 2, "mu": 1}],
        "dirichlet_edges": [0],
        "measurement": {"edges": [2]}
    })");
}
std::string pointer_of(const json& cfg) {
    try {
        run_experiment(cfg, RunContext{});
    } catch (const ValidationError& e) {
        return e.pointer();
    }
    return "<no error>";
}
}  // namespace

TEST_CASE("schema errors carry a JSON pointer") {
    json c = forward_cfg();
    c.erase("layers");
    CHECK(pointer_of(c) == "/layers");
    c = forward_cfg();
    c["layers"][0]["mu"] = -1;
    CHECK(pointer_of(c) == "/layers/0");
    c = forward_cfg();
    c["h"] = "fine";
    CHECK(pointer_of(c) == "/h");
    c = forward_cfg();
    c["kind"] = "nope";
    CHECK(pointer_of(c) == "/kind");
    c = forward_cfg();
    c["thresholds"] = {{"no.such", 1.0}};
    CHECK(pointer_of(c) == "/thresholds/no.such");
    c = forward_cfg();
    c["thresholds"] = {{"cgo.residual_rel", 0.0}};
    CHECK(pointer_of(c) == "/thresholds/cgo.residual_rel");
}

TEST_CASE("randomized experiments require a seed") {
    const json c = json::parse(R"({"kind": "cgo_check", "draws": 2, "points": 3})");
    CHECK(pointer_of(c) == "/");
    RunContext ctx;
    ctx.seed = 5;
    CHECK(run_experiment(c, ctx).pass());
}

TEST_CASE("forward with zero jumps measures zero") {
    const auto out = run_experiment(forward_cfg(), RunContext{});
    CHECK(out.pass());
    CHECK(out.results["max_abs_u_on_arc"].get<double>() < 1e-12);
}

TEST_CASE("identical seed gives identical CSV bytes") {
    const json c = json::parse(R"({"kind": "cgo_check", "seed": 9, "draws": 3, "points": 5})");
    const auto a = run_experiment(c, RunContext{}), b = run_experiment(c, RunContext{});
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(format_csv(a.tables[i]) == format_csv(b.tables[i]));
    RunContext other;
    other.seed = 10;
    CHECK(format_csv(run_experiment(c, other).tables[0]) != format_csv(a.tables[0]));
}

TEST_CASE("threshold manifest") {
    Thresholds t = Thresholds::defaults();
    CHECK(t.get("recovery.jump_abs") == 1e-3);
    CHECK(t.get("dimred.g3_abs") == 5e-3);
    CHECK_THROWS_AS(t.get("missing"), ValidationError);
    CHECK_THROWS_AS(t.set("cgo.residual_rel", -1.0), ValidationError);
    t.set("cgo.residual_rel", 1e-30);
    CHECK(t.to_json()["cgo.residual_rel"] == 1e-30);
}

TEST_CASE("csv formatting round-trips doubles") {
    Table t{"x", {"a", "b"}, {{0.1, 1.0 / 3.0}}};
    const std::string s = format_csv(t);
    CHECK(s == "a,b\n0.10000000000000001,0.33333333333333331\n");
}

TEST_CASE("bundled threshold manifest matches the pinned defaults") {
    const json m = load_json_file(std::string(DISLOC_SOURCE_DIR) + "/configs/thresholds.json");
    CHECK(m == Thresholds::defaults().to_json());
}
