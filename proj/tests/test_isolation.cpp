#include "disloc/acceptance.hpp"

#include <doctest.h>

using namespace disloc;

TEST_CASE("a tampered tolerance fails only its own criterion") {
    RunContext clean;
    const auto base = verify_all(bundled_config_dir(), clean, {1, 4, 11});
    REQUIRE(base.criteria.size() == 3);
    for (const auto& c : base.criteria) CHECK(c.pass);

    RunContext tampered;
    tampered.thresholds.set("cgo.residual_rel", 1e-30);
    const auto t = verify_all(bundled_config_dir(), tampered, {1, 4, 11});
    CHECK_FALSE(t.criteria[0].pass);
    CHECK(t.criteria[1].pass);
    CHECK(t.criteria[2].pass);
}

TEST_CASE("repeated runs give the same verdicts and values") {
    const auto a = verify_all(bundled_config_dir(), RunContext{}, {1, 2, 11});
    const auto b = verify_all(bundled_config_dir(), RunContext{}, {1, 2, 11});
    REQUIRE(a.criteria.size() == b.criteria.size());
    for (std::size_t i = 0; i < a.criteria.size(); ++i) {
        CHECK(a.criteria[i].pass == b.criteria[i].pass);
        REQUIRE(a.criteria[i].checks.size() == b.criteria[i].checks.size());
        for (std::size_t k = 0; k < a.criteria[i].checks.size(); ++k)
            CHECK(a.criteria[i].checks[k].value == b.criteria[i].checks[k].value);
    }
}

TEST_CASE("a missing config is reported as a failure of that criterion") {
    const auto s = verify_all("/nonexistent", RunContext{}, {11});
    REQUIRE(s.criteria.size() == 1);
    CHECK_FALSE(s.criteria[0].pass);
    CHECK_FALSE(s.criteria[0].error.empty());
}
