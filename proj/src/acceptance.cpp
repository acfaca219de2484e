#include "disloc/acceptance.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>

#ifndef DISLOC_CONFIG_DIR
#define DISLOC_CONFIG_DIR "configs"
#endif

namespace disloc {

namespace {

struct Entry {
    int number;
    const char* file;
    const char* title;
};

const Entry kEntries[] = {
    {1, "c01_cgo_check.json", "CGO exactness"},
    {2, "c02_lemma_suite.json", "lemma oracles"},
    {3, "c03_convergence.json", "forward convergence"},
    {4, "c04_identity_closure.json", "identity closure"},
    {5, "c05_corner_recovery.json", "corner recovery"},
    {6, "c06_decay_audit.json", "R-term decay audit"},
    {7, "c07_interface_probe.json", "interface probe"},
    {8, "c08_dimred.json", "dimension reduction"},
    {9, "c09_distinguishability.json", "distinguishability"},
    {10, "c10_reconstruct.json", "reconstruction"},
    {11, "c11_jump_relations.json", "jump relations"},
};

}  // namespace

std::filesystem::path bundled_config_dir() { return DISLOC_CONFIG_DIR; }

std::string CriterionResult::summary_line() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "criterion %2d: %s  %-22s %8.2f s (budget %g s)", number, pass ? "PASS" : "FAIL",
                  title.c_str(), seconds, budget);
    std::string s = buf;
    if (!error.empty()) s += "\n    error: " + error;
    for (const auto& c : checks) {
        if (c.pass && !c.supplementary) continue;
        std::snprintf(buf, sizeof buf, "\n    %s%s: %.6g %s %.6g", c.supplementary ? "[info] " : "", c.name.c_str(),
                      c.value, c.relation.c_str(), c.threshold);
        s += buf;
        s += c.pass ? "" : " (violated)";
        if (!c.note.empty()) s += "  -- " + c.note;
    }
    return s;
}

bool AcceptanceSummary::pass() const {
    for (const auto& c : criteria)
        if (!c.pass) return false;
    return !criteria.empty();
}

AcceptanceSummary verify_all(const std::filesystem::path& dir, const RunContext& ctx, const std::vector<int>& only) {
    AcceptanceSummary sum;
    for (const auto& e : kEntries) {
        if (!only.empty() && std::find(only.begin(), only.end(), e.number) == only.end()) continue;
        CriterionResult r;
        r.number = e.number;
        r.title = e.title;
        r.config = (dir / e.file).string();
        r.budget = ctx.thresholds.get("runtime.c" + std::to_string(e.number));
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const json cfg = load_json_file(r.config);
            const ExperimentOutput out = run_experiment(cfg, ctx);
            r.checks = out.checks;
            r.pass = out.pass();
        } catch (const ValidationError& ex) {
            r.error = std::string("validation: ") + ex.what() + (ex.pointer().empty() ? "" : " at " + ex.pointer());
        } catch (const std::exception& ex) {
            r.error = ex.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.seconds > r.budget) {
            r.pass = false;
            r.checks.push_back(make_check("runtime [s]", r.seconds, "<", r.budget));
        }
        spdlog::info("criterion {} done in {:.2f} s", e.number, r.seconds);
        sum.criteria.push_back(std::move(r));
    }
    return sum;
}

}  // namespace disloc
