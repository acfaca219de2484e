// disloc: batch runner for the layered-dislocation experiments.
//
//   disloc --config cfg.json --out DIR [--threads N] [--seed U64]
//   disloc <kind> --config cfg.json ...      (kind must agree with the config)
//   disloc --verify-all [--thresholds tamper.json]
//   disloc --print-thresholds
//
// Exit codes: 0 success, 1 checks failed, 2 validation error, 3 numerical failure.

#include "disloc/acceptance.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

using namespace disloc;

namespace {

void setup_logging() {
    const char* lv = std::getenv("DISLOC_LOG");
    const std::string s = lv ? lv : "error";
    if (s == "debug") spdlog::set_level(spdlog::level::debug);
    else if (s == "info") spdlog::set_level(spdlog::level::info);
    else spdlog::set_level(spdlog::level::err);
    spdlog::set_pattern("[%l] %v");
}

int report_validation(const ValidationError& e) {
    std::cerr << "validation error";
    if (!e.pointer().empty()) std::cerr << " at " << e.pointer();
    std::cerr << ": " << e.what() << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Layered elastic dislocation lab"};
    std::string config, out_dir = "out", thresholds_file, config_dir = bundled_config_dir().string();
    int threads = 1;
    std::uint64_t seed = 0;
    bool verify = false, print_thresholds = false;
    std::vector<int> only;
    app.add_option("--config", config, "experiment configuration (JSON)");
    app.add_option("--out", out_dir, "output directory for report.json and CSV tables");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "seed override for randomized experiments");
    app.add_flag("--verify-all", verify, "run the acceptance suite on the bundled configs");
    app.add_option("--config-dir", config_dir, "directory holding the acceptance configs");
    app.add_option("--criteria", only, "restrict --verify-all to these criterion numbers");
    app.add_option("--thresholds", thresholds_file, "JSON object overriding named thresholds");
    app.add_flag("--print-thresholds", print_thresholds, "print the threshold manifest and exit");
    std::string sub_kind;
    for (const auto& k : experiment_kinds()) {
        auto* sub = app.add_subcommand(k, "run a " + k + " experiment");
        sub->fallthrough();
        sub->callback([&sub_kind, k] { sub_kind = k; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunContext ctx;
    ctx.threads = threads;
    if (*seed_opt) ctx.seed = seed;
    try {
        if (!thresholds_file.empty()) {
            const json t = load_json_file(thresholds_file);
            ctx.thresholds.override_from(ConfigNode(t, ""));
        }
        if (print_thresholds) {
            std::cout << ctx.thresholds.to_json().dump(2) << "\n";
            return 0;
        }
        if (verify) {
            const auto sum = verify_all(config_dir, ctx, only);
            for (const auto& c : sum.criteria) std::cout << c.summary_line() << "\n";
            int passed = 0;
            for (const auto& c : sum.criteria) passed += c.pass;
            std::cout << "summary: " << passed << "/" << sum.criteria.size() << " criteria passed\n";
            return sum.pass() ? 0 : 1;
        }
        if (config.empty()) {
            std::cerr << "nothing to do: give --config, --verify-all or --print-thresholds\n";
            return 2;
        }
        json cfg = load_json_file(config);
        if (!sub_kind.empty()) {
            if (!cfg.is_object()) throw ValidationError("configuration must be a JSON object", "/");
            if (!cfg.contains("kind")) cfg["kind"] = sub_kind;
            else if (cfg["kind"] != sub_kind)
                throw ValidationError("config kind does not match subcommand " + sub_kind, "/kind");
        }
        const ExperimentOutput out = run_experiment(cfg, ctx);
        std::uint64_t used_seed = ctx.seed.value_or(0);
        if (!ctx.seed && cfg.contains("seed") && cfg["seed"].is_number_unsigned()) used_seed = cfg["seed"].get<std::uint64_t>();
        write_outputs(out, used_seed, out_dir);
        for (const auto& c : out.checks)
            std::cout << (c.pass ? "ok   " : "FAIL ") << (c.supplementary ? "[info] " : "") << c.name << ": " << c.value
                      << " " << c.relation << " " << c.threshold << "\n";
        std::cout << out.kind << ": " << (out.pass() ? "pass" : "fail") << " (" << out.seconds << " s), wrote "
                  << out_dir << "\n";
        return out.pass() ? 0 : 1;
    } catch (const ValidationError& e) {
        return report_validation(e);
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
