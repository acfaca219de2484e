// Acceptance suite: one line per criterion. With a criterion number as the
// first argument only that criterion runs (ctest registers them separately).

#include "disloc/acceptance.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

using namespace disloc;

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    std::vector<int> only;
    std::string dir = bundled_config_dir().string();
    RunContext ctx;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config-dir" && i + 1 < argc) dir = argv[++i];
        else if (a == "--thresholds" && i + 1 < argc) {
            const json t = load_json_file(argv[++i]);
            ctx.thresholds.override_from(ConfigNode(t, ""));
        } else only.push_back(std::atoi(a.c_str()));
    }
    const auto sum = verify_all(dir, ctx, only);
    for (const auto& c : sum.criteria) std::cout << c.summary_line() << "\n";
    return sum.pass() ? 0 : 1;
}
