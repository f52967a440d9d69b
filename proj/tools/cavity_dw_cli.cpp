#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cavity_dw/scenarios.hpp"

namespace fs = std::filesystem;
using namespace cavity_dw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void print_errors(const std::string& file, const std::vector<std::string>& errors) {
    for (const auto& e : errors) std::cerr << file << ": " << e << "\n";
}

// Output directory for one config: --out wins (a per-config subdirectory in batch mode),
// then output_dir from the file, then out/<stem>.
fs::path output_dir_for(const fs::path& config_path, const ScenarioConfig& cfg, const std::string& out, bool batch) {
    if (!out.empty()) return batch ? fs::path(out) / config_path.stem() : fs::path(out);
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    return fs::path("out") / config_path.stem();
}

int run_one(const fs::path& path, const ScenarioConfig& cfg, const fs::path& dir) {
    try {
        const auto outcome = run_scenario(cfg, dir);
        std::printf("%s: %s scenario %s, %zu files in %s (%.2f s)\n", path.string().c_str(),
                    outcome.ok() ? "completed" : "FAILED", to_string(cfg.scenario), outcome.files.size(),
                    dir.string().c_str(), outcome.wall_time_s);
        if (!outcome.ok()) {
            std::fprintf(stderr, "%s: %s\n", path.string().c_str(), outcome.failure->c_str());
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const InvalidArgument& e) {
        std::fprintf(stderr, "%s: %s\n", path.string().c_str(), e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", path.string().c_str(), e.what());
        return kExitNumerical;
    }
}

std::size_t batch_width() {
    const char* env = std::getenv("CAVITY_DW_THREADS");
    if (!env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    return (end != env && v > 0) ? static_cast<std::size_t>(v) : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atoms in a cavity-induced double well: ground states, dynamics, two-mode collapse and revival"};
    app.require_subcommand(1);

    std::vector<std::string> run_files;
    std::string out_dir;
    std::string seed_grid;
    auto* run = app.add_subcommand("run", "Run one or more scenario configs");
    run->add_option("configs", run_files, "Scenario config files (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed-grid", seed_grid, "Multi-start grid for the variational search")
        ->check(CLI::IsMember({"coarse", "fine"}));

    std::vector<std::string> validate_files;
    auto* validate = app.add_subcommand("validate", "Validate scenario configs without running them");
    validate->add_option("configs", validate_files, "Scenario config files (JSON)")->required();

    app.add_subcommand("list-scenarios", "List the available scenario kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (app.got_subcommand("list-scenarios")) {
        for (const auto& s : scenario_names()) std::cout << s << "\n";
        return kExitOk;
    }

    const auto& files = app.got_subcommand("validate") ? validate_files : run_files;
    std::vector<ScenarioConfig> configs;
    int status = kExitOk;
    for (const auto& f : files) {
        try {
            configs.push_back(load_config(f));
            if (app.got_subcommand("validate")) std::cout << f << ": ok\n";
        } catch (const ConfigError& e) {
            print_errors(f, e.errors());
            status = kExitConfig;
        }
    }
    if (status != kExitOk || app.got_subcommand("validate")) return status;

    if (!seed_grid.empty()) {
        for (auto& c : configs) c.seed_grid = seed_grid == "fine" ? SeedGrid::fine : SeedGrid::coarse;
    }
    const bool batch = files.size() > 1;
    std::vector<fs::path> dirs;
    for (std::size_t i = 0; i < files.size(); ++i) dirs.push_back(output_dir_for(files[i], configs[i], out_dir, batch));

    const std::size_t width = std::min(batch_width(), files.size());
    if (width <= 1) {
        for (std::size_t i = 0; i < files.size(); ++i) status = std::max(status, run_one(files[i], configs[i], dirs[i]));
        return status;
    }

    // Batch mode: one child process per config, at most `width` at a time.
    std::size_t next = 0;
    std::size_t running = 0;
    std::fflush(nullptr);
    while (next < files.size() || running > 0) {
        while (running < width && next < files.size()) {
            const pid_t pid = fork();
            if (pid < 0) {
                std::perror("fork");
                return kExitNumerical;
            }
            if (pid == 0) {
                const int code = run_one(files[next], configs[next], dirs[next]);
                std::fflush(nullptr);
                _exit(code);
            }
            ++next;
            ++running;
        }
        int wstatus = 0;
        if (wait(&wstatus) > 0) {
            --running;
            const int code = WIFEXITED(wstatus) ? WEXITSTATUS(wstatus) : kExitNumerical;
            status = std::max(status, code);
        }
    }
    return status;
}
