#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <shotnoise/cli.hpp>

using namespace shotnoise;

int main(int argc, char** argv) {
    CLI::App app{"Optimal dividends under shot-noise claim intensity: solver, simulator and comparisons"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool refine = false;
    std::vector<double> times;
    std::string surface_path;
    std::optional<std::string> mode;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (default: outputs.directory of the config)");
    };

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve the discrete HJB equation");
    common(solve_cmd);
    solve_cmd->add_flag("--refine", refine, "also run the (delta/2, Delta/2) and enlarged-m_max checks");

    CLI::App* moments_cmd = app.add_subcommand("moments", "analytic versus simulated intensity moments");
    common(moments_cmd);
    moments_cmd->add_option("--seed", seed, "RNG seed (default: mc.seed)");
    moments_cmd->add_option("--times", times, "evaluation times (default: moments.times)")->delimiter(',');

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "MC value of a solved partition at the probe cells");
    common(simulate_cmd);
    simulate_cmd->add_option("--seed", seed, "RNG seed (default: mc.seed)");
    simulate_cmd->add_option("--surface", surface_path, "value_surface.csv (default: <out>/value_surface.csv)");

    CLI::App* compare_cmd = app.add_subcommand("compare", "compare against the constant-intensity model");
    common(compare_cmd);
    compare_cmd->add_option("--mode", mode, "same_p | reloaded (default: compare.mode)")
        ->check(CLI::IsMember({"same_p", "reloaded"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    return run_command(
        [&]() -> int {
            ExperimentConfig cfg = load_config(config_path);
            const std::filesystem::path out = out_dir.value_or(cfg.output_dir);
            const std::uint64_t s = seed.value_or(cfg.mc.seed);
            if (solve_cmd->parsed()) return cmd_solve(cfg, out, refine, std::cerr);
            if (moments_cmd->parsed()) return cmd_moments(cfg, times.empty() ? cfg.moments.times : times, s, out, std::cerr);
            if (simulate_cmd->parsed()) {
                std::filesystem::path surface = surface_path.empty() ? out / "value_surface.csv" : std::filesystem::path(surface_path);
                return cmd_simulate(cfg, surface, s, out, std::cerr);
            }
            PremiumMode m = mode ? parse_premium_mode(*mode) : cfg.compare.mode;
            return cmd_compare(cfg, m, out, std::cerr);
        },
        std::cerr);
}
