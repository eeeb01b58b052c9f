#ifndef SHOTNOISE_CLI_HPP
#define SHOTNOISE_CLI_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baseline.hpp"
#include "config.hpp"
#include "io.hpp"
#include "simulator.hpp"
#include "solver.hpp"

namespace shotnoise {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNonConvergence = 3, kOracleFailure = 4 };

/// Grid index of a probe; "barrier" is the top hold cell under the uppermost pay band of the row.
inline std::size_t resolve_probe(const PolicyPartition& P, const ProbeSpec& probe) {
    const auto& g = P.grid();
    if (probe.m > g.intensity().m_max()) throw ConfigError("probe m beyond m_max");
    if (probe.n) {
        if (*probe.n > g.surplus().n_max()) throw ConfigError("probe n beyond n_max");
        return *probe.n;
    }
    RowStructure rs = row_structure(P, probe.m);
    if (rs.bands.empty()) throw ConfigError("probe row " + std::to_string(probe.m) + " has no pay band");
    return rs.bands.back().first - 1;
}

/// Writes value_surface.csv and solve_report.json; with `refine` also runs the refinement check.
inline int cmd_solve(const ExperimentConfig& cfg, const std::filesystem::path& out, bool refine, std::ostream& log) {
    ModelParams params = cfg.params();
    SurplusModel model = params.surplus_model();
    StateGrid grid = make_grid(model, cfg.grid());
    SolveResult r = solve(model, grid, cfg.solver);
    nlohmann::json report = solve_report_json(cfg, params, r);
    int code = kOk;
    if (refine) {
        double scale = r.surface(grid.surplus().n_max(), 0);
        std::optional<std::size_t> wide;
        if (cfg.refine.enlarged_m_max > 0) wide = cfg.refine.enlarged_m_max;
        RefineReport rr = refine_check(model, cfg.grid(), cfg.refine.tol_fraction * scale, cfg.solver, wide);
        report["refine"] = {{"tol", rr.tol},
                            {"refine_sup_diff", rr.refine_sup_diff},
                            {"refine_min_gain", rr.refine_min_gain},
                            {"enlarged_sup_diff", rr.enlarged_sup_diff},
                            {"enlarged_label_changes", rr.enlarged_label_changes},
                            {"passed", rr.passed}};
        if (!rr.passed) code = kOracleFailure;
    }
    write_text(out / "value_surface.csv", surface_csv(r.surface, r.partition));
    write_text(out / "solve_report.json", report.dump(2) + "\n");
    log << "solved " << grid.cells() << " cells in " << r.iterations() << " sweeps, final change "
        << r.final_change << "\n";
    return code;
}

/// moments.csv: analytic versus MC moments of the exact intensity model at both starting levels.
inline int cmd_moments(const ExperimentConfig& cfg, const std::vector<double>& times, std::uint64_t seed,
                       const std::filesystem::path& out, std::ostream& log) {
    ModelParams params = cfg.params();
    SurplusModel model = params.surplus_model();
    std::ostringstream csv;
    csv << "lambda0,t,quantity,analytic,mc_mean,mc_se,z,within_3se\n";
    bool all = true;
    const double starts[] = {params.lambda_floor(), params.lambda_av()};
    for (std::size_t s = 0; s < 2; ++s) {
        const double lambda0 = starts[s];
        auto est = estimate_moments(model, lambda0, times, cfg.moments.n_paths, seed + s);
        for (const auto& e : est) {
            const double mi = mean_intensity(params, lambda0, e.t);
            const double mc = mean_cumulative_intensity(params, lambda0, e.t);
            auto row = [&](const char* name, double analytic, const MCEstimate& m) {
                const double z = m.std_error > 0.0 ? (m.mean - analytic) / m.std_error : (m.mean == analytic ? 0.0 : INFINITY);
                const bool ok = std::abs(m.mean - analytic) <= 3.0 * m.std_error;
                all = all && ok;
                csv << format_double(lambda0) << ',' << format_double(e.t) << ',' << name << ','
                    << format_double(analytic) << ',' << format_double(m.mean) << ',' << format_double(m.std_error)
                    << ',' << format_double(z) << ',' << (ok ? "true" : "false") << '\n';
            };
            row("intensity", mi, e.intensity);
            row("cumulative_intensity", mc, e.cumulative);
            row("claim_count", mc, e.claims);
        }
    }
    write_text(out / "moments.csv", csv.str());
    log << (all ? "all moments within 3 SE\n" : "some moments outside 3 SE\n");
    return all ? kOk : kOracleFailure;
}

/// mc_report.json: policy value by simulation at each probe cell against the solved surface.
inline int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& surface_path, std::uint64_t seed,
                        const std::filesystem::path& out, std::ostream& log) {
    ModelParams params = cfg.params();
    SurplusModel model = params.surplus_model();
    StateGrid grid = make_grid(model, cfg.grid());
    LoadedSurface loaded = read_surface_csv(surface_path, grid);
    if (cfg.mc.probes.empty()) throw ConfigError("mc.probes: no probe cells configured");
    nlohmann::json probes = nlohmann::json::array();
    bool all = true;
    for (const auto& probe : cfg.mc.probes) {
        const std::size_t n = resolve_probe(loaded.partition, probe);
        const double w = loaded.surface(n, probe.m);
        const double horizon = cfg.mc.horizon.value_or(default_horizon(model, grid.surplus(), w));
        MCEstimate e = evaluate_policy_mc(model, loaded.partition, n, probe.m, cfg.mc.n_paths, horizon, seed,
                                          cfg.mc.truncation_tolerance);
        const bool ok = std::abs(e.mean - w) <= 3.0 * e.std_error + e.truncation_bound;
        all = all && ok;
        probes.push_back({{"n", n},
                          {"m", probe.m},
                          {"x", grid.surplus().x(n)},
                          {"lambda", grid.intensity().lambda(probe.m)},
                          {"solver_value", w},
                          {"mc_mean", e.mean},
                          {"mc_std_error", e.std_error},
                          {"n_paths", e.n_paths},
                          {"horizon", e.horizon},
                          {"truncation_bound", e.truncation_bound},
                          {"warning", e.warning},
                          {"pass", ok}});
        if (!e.warning.empty()) log << "warning at (" << n << ", " << probe.m << "): " << e.warning << "\n";
    }
    nlohmann::json report{{"config", cfg.to_json()}, {"seed", seed}, {"probes", probes}, {"all_pass", all}};
    write_text(out / "mc_report.json", report.dump(2) + "\n");
    log << (all ? "all probes within 3 SE + truncation bound\n" : "some probes outside 3 SE + truncation bound\n");
    return all ? kOk : kOracleFailure;
}

/// comparison.csv: V(x, lambda_probe) against the constant-intensity value at lambda_probe.
inline int cmd_compare(const ExperimentConfig& cfg, PremiumMode mode, const std::filesystem::path& out,
                       std::ostream& log) {
    ModelParams params = cfg.params();
    SurplusModel model = params.surplus_model();
    StateGrid grid = make_grid(model, cfg.grid());
    SolveResult r = solve(model, grid, cfg.solver);
    const double lam = cfg.lambda_probe(params);
    if (!(lam >= params.lambda_floor())) throw ConfigError("compare.lambda_probe: below the intensity floor");
    CLSolution cl = solve_cl(CLConfig::matching(params, grid.surplus().delta(), lam, mode), cfg.solver);
    Comparison c = compare_surfaces(r.surface, cl, lam, true);
    std::ostringstream csv;
    csv << "n,x,lambda,value,baseline,difference\n";
    for (const auto& row : c.rows)
        csv << row.n << ',' << format_double(row.x) << ',' << format_double(lam) << ',' << format_double(row.value)
            << ',' << format_double(row.baseline) << ',' << format_double(row.difference) << '\n';
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& [lo, hi] : cl.structure.bands) bands.push_back({cl.grid().x(lo), cl.grid().x(hi)});
    nlohmann::json report{{"config", cfg.to_json()},
                          {"mode", to_string(mode)},
                          {"lambda_probe", lam},
                          {"baseline_premium", cl.premium()},
                          {"baseline_delta", cl.config.delta},
                          {"baseline_bands", bands},
                          {"sign_violations", c.sign_violations},
                          {"min_difference", c.worst}};
    write_text(out / "comparison.csv", csv.str());
    write_text(out / "compare_report.json", report.dump(2) + "\n");
    log << "compared " << c.rows.size() << " points, " << c.sign_violations << " with V below the baseline\n";
    return kOk;
}

/// Runs `body`, mapping the library's error types onto exit codes.
template <class Body>
int run_command(Body&& body, std::ostream& err) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NonConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const GridMismatchError& e) {
        err << "grid mismatch: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace shotnoise

#endif  // SHOTNOISE_CLI_HPP
