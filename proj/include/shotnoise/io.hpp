#ifndef SHOTNOISE_IO_HPP
#define SHOTNOISE_IO_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "solver.hpp"

namespace shotnoise {

inline constexpr const char* kSurfaceHeader = "n,m,x,lambda,value,action";

/// Text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// One row per cell, intensity-major, in the fixed column order of kSurfaceHeader.
inline std::string surface_csv(const ValueSurface& W, const PolicyPartition& P) {
    const auto& g = W.grid();
    std::ostringstream os;
    os << kSurfaceHeader << '\n';
    for (std::size_t m = 0; m < g.m_size(); ++m)
        for (std::size_t n = 0; n < g.n_size(); ++n)
            os << n << ',' << m << ',' << format_double(g.surplus().x(n)) << ','
               << format_double(g.intensity().lambda(m)) << ',' << format_double(W(n, m)) << ','
               << to_string(P(n, m)) << '\n';
    return os.str();
}

struct LoadedSurface {
    ValueSurface surface;
    PolicyPartition partition;
};

/// Reads a surface written by surface_csv and checks it was solved on `grid`.
inline LoadedSurface read_surface_csv(const std::filesystem::path& path, const StateGrid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read surface '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kSurfaceHeader)
        throw ConfigError("surface '" + path.string() + "': unexpected header");
    std::vector<double> values(grid.cells());
    std::vector<Action> labels(grid.cells());
    std::vector<char> seen(grid.cells(), 0);
    std::size_t row = 1;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        const std::string where = "surface '" + path.string() + "' line " + std::to_string(row);
        if (f.size() != 6) throw ConfigError(where + ": expected 6 columns");
        std::size_t n = 0;
        std::size_t m = 0;
        double x = 0.0;
        double lam = 0.0;
        double v = 0.0;
        Action a = Action::Hold;
        try {
            n = std::stoul(f[0]);
            m = std::stoul(f[1]);
            x = std::stod(f[2]);
            lam = std::stod(f[3]);
            v = std::stod(f[4]);
            a = parse_action(f[5]);
        } catch (const std::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (n >= grid.n_size() || m >= grid.m_size()) throw ConfigError(where + ": cell outside the configured grid");
        if (!close(x, grid.surplus().x(n)) || !close(lam, grid.intensity().lambda(m)))
            throw ConfigError(where + ": grid coordinates differ from the configured grid");
        std::size_t c = grid.flat(n, m);
        if (seen[c]) throw ConfigError(where + ": duplicate cell");
        seen[c] = 1;
        values[c] = v;
        labels[c] = a;
    }
    for (char s : seen)
        if (!s) throw ConfigError("surface '" + path.string() + "': missing cells for the configured grid");
    return LoadedSurface{ValueSurface(grid, std::move(values)), PolicyPartition(grid, std::move(labels))};
}

/// Per-row pay structure: barrier level when the pay set is upward-closed, bands otherwise.
inline nlohmann::json partition_rows_json(const PolicyPartition& P) {
    const auto& g = P.grid();
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t m = 0; m < g.m_size(); ++m) {
        RowStructure rs = row_structure(P, m);
        nlohmann::json bands = nlohmann::json::array();
        for (const auto& [lo, hi] : rs.bands) bands.push_back({g.surplus().x(lo), g.surplus().x(hi)});
        rows.push_back({{"m", m},
                        {"lambda", g.intensity().lambda(m)},
                        {"bands", bands},
                        {"barrier", rs.barrier_level ? nlohmann::json(*rs.barrier_level) : nlohmann::json(nullptr)}});
    }
    return rows;
}

inline nlohmann::json solve_report_json(const ExperimentConfig& cfg, const ModelParams& params, const SolveResult& r) {
    const auto& g = r.surface.grid();
    nlohmann::json premium{{"value", params.premium()}};
    if (params.exact()) premium["exact"] = params.exact()->premium().str();
    nlohmann::json rows = partition_rows_json(r.partition);
    nlohmann::json barrier = nlohmann::json::array();
    bool all_barriers = true;
    for (const auto& row : rows) {
        if (row["barrier"].is_null()) all_barriers = false;
        else barrier.push_back({{"m", row["m"]}, {"lambda", row["lambda"]}, {"barrier", row["barrier"]}});
    }
    return nlohmann::json{
        {"config", cfg.to_json()},
        {"premium", premium},
        {"lambda_av", params.lambda_av()},
        {"grid",
         {{"step", g.surplus().step()},
          {"n_max", g.surplus().n_max()},
          {"m_max", g.intensity().m_max()},
          {"cells", g.cells()}}},
        {"iterations", r.iterations()},
        {"final_sup_change", r.final_change},
        {"partition_summary",
         {{"pay", r.partition.count(Action::Pay)},
          {"hold", r.partition.count(Action::Hold)},
          {"finish", r.partition.count(Action::Finish)},
          {"all_rows_barrier", all_barriers}}},
        {"barrier_curve", barrier},
        {"rows", rows},
    };
}

}  // namespace shotnoise

#endif  // SHOTNOISE_IO_HPP
