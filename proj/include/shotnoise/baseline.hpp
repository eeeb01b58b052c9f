#ifndef SHOTNOISE_BASELINE_HPP
#define SHOTNOISE_BASELINE_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "solver.hpp"

namespace shotnoise {

/// How the constant-intensity model is charged.
enum class PremiumMode {
    SameP,    ///< the shot-noise premium rate unchanged
    Reloaded  ///< (1 + loading) E(U) lambda_const
};

inline const char* to_string(PremiumMode m) { return m == PremiumMode::SameP ? "same_p" : "reloaded"; }

inline PremiumMode parse_premium_mode(const std::string& s) {
    if (s == "same_p") return PremiumMode::SameP;
    if (s == "reloaded") return PremiumMode::Reloaded;
    throw std::invalid_argument("unknown premium mode '" + s + "'");
}

/**
 * Classical Cramer-Lundberg comparison model: constant intensity, no
 * catastrophes. `premium` is the shot-noise rate, used as is in SameP
 * mode; `loading` is used in Reloaded mode.
 */
struct CLConfig {
    double lambda_const;
    PremiumMode premium_mode;
    Distribution claim_law;
    double discount;
    double delta;
    double premium;
    double loading;

    double premium_rate() const {
        return premium_mode == PremiumMode::SameP ? premium : (1.0 + loading) * claim_law.mean() * lambda_const;
    }

    /// Constant-intensity config for a shot-noise model solved with time step `delta`.
    static CLConfig matching(const ModelParams& params, double delta, double lambda_const, PremiumMode mode);
};

struct CLSolution {
    CLConfig config;
    SolveResult result;
    RowStructure structure;

    double premium() const { return config.premium_rate(); }
    const SurplusGrid& grid() const { return result.surface.grid().surplus(); }
    double value(std::size_t n) const { return result.surface(n, 0); }
    /// v(x) with the floor-plus-dividend rule and linear growth past the grid.
    double evaluate(double x) const { return result.surface.evaluate(x, config.lambda_const); }
};

/// The degenerate model solved: beta = 0 and a one-row intensity grid at lambda_const.
inline SurplusModel cl_model(const CLConfig& cfg) {
    // decay and the jump law never enter once beta = 0 and m_max = 0
    return SurplusModel{cfg.lambda_const, 0.0, 1.0, cfg.discount, cfg.claim_law, Distribution::exponential(1.0),
                        cfg.premium_rate()};
}

inline CLSolution solve_cl(const CLConfig& cfg, const SolverOptions& options = {}) {
    if (!(cfg.lambda_const >= 0.0)) throw std::invalid_argument("lambda_const must be >= 0");
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("delta must be > 0");
    SurplusModel model = cl_model(cfg);
    model.validate();
    // the spacing is irrelevant for a single row
    StateGrid grid = make_grid(model, GridSpec{cfg.delta, 1.0, 0});
    SolveResult r = solve(model, grid, options);
    RowStructure rs = row_structure(r.partition, 0);
    return CLSolution{cfg, std::move(r), std::move(rs)};
}

/**
 * Time step for a constant-intensity solve at premium `cl_premium` whose
 * surplus step is `step / k` for an integer k, with k picked so the time
 * step stays close to `target_delta`. Every point of the grid with step
 * `step` is then also a point of the baseline grid.
 */
inline double compatible_delta(double step, double cl_premium, double target_delta) {
    if (!(cl_premium > 0.0) || !(step > 0.0)) throw std::invalid_argument("step and premium must be > 0");
    double k = std::max(1.0, std::round(step / (cl_premium * target_delta)));
    return step / (k * cl_premium);
}

inline CLConfig CLConfig::matching(const ModelParams& params, double delta, double lambda_const, PremiumMode mode) {
    CLConfig cfg{lambda_const, mode, params.claim_law(), params.discount(), delta, params.premium(), params.loading()};
    if (mode == PremiumMode::Reloaded) cfg.delta = compatible_delta(params.premium() * delta, cfg.premium_rate(), delta);
    return cfg;
}

class GridMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ComparisonRow {
    std::size_t n;
    double x;
    double value;     ///< V(x, lambda_probe)
    double baseline;  ///< v(x)
    double difference;
};

struct Comparison {
    double lambda_probe;
    PremiumMode mode;
    std::vector<ComparisonRow> rows;
    std::size_t sign_violations = 0;  ///< rows where V - v has the wrong sign for `expect_above`
    bool expect_above = true;
    double worst = 0.0;  ///< most negative (or positive) signed difference against the expectation
};

/**
 * V(x_n, lambda_probe) - v(x_n) on every shot-noise grid point. The
 * baseline grid step must divide the shot-noise step. expect_above
 * says which sign of the difference is expected.
 */
inline Comparison compare_surfaces(const ValueSurface& V, const CLSolution& cl, double lambda_probe, bool expect_above,
                                   double tol = 0.0) {
    const auto& xs = V.grid().surplus();
    const double ratio = xs.step() / cl.grid().step();
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
        throw GridMismatchError("surplus grids are not nested: step ratio " + std::to_string(ratio));
    const auto k = static_cast<std::size_t>(std::round(ratio));
    const auto& bs = cl.grid();
    Comparison c{lambda_probe, cl.config.premium_mode, {}, 0, expect_above, 0.0};
    for (std::size_t n = 0; n <= xs.n_max(); ++n) {
        const double x = xs.x(n);
        const double v = V.evaluate(x, lambda_probe);
        // index arithmetic rather than a float projection of x onto the finer grid
        const std::size_t j = n * k;
        const double b = j <= bs.n_max() ? cl.value(j) : cl.value(bs.n_max()) + (x - bs.x(bs.n_max()));
        const double diff = v - b;
        c.rows.push_back({n, x, v, b, diff});
        const double signed_gap = expect_above ? diff : -diff;
        if (signed_gap < -tol) ++c.sign_violations;
        if (n == 0 || signed_gap < c.worst) c.worst = signed_gap;
    }
    return c;
}

}  // namespace shotnoise

#endif  // SHOTNOISE_BASELINE_HPP
