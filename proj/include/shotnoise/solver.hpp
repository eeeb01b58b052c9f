#ifndef SHOTNOISE_SOLVER_HPP
#define SHOTNOISE_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "kernel.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace shotnoise {

/// Local control action: E0 (hold), E1 (pay p*delta), EF (pay all and close).
enum class Action : std::uint8_t { Hold, Pay, Finish };

inline const char* to_string(Action a) {
    switch (a) {
        case Action::Hold: return "hold";
        case Action::Pay: return "pay";
        case Action::Finish: return "finish";
    }
    return "?";
}

inline Action parse_action(const std::string& s) {
    if (s == "hold") return Action::Hold;
    if (s == "pay") return Action::Pay;
    if (s == "finish") return Action::Finish;
    throw std::invalid_argument("unknown action '" + s + "'");
}

/// Discretisation parameters: delta (time), Delta (intensity) and m_max.
struct GridSpec {
    double delta;
    double delta_lambda;
    std::size_t m_max;
    std::size_t extra_surplus_cells = 0;
};

/// Builds G_delta x H_Delta for the model, with the surplus grid reaching p/q.
inline StateGrid make_grid(const SurplusModel& model, const GridSpec& spec) {
    return StateGrid(SurplusGrid::covering(model.premium, spec.delta, model.payout_threshold(), spec.extra_surplus_cells),
                     IntensityGrid(model.lambda_floor, spec.delta_lambda, spec.m_max));
}

/**
 * Values on the grid plus the rules for states off the grid:
 * surplus is floored onto the grid with the difference paid as an
 * immediate dividend, beyond the top point the value grows linearly,
 * and intensities above lambda_{m_max} are worth the surplus itself.
 */
class ValueSurface {
public:
    ValueSurface(StateGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.cells()) throw std::invalid_argument("value surface size does not match grid");
    }

    const StateGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator()(std::size_t n, std::size_t m) const { return values_[grid_.flat(n, m)]; }
    double x(std::size_t n) const { return grid_.surplus().x(n); }

    double evaluate(double x, double lam) const {
        const auto& xs = grid_.surplus();
        auto mp = grid_.intensity().sigma(lam);
        if (!(x >= 0.0)) throw std::domain_error("surplus must be >= 0");
        if (mp.overflow) return x;
        auto np = xs.rho(x);
        if (np.overflow) return (*this)(xs.n_max(), mp.index) + (x - xs.x(xs.n_max()));
        return (*this)(np.index, mp.index) + (x - xs.x(np.index));
    }

private:
    StateGrid grid_;
    std::vector<double> values_;
};

/// Off-grid value: floor in x with the remainder paid out, ceiling in lambda.
inline double evaluate_off_grid(const ValueSurface& surface, double x, double lam) { return surface.evaluate(x, lam); }

/// One action label per grid cell; extends to (lambda_{m-1}, lambda_m] off the grid.
class PolicyPartition {
public:
    PolicyPartition(StateGrid grid, std::vector<Action> labels) : grid_(grid), labels_(std::move(labels)) {
        if (labels_.size() != grid_.cells()) throw std::invalid_argument("partition size does not match grid");
    }
    PolicyPartition(StateGrid grid, Action fill) : grid_(grid), labels_(grid.cells(), fill) {}

    const StateGrid& grid() const { return grid_; }
    Action operator()(std::size_t n, std::size_t m) const { return labels_[grid_.flat(n, m)]; }
    Action& at(std::size_t n, std::size_t m) { return labels_[grid_.flat(n, m)]; }
    std::span<const Action> labels() const { return labels_; }

    /// Label of an arbitrary intensity at grid surplus n; beyond lambda_{m_max} the business is finished.
    Action at_intensity(std::size_t n, double lam) const {
        auto mp = grid_.intensity().sigma(lam);
        return mp.overflow ? Action::Finish : (*this)(n, mp.index);
    }

    std::size_t count(Action a) const { return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), a)); }

private:
    StateGrid grid_;
    std::vector<Action> labels_;
};

/// Shape of the pay set along one intensity row.
struct RowStructure {
    std::vector<std::pair<std::size_t, std::size_t>> bands;  ///< maximal [first, last] runs of Pay
    bool barrier = false;                                    ///< pay set is upward-closed
    std::optional<double> barrier_level;                     ///< surplus paid down to, when barrier
};

inline RowStructure row_structure(const PolicyPartition& partition, std::size_t m) {
    RowStructure out;
    const std::size_t n_max = partition.grid().surplus().n_max();
    for (std::size_t n = 0; n <= n_max; ++n) {
        if (partition(n, m) != Action::Pay) continue;
        if (!out.bands.empty() && out.bands.back().second + 1 == n) out.bands.back().second = n;
        else out.bands.emplace_back(n, n);
    }
    if (out.bands.size() == 1 && out.bands.front().second == n_max) {
        out.barrier = true;
        out.barrier_level = partition.grid().surplus().x(out.bands.front().first - 1);
    }
    return out;
}

/// E1: pay p*delta and move to x_{n-1}.
inline double op_pay(const ValueSurface& W, std::size_t n, std::size_t m) {
    if (n == 0) throw std::domain_error("paying a lump is not available at zero surplus");
    return W(n - 1, m) + W.grid().surplus().step();
}

/// EF: pay the whole surplus and close.
inline double op_finish(const SurplusGrid& grid, std::size_t n) { return grid.x(n); }

/// E0 applied to a surface through a prebuilt row.
inline double op_hold(const ValueSurface& W, const KernelRow& row) { return op_hold(W.values(), row); }

struct SolverOptions {
    double tol = 1e-9;
    std::size_t max_iter = 2'000'000;
    KernelOptions kernel;
};

struct IterationRecord {
    std::size_t iteration;
    double sup_change;
    std::size_t label_changes;
};

struct SolveResult {
    ValueSurface surface;
    PolicyPartition partition;
    std::vector<IterationRecord> log;
    double final_change;
    std::size_t iterations() const { return log.size(); }
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(std::size_t iterations, double last_change)
        : std::runtime_error("value iteration did not converge after " + std::to_string(iterations) +
                             " sweeps (last sup change " + std::to_string(last_change) + ")"),
          iterations_(iterations), last_change_(last_change) {}
    std::size_t iterations() const { return iterations_; }
    double last_change() const { return last_change_; }

private:
    std::size_t iterations_;
    double last_change_;
};

/// Result of one Bellman sweep over all cells.
struct Sweep {
    std::vector<double> values;
    std::vector<Action> labels;
};

/**
 * T = max{T0, T1, TF} applied to every cell from the same input surface.
 * Ties resolve Pay before Hold before Finish.
 */
inline Sweep bellman_sweep(const OneStepKernel& kernel, const StateGrid& grid, std::span<const double> W) {
    Sweep out{std::vector<double>(grid.cells()), std::vector<Action>(grid.cells())};
    const std::size_t N = grid.n_size();
    const double step = grid.surplus().step();
    parallel_for(grid.cells(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const std::size_t n = c % N;
            const double hold = kernel.apply(c, W);
            const double finish = grid.surplus().x(n);
            const double pay = n > 0 ? W[c - 1] + step : -std::numeric_limits<double>::infinity();
            if (pay >= hold && pay >= finish) {
                out.values[c] = pay;
                out.labels[c] = Action::Pay;
            } else if (hold >= finish) {
                out.values[c] = hold;
                out.labels[c] = Action::Hold;
            } else {
                out.values[c] = finish;
                out.labels[c] = Action::Finish;
            }
        }
    });
    return out;
}

/**
 * Value iteration W_{l+1} = T(W_l) from W_1 = x on the finite grid.
 *
 * Each sweep reads only the previous surface, so W_l increases
 * monotonically (checked every sweep). Stops once the sup change is
 * below tol and no label moved in the last sweep.
 */
inline SolveResult solve(const SurplusModel& model, const StateGrid& grid, const SolverOptions& options = {}) {
    OneStepKernel kernel(model, grid, options.kernel);
    std::vector<double> W(grid.cells());
    for (std::size_t c = 0; c < grid.cells(); ++c) W[c] = grid.surplus().x(c % grid.n_size());
    std::vector<Action> labels(grid.cells(), Action::Finish);
    std::vector<IterationRecord> log;

    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        Sweep next = bellman_sweep(kernel, grid, W);
        double change = 0.0;
        std::size_t moved = 0;
        for (std::size_t c = 0; c < grid.cells(); ++c) {
            if (next.values[c] < W[c])
                throw std::logic_error("value iteration lost monotonicity at cell " + std::to_string(c));
            change = std::max(change, next.values[c] - W[c]);
            moved += next.labels[c] != labels[c];
        }
        W.swap(next.values);
        labels.swap(next.labels);
        log.push_back({it, change, moved});
        if (change < options.tol && moved == 0)
            return SolveResult{ValueSurface(grid, std::move(W)), PolicyPartition(grid, std::move(labels)), std::move(log),
                               change};
    }
    throw NonConvergenceError(options.max_iter, log.empty() ? 0.0 : log.back().sup_change);
}

inline SolveResult solve(const ModelParams& params, const GridSpec& spec, const SolverOptions& options = {}) {
    auto model = params.surplus_model();
    return solve(model, make_grid(model, spec), options);
}

/// Largest |T(W) - W| over the grid, with T built from the same model.
inline double bellman_residual(const OneStepKernel& kernel, const ValueSurface& W) {
    Sweep s = bellman_sweep(kernel, W.grid(), W.values());
    double r = 0.0;
    for (std::size_t c = 0; c < W.grid().cells(); ++c) r = std::max(r, std::abs(s.values[c] - W.values()[c]));
    return r;
}

struct RefineReport {
    double scale = 0.0;             ///< W(n_max, 0) on the coarse grid
    double refine_sup_diff = 0.0;   ///< sup |fine - coarse| over coarse cells
    double refine_min_gain = 0.0;   ///< min (fine - coarse); negative means the finer grid is below
    double enlarged_sup_diff = 0.0; ///< sup |W(m_max enlarged) - W| over coarse cells
    std::size_t enlarged_label_changes = 0;
    std::size_t coarse_iterations = 0;
    std::size_t fine_iterations = 0;
    std::size_t enlarged_iterations = 0;
    double tol = 0.0;
    bool passed = false;
};

/**
 * Solves at (delta, Delta, m_max), at (delta/2, Delta/2, 2 m_max) and at
 * (delta, Delta, enlarged_m_max) and compares on the coarse cells.
 * Passes when both sup differences are below tol.
 */
inline RefineReport refine_check(const SurplusModel& model, const GridSpec& spec, double tol,
                                 const SolverOptions& options = {}, std::optional<std::size_t> enlarged_m_max = {}) {
    RefineReport r;
    r.tol = tol;
    auto coarse = solve(model, make_grid(model, spec), options);
    GridSpec fine_spec{spec.delta / 2, spec.delta_lambda / 2, spec.m_max * 2, spec.extra_surplus_cells * 2};
    auto fine = solve(model, make_grid(model, fine_spec), options);
    GridSpec wide_spec = spec;
    wide_spec.m_max = enlarged_m_max.value_or(spec.m_max * 2);
    auto wide = solve(model, make_grid(model, wide_spec), options);
    r.coarse_iterations = coarse.iterations();
    r.fine_iterations = fine.iterations();
    r.enlarged_iterations = wide.iterations();

    const auto& g = coarse.surface.grid();
    r.scale = coarse.surface(g.surplus().n_max(), 0);
    r.refine_min_gain = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m <= g.intensity().m_max(); ++m) {
        for (std::size_t n = 0; n <= g.surplus().n_max(); ++n) {
            double c = coarse.surface(n, m);
            double f = 2 * n <= fine.surface.grid().surplus().n_max() && 2 * m <= fine_spec.m_max
                           ? fine.surface(2 * n, 2 * m)
                           : fine.surface.evaluate(g.surplus().x(n), g.intensity().lambda(m));
            r.refine_sup_diff = std::max(r.refine_sup_diff, std::abs(f - c));
            r.refine_min_gain = std::min(r.refine_min_gain, f - c);
            r.enlarged_sup_diff = std::max(r.enlarged_sup_diff, std::abs(wide.surface(n, m) - c));
            r.enlarged_label_changes += wide.partition(n, m) != coarse.partition(n, m);
        }
    }
    r.passed = r.refine_sup_diff < tol && r.enlarged_sup_diff < tol;
    return r;
}

}  // namespace shotnoise

#endif  // SHOTNOISE_SOLVER_HPP
