#ifndef SHOTNOISE_KERNEL_HPP
#define SHOTNOISE_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace shotnoise {

struct KernelOptions {
    int quadrature_order = 16;
    /// Claim targets are skipped once the remaining claim-size tail mass is below this.
    double claim_tail_cutoff = 1e-16;
};

/**
 * Decomposition of the hold action (pay nothing for delta ^ T ^ tau) at
 * one grid cell into discounted transition weights plus constants.
 *
 * op_hold(W) = sum_i weight_i * W[target_i] + constant(x_n), where the
 * constant collects the lump dividends paid inside the window, the
 * overflow mass (jumps past m_max, valued at x_n) and the linear
 * extension term for the survival target beyond n_max.
 */
struct KernelRow {
    std::vector<std::uint32_t> targets;  ///< flat cell indices, ascending
    std::vector<double> weights;
    double dividend = 0.0;           ///< expected discounted lump dividends within the window
    double overflow_weight = 0.0;    ///< discounted mass of jumps beyond m_max
    double boundary_constant = 0.0;  ///< survival past n_max: weight * step
    double overflow_value = 0.0;     ///< x_n, the value assigned to overflow

    double survival_weight = 0.0;
    double claim_weight = 0.0;
    double catastrophe_weight = 0.0;

    double constant() const { return dividend + overflow_weight * overflow_value + boundary_constant; }
    double total_weight() const {
        double s = overflow_weight;
        for (double w : weights) s += w;
        return s;
    }
};

namespace detail {

struct Piece {
    double a;
    double b;
    std::size_t index;  // sigma(lambda^c) on [a, b)
};

// Splits [0, delta] at intensity-grid crossings and at times where an atom of
// either law puts the integrand on a discontinuity.
inline std::vector<Piece> hold_window_pieces(const SurplusModel& model, const StateGrid& grid, std::size_t m) {
    const auto& h = grid.intensity();
    const double delta = grid.surplus().delta();
    const double p = model.premium;
    auto crossings = decay_crossings(h, m, model.decay, delta);

    std::vector<double> cuts{0.0, delta};
    for (const auto& c : crossings) cuts.push_back(c.time);
    for (double c : model.claim_law.atoms()) {
        // x_n + p t - c lands on a grid point once per window
        double r = std::fmod(c / p, delta);
        if (r > 0.0 && r < delta) cuts.push_back(r);
    }
    if (m > 0 && model.beta > 0.0) {
        const double top = static_cast<double>(m) * h.delta_lambda();
        const double bottom = top * std::exp(-model.decay * delta);
        for (double c : model.jump_law.atoms()) {
            auto j_lo = static_cast<long long>(std::floor((bottom + c) / h.delta_lambda()));
            auto j_hi = static_cast<long long>(std::ceil((top + c) / h.delta_lambda()));
            for (long long j = std::max(0LL, j_lo); j <= j_hi; ++j) {
                double v = static_cast<double>(j) * h.delta_lambda() - c;
                if (v <= 0.0 || v >= top) continue;
                double t = std::log(top / v) / model.decay;
                if (t > 0.0 && t < delta) cuts.push_back(t);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Piece> pieces;
    std::size_t passed = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = cuts[i];
        double b = cuts[i + 1];
        while (passed < crossings.size() && crossings[passed].time <= a) ++passed;
        std::size_t index = passed == 0 ? m : crossings[passed - 1].index;
        if (b > a) pieces.push_back({a, b, index});
    }
    return pieces;
}

}  // namespace detail

/**
 * Builds the hold-action row for cell (n, m) of the projected-intensity model.
 *
 * Over the window the claim intensity is sigma(lambda^c_s), piecewise
 * constant between decay crossings, so the survival factor is an exact
 * exponential on every piece. Claim and jump expectations are exact
 * finite sums of cdf differences; only the outer time integral is done
 * by Gauss-Legendre on each piece.
 */
inline KernelRow build_kernel_row(const SurplusModel& model, const StateGrid& grid, std::size_t n, std::size_t m,
                                  const GaussLegendre& gl, const KernelOptions& options = {}) {
    const auto& xs = grid.surplus();
    const auto& h = grid.intensity();
    if (n > xs.n_max() || m > h.m_max()) throw std::out_of_range("kernel cell outside the grid");
    const double delta = xs.delta();
    if (!(delta > 0.0)) throw std::invalid_argument("surplus grid has no time step");
    const double p = model.premium;
    const double q = model.discount;
    const double beta = model.beta;
    const double step = xs.step();
    const double xn = xs.x(n);
    const double excess0 = static_cast<double>(m) * h.delta_lambda();
    const std::size_t N = grid.n_size();

    KernelRow row;
    row.overflow_value = xn;

    auto pieces = detail::hold_window_pieces(model, grid, m);

    // dense accumulators: claims land on (j <= n, k), jumps on (n, m'' >= k)
    std::vector<std::size_t> claim_levels;
    std::vector<std::vector<double>> claim_acc;
    std::vector<double> jump_acc(h.size(), 0.0);
    auto claim_slot = [&](std::size_t k) -> std::vector<double>& {
        for (std::size_t i = 0; i < claim_levels.size(); ++i)
            if (claim_levels[i] == k) return claim_acc[i];
        claim_levels.push_back(k);
        claim_acc.emplace_back(n + 1, 0.0);
        return claim_acc.back();
    };

    double hat_integral = 0.0;  // int_0^a sigma(lambda^c_s) ds at the current piece start
    std::size_t end_index = m;
    for (const auto& piece : pieces) {
        const double lam = h.lambda(piece.index);
        std::vector<double>* acc = lam > 0.0 ? &claim_slot(piece.index) : nullptr;
        gl.for_each_node(piece.a, piece.b, [&](double t, double w) {
            const double survive = std::exp(-(q + beta) * t - hat_integral - lam * (t - piece.a));
            if (acc) {
                const double cw = w * survive * lam;
                const double y = xn + p * t;
                double f_lo = 0.0;
                double tm_lo = 0.0;
                for (std::size_t j = n + 1; j-- > 0;) {
                    const double hi = y - xs.x(j);
                    const double f_hi = model.claim_law.cdf(hi);
                    const double tm_hi = model.claim_law.truncated_mean(hi);
                    const double mass = f_hi - f_lo;
                    if (mass > 0.0) {
                        (*acc)[j] += cw * mass;
                        row.dividend += cw * ((y - xs.x(j)) * mass - std::max(0.0, tm_hi - tm_lo));
                        row.claim_weight += cw * mass;
                    }
                    f_lo = f_hi;
                    tm_lo = tm_hi;
                    if (model.claim_law.sf(hi) < options.claim_tail_cutoff) break;
                }
            }
            if (beta > 0.0) {
                const double bw = w * survive * beta;
                const double lam_c = h.floor() + std::exp(-model.decay * t) * excess0;
                row.dividend += bw * p * t;
                double f_prev = 0.0;
                for (std::size_t k = piece.index; k <= h.m_max(); ++k) {
                    const double f = model.jump_law.cdf(std::max(0.0, h.lambda(k) - lam_c));
                    const double mass = f - f_prev;
                    if (mass > 0.0) {
                        jump_acc[k] += bw * mass;
                        row.catastrophe_weight += bw * mass;
                    }
                    f_prev = f;
                }
                const double over = bw * model.jump_law.sf(std::max(0.0, h.lambda(h.m_max()) - lam_c));
                row.overflow_weight += over;
                row.catastrophe_weight += over;
            }
        });
        hat_integral += lam * (piece.b - piece.a);
        end_index = piece.index;
    }
    // a crossing landing exactly on delta switches the target level
    for (const auto& c : decay_crossings(h, m, model.decay, delta))
        if (c.time <= delta) end_index = c.index;

    std::vector<std::pair<std::uint32_t, double>> entries;
    const double survival = std::exp(-(q + beta) * delta - hat_integral);
    row.survival_weight = survival;
    if (n < xs.n_max()) {
        entries.emplace_back(static_cast<std::uint32_t>(grid.flat(n + 1, end_index)), survival);
    } else {
        entries.emplace_back(static_cast<std::uint32_t>(grid.flat(n, end_index)), survival);
        row.boundary_constant = survival * step;
    }
    for (std::size_t i = 0; i < claim_levels.size(); ++i)
        for (std::size_t j = 0; j <= n; ++j)
            if (claim_acc[i][j] > 0.0)
                entries.emplace_back(static_cast<std::uint32_t>(claim_levels[i] * N + j), claim_acc[i][j]);
    for (std::size_t k = 0; k < jump_acc.size(); ++k)
        if (jump_acc[k] > 0.0) entries.emplace_back(static_cast<std::uint32_t>(grid.flat(n, k)), jump_acc[k]);

    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [target, weight] : entries) {
        if (!row.targets.empty() && row.targets.back() == target) {
            row.weights.back() += weight;
        } else {
            row.targets.push_back(target);
            row.weights.push_back(weight);
        }
    }
    return row;
}

/// op_hold for a single row: weighted sum of W plus the row constant.
inline double op_hold(std::span<const double> W, const KernelRow& row) {
    double s = row.constant();
    for (std::size_t i = 0; i < row.targets.size(); ++i) s += row.weights[i] * W[row.targets[i]];
    return s;
}

/// All hold rows of a grid in compressed-row form. Independent of W.
class OneStepKernel {
public:
    OneStepKernel(const SurplusModel& model, const StateGrid& grid, const KernelOptions& options = {})
        : cells_(grid.cells()) {
        model.validate();
        if (cells_ > UINT32_MAX) throw std::length_error("grid too large for 32-bit cell indices");
        GaussLegendre gl(options.quadrature_order);
        std::vector<KernelRow> rows(cells_);
        parallel_for(cells_, [&](std::size_t begin, std::size_t end) {
            for (std::size_t c = begin; c < end; ++c) {
                std::size_t n = c % grid.n_size();
                std::size_t m = c / grid.n_size();
                rows[c] = build_kernel_row(model, grid, n, m, gl, options);
            }
        });
        offsets_.reserve(cells_ + 1);
        offsets_.push_back(0);
        constants_.resize(cells_);
        for (std::size_t c = 0; c < cells_; ++c) {
            targets_.insert(targets_.end(), rows[c].targets.begin(), rows[c].targets.end());
            weights_.insert(weights_.end(), rows[c].weights.begin(), rows[c].weights.end());
            offsets_.push_back(targets_.size());
            constants_[c] = rows[c].constant();
            rows[c] = KernelRow{};
        }
    }

    std::size_t cells() const { return cells_; }
    std::size_t nonzeros() const { return targets_.size(); }
    double constant(std::size_t cell) const { return constants_[cell]; }

    double apply(std::size_t cell, std::span<const double> W) const {
        double s = constants_[cell];
        for (std::size_t i = offsets_[cell]; i < offsets_[cell + 1]; ++i) s += weights_[i] * W[targets_[i]];
        return s;
    }

    /// Sum of transition weights of one row (without overflow mass).
    double row_weight(std::size_t cell) const {
        double s = 0.0;
        for (std::size_t i = offsets_[cell]; i < offsets_[cell + 1]; ++i) s += weights_[i];
        return s;
    }

private:
    std::size_t cells_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> targets_;
    std::vector<double> weights_;
    std::vector<double> constants_;
};

}  // namespace shotnoise

#endif  // SHOTNOISE_KERNEL_HPP
