#ifndef SHOTNOISE_GRID_HPP
#define SHOTNOISE_GRID_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shotnoise {

/// Result of projecting a real state onto a grid axis.
struct Projection {
    std::size_t index;
    bool overflow;  ///< index lies beyond the explicitly stored range
};

/**
 * Surplus grid x_n = n * p * delta, truncated at the first point at or
 * above the payout threshold p/q. Points are recomputed as n * step on
 * demand so every x_n is reproducible bit for bit.
 */
class SurplusGrid {
public:
    SurplusGrid(double step, std::size_t n_max, double delta = 0.0) : step_(step), n_max_(n_max), delta_(delta) {
        if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("surplus grid step must be > 0");
    }

    /// Grid with step premium * delta whose top point is the first at or above `threshold`,
    /// optionally extended by `extra` cells.
    static SurplusGrid covering(double premium, double delta, double threshold, std::size_t extra = 0) {
        if (!(delta > 0.0)) throw std::invalid_argument("delta must be > 0");
        double step = premium * delta;
        if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
        auto n = static_cast<std::size_t>(std::ceil(threshold / step));
        while (n > 0 && static_cast<double>(n - 1) * step >= threshold) --n;
        while (static_cast<double>(n) * step < threshold) ++n;
        return SurplusGrid(step, n + extra, delta);
    }

    double step() const { return step_; }
    double delta() const { return delta_; }
    std::size_t n_max() const { return n_max_; }
    std::size_t size() const { return n_max_ + 1; }
    double x(std::size_t n) const { return static_cast<double>(n) * step_; }

    /// Largest n with x_n <= x.
    Projection rho(double x) const {
        if (!(x >= 0.0)) throw std::domain_error("surplus must be >= 0 before projection");
        double r = std::floor(x / step_);
        auto n = static_cast<std::size_t>(r);
        while (n > 0 && this->x(n) > x) --n;
        while (this->x(n + 1) <= x) ++n;
        return {n, n > n_max_};
    }

private:
    double step_;
    std::size_t n_max_;
    double delta_;
};

/// Intensity grid lambda_m = floor + m * Delta for m = 0..m_max.
class IntensityGrid {
public:
    IntensityGrid(double floor, double delta_lambda, std::size_t m_max)
        : floor_(floor), delta_lambda_(delta_lambda), m_max_(m_max) {
        if (!(floor >= 0.0)) throw std::invalid_argument("intensity floor must be >= 0");
        if (!(delta_lambda > 0.0) || !std::isfinite(delta_lambda))
            throw std::invalid_argument("intensity grid spacing must be > 0");
    }

    double floor() const { return floor_; }
    double delta_lambda() const { return delta_lambda_; }
    std::size_t m_max() const { return m_max_; }
    std::size_t size() const { return m_max_ + 1; }
    double lambda(std::size_t m) const { return floor_ + static_cast<double>(m) * delta_lambda_; }

    /// Smallest m with lambda_m >= lam.
    Projection sigma(double lam) const {
        if (!(lam >= floor_)) throw std::domain_error("intensity below the floor");
        double r = std::ceil((lam - floor_) / delta_lambda_);
        auto m = static_cast<std::size_t>(r);
        while (m > 0 && lambda(m - 1) >= lam) --m;
        while (lambda(m) < lam) ++m;
        return {m, m > m_max_};
    }

private:
    double floor_;
    double delta_lambda_;
    std::size_t m_max_;
};

/// A time at which the projected decaying intensity steps down to `index`.
struct Crossing {
    double time;
    std::size_t index;
};

/**
 * Times in (0, horizon] at which lambda^c started from lambda_{m_start}
 * reaches lambda_{m_start - j}. On [t_j, t_{j+1}) sigma(lambda^c_t) is
 * constant and equal to the index of crossing j (m_start before the
 * first crossing). The level lambda_0 is approached but never reached.
 */
inline std::vector<Crossing> decay_crossings(const IntensityGrid& h, std::size_t m_start, double decay,
                                             double horizon) {
    if (m_start > h.m_max()) throw std::out_of_range("m_start beyond the intensity grid");
    if (!(decay > 0.0)) throw std::invalid_argument("decay must be > 0");
    std::vector<Crossing> out;
    const double top = static_cast<double>(m_start);
    for (std::size_t j = 1; j < m_start; ++j) {
        double t = std::log(top / static_cast<double>(m_start - j)) / decay;
        if (t > horizon) break;
        out.push_back({t, m_start - j});
    }
    return out;
}

/// The product grid G_delta x H_Delta. Cells are stored intensity-major.
class StateGrid {
public:
    StateGrid(SurplusGrid surplus, IntensityGrid intensity) : surplus_(surplus), intensity_(intensity) {}

    const SurplusGrid& surplus() const { return surplus_; }
    const IntensityGrid& intensity() const { return intensity_; }
    std::size_t n_size() const { return surplus_.size(); }
    std::size_t m_size() const { return intensity_.size(); }
    std::size_t cells() const { return n_size() * m_size(); }
    std::size_t flat(std::size_t n, std::size_t m) const { return m * n_size() + n; }

private:
    SurplusGrid surplus_;
    IntensityGrid intensity_;
};

}  // namespace shotnoise

#endif  // SHOTNOISE_GRID_HPP
