#ifndef SHOTNOISE_QUADRATURE_HPP
#define SHOTNOISE_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace shotnoise {

/// Gauss-Legendre rule of a fixed order on [-1, 1].
class GaussLegendre {
public:
    explicit GaussLegendre(int order) {
        if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
        nodes_.resize(order);
        weights_.resize(order);
        const int n = order;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            // Tricomi initial guess, then Newton on P_n.
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int k = 2; k <= n; ++k) {
                    double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            // recompute derivative at the converged root
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes_[i] = -x;
            nodes_[n - 1 - i] = x;
            weights_[i] = w;
            weights_[n - 1 - i] = w;
        }
        if (n % 2 == 1) nodes_[n / 2] = 0.0;
    }

    int order() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Calls visit(t, w) for each node mapped to [a, b], with w the mapped weight.
    template <class Visit>
    void for_each_node(double a, double b, Visit&& visit) const {
        double half = 0.5 * (b - a);
        double mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < nodes_.size(); ++i) visit(mid + half * nodes_[i], half * weights_[i]);
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        double s = 0.0;
        for_each_node(a, b, [&](double t, double w) { s += w * f(t); });
        return s;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace shotnoise

#endif  // SHOTNOISE_QUADRATURE_HPP
