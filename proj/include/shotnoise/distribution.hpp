#ifndef SHOTNOISE_DISTRIBUTION_HPP
#define SHOTNOISE_DISTRIBUTION_HPP

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace shotnoise {

struct Exponential {
    double rate;  ///< 1/money
};

struct Erlang {
    int shape;    ///< number of exponential phases, >= 1
    double rate;  ///< 1/money
};

struct Deterministic {
    double value;  ///< money
};

/**
 * Law of a positive random size (claim U or intensity jump Y).
 *
 * The solver only needs three functionals of the law: the cdf, the mean
 * and the partial expectation E[Z 1{a < Z <= b}]. All three are closed
 * form for the supported families. Deterministic laws additionally
 * report their atom so integrators can split at the discontinuity.
 */
class Distribution {
public:
    using Kind = std::variant<Exponential, Erlang, Deterministic>;

    Distribution(Kind kind) : kind_(kind) { validate(); }

    static Distribution exponential(double rate) { return Distribution(Exponential{rate}); }
    static Distribution erlang(int shape, double rate) { return Distribution(Erlang{shape, rate}); }
    static Distribution deterministic(double value) { return Distribution(Deterministic{value}); }

    const Kind& kind() const { return kind_; }

    std::string name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Exponential>) return "exponential";
                else if constexpr (std::is_same_v<K, Erlang>) return "erlang";
                else return "deterministic";
            },
            kind_);
    }

    double mean() const {
        return std::visit(
            [](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Exponential>) return 1.0 / k.rate;
                else if constexpr (std::is_same_v<K, Erlang>) return k.shape / k.rate;
                else return k.value;
            },
            kind_);
    }

    /// P(Z <= x). Right-continuous at atoms.
    double cdf(double x) const {
        check_argument(x);
        if (std::isinf(x)) return 1.0;
        return std::visit(
            [x](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Exponential>) return -std::expm1(-k.rate * x);
                else if constexpr (std::is_same_v<K, Erlang>) return erlang_cdf(k.shape, k.rate, x);
                else return x >= k.value ? 1.0 : 0.0;
            },
            kind_);
    }

    /// P(Z > x), computed without cancellation in the tail.
    double sf(double x) const {
        check_argument(x);
        if (std::isinf(x)) return 0.0;
        return std::visit(
            [x](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Exponential>) return std::exp(-k.rate * x);
                else if constexpr (std::is_same_v<K, Erlang>) return erlang_sf(k.shape, k.rate, x);
                else return x >= k.value ? 0.0 : 1.0;
            },
            kind_);
    }

    /// E[Z 1{Z <= x}].
    double truncated_mean(double x) const {
        check_argument(x);
        if (std::isinf(x)) return mean();
        return std::visit(
            [x](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                // Z 1{Z<=x} for Erlang(k, r) integrates to (k/r) * cdf of Erlang(k+1, r).
                if constexpr (std::is_same_v<K, Exponential>) return erlang_cdf(2, k.rate, x) / k.rate;
                else if constexpr (std::is_same_v<K, Erlang>) return k.shape / k.rate * erlang_cdf(k.shape + 1, k.rate, x);
                else return x >= k.value ? k.value : 0.0;
            },
            kind_);
    }

    /// E[Z 1{a < Z <= b}] for 0 <= a <= b (b may be +inf).
    double partial_expectation(double a, double b) const {
        check_argument(a);
        check_argument(b);
        if (a > b) throw std::domain_error("partial_expectation requires a <= b");
        double v = truncated_mean(b) - truncated_mean(a);
        return v > 0.0 ? v : 0.0;
    }

    /// Points carrying positive probability mass.
    std::vector<double> atoms() const {
        if (const auto* d = std::get_if<Deterministic>(&kind_)) return {d->value};
        return {};
    }

    template <class Rng>
    double sample(Rng& rng) const {
        return std::visit(
            [&rng](const auto& k) -> double {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Exponential>) {
                    return std::exponential_distribution<double>(k.rate)(rng);
                } else if constexpr (std::is_same_v<K, Erlang>) {
                    std::exponential_distribution<double> e(k.rate);
                    double s = 0.0;
                    for (int i = 0; i < k.shape; ++i) s += e(rng);
                    return s;
                } else {
                    return k.value;
                }
            },
            kind_);
    }

private:
    Kind kind_;

    void validate() const {
        std::visit(
            [](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Exponential>) {
                    if (!(k.rate > 0.0) || !std::isfinite(k.rate)) throw std::invalid_argument("exponential rate must be > 0");
                } else if constexpr (std::is_same_v<K, Erlang>) {
                    if (k.shape < 1) throw std::invalid_argument("erlang shape must be >= 1");
                    if (!(k.rate > 0.0) || !std::isfinite(k.rate)) throw std::invalid_argument("erlang rate must be > 0");
                } else {
                    if (!(k.value > 0.0) || !std::isfinite(k.value)) throw std::invalid_argument("deterministic value must be > 0");
                }
            },
            kind_);
    }

    static void check_argument(double x) {
        if (!(x >= 0.0)) throw std::domain_error("distribution argument must be >= 0");
    }

    // Poisson(rx) mass of {0..k-1} times e^{-rx}.
    static double erlang_sf(int shape, double rate, double x) {
        double rx = rate * x;
        double term = 1.0;
        double sum = 1.0;
        for (int i = 1; i < shape; ++i) {
            term *= rx / i;
            sum += term;
        }
        return std::exp(-rx) * sum;
    }

    static double erlang_cdf(int shape, double rate, double x) {
        if (shape == 1) return -std::expm1(-rate * x);
        double rx = rate * x;
        // For small rx the complement sum cancels badly; use the series of the lower tail.
        if (rx < 1.0) {
            // P(N >= k) for N ~ Poisson(rx) = e^{-rx} sum_{i>=k} rx^i/i!
            double term = 1.0;
            for (int i = 1; i <= shape; ++i) term *= rx / i;
            double sum = 0.0;
            for (int i = shape; i < shape + 60; ++i) {
                sum += term;
                term *= rx / (i + 1);
                if (term < sum * 1e-18) break;
            }
            return std::exp(-rx) * sum;
        }
        return 1.0 - erlang_sf(shape, rate, x);
    }
};

}  // namespace shotnoise

#endif  // SHOTNOISE_DISTRIBUTION_HPP
