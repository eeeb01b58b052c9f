#ifndef SHOTNOISE_MODEL_HPP
#define SHOTNOISE_MODEL_HPP

#include <cmath>
#include <optional>
#include <stdexcept>

#include "distribution.hpp"
#include "rational.hpp"

namespace shotnoise {

/// Long-run mean claim intensity: floor + beta E(Y) / d.
template <class T>
T average_intensity(const T& lambda_floor, const T& beta, const T& mean_jump, const T& decay) {
    return lambda_floor + beta * mean_jump / decay;
}

/// Expected value premium principle: (1 + loading) E(U) lambda_av.
template <class T>
T expected_value_premium(const T& loading, const T& mean_claim, const T& lambda_av) {
    return (T(1) + loading) * mean_claim * lambda_av;
}

/**
 * The quantities the dividend problem actually runs on: intensity
 * dynamics, discounting, both laws and the premium rate.
 *
 * Unlike ModelParams the premium here is free. The constant-intensity
 * baseline needs that (it reuses the shot-noise premium at a different
 * intensity); everything else obtains a SurplusModel from ModelParams.
 */
struct SurplusModel {
    double lambda_floor;
    double beta;
    double decay;
    double discount;
    Distribution claim_law;
    Distribution jump_law;
    double premium;

    /// p/q, above which surplus is paid out immediately.
    double payout_threshold() const { return premium / discount; }
    double lambda_av() const { return average_intensity(lambda_floor, beta, jump_law.mean(), decay); }

    void validate() const {
        if (!(lambda_floor >= 0.0)) throw std::invalid_argument("lambda_floor must be >= 0");
        if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
        if (!(decay > 0.0)) throw std::invalid_argument("decay must be > 0");
        if (!(discount > 0.0)) throw std::invalid_argument("discount must be > 0");
        if (!(premium > 0.0)) throw std::invalid_argument("premium must be > 0");
    }
};

/// Rational copy of the scalar inputs, kept when the inputs came from exact text.
struct ExactInputs {
    Rational lambda_floor;
    Rational beta;
    Rational decay;
    Rational discount;
    Rational loading;
    Rational mean_claim;
    Rational mean_jump;

    Rational lambda_av() const { return average_intensity(lambda_floor, beta, mean_jump, decay); }
    Rational premium() const { return expected_value_premium(loading, mean_claim, lambda_av()); }
};

/**
 * Economic and stochastic primitives of the shot-noise risk model.
 *
 * The premium is always derived from the other inputs; when exact
 * rational inputs are supplied it is computed in rational arithmetic
 * and rounded once.
 */
class ModelParams {
public:
    ModelParams(double lambda_floor, double beta, double decay, double discount, double loading,
                Distribution claim_law, Distribution jump_law)
        : lambda_floor_(lambda_floor), beta_(beta), decay_(decay), discount_(discount), loading_(loading),
          claim_law_(claim_law), jump_law_(jump_law) {
        validate();
        premium_ = expected_value_premium(loading_, claim_law_.mean(), lambda_av());
    }

    /// Builds from exact inputs. The laws must have the means recorded in `exact`.
    ModelParams(const ExactInputs& exact, Distribution claim_law, Distribution jump_law)
        : ModelParams(exact.lambda_floor.to_double(), exact.beta.to_double(), exact.decay.to_double(),
                      exact.discount.to_double(), exact.loading.to_double(), claim_law, jump_law) {
        if (std::abs(exact.mean_claim.to_double() - claim_law.mean()) > 1e-12 * claim_law.mean() ||
            std::abs(exact.mean_jump.to_double() - jump_law.mean()) > 1e-12 * jump_law.mean())
            throw std::invalid_argument("exact means disagree with the distributions");
        exact_ = exact;
        premium_ = exact.premium().to_double();
    }

    double lambda_floor() const { return lambda_floor_; }
    double beta() const { return beta_; }
    double decay() const { return decay_; }
    double discount() const { return discount_; }
    double loading() const { return loading_; }
    const Distribution& claim_law() const { return claim_law_; }
    const Distribution& jump_law() const { return jump_law_; }
    const std::optional<ExactInputs>& exact() const { return exact_; }

    double lambda_av() const { return average_intensity(lambda_floor_, beta_, jump_law_.mean(), decay_); }
    double premium() const { return premium_; }

    SurplusModel surplus_model() const {
        return SurplusModel{lambda_floor_, beta_, decay_, discount_, claim_law_, jump_law_, premium_};
    }

private:
    double lambda_floor_;
    double beta_;
    double decay_;
    double discount_;
    double loading_;
    Distribution claim_law_;
    Distribution jump_law_;
    double premium_ = 0.0;
    std::optional<ExactInputs> exact_;

    void validate() const {
        if (!(lambda_floor_ >= 0.0) || !std::isfinite(lambda_floor_)) throw std::invalid_argument("lambda_floor must be >= 0");
        if (!(beta_ >= 0.0) || !std::isfinite(beta_)) throw std::invalid_argument("beta must be >= 0");
        if (!(decay_ > 0.0) || !std::isfinite(decay_)) throw std::invalid_argument("decay must be > 0");
        if (!(discount_ > 0.0) || !std::isfinite(discount_)) throw std::invalid_argument("discount must be > 0");
        if (!(loading_ > 0.0) || !std::isfinite(loading_)) throw std::invalid_argument("loading must be > 0");
    }
};

inline double lambda_av(const ModelParams& params) { return params.lambda_av(); }
inline double premium(const ModelParams& params) { return params.premium(); }

/// E(lambda_t) for the shot-noise intensity started at lambda0.
inline double mean_intensity(const ModelParams& params, double lambda0, double t) {
    if (!(t >= 0.0)) throw std::domain_error("t must be >= 0");
    if (lambda0 < params.lambda_floor()) throw std::domain_error("lambda0 below the intensity floor");
    double d = params.decay();
    double e = std::exp(-d * t);
    double one_minus = -std::expm1(-d * t);
    return params.lambda_floor() * one_minus + lambda0 * e + one_minus / d * params.beta() * params.jump_law().mean();
}

/// E(Lambda_t), the expected integrated intensity over [0, t].
inline double mean_cumulative_intensity(const ModelParams& params, double lambda0, double t) {
    if (!(t >= 0.0)) throw std::domain_error("t must be >= 0");
    if (lambda0 < params.lambda_floor()) throw std::domain_error("lambda0 below the intensity floor");
    double d = params.decay();
    double one_minus = -std::expm1(-d * t);
    // e^{-dt} - 1 + dt
    double tail = std::expm1(-d * t) + d * t;
    double lf = params.lambda_floor();
    return lf * t - lf * one_minus / d + one_minus / d * lambda0 + tail / (d * d) * params.beta() * params.jump_law().mean();
}

}  // namespace shotnoise

#endif  // SHOTNOISE_MODEL_HPP
