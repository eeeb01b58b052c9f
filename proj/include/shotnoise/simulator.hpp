#ifndef SHOTNOISE_SIMULATOR_HPP
#define SHOTNOISE_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "solver.hpp"

namespace shotnoise {

struct CatastropheEvent {
    double time;
    double jump;
};

/**
 * One realisation of the shot-noise intensity on [0, horizon]:
 * lambda_t = floor + e^{-dt}(lambda0 - floor) + sum_{T_k <= t} Y_k e^{-d(t - T_k)}.
 */
class IntensityPath {
public:
    IntensityPath(double floor, double decay, double lambda0, double horizon, std::vector<CatastropheEvent> events)
        : floor_(floor), decay_(decay), lambda0_(lambda0), horizon_(horizon), events_(std::move(events)) {
        if (!(lambda0 >= floor)) throw std::domain_error("initial intensity below the floor");
        excess_after_.reserve(events_.size());
        double excess = lambda0 - floor;
        double last = 0.0;
        for (const auto& e : events_) {
            if (e.time < last) throw std::invalid_argument("catastrophe times must be ordered");
            excess = excess * std::exp(-decay * (e.time - last)) + e.jump;
            excess_after_.push_back(excess);
            last = e.time;
        }
    }

    double floor() const { return floor_; }
    double horizon() const { return horizon_; }
    double initial() const { return lambda0_; }
    const std::vector<CatastropheEvent>& events() const { return events_; }

    /// lambda_t, right-continuous at catastrophe times.
    double at(double t) const {
        auto [start, excess] = segment(t);
        return floor_ + excess * std::exp(-decay_ * (t - start));
    }

    /// int_a^b lambda_s ds, exact.
    double integral(double a, double b) const {
        if (b < a) throw std::invalid_argument("integral bounds out of order");
        double total = 0.0;
        double s = a;
        while (s < b) {
            auto [start, excess] = segment(s);
            double next = next_event_after(s);
            double e = std::min(b, next);
            double ex = excess * std::exp(-decay_ * (s - start));
            total += floor_ * (e - s) + ex * (-std::expm1(-decay_ * (e - s))) / decay_;
            s = e;
        }
        return total;
    }

    /// Start time and excess over the floor of the inter-catastrophe segment containing t.
    std::pair<double, double> segment(double t) const {
        auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                   [](double v, const CatastropheEvent& e) { return v < e.time; });
        if (it == events_.begin()) return {0.0, lambda0_ - floor_};
        std::size_t k = static_cast<std::size_t>(it - events_.begin()) - 1;
        return {events_[k].time, excess_after_[k]};
    }

    double next_event_after(double t) const {
        auto it = std::upper_bound(events_.begin(), events_.end(), t,
                                   [](double v, const CatastropheEvent& e) { return v < e.time; });
        return it == events_.end() ? std::numeric_limits<double>::infinity() : it->time;
    }

private:
    double floor_;
    double decay_;
    double lambda0_;
    double horizon_;
    std::vector<CatastropheEvent> events_;
    std::vector<double> excess_after_;
};

/// Catastrophes as a Poisson(beta) stream on [0, horizon] with jumps from the jump law.
template <class Rng>
IntensityPath simulate_intensity(const SurplusModel& model, double lambda0, double horizon, Rng& rng) {
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    std::vector<CatastropheEvent> events;
    if (model.beta > 0.0) {
        std::exponential_distribution<double> gap(model.beta);
        double t = gap(rng);
        while (t <= horizon) {
            events.push_back({t, model.jump_law.sample(rng)});
            t += gap(rng);
        }
    }
    return IntensityPath(model.lambda_floor, model.decay, lambda0, horizon, std::move(events));
}

/**
 * Claim arrival times of the Cox process on [0, horizon] by thinning.
 * Between catastrophes the intensity only decays, so the value at the
 * start of each segment bounds it for the whole segment.
 */
template <class Rng>
std::vector<double> simulate_claims(const IntensityPath& path, Rng& rng) {
    std::vector<double> claims;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double start = 0.0;
    std::size_t k = 0;
    const auto& ev = path.events();
    while (start < path.horizon()) {
        double end = k < ev.size() ? std::min(ev[k].time, path.horizon()) : path.horizon();
        double bound = path.at(start);
        if (bound > 0.0) {
            std::exponential_distribution<double> gap(bound);
            double t = start + gap(rng);
            while (t < end) {
                if (unif(rng) * bound <= path.at(t)) claims.push_back(t);
                t += gap(rng);
            }
        }
        start = end;
        ++k;
    }
    return claims;
}

enum class HoldEvent { Survive, Claim, Ruin, Catastrophe };

/// What ended one hold window started at a grid cell.
struct HoldOutcome {
    HoldEvent event;
    double time;           ///< elapsed time in the window
    std::size_t n;         ///< surplus index after the event (n + 1 on survival, possibly n_max + 1)
    std::size_t m;         ///< intensity index after the event
    bool overflow = false; ///< intensity jumped past m_max
    double lump = 0.0;     ///< undiscounted lump dividend paid at the event
};

/**
 * Samples one hold window from (x_n, lambda_m) in the projected-intensity
 * model: claims arrive at rate sigma(lambda^c_s) (thinned against
 * lambda_m), catastrophes at rate beta, the window closes after delta.
 */
template <class Rng>
HoldOutcome sample_hold_window(const SurplusModel& model, const StateGrid& grid, std::size_t n, std::size_t m, Rng& rng) {
    const auto& xs = grid.surplus();
    const auto& h = grid.intensity();
    const double delta = xs.delta();
    const double excess0 = h.lambda(m) - h.floor();
    auto decayed = [&](double t) { return h.floor() + std::exp(-model.decay * t) * excess0; };

    double t_cat = std::numeric_limits<double>::infinity();
    if (model.beta > 0.0) t_cat = std::exponential_distribution<double>(model.beta)(rng);
    const double end = std::min(delta, t_cat);

    const double bound = h.lambda(m);
    if (bound > 0.0) {
        std::exponential_distribution<double> gap(bound);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double t = gap(rng);
        while (t < end) {
            const std::size_t k = h.sigma(decayed(t)).index;
            if (unif(rng) * bound <= h.lambda(k)) {
                const double u = model.claim_law.sample(rng);
                const double y = xs.x(n) + model.premium * t - u;
                if (y < 0.0) return {HoldEvent::Ruin, t, 0, k, false, 0.0};
                std::size_t j = std::min(xs.rho(y).index, n);
                return {HoldEvent::Claim, t, j, k, false, y - xs.x(j)};
            }
            t += gap(rng);
        }
    }
    if (t_cat < delta) {
        const double jump = model.jump_law.sample(rng);
        auto proj = h.sigma(decayed(t_cat) + jump);
        return {HoldEvent::Catastrophe, t_cat, n, proj.index, proj.overflow, model.premium * t_cat};
    }
    return {HoldEvent::Survive, delta, n + 1, h.sigma(decayed(delta)).index, false, 0.0};
}

/// Discounted value of one sampled hold window against a surface (the quantity T0 averages).
inline double hold_window_payoff(const SurplusModel& model, const ValueSurface& W, std::size_t n, const HoldOutcome& o) {
    const auto& xs = W.grid().surplus();
    const double disc = std::exp(-model.discount * o.time);
    switch (o.event) {
        case HoldEvent::Ruin: return 0.0;
        case HoldEvent::Claim: return disc * (o.lump + W(o.n, o.m));
        case HoldEvent::Catastrophe: return disc * (o.lump + (o.overflow ? xs.x(n) : W(n, o.m)));
        case HoldEvent::Survive:
            if (o.n > xs.n_max()) return disc * (W(xs.n_max(), o.m) + xs.step());
            return disc * W(o.n, o.m);
    }
    return 0.0;
}

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double horizon = 0.0;
    double truncation_bound = 0.0;
    std::string warning;
};

/// Mean and standard error of per-path samples, reduced in path order.
inline MCEstimate summarize(const std::vector<double>& samples) {
    MCEstimate e;
    e.n_paths = samples.size();
    if (samples.size() < 2) throw std::invalid_argument("need at least two samples");
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (double v : samples) {
        ++k;
        double d = v - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (v - mean);
    }
    e.mean = mean;
    e.std_error = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
    return e;
}

/// Stream id for path i of a run labelled `tag`; tags keep probes of one seed apart.
inline std::uint64_t stream_id(std::uint64_t tag, std::uint64_t path) { return (tag << 32) ^ path; }

/// MC estimate of one hold window from (n, m) against W.
inline MCEstimate one_step_mc(const SurplusModel& model, const ValueSurface& W, std::size_t n, std::size_t m,
                              std::size_t n_samples, std::uint64_t seed) {
    const auto& grid = W.grid();
    std::vector<double> samples(n_samples);
    const std::uint64_t tag = grid.flat(n, m);
    parallel_for(n_samples, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Philox4x32 rng(seed, stream_id(tag, i));
            samples[i] = hold_window_payoff(model, W, n, sample_hold_window(model, grid, n, m, rng));
        }
    });
    return summarize(samples);
}

struct PathResult {
    double dividends = 0.0;  ///< discounted total
    double end_time = 0.0;
    bool ruined = false;
    bool finished = false;
    bool truncated = false;
};

/**
 * Plays a stationary grid policy from (n0, m0) on the projected-intensity
 * chain until ruin, finish or the first hold decision at or after the
 * horizon. Pay cells pay p*delta and re-decide at the same instant.
 */
template <class Rng>
PathResult run_policy(const SurplusModel& model, const PolicyPartition& policy, std::size_t n0, std::size_t m0,
                      double horizon, Rng& rng) {
    const auto& grid = policy.grid();
    const auto& xs = grid.surplus();
    if (n0 > xs.n_max() || m0 > grid.intensity().m_max()) throw std::out_of_range("start cell outside the grid");
    PathResult r;
    double t = 0.0;
    std::size_t n = n0;
    std::size_t m = m0;
    auto pay = [&](double amount) { r.dividends += std::exp(-model.discount * t) * amount; };
    for (;;) {
        Action a = policy(n, m);
        if (a == Action::Pay && n == 0) throw std::logic_error("policy pays at zero surplus");
        if (a == Action::Pay) {
            pay(xs.step());
            --n;
            continue;
        }
        if (a == Action::Finish) {
            pay(xs.x(n));
            r.finished = true;
            break;
        }
        if (t >= horizon) {
            r.truncated = true;
            break;
        }
        HoldOutcome o = sample_hold_window(model, grid, n, m, rng);
        t += o.time;
        switch (o.event) {
            case HoldEvent::Ruin: r.ruined = true; break;
            case HoldEvent::Claim:
                pay(o.lump);
                n = o.n;
                m = o.m;
                break;
            case HoldEvent::Catastrophe:
                pay(o.lump);
                if (o.overflow) {
                    pay(xs.x(n));
                    r.finished = true;
                } else {
                    m = o.m;
                }
                break;
            case HoldEvent::Survive:
                if (o.n > xs.n_max()) {
                    pay(xs.step());
                    n = xs.n_max();
                } else {
                    n = o.n;
                }
                m = o.m;
                break;
        }
        if (r.ruined || r.finished) break;
    }
    r.end_time = t;
    return r;
}

/// Largest discounted dividend mass that can still be paid after `horizon`.
inline double truncation_bound(const SurplusModel& model, const SurplusGrid& xs, double horizon) {
    return std::exp(-model.discount * horizon) * (xs.x(xs.n_max()) + model.payout_threshold());
}

/// Smallest horizon whose truncation bound is below `fraction` of `probe_value`.
inline double default_horizon(const SurplusModel& model, const SurplusGrid& xs, double probe_value,
                              double fraction = 1e-3) {
    double target = fraction * std::max(probe_value, xs.step());
    double scale = xs.x(xs.n_max()) + model.payout_threshold();
    return std::max(0.0, std::log(scale / target) / model.discount);
}

/**
 * MC value of the partition started at (n0, m0). Path i always draws
 * from its own stream, so the estimate does not depend on threading.
 */
inline MCEstimate evaluate_policy_mc(const SurplusModel& model, const PolicyPartition& policy, std::size_t n0,
                                     std::size_t m0, std::size_t n_paths, double horizon, std::uint64_t seed,
                                     double truncation_tolerance = 1e-3) {
    if (n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    const auto& grid = policy.grid();
    std::vector<double> samples(n_paths);
    const std::uint64_t tag = grid.flat(n0, m0);
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Philox4x32 rng(seed, stream_id(tag, i));
            samples[i] = run_policy(model, policy, n0, m0, horizon, rng).dividends;
        }
    });
    MCEstimate e = summarize(samples);
    e.horizon = horizon;
    e.truncation_bound = truncation_bound(model, grid.surplus(), horizon);
    // against the largest value the estimate supports, so a horizon picked from the solver value does not trip on noise
    const double plausible = std::abs(e.mean) + 3.0 * e.std_error;
    if (e.truncation_bound > truncation_tolerance * std::max(plausible, grid.surplus().step()))
        e.warning = "horizon too short: truncation bound " + std::to_string(e.truncation_bound) +
                    " exceeds the tolerance";
    return e;
}

/// Sample means of lambda_t, Lambda_t and N_t at one time.
struct MomentEstimate {
    double t;
    MCEstimate intensity;
    MCEstimate cumulative;
    MCEstimate claims;
};

/// MC moments of the exact shot-noise model started at lambda0.
inline std::vector<MomentEstimate> estimate_moments(const SurplusModel& model, double lambda0,
                                                    const std::vector<double>& times, std::size_t n_paths,
                                                    std::uint64_t seed) {
    if (times.empty()) return {};
    double horizon = *std::max_element(times.begin(), times.end());
    if (!(horizon > 0.0)) throw std::invalid_argument("moment times must include a positive time");
    const std::size_t T = times.size();
    std::vector<double> lam(T * n_paths), cum(T * n_paths), cnt(T * n_paths);
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Philox4x32 rng(seed, i);
            IntensityPath path = simulate_intensity(model, lambda0, horizon, rng);
            std::vector<double> claims = simulate_claims(path, rng);
            for (std::size_t k = 0; k < T; ++k) {
                lam[k * n_paths + i] = path.at(times[k]);
                cum[k * n_paths + i] = path.integral(0.0, times[k]);
                cnt[k * n_paths + i] =
                    static_cast<double>(std::upper_bound(claims.begin(), claims.end(), times[k]) - claims.begin());
            }
        }
    });
    std::vector<MomentEstimate> out;
    for (std::size_t k = 0; k < T; ++k) {
        auto slice = [&](const std::vector<double>& v) {
            return summarize(std::vector<double>(v.begin() + k * n_paths, v.begin() + (k + 1) * n_paths));
        };
        out.push_back({times[k], slice(lam), slice(cum), slice(cnt)});
    }
    return out;
}

}  // namespace shotnoise

#endif  // SHOTNOISE_SIMULATOR_HPP
