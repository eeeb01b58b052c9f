#ifndef SHOTNOISE_TESTS_SUPPORT_HPP
#define SHOTNOISE_TESTS_SUPPORT_HPP

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include <shotnoise/config.hpp>
#include <shotnoise/solver.hpp>

namespace shotnoise::testing {

inline std::string config_path(const std::string& name) { return std::string(SHOTNOISE_CONFIG_DIR) + "/" + name + ".json"; }

inline const ExperimentConfig& config(const std::string& name) {
    static std::map<std::string, ExperimentConfig> cache;
    auto it = cache.find(name);
    if (it == cache.end()) it = cache.emplace(name, load_config(config_path(name))).first;
    return it->second;
}

/// Solved surfaces are shared between tests of one binary.
inline const SolveResult& solved(const std::string& name) {
    static std::map<std::string, SolveResult> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        const auto& cfg = config(name);
        it = cache.emplace(name, solve(cfg.params(), cfg.grid(), cfg.solver)).first;
    }
    return it->second;
}

/// Small hand-rolled generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace shotnoise::testing

#endif  // SHOTNOISE_TESTS_SUPPORT_HPP
