#ifndef SHOTNOISE_CONFIG_HPP
#define SHOTNOISE_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "baseline.hpp"
#include "model.hpp"
#include "rational.hpp"
#include "solver.hpp"

namespace shotnoise {

/// Malformed or inconsistent experiment input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                       std::initializer_list<const char*> required = {}) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    for (const char* key : required)
        if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + std::string(key) + "'");
}

/// Numbers may be JSON numbers or strings such as "141/700"; both are read exactly.
inline Rational rational_field(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    try {
        if (v.is_string()) return Rational::parse(v.get<std::string>());
        if (v.is_number()) return Rational::parse(v.dump());
    } catch (const std::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
    throw ConfigError(where + "." + key + ": expected a number or a fraction string");
}

inline double real_field(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return rational_field(obj, where, key).to_double();
    throw ConfigError(where + "." + key + ": expected a number");
}

inline std::uint64_t count_field(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
}

inline std::string string_field(const json& obj, const std::string& where, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

}  // namespace detail

/// A claim or jump law as written in the config, with its exact mean.
struct LawSpec {
    std::string kind;  ///< exponential | erlang | deterministic
    Rational rate{1};
    int shape = 1;
    Rational value{1};

    Rational mean() const {
        if (kind == "exponential") return Rational(1) / rate;
        if (kind == "erlang") return Rational(shape) / rate;
        return value;
    }

    Distribution distribution() const {
        if (kind == "exponential") return Distribution::exponential(rate.to_double());
        if (kind == "erlang") return Distribution::erlang(shape, rate.to_double());
        return Distribution::deterministic(value.to_double());
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"kind", kind}};
        if (kind == "deterministic") j["value"] = value.str();
        else j["rate"] = rate.str();
        if (kind == "erlang") j["shape"] = shape;
        return j;
    }

    static LawSpec from_json(const nlohmann::json& j, const std::string& where) {
        using namespace detail;
        if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": missing key 'kind'");
        LawSpec s;
        s.kind = string_field(j, where, "kind");
        if (s.kind == "exponential") {
            check_keys(j, where, {"kind", "rate"}, {"rate"});
            s.rate = rational_field(j, where, "rate");
        } else if (s.kind == "erlang") {
            check_keys(j, where, {"kind", "rate", "shape"}, {"rate", "shape"});
            s.rate = rational_field(j, where, "rate");
            auto shape = count_field(j, where, "shape");
            if (shape < 1 || shape > 1000) throw ConfigError(where + ".shape: must be in [1, 1000]");
            s.shape = static_cast<int>(shape);
        } else if (s.kind == "deterministic") {
            check_keys(j, where, {"kind", "value"}, {"value"});
            s.value = rational_field(j, where, "value");
        } else {
            throw ConfigError(where + ".kind: unknown law '" + s.kind + "'");
        }
        if (s.kind == "deterministic" ? s.value.num() <= 0 : s.rate.num() <= 0)
            throw ConfigError(where + ": parameters must be > 0");
        return s;
    }
};

/// A Monte-Carlo probe: grid cell, with n = "barrier" meaning the top hold cell below the pay band of row m.
struct ProbeSpec {
    std::optional<std::size_t> n;  ///< empty means "barrier"
    std::size_t m;
};

struct ExperimentConfig {
    std::string name = "experiment";

    Rational lambda_floor;
    Rational beta;
    Rational decay;
    Rational discount;
    Rational loading;
    LawSpec claim_law;
    LawSpec jump_law;

    Rational delta;
    Rational delta_lambda;
    std::size_t m_max = 0;
    std::size_t extra_surplus_cells = 0;

    SolverOptions solver;

    struct {
        std::size_t n_paths = 100000;
        std::uint64_t seed = 1;
        std::vector<ProbeSpec> probes;
        std::optional<double> horizon;
        double truncation_tolerance = 1e-3;
    } mc;

    struct {
        std::vector<double> times{0.5, 1.0, 2.0, 5.0};
        std::size_t n_paths = 100000;
    } moments;

    struct {
        PremiumMode mode = PremiumMode::SameP;
        std::string lambda_probe = "lambda_av";  ///< lambda_floor | lambda_av | a number
    } compare;

    struct {
        double tol_fraction = 0.02;  ///< of W(n_max, 0)
        std::size_t enlarged_m_max = 0;  ///< 0 means 2 m_max
    } refine;

    std::string output_dir = "out";

    ExactInputs exact() const {
        return ExactInputs{lambda_floor, beta, decay, discount, loading, claim_law.mean(), jump_law.mean()};
    }

    ModelParams params() const {
        try {
            return ModelParams(exact(), claim_law.distribution(), jump_law.distribution());
        } catch (const std::logic_error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        } catch (const std::overflow_error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
    }

    GridSpec grid() const { return GridSpec{delta.to_double(), delta_lambda.to_double(), m_max, extra_surplus_cells}; }

    /// Intensity named by `compare.lambda_probe`.
    double lambda_probe(const ModelParams& p) const {
        if (compare.lambda_probe == "lambda_floor") return p.lambda_floor();
        if (compare.lambda_probe == "lambda_av") return p.lambda_av();
        try {
            return Rational::parse(compare.lambda_probe).to_double();
        } catch (const std::exception&) {
            throw ConfigError("compare.lambda_probe: expected lambda_floor, lambda_av or a number");
        }
    }

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

inline nlohmann::json ExperimentConfig::to_json() const {
    using nlohmann::json;
    json probes = json::array();
    for (const auto& p : mc.probes) {
        json q{{"m", p.m}};
        if (p.n) q["n"] = *p.n;
        else q["n"] = "barrier";
        probes.push_back(q);
    }
    json out{
        {"name", name},
        {"model",
         {{"lambda_floor", lambda_floor.str()},
          {"beta", beta.str()},
          {"decay", decay.str()},
          {"discount", discount.str()},
          {"loading", loading.str()},
          {"claim_law", claim_law.to_json()},
          {"jump_law", jump_law.to_json()}}},
        {"grid",
         {{"delta", delta.str()},
          {"delta_lambda", delta_lambda.str()},
          {"m_max", m_max},
          {"extra_surplus_cells", extra_surplus_cells}}},
        {"solver",
         {{"tol", solver.tol},
          {"max_iter", solver.max_iter},
          {"quadrature_order", solver.kernel.quadrature_order},
          {"claim_tail_cutoff", solver.kernel.claim_tail_cutoff}}},
        {"mc",
         {{"n_paths", mc.n_paths},
          {"seed", mc.seed},
          {"probes", probes},
          {"horizon", mc.horizon ? json(*mc.horizon) : json(nullptr)},
          {"truncation_tolerance", mc.truncation_tolerance}}},
        {"moments", {{"times", moments.times}, {"n_paths", moments.n_paths}}},
        {"compare", {{"mode", to_string(compare.mode)}, {"lambda_probe", compare.lambda_probe}}},
        {"refine", {{"tol_fraction", refine.tol_fraction}, {"enlarged_m_max", refine.enlarged_m_max}}},
        {"outputs", {{"directory", output_dir}}},
    };
    return out;
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    using namespace detail;
    ExperimentConfig c;
    check_keys(j, "config", {"name", "model", "grid", "solver", "mc", "moments", "compare", "refine", "outputs"},
               {"model", "grid"});
    if (j.contains("name")) c.name = string_field(j, "config", "name");

    const json& m = j.at("model");
    check_keys(m, "model", {"lambda_floor", "beta", "decay", "discount", "loading", "claim_law", "jump_law"},
               {"lambda_floor", "beta", "decay", "discount", "loading", "claim_law", "jump_law"});
    c.lambda_floor = rational_field(m, "model", "lambda_floor");
    c.beta = rational_field(m, "model", "beta");
    c.decay = rational_field(m, "model", "decay");
    c.discount = rational_field(m, "model", "discount");
    c.loading = rational_field(m, "model", "loading");
    c.claim_law = LawSpec::from_json(m.at("claim_law"), "model.claim_law");
    c.jump_law = LawSpec::from_json(m.at("jump_law"), "model.jump_law");

    const json& g = j.at("grid");
    check_keys(g, "grid", {"delta", "delta_lambda", "m_max", "extra_surplus_cells"}, {"delta", "delta_lambda", "m_max"});
    c.delta = rational_field(g, "grid", "delta");
    c.delta_lambda = rational_field(g, "grid", "delta_lambda");
    c.m_max = count_field(g, "grid", "m_max");
    if (g.contains("extra_surplus_cells")) c.extra_surplus_cells = count_field(g, "grid", "extra_surplus_cells");
    if (c.delta.num() <= 0 || c.delta_lambda.num() <= 0) throw ConfigError("grid: delta and delta_lambda must be > 0");

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s, "solver", {"tol", "max_iter", "quadrature_order", "claim_tail_cutoff"});
        if (s.contains("tol")) c.solver.tol = real_field(s, "solver", "tol");
        if (s.contains("max_iter")) c.solver.max_iter = count_field(s, "solver", "max_iter");
        if (s.contains("quadrature_order"))
            c.solver.kernel.quadrature_order = static_cast<int>(count_field(s, "solver", "quadrature_order"));
        if (s.contains("claim_tail_cutoff")) c.solver.kernel.claim_tail_cutoff = real_field(s, "solver", "claim_tail_cutoff");
        if (!(c.solver.tol > 0.0)) throw ConfigError("solver.tol: must be > 0");
        if (c.solver.kernel.quadrature_order < 1 || c.solver.kernel.quadrature_order > 256)
            throw ConfigError("solver.quadrature_order: must be in [1, 256]");
        if (!(c.solver.kernel.claim_tail_cutoff >= 0.0)) throw ConfigError("solver.claim_tail_cutoff: must be >= 0");
    }

    if (j.contains("mc")) {
        const json& s = j.at("mc");
        check_keys(s, "mc", {"n_paths", "seed", "probes", "horizon", "truncation_tolerance"});
        if (s.contains("n_paths")) c.mc.n_paths = count_field(s, "mc", "n_paths");
        if (s.contains("seed")) c.mc.seed = count_field(s, "mc", "seed");
        if (s.contains("horizon") && !s.at("horizon").is_null()) c.mc.horizon = real_field(s, "mc", "horizon");
        if (s.contains("truncation_tolerance")) c.mc.truncation_tolerance = real_field(s, "mc", "truncation_tolerance");
        if (s.contains("probes")) {
            if (!s.at("probes").is_array()) throw ConfigError("mc.probes: expected an array");
            for (const auto& p : s.at("probes")) {
                check_keys(p, "mc.probes[]", {"n", "m"}, {"n", "m"});
                ProbeSpec ps{std::nullopt, count_field(p, "mc.probes[]", "m")};
                if (p.at("n").is_string()) {
                    if (p.at("n").get<std::string>() != "barrier") throw ConfigError("mc.probes[].n: expected an index or \"barrier\"");
                } else {
                    ps.n = count_field(p, "mc.probes[]", "n");
                }
                c.mc.probes.push_back(ps);
            }
        }
        if (c.mc.n_paths < 2) throw ConfigError("mc.n_paths: must be >= 2");
        if (c.mc.horizon && !(*c.mc.horizon > 0.0)) throw ConfigError("mc.horizon: must be > 0");
    }

    if (j.contains("moments")) {
        const json& s = j.at("moments");
        check_keys(s, "moments", {"times", "n_paths"});
        if (s.contains("n_paths")) c.moments.n_paths = count_field(s, "moments", "n_paths");
        if (s.contains("times")) {
            if (!s.at("times").is_array()) throw ConfigError("moments.times: expected an array");
            c.moments.times.clear();
            for (const auto& t : s.at("times")) {
                if (!t.is_number() || !(t.get<double>() >= 0.0)) throw ConfigError("moments.times: expected times >= 0");
                c.moments.times.push_back(t.get<double>());
            }
        }
        if (c.moments.n_paths < 2) throw ConfigError("moments.n_paths: must be >= 2");
    }

    if (j.contains("compare")) {
        const json& s = j.at("compare");
        check_keys(s, "compare", {"mode", "lambda_probe"});
        try {
            if (s.contains("mode")) c.compare.mode = parse_premium_mode(string_field(s, "compare", "mode"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("compare.mode: ") + e.what());
        }
        if (s.contains("lambda_probe")) {
            const json& v = s.at("lambda_probe");
            c.compare.lambda_probe = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }

    if (j.contains("refine")) {
        const json& s = j.at("refine");
        check_keys(s, "refine", {"tol_fraction", "enlarged_m_max"});
        if (s.contains("tol_fraction")) c.refine.tol_fraction = real_field(s, "refine", "tol_fraction");
        if (s.contains("enlarged_m_max")) c.refine.enlarged_m_max = count_field(s, "refine", "enlarged_m_max");
    }

    if (j.contains("outputs")) {
        const json& s = j.at("outputs");
        check_keys(s, "outputs", {"directory"});
        if (s.contains("directory")) c.output_dir = string_field(s, "outputs", "directory");
    }
    c.params();  // rejects inconsistent model inputs at load time
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return ExperimentConfig::from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

}  // namespace shotnoise

#endif  // SHOTNOISE_CONFIG_HPP
