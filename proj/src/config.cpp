#include "fracmp/config.hpp"

#include "fracmp/io.hpp"
#include "fracmp/model.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fracmp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key, const std::string& origin) {
    std::size_t used = 0;
    double x;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(origin + ": " + key + ": not a number '" + v + "'");
    }
    if (used != v.size()) throw ConfigError(origin + ": " + key + ": not a number '" + v + "'");
    return x;
}

long long to_int(const std::string& v, const std::string& key, const std::string& origin) {
    std::size_t used = 0;
    long long x;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(origin + ": " + key + ": not an integer '" + v + "'");
    }
    if (used != v.size()) throw ConfigError(origin + ": " + key + ": not an integer '" + v + "'");
    return x;
}

}  // namespace

Config parse_config(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_V = false;
    std::map<std::string, int> seen;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto dbl = [&](double& field) -> Setter {
        return [&field, &origin](const std::string& k, const std::string& v) { field = to_double(v, k, origin); };
    };
    auto integer = [&](auto& field) -> Setter {
        return [&field, &origin](const std::string& k, const std::string& v) {
            field = static_cast<std::remove_reference_t<decltype(field)>>(to_int(v, k, origin));
        };
    };
    const std::map<std::string, Setter> setters{
        {"a", dbl(cfg.a)},
        {"b", dbl(cfg.b)},
        {"n", integer(cfg.n)},
        {"s", dbl(cfg.s)},
        {"p", dbl(cfg.p)},
        {"q", dbl(cfg.q)},
        {"f0", dbl(cfg.f0)},
        {"theta", [&](const std::string& k, const std::string& v) { cfg.theta = to_double(v, k, origin); }},
        {"V",
         [&](const std::string& k, const std::string& v) {
             cfg.V = to_double(v, k, origin);
             have_V = true;
         }},
        {"V_file", [&](const std::string&, const std::string& v) { cfg.V_file = v; }},
        {"lambda", [&](const std::string& k, const std::string& v) { cfg.lambda = to_double(v, k, origin); }},
        {"lambda_start", dbl(cfg.lambda_start)},
        {"lambda_stop", dbl(cfg.lambda_stop)},
        {"lambda_count", integer(cfg.lambda_count)},
        {"lambda_unit",
         [&](const std::string& k, const std::string& v) {
             if (v == "absolute") cfg.lambda_relative = false;
             else if (v == "lambda3") cfg.lambda_relative = true;
             else throw ConfigError(origin + ": " + k + ": expected absolute or lambda3, got '" + v + "'");
         }},
        {"tol_eigen", dbl(cfg.tol_eigen)},
        {"tol_torsion", dbl(cfg.tol_torsion)},
        {"tol_solve", dbl(cfg.tol_solve)},
        {"tol_mp", dbl(cfg.tol_mp)},
        {"eigen_cap_factor", integer(cfg.eigen_cap_factor)},
        {"torsion_cap_factor", integer(cfg.torsion_cap_factor)},
        {"path_segments", integer(cfg.path_segments)},
        {"second_starts", integer(cfg.second_starts)},
        {"ring_samples", integer(cfg.ring_samples)},
        {"seed",
         [&](const std::string& k, const std::string& v) {
             const long long x = to_int(v, k, origin);
             if (x < 0) throw ConfigError(origin + ": seed must be nonnegative");
             cfg.seed = static_cast<std::uint64_t>(x);
         }},
        {"out", [&](const std::string&, const std::string& v) { cfg.out = v; }},
        {"format",
         [&](const std::string& k, const std::string& v) {
             if (v != "csv" && v != "json") throw ConfigError(origin + ": " + k + ": expected csv or json");
             cfg.format = v;
         }},
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(where + ": unknown key '" + key + "'");
        if (seen[key]++) throw ConfigError(where + ": duplicate key '" + key + "'");
        it->second(key, val);
    }
    if (have_V && !cfg.V_file.empty()) throw ConfigError(origin + ": give either V or V_file, not both");
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string render_config(const Config& cfg) {
    std::ostringstream o;
    auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
    auto d = [&](const char* k, double v) { kv(k, format_double(v)); };
    d("a", cfg.a);
    d("b", cfg.b);
    kv("n", std::to_string(cfg.n));
    d("s", cfg.s);
    d("p", cfg.p);
    d("q", cfg.q);
    d("f0", cfg.f0);
    if (cfg.theta) d("theta", *cfg.theta);
    if (cfg.V_file.empty()) d("V", cfg.V);
    else kv("V_file", cfg.V_file);
    if (cfg.lambda) d("lambda", *cfg.lambda);
    d("lambda_start", cfg.lambda_start);
    d("lambda_stop", cfg.lambda_stop);
    kv("lambda_count", std::to_string(cfg.lambda_count));
    kv("lambda_unit", cfg.lambda_relative ? "lambda3" : "absolute");
    d("tol_eigen", cfg.tol_eigen);
    d("tol_torsion", cfg.tol_torsion);
    d("tol_solve", cfg.tol_solve);
    d("tol_mp", cfg.tol_mp);
    kv("eigen_cap_factor", std::to_string(cfg.eigen_cap_factor));
    kv("torsion_cap_factor", std::to_string(cfg.torsion_cap_factor));
    kv("path_segments", std::to_string(cfg.path_segments));
    kv("second_starts", std::to_string(cfg.second_starts));
    kv("ring_samples", std::to_string(cfg.ring_samples));
    kv("seed", std::to_string(cfg.seed));
    if (!cfg.out.empty()) kv("out", cfg.out);
    kv("format", cfg.format);
    return o.str();
}

std::vector<double> lambda_list(const Config& cfg, double lambda3) {
    const double unit = cfg.lambda_relative ? lambda3 : 1.0;
    if (cfg.lambda) return {*cfg.lambda * unit};
    std::vector<double> out;
    const int m = cfg.lambda_count;
    if (m == 1) return {cfg.lambda_start * unit};
    const double l0 = std::log(cfg.lambda_start), l1 = std::log(cfg.lambda_stop);
    for (int k = 0; k < m; ++k) out.push_back(std::exp(l0 + (l1 - l0) * k / (m - 1)) * unit);
    return out;
}

const char* to_string(Gate g) {
    switch (g) {
        case Gate::Domain: return "Domain";
        case Gate::OperatorRegime: return "OperatorRegime";
        case Gate::ExponentWindow: return "ExponentWindow";
        case Gate::Structure: return "Structure";
        case Gate::PotentialGate: return "PotentialGate";
        case Gate::LambdaList: return "LambdaList";
        default: return "Numerics";
    }
}

namespace {

std::string join_violations(const std::vector<Violation>& v) {
    std::string msg = "invalid configuration:";
    for (const auto& x : v) msg += std::string("\n  ") + to_string(x.gate) + ": " + x.message;
    return msg;
}

std::string num(double x) { return format_double(x); }

}  // namespace

ConfigViolations::ConfigViolations(std::vector<Violation> v)
    : ConfigError(join_violations(v)), violations_(std::move(v)) {}

std::vector<Violation> validate_config(const Config& cfg, std::optional<double> lambda1) {
    std::vector<Violation> out;
    auto add = [&](Gate g, std::string m) { out.push_back({g, std::move(m)}); };

    if (!std::isfinite(cfg.a) || !std::isfinite(cfg.b) || !(cfg.a < cfg.b))
        add(Gate::Domain, "need finite a < b (a = " + num(cfg.a) + ", b = " + num(cfg.b) + ")");
    if (cfg.n < 1) add(Gate::Domain, "need n >= 1");

    bool regime_ok = true;
    if (!(cfg.s > 0 && cfg.s < 1)) add(Gate::OperatorRegime, "need 0 < s < 1"), regime_ok = false;
    if (!(cfg.p > 1)) add(Gate::OperatorRegime, "need p > 1"), regime_ok = false;
    if (regime_ok && !(cfg.s * cfg.p < 1))
        add(Gate::OperatorRegime, "s p = " + num(cfg.s * cfg.p) + " >= 1"), regime_ok = false;

    if (regime_ok) {
        const double pstar = critical_exponent(cfg.p, cfg.s);
        if (!(cfg.p - 1 < cfg.q && cfg.q < pstar - 1))
            add(Gate::ExponentWindow, "need " + num(cfg.p - 1) + " < q < " + num(pstar - 1) + ", q = " + num(cfg.q));
        else {
            try {
                make_nonlinearity(cfg.q, cfg.f0, cfg.p, cfg.s, cfg.theta);
            } catch (const HypothesisError& e) {
                add(Gate::Structure, e.what());
            }
        }
    }

    if (lambda1) {
        double cV = cfg.V;
        if (!cfg.V_file.empty()) {
            try {
                const auto f = read_gridfn(cfg.V_file);
                cV = std::max(0.0, -f.values.minCoeff());
            } catch (const IoError& e) {
                add(Gate::PotentialGate, e.what());
                cV = 0;
            }
        } else {
            cV = std::max(0.0, -cfg.V);
        }
        if (!(cV < *lambda1))
            add(Gate::PotentialGate, "need c_V < lambda1 (c_V = " + num(cV) + ", lambda1 = " + num(*lambda1) + ")");
    }

    if (cfg.lambda) {
        if (!(*cfg.lambda > 0) || !std::isfinite(*cfg.lambda)) add(Gate::LambdaList, "need lambda > 0");
    } else {
        if (!(cfg.lambda_start > 0 && cfg.lambda_stop > 0) || !std::isfinite(cfg.lambda_start) ||
            !std::isfinite(cfg.lambda_stop))
            add(Gate::LambdaList, "need lambda_start, lambda_stop > 0");
        if (cfg.lambda_count < 1) add(Gate::LambdaList, "need lambda_count >= 1");
        if (cfg.lambda_count > 1 && cfg.lambda_start == cfg.lambda_stop)
            add(Gate::LambdaList, "lambda_start equals lambda_stop");
    }

    for (const auto& [name, tol] : {std::pair{"tol_eigen", cfg.tol_eigen}, std::pair{"tol_torsion", cfg.tol_torsion},
                                    std::pair{"tol_solve", cfg.tol_solve}, std::pair{"tol_mp", cfg.tol_mp}})
        if (!(tol > 0)) add(Gate::Numerics, std::string(name) + " must be positive");
    if (cfg.eigen_cap_factor < 1 || cfg.torsion_cap_factor < 1) add(Gate::Numerics, "cap factors must be >= 1");
    if (cfg.path_segments < 8) add(Gate::Numerics, "path_segments must be >= 8");
    if (cfg.second_starts < 0) add(Gate::Numerics, "second_starts must be >= 0");
    if (cfg.ring_samples < 0) add(Gate::Numerics, "ring_samples must be >= 0");
    return out;
}

void require_valid(const Config& cfg, std::optional<double> lambda1) {
    auto v = validate_config(cfg, lambda1);
    if (!v.empty()) throw ConfigViolations(std::move(v));
}

}  // namespace fracmp
