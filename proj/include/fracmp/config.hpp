#pragma once

#include "fracmp/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracmp {

/// Run configuration. Text form is flat `key = value` lines with `#` comments:
///
///     a, b, n, s, p, q, f0, theta
///     V (constant) | V_file (grid function file)
///     lambda (single) | lambda_start, lambda_stop, lambda_count (geometric)
///     lambda_unit = absolute | lambda3     (lambda3: values are multiples of lambda3)
///     tol_eigen, tol_torsion, tol_solve, tol_mp
///     eigen_cap_factor, torsion_cap_factor, path_segments, second_starts
///     ring_samples, seed, out, format
struct Config {
    double a = 0.0;
    double b = 1.0;
    long n = 100;
    double s = 0.4;
    double p = 2.0;
    double q = 3.0;
    double f0 = 1.0;
    std::optional<double> theta;

    double V = 0.0;
    std::string V_file;

    std::optional<double> lambda;
    double lambda_start = 0.5;
    double lambda_stop = 0.5 * 0.031622776601683791;
    int lambda_count = 6;
    bool lambda_relative = true;

    double tol_eigen = 1e-9;
    double tol_torsion = 1e-9;
    double tol_solve = 1e-8;
    double tol_mp = 1e-8;
    int eigen_cap_factor = 50;
    int torsion_cap_factor = 200;
    int path_segments = 20;
    int second_starts = 4;
    int ring_samples = 30;
    std::uint64_t seed = 1;

    std::string out;
    std::string format = "csv";
};

Config parse_config(const std::string& text, const std::string& origin = "<config>");
Config load_config(const std::string& path);

/// Inverse of parse_config; every key is written.
std::string render_config(const Config& cfg);

/// lambda values for the run, in the order given by the config. With
/// lambda_relative they are multiplied by `lambda3`.
std::vector<double> lambda_list(const Config& cfg, double lambda3);

enum class Gate {
    Domain,          // a < b, n >= 1
    OperatorRegime,  // 0 < s < 1, p > 1, s p < 1
    ExponentWindow,  // p - 1 < q < p*_s - 1
    Structure,       // theta, f0 and the AR condition
    PotentialGate,   // c_V < lambda1
    LambdaList,      // positive values, geometric list shape
    Numerics,        // tolerances, caps, segments
};

const char* to_string(Gate g);

struct Violation {
    Gate gate;
    std::string message;
};

/// Every admissibility gate, reported together rather than stopping at the
/// first. The potential gate is checked only when lambda1 is known.
std::vector<Violation> validate_config(const Config& cfg, std::optional<double> lambda1 = std::nullopt);

class ConfigViolations : public ConfigError {
public:
    explicit ConfigViolations(std::vector<Violation> v);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Throws ConfigViolations when validate_config finds anything.
void require_valid(const Config& cfg, std::optional<double> lambda1 = std::nullopt);

}  // namespace fracmp
