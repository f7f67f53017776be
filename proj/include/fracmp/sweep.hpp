#pragma once

#include "fracmp/config.hpp"
#include "fracmp/eigenpair.hpp"
#include "fracmp/solve.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fracmp {

/// Everything about a config that does not depend on lambda.
struct Instance {
    Config cfg;
    Grid<double> grid;
    std::shared_ptr<const Kernel<double>> kernel;
    Potential<double> V;
    Nonlinearity<double> nl;
    EigenResult<double> eigen;

    Problem<double> problem(double lambda) const;
};

/// Validates, assembles and computes the first eigenpair; the potential gate
/// is checked against that eigenvalue.
Instance build_instance(const Config& cfg);

/// Independent stream per lambda index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct SolveOutcome {
    double lambda = 0;
    bool below_hat1 = false;
    bool below_hat2 = false;
    double e1_energy = 0;
    CriticalPoint<double> mountain;
    std::optional<CriticalPoint<double>> second;
    bool positive = false;  // every solution found is nodewise positive
    int distinct_count = 0;
    double ring_floor = 0;
    // mountain-pass level above the ring floor; only asserted below lambda_hat2
    bool above_ring = false;
};

/// Endpoints, mountain pass, second-solution search and positivity at one lambda.
SolveOutcome solve_at(const Instance& inst, const GeometryConstants<double>& gc, double lambda, std::uint64_t seed);

GeometryConstants<double> instance_constants(const Instance& inst);

struct SweepRecord {
    double lambda = 0;
    double norm_W = 0;
    double norm_inf = 0;
    double energy = 0;
    double residual = 0;
    bool positive = false;
    int distinct_count = 0;
    bool below_hat1 = false;
    bool below_hat2 = false;
    std::string error;  // nonempty when the solve at this lambda failed

    bool ok() const { return error.empty(); }
    bool in_window() const { return below_hat1 && below_hat2; }
};

struct PowerFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

/// Ordinary least squares of log value against log lambda.
PowerFit fit_powerlaw(const std::vector<std::pair<double, double>>& points);

struct FitSummary {
    PowerFit norm_inf;
    PowerFit norm_W;
    PowerFit energy;
    double target_inf = 0;  // -r
    double target_W = 0;    // -r
    double target_energy = 0;  // -r p
    int points = 0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::optional<FitSummary> fit;
    std::string fit_error;
    GeometryConstants<double> constants;
    double lambda1 = 0;
};

/// Needs at least 4 lambda values spanning at least one decade.
SweepResult sweep(const Config& cfg);
SweepResult sweep(const Instance& inst);

/// Least-squares slopes over the successful records; needs 4 of them.
FitSummary fit_records(const std::vector<SweepRecord>& records, double r, double p);

inline constexpr const char* kCsvHeader = "lambda,norm_W,norm_inf,energy,residual,positive,distinct_count,in_window";

std::string render_csv(const std::vector<SweepRecord>& records);
std::string render_json(const std::vector<SweepRecord>& records, const std::optional<FitSummary>& fit = std::nullopt);

/// Writes records to `path` as "csv" or "json".
void export_records(const std::vector<SweepRecord>& records, const std::string& format, const std::string& path,
                    const std::optional<FitSummary>& fit = std::nullopt);

/// Read-back of the exported forms. Window flags come back as in_window only,
/// stored in both below_hat fields; errors come back from the comment lines.
std::vector<SweepRecord> parse_csv(const std::string& text, const std::string& origin = "<csv>");
std::vector<SweepRecord> parse_json(const std::string& text, const std::string& origin = "<json>");
std::vector<SweepRecord> read_records(const std::string& path);

}  // namespace fracmp
