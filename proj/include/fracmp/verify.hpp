#pragma once

#include "fracmp/sweep.hpp"

#include <string>
#include <vector>

namespace fracmp {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant suite for one configuration: operator identities, gradient
/// exactness, eigenpair optimality, torsion positivity, endpoint and ring
/// bounds, comparison, and a solve at the first configured lambda.
/// A check that throws is reported as failed with the error text.
std::vector<CheckResult> verify(const Instance& inst);
std::vector<CheckResult> verify(const Config& cfg);

/// Max relative error of the analytic energy gradient against central
/// differences, over `samples` random functions.
double gradient_check(const Problem<double>& prob, int samples, std::uint64_t seed);

}  // namespace fracmp
