#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace fracmp {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Node values on the interior grid. The function is zero at the endpoints and
// on the exterior of the interval; that part is never stored.
template <class Scalar>
using GridFunction = Vector<Scalar>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameters (degenerate domain, operator outside its regime, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller misuse: mismatched dimensions, zero function where a nonzero one is needed.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A growth/structure hypothesis on the nonlinearity failed.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// An iterative solver stopped without meeting its tolerance. Carries the last iterate.
class SolverError : public Error {
public:
    SolverError(const std::string& what, Eigen::VectorXd last_iterate, int iterations)
        : Error(what), last_(std::move(last_iterate)), iterations_(iterations) {}

    const Eigen::VectorXd& last_iterate() const { return last_; }
    int iterations() const { return iterations_; }

private:
    Eigen::VectorXd last_;
    int iterations_;
};

class IoError : public Error {
public:
    IoError(const std::string& what, std::string path) : Error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

namespace detail {

// |x|^p with the common exponents spelled out; std::pow dominates the O(n^2) loops otherwise.
template <class Scalar>
inline Scalar abs_pow(Scalar x, Scalar p) {
    using std::abs;
    using std::pow;
    const Scalar ax = abs(x);
    if (p == Scalar(2)) return ax * ax;
    if (p == Scalar(3)) return ax * ax * ax;
    if (ax == Scalar(0)) return Scalar(0);
    return pow(ax, p);
}

// |x|^(p-2) x
template <class Scalar>
inline Scalar signed_pow(Scalar x, Scalar p) {
    using std::abs;
    using std::pow;
    if (p == Scalar(2)) return x;
    if (p == Scalar(3)) return abs(x) * x;
    if (x == Scalar(0)) return Scalar(0);
    return pow(abs(x), p - Scalar(2)) * x;
}

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b)
        throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
}

}  // namespace detail

/// Φ_p(x) = |x|^(p-2) x.
template <class Scalar>
inline Scalar phi_p(Scalar x, Scalar p) {
    return detail::signed_pow(x, p);
}

}  // namespace fracmp
