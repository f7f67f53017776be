#pragma once

// Reference computations written without the library's assembly code. They
// are slow and only meant for tests.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

// Composite Simpson on [lo, hi] with m (even) panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int m) {
    const double h = (hi - lo) / m;
    double s = f(lo) + f(hi);
    for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(lo + k * h);
    return s * h / 3.0;
}

// ∫_d^∞ z^{-1-sp} dz by the substitution z = d e^t, integrated numerically.
inline double half_line_tail(double d, double sp) {
    const double T = 60.0 / sp;
    return simpson([&](double t) { return std::pow(d, -sp) * std::exp(-sp * t); }, 0.0, T, 20000);
}

// ∫ over R \ (a, b) of |x - y|^{-1-sp} dy.
inline double exterior_integral(double x, double a, double b, double sp) {
    return half_line_tail(x - a, sp) + half_line_tail(b - x, sp);
}

// Full Gagliardo double integral over R x R of |u(x) - u(y)|^p |x - y|^{-1-sp}
// for u supported in (a, b): the domain part by an m x m midpoint rule
// (diagonal cells dropped, their integrand vanishes to order |x - y|^{p-1-sp}),
// plus twice the mixed domain/exterior part with the tail integrated numerically.
inline double gagliardo(const std::function<double(double)>& u, double a, double b, double s, double p, int m) {
    const double sp = s * p;
    const double H = (b - a) / m;
    std::vector<double> x(m), v(m);
    for (int i = 0; i < m; ++i) {
        x[i] = a + (i + 0.5) * H;
        v[i] = u(x[i]);
    }
    double inner = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (i != j) inner += std::pow(std::abs(v[i] - v[j]), p) * std::pow(std::abs(x[i] - x[j]), -1 - sp);
    inner *= H * H;
    double outer = 0;
    for (int i = 0; i < m; ++i) outer += std::pow(std::abs(v[i]), p) * exterior_integral(x[i], a, b, sp);
    outer *= H;
    return inner + 2 * outer;
}

// Central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& F, const Eigen::VectorXd& u,
                                   double rel_step) {
    Eigen::VectorXd g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double e = rel_step * std::max(1.0, std::abs(u[i]));
        Eigen::VectorXd up = u, dn = u;
        up[i] += e;
        dn[i] -= e;
        g[i] = (F(up) - F(dn)) / (2 * e);
    }
    return g;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed, double lo = -1, double hi = 1) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(lo, hi);
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = unif(rng);
    return u;
}

}  // namespace oracle
