#pragma once

#include "fracmp/core.hpp"
#include "fracmp/grid.hpp"
#include "fracmp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fracmp {

/// Built-in nonlinearity family
///
///     f(s) = s^q + f0          s >= 0
///     f(s) = f0 (1 + s)        -1 <= s < 0
///     f(s) = 0                 s < -1
///
/// continuous for every f0, with primitive F(0) = 0. The envelope constants
/// (A, B) and the Ambrosetti-Rabinowitz pair (theta, K) are filled in by
/// `make_nonlinearity` from sampled validation.
template <class Scalar>
struct Nonlinearity {
    Scalar q{};
    Scalar f0{};
    Scalar theta{};
    Scalar A{};
    Scalar B{};
    Scalar K{};
    // min over the validation samples of s f(s); f(s) s must be bounded below
    Scalar min_sf{};
};

template <class Scalar>
Scalar f_eval(Scalar s, const Nonlinearity<Scalar>& nl) {
    using std::pow;
    if (s >= Scalar(0)) return pow(s, nl.q) + nl.f0;
    if (s >= Scalar(-1)) return nl.f0 * (Scalar(1) + s);
    return Scalar(0);
}

template <class Scalar>
Scalar F_eval(Scalar s, const Nonlinearity<Scalar>& nl) {
    using std::pow;
    if (s >= Scalar(0)) return pow(s, nl.q + Scalar(1)) / (nl.q + Scalar(1)) + nl.f0 * s;
    if (s >= Scalar(-1)) return nl.f0 * (s + s * s / Scalar(2));
    return -nl.f0 / Scalar(2);
}

/// Critical Sobolev exponent p* = Np/(N - sp) in one dimension.
template <class Scalar>
Scalar critical_exponent(Scalar p, Scalar s) {
    return p / (Scalar(1) - s * p);
}

/// Default AR exponent, strictly inside (p, q+1).
template <class Scalar>
Scalar default_theta(Scalar q, Scalar p) {
    return q + Scalar(1) - Scalar(0.1) * (q + Scalar(1) - p);
}

namespace detail {

// Positive log-spaced samples on [lo, hi].
template <class Scalar>
std::vector<Scalar> log_samples(Scalar lo, Scalar hi, int count) {
    using std::exp;
    using std::log;
    std::vector<Scalar> out(static_cast<std::size_t>(count));
    const Scalar l0 = log(lo), l1 = log(hi);
    for (int k = 0; k < count; ++k) out[std::size_t(k)] = exp(l0 + (l1 - l0) * Scalar(k) / Scalar(count - 1));
    return out;
}

// Maximum of a function that is unimodal on [lo, hi].
template <class Scalar, class F>
Scalar golden_max(F&& g, Scalar lo, Scalar hi) {
    using std::abs;
    const Scalar ratio = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
    Scalar x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
    Scalar g1 = g(x1), g2 = g(x2);
    for (int it = 0; it < 200 && hi - lo > std::numeric_limits<Scalar>::epsilon() * (abs(lo) + abs(hi)); ++it) {
        if (g1 < g2) {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + ratio * (hi - lo);
            g2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - ratio * (hi - lo);
            g1 = g(x1);
        }
    }
    return std::max({g1, g2, g(lo), g(hi)});
}

}  // namespace detail

template <class Scalar>
struct Envelope {
    Scalar A;
    Scalar B;
};

/// Growth envelope A(s^q - 1) <= f(s) <= B(s^q + 1) for s > 0, checked on a
/// log grid over [1e-6, 1e6], plus the exponent window p-1 < q < p* - 1.
///
/// Returns the largest admissible A and the smallest admissible B on the
/// samples. The semipositone family is rejected for f0 <= -1, where f vanishes
/// at a positive argument and the lower envelope degenerates.
template <class Scalar>
Envelope<Scalar> validate_h1(const Nonlinearity<Scalar>& nl, Scalar p, Scalar s) {
    using std::abs;
    using std::pow;
    const Scalar pstar = s * p < Scalar(1) ? critical_exponent(p, s) : std::numeric_limits<Scalar>::infinity();
    // q within rounding of an end of the window counts as on it
    const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + abs(nl.q));
    if (!(nl.q > p - Scalar(1) + slack && nl.q < pstar - Scalar(1) - slack))
        throw HypothesisError("H1: exponent window p-1 < q < p*-1 violated (q = " + std::to_string(double(nl.q)) +
                              ", p-1 = " + std::to_string(double(p - 1)) +
                              ", p*-1 = " + std::to_string(double(pstar - 1)) + ")");
    if (!(nl.f0 > Scalar(-1))) throw HypothesisError("H1: f(0) <= -1 is outside the built-in family");

    // A(s^q - 1) <= f(s): an upper bound on A where s^q > 1, a lower bound where s^q < 1.
    Scalar a_hi = std::numeric_limits<Scalar>::infinity();
    Scalar a_lo = Scalar(0);
    Scalar b = Scalar(0);
    for (Scalar x : detail::log_samples(Scalar(1e-6), Scalar(1e6), 2401)) {
        const Scalar xq = pow(x, nl.q);
        const Scalar fx = f_eval(x, nl);
        if (xq > Scalar(1)) a_hi = std::min(a_hi, fx / (xq - Scalar(1)));
        else if (xq < Scalar(1)) a_lo = std::max(a_lo, fx / (xq - Scalar(1)));
        else if (fx < Scalar(0)) throw HypothesisError("H1: lower envelope fails at s = 1");
        b = std::max(b, fx / (xq + Scalar(1)));
    }
    if (!(a_hi > Scalar(0)) || a_lo > a_hi) throw HypothesisError("H1: no positive A satisfies the lower envelope");
    if (!(b > Scalar(0))) throw HypothesisError("H1: no positive B satisfies the upper envelope");
    return {a_hi, b};
}

/// Ambrosetti-Rabinowitz deficit: K = min over samples of s f(s) - theta F(s).
///
/// Samples are uniform over `range`. The deficit is also probed at
/// doubling arguments past both ends; a strictly decreasing run
/// that ends below the sampled minimum means it is unbounded below.
template <class Scalar>
Scalar validate_ar(const Nonlinearity<Scalar>& nl, Scalar p, Scalar lo, Scalar hi, int samples) {
    if (!(nl.theta > p)) throw HypothesisError("H2: need theta > p");
    if (!(lo < hi) || samples < 2) throw UsageError("validate_ar: bad sample range");
    auto deficit = [&](Scalar x) { return x * f_eval(x, nl) - nl.theta * F_eval(x, nl); };

    Scalar K = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < samples; ++k) {
        const Scalar x = lo + (hi - lo) * Scalar(k) / Scalar(samples - 1);
        K = std::min(K, deficit(x));
    }
    using std::abs;
    using std::isfinite;
    if (!isfinite(K)) throw HypothesisError("H2: deficit not finite on samples");

    for (Scalar end : {hi, lo}) {
        Scalar x = abs(end) > Scalar(1) ? end : (end >= 0 ? Scalar(1) : Scalar(-1));
        Scalar prev = deficit(x);
        bool decreasing = true;
        for (int k = 0; k < 6 && decreasing; ++k) {
            x *= Scalar(2);
            const Scalar cur = deficit(x);
            // rounding in s f - theta F grows like |s f|
            const Scalar noise = Scalar(1e-12) * (abs(x * f_eval(x, nl)) + abs(nl.theta * F_eval(x, nl)));
            decreasing = cur < prev - noise;
            prev = cur;
        }
        if (decreasing && prev < K)
            throw HypothesisError("H2: s f(s) - theta F(s) is unbounded below (theta = " +
                                  std::to_string(double(nl.theta)) + ")");
    }
    return K;
}

/// Builds and validates the built-in family. theta defaults to q+1 - 0.1(q+1-p).
template <class Scalar>
Nonlinearity<Scalar> make_nonlinearity(Scalar q, Scalar f0, Scalar p, Scalar s,
                                       std::optional<Scalar> theta = std::nullopt) {
    Nonlinearity<Scalar> nl;
    nl.q = q;
    nl.f0 = f0;
    nl.theta = theta.value_or(default_theta(q, p));
    const Envelope<Scalar> env = validate_h1(nl, p, s);
    nl.A = env.A;
    nl.B = env.B;
    nl.K = validate_ar(nl, p, Scalar(-2), Scalar(50), 100001);
    Scalar msf = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k <= 10000; ++k) {
        const Scalar x = Scalar(-2) + Scalar(52) * Scalar(k) / Scalar(10000);
        msf = std::min(msf, x * f_eval(x, nl));
    }
    nl.min_sf = msf;
    return nl;
}

/// Bounds on the primitive used by the mountain-pass geometry:
///     F(s) <= B1 (|s|^(q+1) + 1)    for all s,
///     F(s) >= A1 (s^(q+1) - C1)     for s >= 0.
/// A1 is fixed canonically (1/(q+1), halved when f0 < 0 so that C1 stays
/// finite); B1 and C1 are the tightest values on a sampled log grid.
template <class Scalar>
struct PrimitiveBounds {
    Scalar A1;
    Scalar C1;
    Scalar B1;
};

template <class Scalar>
PrimitiveBounds<Scalar> primitive_bounds(const Nonlinearity<Scalar>& nl) {
    using std::abs;
    using std::pow;
    const Scalar e = nl.q + Scalar(1);
    PrimitiveBounds<Scalar> out;
    out.A1 = nl.f0 >= Scalar(0) ? Scalar(1) / e : Scalar(1) / (Scalar(2) * e);
    out.C1 = Scalar(0);
    out.B1 = Scalar(0);
    auto b_ratio = [&](Scalar x) { return F_eval(x, nl) / (pow(abs(x), e) + Scalar(1)); };
    auto c_gap = [&](Scalar x) { return pow(x, e) - F_eval(x, nl) / out.A1; };

    const std::vector<Scalar> xs = detail::log_samples(Scalar(1e-6), Scalar(1e6), 4801);
    std::vector<Scalar> grid;
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) grid.push_back(-*it);
    grid.push_back(Scalar(0));
    grid.insert(grid.end(), xs.begin(), xs.end());

    // sampled maximum, then a golden-section pass between the neighbours of
    // the best sample so the bound also holds between samples
    auto sup = [&](auto&& g, std::size_t first) {
        std::size_t best = first;
        for (std::size_t k = first; k < grid.size(); ++k)
            if (g(grid[k]) > g(grid[best])) best = k;
        Scalar val = g(grid[best]);
        if (best > first && best + 1 < grid.size())
            val = std::max(val, detail::golden_max(g, grid[best - 1], grid[best + 1]));
        return val;
    };
    out.B1 = std::max(Scalar(0), sup(b_ratio, 0));
    out.C1 = std::max(Scalar(0), sup(c_gap, xs.size()));
    return out;
}

/// Sampled potential V(x_i).
template <class Scalar>
struct Potential {
    Vector<Scalar> values;

    /// c_V = max(0, -min V)
    Scalar cV() const { return std::max(Scalar(0), -values.minCoeff()); }
    Scalar sup() const { return values.cwiseAbs().maxCoeff(); }
    bool nonnegative() const { return values.minCoeff() >= Scalar(0); }
};

template <class Scalar>
Potential<Scalar> constant_potential(Eigen::Index n, Scalar value) {
    return {Vector<Scalar>::Constant(n, value)};
}

/// A full problem instance: operator, potential, nonlinearity and lambda.
template <class Scalar>
struct Problem {
    Grid<Scalar> grid;
    std::shared_ptr<const Kernel<Scalar>> kernel;
    Potential<Scalar> V;
    Scalar lambda{};
    Nonlinearity<Scalar> nl;

    Scalar p() const { return kernel->p; }
    Scalar s() const { return kernel->s; }
    Scalar h() const { return grid.h; }
    Eigen::Index n() const { return grid.n; }
    /// r = 1/(q + 1 - p), the exponent of the lambda^-r scaling.
    Scalar r() const { return Scalar(1) / (nl.q + Scalar(1) - p()); }
};

template <class Scalar>
Problem<Scalar> make_problem(Grid<Scalar> grid, std::shared_ptr<const Kernel<Scalar>> kernel, Potential<Scalar> V,
                             Scalar lambda, Nonlinearity<Scalar> nl) {
    if (!kernel) throw UsageError("make_problem: null kernel");
    detail::require_same_size(kernel->size(), grid.n, "make_problem kernel");
    detail::require_same_size(V.values.size(), grid.n, "make_problem potential");
    if (!(lambda > Scalar(0))) throw ConfigError("make_problem: need lambda > 0");
    Problem<Scalar> prob{std::move(grid), std::move(kernel), std::move(V), lambda, nl};
    if (!(prob.r() > Scalar(0))) throw ConfigError("make_problem: need q + 1 > p");
    return prob;
}

template <class Scalar>
Problem<Scalar> with_lambda(const Problem<Scalar>& prob, Scalar lambda) {
    if (!(lambda > Scalar(0))) throw ConfigError("with_lambda: need lambda > 0");
    Problem<Scalar> out = prob;
    out.lambda = lambda;
    return out;
}

/// Discrete J_lambda(u) = S(u)/p + (h/p) sum V_i |u_i|^p - lambda h sum F(u_i).
template <class Scalar>
Scalar energy(const GridFunction<Scalar>& u, const Problem<Scalar>& prob) {
    detail::require_same_size(u.size(), prob.n(), "energy");
    const Scalar p = prob.p();
    Scalar pot = 0;
    Scalar prim = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        pot += prob.V.values[i] * detail::abs_pow(u[i], p);
        prim += F_eval(u[i], prob.nl);
    }
    return seminorm_p(u, *prob.kernel) / p + prob.h() * pot / p - prob.lambda * prob.h() * prim;
}

/// Euclidean gradient of `energy`.
template <class Scalar>
GridFunction<Scalar> gradient(const GridFunction<Scalar>& u, const Problem<Scalar>& prob) {
    detail::require_same_size(u.size(), prob.n(), "gradient");
    const Scalar p = prob.p();
    GridFunction<Scalar> g = apply_flap(u, *prob.kernel) / p;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        g[i] += prob.h() * (prob.V.values[i] * detail::signed_pow(u[i], p) - prob.lambda * f_eval(u[i], prob.nl));
    return g;
}

/// ||g||_2 / sqrt(h): the L^2-scaled size of the weak residual.
template <class Scalar>
Scalar residual_of(const GridFunction<Scalar>& g, Scalar h) {
    using std::sqrt;
    return g.norm() / sqrt(h);
}

template <class Scalar>
Scalar residual_norm(const GridFunction<Scalar>& u, const Problem<Scalar>& prob) {
    return residual_of(gradient(u, prob), prob.h());
}

template <class Scalar>
Scalar f_prime(Scalar s, const Nonlinearity<Scalar>& nl) {
    using std::pow;
    if (s > Scalar(0)) return nl.q * pow(s, nl.q - Scalar(1));
    if (s == Scalar(0)) return nl.q > Scalar(1) ? Scalar(0) : nl.q == Scalar(1) ? Scalar(1) : Scalar(0);
    if (s >= Scalar(-1)) return nl.f0;
    return Scalar(0);
}

/// Dense Hessian of the energy. Closed form for p >= 2; for 1 < p < 2 the
/// second derivative of |d|^p is unbounded at d = 0 and central differences
/// of the gradient are used instead.
template <class Scalar>
Matrix<Scalar> hessian(const GridFunction<Scalar>& u, const Problem<Scalar>& prob) {
    using std::abs;
    using std::pow;
    detail::require_same_size(u.size(), prob.n(), "hessian");
    const Eigen::Index n = u.size();
    const Scalar p = prob.p();
    const Scalar h = prob.h();
    const Kernel<Scalar>& K = *prob.kernel;
    Matrix<Scalar> H = Matrix<Scalar>::Zero(n, n);
    if (p >= Scalar(2)) {
        auto curv = [&](Scalar d) { return p == Scalar(2) ? Scalar(1) : pow(abs(d), p - Scalar(2)); };
        // Hessian of S/p: 2(p-1) [W_kl |u_k - u_l|^(p-2)] graph Laplacian + 2h(p-1) t_k |u_k|^(p-2)
        for (Eigen::Index l = 0; l < n; ++l) {
            for (Eigen::Index k = l + 1; k < n; ++k) {
                const Scalar w = Scalar(2) * (p - Scalar(1)) * K.weights(k, l) * curv(u[k] - u[l]);
                H(k, l) -= w;
                H(l, k) -= w;
                H(k, k) += w;
                H(l, l) += w;
            }
        }
        for (Eigen::Index k = 0; k < n; ++k)
            H(k, k) += (p - Scalar(1)) * h * (Scalar(2) * K.tail[k] + prob.V.values[k]) * curv(u[k]) -
                       prob.lambda * h * f_prime(u[k], prob.nl);
        return H;
    }
    const Scalar eps = Scalar(1e-6) * (Scalar(1) + u.template lpNorm<Eigen::Infinity>());
    GridFunction<Scalar> e = GridFunction<Scalar>::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        e[k] = eps;
        H.col(k) = (gradient<Scalar>(u + e, prob) - gradient<Scalar>(u - e, prob)) / (Scalar(2) * eps);
        e[k] = 0;
    }
    return (H + H.transpose()) / Scalar(2);
}

/// Hessian-vector product of the energy by central differences of the gradient.
template <class Scalar>
GridFunction<Scalar> hessian_times(const GridFunction<Scalar>& u, const GridFunction<Scalar>& v,
                                   const Problem<Scalar>& prob) {
    using std::sqrt;
    const Scalar vn = v.norm();
    if (vn == Scalar(0)) return GridFunction<Scalar>::Zero(u.size());
    const Scalar eps = Scalar(1e-5) * (Scalar(1) + u.template lpNorm<Eigen::Infinity>()) / vn;
    return (gradient<Scalar>(u + eps * v, prob) - gradient<Scalar>(u - eps * v, prob)) / (Scalar(2) * eps);
}

}  // namespace fracmp
