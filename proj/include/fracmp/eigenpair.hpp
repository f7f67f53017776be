#pragma once

#include "fracmp/core.hpp"
#include "fracmp/grid.hpp"
#include "fracmp/kernel.hpp"
#include "fracmp/minimize.hpp"
#include "fracmp/model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fracmp {

/// R(u) = S(u) / (h sum |u_i|^p)
template <class Scalar>
Scalar rayleigh(const GridFunction<Scalar>& u, const Kernel<Scalar>& K, const Grid<Scalar>& grid) {
    detail::require_same_size(u.size(), grid.n, "rayleigh");
    const Scalar mass = lp_mass(u, grid.h, K.p);
    if (!(mass > Scalar(0))) throw UsageError("rayleigh: zero function");
    return seminorm_p(u, K) / mass;
}

template <class Scalar>
struct EigenResult {
    Scalar lambda1{};
    GridFunction<Scalar> phi1;  // nonnegative, S(phi1) = 1
    Scalar residual{};
    int iterations = 0;
    std::vector<Scalar> trace;  // Rayleigh quotient per accepted step
};

struct EigenOptions {
    double tol = 1e-9;
    // iteration cap is cap_factor * n
    int cap_factor = 50;
};

namespace detail {

template <class Scalar>
GridFunction<Scalar> normalize_w(const GridFunction<Scalar>& u, const Kernel<Scalar>& K) {
    return u / wnorm(u, K);
}

// Euler-Lagrange defect || grad S / p - lambda h Φ_p(u) || / sqrt(h)
template <class Scalar>
Scalar eigen_defect(const GridFunction<Scalar>& u, const GridFunction<Scalar>& gradS, Scalar lambda,
                    const Kernel<Scalar>& K) {
    GridFunction<Scalar> r = gradS / K.p;
    for (Eigen::Index i = 0; i < u.size(); ++i) r[i] -= lambda * K.h * signed_pow(u[i], K.p);
    return residual_of(r, K.h);
}

}  // namespace detail

/// First eigenpair by projected gradient descent of the Rayleigh quotient on
/// the unit sphere S(u) = 1.
///
/// Starts from the boundary-distance hat, takes Barzilai-Borwein steps with
/// backtracking, and projects every iterate by |.|, which never increases R
/// since ||a| - |b|| <= |a - b| and all weights are nonnegative.
template <class Scalar>
EigenResult<Scalar> first_eigenpair(const Kernel<Scalar>& K, const Grid<Scalar>& grid, const EigenOptions& opts = {}) {
    using std::abs;
    if (!(opts.tol > 0)) throw UsageError("first_eigenpair: need tol > 0");
    detail::require_same_size(K.size(), grid.n, "first_eigenpair");
    const Scalar p = K.p;
    const Scalar h = grid.h;
    const int cap = opts.cap_factor * int(grid.n);

    GridFunction<Scalar> u = detail::normalize_w<Scalar>(grid.dist, K);
    auto quotient_gradient = [&](const GridFunction<Scalar>& v, Scalar& R, GridFunction<Scalar>& gradS) {
        gradS = apply_flap(v, K);
        const Scalar mass = lp_mass(v, h, p);
        R = seminorm_p(v, K) / mass;
        GridFunction<Scalar> g = gradS;
        for (Eigen::Index i = 0; i < v.size(); ++i) g[i] -= R * p * h * detail::signed_pow(v[i], p);
        return GridFunction<Scalar>(g / mass);
    };

    EigenResult<Scalar> out;
    Scalar R;
    GridFunction<Scalar> gradS;
    GridFunction<Scalar> g = quotient_gradient(u, R, gradS);
    out.trace.push_back(R);
    Scalar step = Scalar(0.1) * u.norm() / std::max(g.norm(), std::numeric_limits<Scalar>::min());

    int it = 0;
    for (;; ++it) {
        const Scalar defect = detail::eigen_defect(u, gradS, R, K);
        if (defect <= Scalar(opts.tol)) {
            out.residual = defect;
            break;
        }
        if (it >= cap)
            throw SolverError("first_eigenpair: no convergence in " + std::to_string(cap) +
                                  " iterations (defect " + std::to_string(double(defect)) + ")",
                              u.template cast<double>(), it);

        GridFunction<Scalar> v;
        Scalar Rv = R;
        GridFunction<Scalar> gradSv;
        GridFunction<Scalar> gv;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            v = detail::normalize_w<Scalar>((u - step * g).cwiseAbs(), K);
            gv = quotient_gradient(v, Rv, gradSv);
            if (Rv <= R * (Scalar(1) + Scalar(8) * std::numeric_limits<Scalar>::epsilon())) {
                ok = true;
                break;
            }
            step *= Scalar(0.5);
        }
        if (!ok)
            throw SolverError("first_eigenpair: line search failed", u.template cast<double>(), it);

        const GridFunction<Scalar> sdiff = v - u;
        const GridFunction<Scalar> ydiff = gv - g;
        const Scalar sy = sdiff.dot(ydiff);
        if (sy > Scalar(0)) step = sdiff.squaredNorm() / sy;

        u = std::move(v);
        g = std::move(gv);
        gradS = std::move(gradSv);
        R = Rv;
        out.trace.push_back(R);
    }
    out.lambda1 = R;
    out.phi1 = std::move(u);
    out.iterations = it;
    return out;
}

/// p = 2 cross-check: inverse power iteration on M phi = lambda h phi with a
/// dense Cholesky factorization of the quadratic form.
template <class Scalar>
EigenResult<Scalar> first_eigenpair_linear(const Kernel<Scalar>& K, const Grid<Scalar>& grid, double tol = 1e-10,
                                           int max_iter = 5000) {
    if (K.p != Scalar(2)) throw UsageError("first_eigenpair_linear: only defined for p = 2");
    const Matrix<Scalar> M = quadratic_form(K);
    const Eigen::LLT<Matrix<Scalar>> llt(M);
    if (llt.info() != Eigen::Success) throw SolverError("first_eigenpair_linear: form not positive definite", {}, 0);

    EigenResult<Scalar> out;
    GridFunction<Scalar> u = detail::normalize_w<Scalar>(grid.dist, K);
    for (int it = 0; it <= max_iter; ++it) {
        const GridFunction<Scalar> Mu = M * u;
        const Scalar R = u.dot(Mu) / (grid.h * u.squaredNorm());
        const Scalar defect = residual_of(GridFunction<Scalar>(Mu - R * grid.h * u), grid.h);
        out.trace.push_back(R);
        if (defect <= Scalar(tol)) {
            out.lambda1 = R;
            out.residual = defect;
            out.iterations = it;
            if (u.sum() < Scalar(0)) u = -u;
            out.phi1 = u;
            return out;
        }
        u = detail::normalize_w<Scalar>(GridFunction<Scalar>(llt.solve(u)), K);
    }
    throw SolverError("first_eigenpair_linear: no convergence", u.template cast<double>(), max_iter);
}

template <class Scalar>
struct TorsionResult {
    GridFunction<Scalar> u;
    Scalar residual{};
    int iterations = 0;
    bool positive = false;
    std::vector<Scalar> trace;
};

struct TorsionOptions {
    double tol = 1e-9;
    int cap_factor = 200;
};

/// Solves (-Δ)_p^s u + V Φ_p(u) = rhs by minimizing
///     E(u) = S(u)/p + (h/p) sum V_i |u_i|^p - rhs h sum u_i.
///
/// E is coercive when c_V < lambda1; pass lambda1 to have that gate checked.
template <class Scalar>
TorsionResult<Scalar> torsion_solve(const Kernel<Scalar>& K, const Grid<Scalar>& grid, const Potential<Scalar>& V,
                                    const TorsionOptions& opts = {}, Scalar rhs = Scalar(1),
                                    std::optional<Scalar> lambda1 = std::nullopt) {
    if (!(opts.tol > 0)) throw UsageError("torsion_solve: need tol > 0");
    detail::require_same_size(K.size(), grid.n, "torsion_solve");
    detail::require_same_size(V.values.size(), grid.n, "torsion_solve potential");
    if (lambda1 && !(V.cV() < *lambda1))
        throw ConfigError("torsion_solve: potential gate c_V < lambda1 violated (c_V = " +
                          std::to_string(double(V.cV())) + ", lambda1 = " + std::to_string(double(*lambda1)) + ")");
    const Scalar p = K.p;
    const Scalar h = grid.h;

    auto objective = [&](const Vector<Scalar>& u, Vector<Scalar>& g) {
        g = apply_flap(u, K) / p;
        Scalar pot = 0;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            pot += V.values[i] * detail::abs_pow(u[i], p);
            g[i] += h * (V.values[i] * detail::signed_pow(u[i], p) - rhs);
        }
        return seminorm_p(u, K) / p + h * pot / p - rhs * h * u.sum();
    };
    MinimizeOptions mo;
    mo.tol = opts.tol;
    mo.max_iter = opts.cap_factor * int(grid.n);
    auto res = minimize_lbfgs<Scalar>(GridFunction<Scalar>(grid.dist), objective,
                                      [&](const Vector<Scalar>& g) { return residual_of(g, h); }, mo);
    if (!res.converged)
        throw SolverError("torsion_solve: no convergence (residual " + std::to_string(double(res.residual)) + ")",
                          res.x.template cast<double>(), res.iterations);
    TorsionResult<Scalar> out;
    out.u = std::move(res.x);
    out.residual = res.residual;
    out.iterations = res.iterations;
    out.positive = out.u.minCoeff() > Scalar(0);
    out.trace = std::move(res.trace);
    return out;
}

/// Best constant C in ||u||_m <= C ||u|| on the grid, found by maximizing the
/// ratio from a positive start (the first eigenfunction by default).
template <class Scalar>
Scalar sobolev_constant(const Kernel<Scalar>& K, const Grid<Scalar>& grid, Scalar m,
                        std::optional<GridFunction<Scalar>> start = std::nullopt, double tol = 1e-10) {
    using std::exp;
    using std::log;
    if (!(m >= Scalar(1))) throw UsageError("sobolev_constant: need m >= 1");
    const Scalar p = K.p;
    const Scalar h = grid.h;
    // G(u) = log S(u)/p - log(h sum |u|^m)/m, scale invariant; C = exp(-min G)
    auto objective = [&](const Vector<Scalar>& u, Vector<Scalar>& g) {
        const Scalar S = seminorm_p(u, K);
        Scalar sum = 0;
        for (Eigen::Index i = 0; i < u.size(); ++i) sum += detail::abs_pow(u[i], m);
        g = apply_flap(u, K) / (p * S);
        for (Eigen::Index i = 0; i < u.size(); ++i) g[i] -= detail::signed_pow(u[i], m) / sum;
        return log(S) / p - log(h * sum) / m;
    };
    GridFunction<Scalar> u0 = start ? *start : GridFunction<Scalar>(grid.dist);
    u0 /= wnorm(u0, K);
    MinimizeOptions mo;
    mo.tol = tol;
    mo.max_iter = 200 * int(grid.n);
    auto res = minimize_lbfgs<Scalar>(
        u0, objective, [&](const Vector<Scalar>& g) { return g.norm() * u0.norm(); }, mo);
    if (!res.converged)
        throw SolverError("sobolev_constant: no convergence", res.x.template cast<double>(), res.iterations);
    return exp(-res.value);
}

}  // namespace fracmp
