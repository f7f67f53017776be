#pragma once

#include "fracmp/core.hpp"
#include "fracmp/grid.hpp"

#include <cmath>
#include <string>

namespace fracmp {

/// Discretized interaction kernel |x - y|^-(1 + sp) on a uniform interval grid.
///
/// weights(i, j) approximates the integral of the kernel over cell_i x cell_j.
/// Pairs at least two cells apart use the node-distance midpoint value
/// h^2 |x_i - x_j|^-(1+sp). Adjacent cells use the exact cell-pair integral
///
///     h^(1-sp) (2 - 2^(1-sp)) / (sp (1 - sp)).
///
/// The same-cell integral diverges, but it always multiplies |u_i - u_i| = 0,
/// so the diagonal simply carries the adjacent-cell value.
///
/// tail(i) is the exact exterior integral of the kernel seen from node i,
/// [(x_i - a)^-sp + (b - x_i)^-sp] / sp. This accounts for the zero extension.
template <class Scalar>
struct Kernel {
    Scalar s{};
    Scalar p{};
    Scalar h{};
    Matrix<Scalar> weights;
    Vector<Scalar> tail;

    Eigen::Index size() const { return tail.size(); }
    Scalar sp() const { return s * p; }
};

template <class Scalar>
Scalar adjacent_cell_weight(Scalar h, Scalar sp) {
    using std::pow;
    return pow(h, Scalar(1) - sp) * (Scalar(2) - pow(Scalar(2), Scalar(1) - sp)) / (sp * (Scalar(1) - sp));
}

/// Integral of |x - y|^-(1+sp) over y outside (x - left, x + right).
template <class Scalar>
Scalar exterior_tail(Scalar left, Scalar right, Scalar sp) {
    using std::pow;
    return (pow(left, -sp) + pow(right, -sp)) / sp;
}

template <class Scalar>
Kernel<Scalar> assemble_kernel(const Grid<Scalar>& grid, Scalar s, Scalar p) {
    using std::abs;
    using std::pow;
    if (!(s > Scalar(0) && s < Scalar(1))) throw ConfigError("assemble_kernel: need 0 < s < 1");
    if (!(p > Scalar(1))) throw ConfigError("assemble_kernel: need p > 1");
    const Scalar sp = s * p;
    if (!(sp < Scalar(1)))
        throw ConfigError("assemble_kernel: s*p = " + std::to_string(double(sp)) +
                          " >= 1, operator not defined on an interval discretization");

    const Eigen::Index n = grid.n;
    const Scalar h = grid.h;
    const Scalar alpha = Scalar(1) + sp;

    Kernel<Scalar> k;
    k.s = s;
    k.p = p;
    k.h = h;
    k.weights.resize(n, n);
    k.tail.resize(n);

    const Scalar near = adjacent_cell_weight(h, sp);
    // Far-field weights depend only on |i - j|.
    Vector<Scalar> band(n);
    for (Eigen::Index d = 0; d < n; ++d)
        band[d] = d <= 1 ? near : h * h * pow(Scalar(d) * h, -alpha);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) k.weights(i, j) = band[i > j ? i - j : j - i];

    // distances from index counts keep the tail exactly reflection symmetric
    for (Eigen::Index i = 0; i < n; ++i) k.tail[i] = exterior_tail(Scalar(i + 1) * h, Scalar(n - i) * h, sp);
    return k;
}

/// S(u) = sum_{i,j} W_ij |u_i - u_j|^p + 2 h sum_i t_i |u_i|^p.
///
/// This is the p-th power of the norm; see `wnorm` for the root.
template <class Scalar>
Scalar seminorm_p(const GridFunction<Scalar>& u, const Kernel<Scalar>& K) {
    detail::require_same_size(u.size(), K.size(), "seminorm_p");
    const Eigen::Index n = u.size();
    const Scalar p = K.p;
    Scalar pair = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        Scalar col = 0;
        for (Eigen::Index i = j + 1; i < n; ++i) col += K.weights(i, j) * detail::abs_pow(u[i] - u[j], p);
        pair += col;
    }
    Scalar ext = 0;
    for (Eigen::Index i = 0; i < n; ++i) ext += K.tail[i] * detail::abs_pow(u[i], p);
    return Scalar(2) * pair + Scalar(2) * K.h * ext;
}

/// ||u|| = S(u)^(1/p)
template <class Scalar>
Scalar wnorm(const GridFunction<Scalar>& u, const Kernel<Scalar>& K) {
    using std::pow;
    return pow(seminorm_p(u, K), Scalar(1) / K.p);
}

/// Exact gradient of S:
///     g_k = 2p sum_j W_kj Φ_p(u_k - u_j) + 2hp t_k Φ_p(u_k).
/// Pairing with a test vector gives the discrete weak form, and <g, u> = p S(u).
template <class Scalar>
GridFunction<Scalar> apply_flap(const GridFunction<Scalar>& u, const Kernel<Scalar>& K) {
    detail::require_same_size(u.size(), K.size(), "apply_flap");
    const Eigen::Index n = u.size();
    const Scalar p = K.p;
    GridFunction<Scalar> g = GridFunction<Scalar>::Zero(n);
    if (p == Scalar(2)) {
        // linear case: 2p (D - W) u, with D the off-diagonal row sums
        const Vector<Scalar> wu = K.weights * u;
        for (Eigen::Index k = 0; k < n; ++k) {
            const Scalar rowsum = K.weights.col(k).sum() - K.weights(k, k);
            g[k] = Scalar(4) * (rowsum * u[k] - (wu[k] - K.weights(k, k) * u[k])) + Scalar(4) * K.h * K.tail[k] * u[k];
        }
        return g;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const Scalar w = K.weights(i, j) * detail::signed_pow(u[i] - u[j], p);
            g[i] += w;
            g[j] -= w;
        }
    }
    for (Eigen::Index k = 0; k < n; ++k) g[k] += K.h * K.tail[k] * detail::signed_pow(u[k], p);
    return Scalar(2) * p * g;
}

/// Matrix of the quadratic form S(u) = u^T M u at p = 2.
template <class Scalar>
Matrix<Scalar> quadratic_form(const Kernel<Scalar>& K) {
    const Eigen::Index n = K.size();
    Matrix<Scalar> M = -Scalar(2) * K.weights;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar rowsum = K.weights.col(k).sum() - K.weights(k, k);
        M(k, k) = Scalar(2) * rowsum + Scalar(2) * K.h * K.tail[k];
    }
    return M;
}

}  // namespace fracmp
