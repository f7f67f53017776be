#pragma once

#include "fracmp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fracmp {

/// Uniform interior discretization of the interval (a, b).
///
/// Node i (0-based) sits at a + (i+1) h with h = (b - a)/(n + 1). The boundary
/// distance d_i = min(x_i - a, b - x_i) is stored alongside the nodes.
template <class Scalar>
struct Grid {
    Scalar a{};
    Scalar b{};
    Eigen::Index n{};
    Scalar h{};
    Vector<Scalar> nodes;
    Vector<Scalar> dist;

    Scalar length() const { return b - a; }
    Eigen::Index size() const { return n; }
};

template <class Scalar>
Grid<Scalar> build_grid(Scalar a, Scalar b, Eigen::Index n) {
    using std::isfinite;
    if (!isfinite(a) || !isfinite(b)) throw ConfigError("build_grid: endpoints must be finite");
    if (!(a < b)) throw ConfigError("build_grid: need a < b");
    if (n < 1) throw ConfigError("build_grid: need at least one interior node");

    Grid<Scalar> g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.h = (b - a) / Scalar(n + 1);
    g.nodes.resize(n);
    g.dist.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g.nodes[i] = a + Scalar(i + 1) * g.h;
        // index arithmetic keeps d exactly reflection-symmetric
        const Eigen::Index k = std::min(i + 1, n - i);
        g.dist[i] = Scalar(k) * g.h;
    }
    return g;
}

template <class Scalar>
struct Norms {
    Scalar lp;
    Scalar linf;
};

/// Discrete L^p and L^inf norms; the L^p integral uses node value times h.
template <class Scalar>
Norms<Scalar> norms(const GridFunction<Scalar>& u, const Grid<Scalar>& grid, Scalar p) {
    using std::pow;
    if (!(p >= Scalar(1))) throw ConfigError("norms: need p >= 1");
    detail::require_same_size(u.size(), grid.n, "norms");
    if (u.size() == 0) return {Scalar(0), Scalar(0)};
    const Scalar linf = u.cwiseAbs().maxCoeff();
    if (linf == Scalar(0)) return {Scalar(0), Scalar(0)};
    // scale by linf so large exponents do not overflow
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) sum += detail::abs_pow(u[i] / linf, p);
    return {linf * pow(grid.h * sum, Scalar(1) / p), linf};
}

/// h * sum |u_i|^p
template <class Scalar>
Scalar lp_mass(const GridFunction<Scalar>& u, Scalar h, Scalar p) {
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) sum += detail::abs_pow(u[i], p);
    return h * sum;
}

/// Grid reflection i -> n-1-i.
template <class Scalar>
GridFunction<Scalar> reflect(const GridFunction<Scalar>& u) {
    return u.reverse();
}

}  // namespace fracmp
