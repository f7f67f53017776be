#pragma once

#include "fracmp/core.hpp"
#include "fracmp/eigenpair.hpp"
#include "fracmp/grid.hpp"
#include "fracmp/kernel.hpp"
#include "fracmp/minimize.hpp"
#include "fracmp/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fracmp {

enum class Tag { LocalMin, MountainPass, Unknown };

inline const char* to_string(Tag t) {
    switch (t) {
        case Tag::LocalMin: return "local-min";
        case Tag::MountainPass: return "mountain-pass";
        default: return "unknown";
    }
}

template <class Scalar>
struct CriticalPoint {
    GridFunction<Scalar> u;
    Scalar value{};
    Scalar residual{};
    Tag tag = Tag::Unknown;
    int iterations = 0;
    std::optional<Scalar> path_value;  // min-max level of the converged path
    std::vector<Scalar> trace;         // energies (descent) or path levels (mountain pass)
};

/// distinct(u, v) <=> ||u - v||_inf > 1e-3 max(||u||_inf, ||v||_inf, 1)
template <class Scalar>
bool distinct(const GridFunction<Scalar>& u, const GridFunction<Scalar>& v) {
    detail::require_same_size(u.size(), v.size(), "distinct");
    const Scalar scale = std::max({u.template lpNorm<Eigen::Infinity>(), v.template lpNorm<Eigen::Infinity>(), Scalar(1)});
    return (u - v).template lpNorm<Eigen::Infinity>() > Scalar(1e-3) * scale;
}

struct ClassifyOptions {
    double rho_rel = 1e-2;  // sphere radius relative to max(||u||, 1)
    int samples = 24;
    int arc_probes = 16;
    std::uint64_t seed = 12345;
};

/// Local shape of the energy around a critical point.
///
/// Samples the sphere ||d|| = rho (in the W-norm) around u along m random
/// directions and the two signs of the softest Hessian mode. No lower sample
/// means local-min. Two lower samples whose great-circle arc leaves the
/// sublevel set {J < J(u)} mean the sublevel set near u is disconnected, i.e.
/// mountain-pass. Anything else is unknown.
template <class Scalar>
Tag classify(const GridFunction<Scalar>& u, const Problem<Scalar>& prob, Scalar rho, int m, std::uint64_t seed,
             int arc_probes = 16) {
    using std::cos;
    using std::sin;
    using std::atan2;
    const Eigen::Index n = u.size();
    const Kernel<Scalar>& K = *prob.kernel;
    const Scalar J0 = energy(u, prob);
    const Scalar tie = Scalar(1e-13) * (std::abs(J0) + Scalar(1));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_dir = [&]() {
        GridFunction<Scalar> d(n);
        for (Eigen::Index i = 0; i < n; ++i) d[i] = Scalar(normal(rng));
        return d;
    };

    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(hessian(u, prob));
    const GridFunction<Scalar> soft = es.eigenvectors().col(0);

    std::vector<GridFunction<Scalar>> dirs{soft, -soft};
    for (int k = 0; k < m; ++k) dirs.push_back(random_dir());

    auto on_sphere = [&](const GridFunction<Scalar>& d) { return GridFunction<Scalar>(rho * d / wnorm(d, K)); };
    std::vector<GridFunction<Scalar>> lower;
    for (const auto& d : dirs) {
        const GridFunction<Scalar> step = on_sphere(d);
        if (energy<Scalar>(u + step, prob) < J0 - tie) lower.push_back(d / d.norm());
    }
    if (lower.empty()) return Tag::LocalMin;
    if (lower.size() < 2) return Tag::Unknown;

    for (std::size_t i = 0; i < lower.size(); ++i) {
        for (std::size_t j = i + 1; j < lower.size(); ++j) {
            const GridFunction<Scalar>& e1 = lower[i];
            GridFunction<Scalar> w = lower[j] - lower[j].dot(e1) * e1;
            if (w.norm() < Scalar(1e-8)) {
                // antipodal pair: pass through a random orthogonal direction
                w = random_dir();
                w -= w.dot(e1) * e1;
            }
            const Scalar angle = atan2((lower[j] - lower[j].dot(e1) * e1).norm(), lower[j].dot(e1));
            if (angle < Scalar(1e-8)) continue;
            const GridFunction<Scalar> e2 = w / w.norm();
            for (int k = 1; k < arc_probes; ++k) {
                const Scalar t = angle * Scalar(k) / Scalar(arc_probes);
                const GridFunction<Scalar> d = cos(t) * e1 + sin(t) * e2;
                if (energy<Scalar>(u + on_sphere(d), prob) >= J0) return Tag::MountainPass;
            }
        }
    }
    return Tag::Unknown;
}

template <class Scalar>
Tag classify(const CriticalPoint<Scalar>& cp, const Problem<Scalar>& prob, const ClassifyOptions& opts = {}) {
    const Scalar rho = Scalar(opts.rho_rel) * std::max(wnorm(cp.u, *prob.kernel), Scalar(1));
    return classify(cp.u, prob, rho, opts.samples, opts.seed, opts.arc_probes);
}

struct DescendOptions {
    int max_iter = 20000;
    // give up once the energy drops this far below its start (unbounded direction)
    double divergence = 1e8;
    bool classify_result = true;
    ClassifyOptions classify;
};

/// Energy descent (L-BFGS) to a point with residual <= tol.
template <class Scalar>
CriticalPoint<Scalar> descend(const GridFunction<Scalar>& u0, const Problem<Scalar>& prob, Scalar tol,
                              const DescendOptions& opts = {}) {
    using std::abs;
    if (!(tol > Scalar(0))) throw UsageError("descend: need tol > 0");
    detail::require_same_size(u0.size(), prob.n(), "descend");
    const Scalar h = prob.h();
    const Scalar J0 = energy(u0, prob);
    MinimizeOptions mo;
    mo.tol = double(tol);
    mo.max_iter = opts.max_iter;
    mo.floor = double(J0 - Scalar(opts.divergence) * (abs(J0) + Scalar(1)));
    auto res = minimize_lbfgs<Scalar>(
        u0,
        [&](const Vector<Scalar>& u, Vector<Scalar>& g) {
            g = gradient(u, prob);
            return energy(u, prob);
        },
        [&](const Vector<Scalar>& g) { return residual_of(g, h); }, mo);
    if (!res.converged)
        throw SolverError(std::string("descend: ") + (res.diverged ? "energy unbounded below along the descent path"
                                                                   : "no convergence") +
                              " (residual " + std::to_string(double(res.residual)) + ")",
                          res.x.template cast<double>(), res.iterations);
    CriticalPoint<Scalar> cp;
    cp.u = std::move(res.x);
    cp.value = res.value;
    cp.residual = res.residual;
    cp.iterations = res.iterations;
    cp.trace = std::move(res.trace);
    if (opts.classify_result) cp.tag = classify(cp, prob, opts.classify) == Tag::LocalMin ? Tag::LocalMin : Tag::Unknown;
    return cp;
}

/// Constants of the mountain-pass geometry. None of them depends on lambda.
template <class Scalar>
struct GeometryConstants {
    Scalar lambda1{};
    PrimitiveBounds<Scalar> bounds{};
    Scalar sobolev{};        // C_{q+1}: ||u||_{q+1} <= C ||u||
    Scalar phi_mass{};       // ||phi||_{q+1}^{q+1}
    Scalar omega{};          // |Omega|
    Scalar upper_factor{};   // 1 + ||V||_inf / lambda1
    Scalar lower_factor{};   // 1 - c_V / lambda1
    Scalar c{};              // endpoint scale: e1 = c lambda^-r phi
    Scalar tau{};            // ring radius factor: ||u|| = tau lambda^-r
    Scalar C2{};             // constant completing the endpoint estimate, p C1 / c^p
    Scalar lambda_hat1{};    // J(e1) <= 0 below this (infinite when C1 = 0)
    Scalar lambda_hat2{};    // ring bound holds below this
    Scalar lambda3() const { return std::min(lambda_hat1, lambda_hat2); }
    Scalar ring_c1(Scalar p) const { return Scalar(1) / (Scalar(4) * p); }
};

/// Evaluates the endpoint scale c and the ring radius tau from
///
///     c^(q+1-p) = 2 (1 + ||V||_inf/lambda1) / (p A1 ||phi||_{q+1}^{q+1})
///     1 - c_V/lambda1 = (3/2) p C_{q+1}^{q+1} B1 tau^(q+1-p)
///
/// and the thresholds
///
///     lambda_hat1 = [(1 + ||V||_inf/lambda1) / (2 p A1 C2 |Omega|)]^(1/(1+rp)),   C2 = p C1 / c^p
///     lambda_hat2 = tau^(p/(1+rp)) (4 p B1 |Omega|)^(-1/(1+rp)).
///
/// phi must be strictly positive; it is renormalized to ||phi|| = 1.
template <class Scalar>
GeometryConstants<Scalar> certify_constants(const Problem<Scalar>& prob, const GridFunction<Scalar>& phi,
                                            std::optional<Scalar> sobolev = std::nullopt) {
    using std::pow;
    if (!(phi.minCoeff() > Scalar(0))) throw UsageError("certify_constants: phi must be strictly positive");
    const Kernel<Scalar>& K = *prob.kernel;
    const Scalar p = prob.p();
    const Scalar q = prob.nl.q;
    const Scalar r = prob.r();
    const GridFunction<Scalar> unit = phi / wnorm(phi, K);

    GeometryConstants<Scalar> gc;
    gc.lambda1 = rayleigh(unit, K, prob.grid);
    if (!(prob.V.cV() < gc.lambda1)) throw ConfigError("certify_constants: potential gate c_V < lambda1 violated");
    gc.bounds = primitive_bounds(prob.nl);
    gc.sobolev = sobolev ? *sobolev : sobolev_constant(K, prob.grid, q + Scalar(1), std::optional<GridFunction<Scalar>>(unit));
    gc.phi_mass = lp_mass(unit, prob.h(), q + Scalar(1));
    gc.omega = prob.grid.length();
    gc.upper_factor = Scalar(1) + prob.V.sup() / gc.lambda1;
    gc.lower_factor = Scalar(1) - prob.V.cV() / gc.lambda1;

    const Scalar gap = q + Scalar(1) - p;
    gc.c = pow(Scalar(2) * gc.upper_factor / (p * gc.bounds.A1 * gc.phi_mass), Scalar(1) / gap);
    gc.tau = pow(gc.lower_factor / (Scalar(1.5) * p * pow(gc.sobolev, q + Scalar(1)) * gc.bounds.B1), Scalar(1) / gap);
    gc.C2 = p * gc.bounds.C1 / pow(gc.c, p);
    const Scalar e = Scalar(1) / (Scalar(1) + r * p);
    gc.lambda_hat1 = gc.C2 > Scalar(0)
                         ? pow(gc.upper_factor / (Scalar(2) * p * gc.bounds.A1 * gc.C2 * gc.omega), e)
                         : std::numeric_limits<Scalar>::infinity();
    gc.lambda_hat2 = pow(gc.tau, p * e) * pow(Scalar(4) * p * gc.bounds.B1 * gc.omega, -e);
    return gc;
}

template <class Scalar>
struct Endpoints {
    GridFunction<Scalar> e0;
    GridFunction<Scalar> e1;
    Scalar c{};
    Scalar tau{};
    GeometryConstants<Scalar> constants;
    bool below_hat1 = false;
    bool below_hat2 = false;
    bool in_window() const { return below_hat1 && below_hat2; }
};

/// e0 = 0 and e1 = c lambda^-r phi with ||phi|| = 1. Outside the window
/// lambda < lambda3 the endpoints are still returned; `in_window()` reports it.
template <class Scalar>
Endpoints<Scalar> construct_endpoints(const Problem<Scalar>& prob, const GridFunction<Scalar>& phi,
                                      const GeometryConstants<Scalar>& gc) {
    using std::pow;
    if (!(phi.minCoeff() > Scalar(0))) throw UsageError("construct_endpoints: phi must be strictly positive");
    Endpoints<Scalar> ep;
    ep.e0 = GridFunction<Scalar>::Zero(prob.n());
    ep.e1 = gc.c * pow(prob.lambda, -prob.r()) * phi / wnorm(phi, *prob.kernel);
    ep.c = gc.c;
    ep.tau = gc.tau;
    ep.constants = gc;
    ep.below_hat1 = prob.lambda < gc.lambda_hat1;
    ep.below_hat2 = prob.lambda < gc.lambda_hat2;
    return ep;
}

template <class Scalar>
Endpoints<Scalar> construct_endpoints(const Problem<Scalar>& prob, const GridFunction<Scalar>& phi) {
    return construct_endpoints(prob, phi, certify_constants(prob, phi));
}

struct MountainPassOptions {
    int segments = 20;          // P: the path has P+1 vertices
    int string_iter = 4000;
    double level_rtol = 1e-10;  // string stops once the level stalls at this relative rate
    int refine_iter = 50000;
    int hessian_every = 10;
    double collapse_eps = 1e-6;
};

template <class Scalar>
struct MountainPassResult {
    CriticalPoint<Scalar> point;
    std::vector<GridFunction<Scalar>> path;
    int string_iterations = 0;
    int refine_iterations = 0;
};

namespace detail {

// Redistributes interior vertices so that each segment carries the same
// energy-weighted length; segments near the top of the path get up to twice
// the vertex density.
template <class Scalar>
void reparametrize(std::vector<GridFunction<Scalar>>& path, const std::vector<Scalar>& E) {
    const std::size_t P = path.size() - 1;
    const Scalar emin = *std::min_element(E.begin(), E.end());
    const Scalar emax = *std::max_element(E.begin(), E.end());
    const Scalar spread = emax - emin;
    std::vector<Scalar> cum(P + 1, Scalar(0));
    for (std::size_t k = 1; k <= P; ++k) {
        const Scalar mid = (E[k] + E[k - 1]) / Scalar(2);
        const Scalar w = spread > Scalar(0) ? Scalar(1) + (mid - emin) / spread : Scalar(1);
        cum[k] = cum[k - 1] + w * (path[k] - path[k - 1]).norm();
    }
    std::vector<GridFunction<Scalar>> out(path.size());
    out.front() = path.front();
    out.back() = path.back();
    std::size_t seg = 1;
    for (std::size_t j = 1; j < P; ++j) {
        const Scalar target = cum[P] * Scalar(j) / Scalar(P);
        while (seg < P && cum[seg] < target) ++seg;
        const Scalar len = cum[seg] - cum[seg - 1];
        const Scalar t = len > Scalar(0) ? (target - cum[seg - 1]) / len : Scalar(0);
        out[j] = (Scalar(1) - t) * path[seg - 1] + t * path[seg];
    }
    path = std::move(out);
}

}  // namespace detail

/// Numerical mountain pass between e0 and e1.
///
/// An elastic path of P+1 vertices starts on the segment [e0, e1]. Every
/// interior vertex above the endpoint level takes a damped step along the
/// gradient component normal to the path (clipped to half the neighbouring
/// segment length), the path is re-parametrized, and the step is accepted
/// only if the path's max level does not increase. Once
/// the level stalls, the top vertex is driven to the saddle by a min-mode
/// flow: gradient flow with the component along the softest Hessian mode
/// reversed, which is stable at a saddle of index one.
template <class Scalar>
MountainPassResult<Scalar> mountain_pass(const Problem<Scalar>& prob, const GridFunction<Scalar>& e0,
                                         const GridFunction<Scalar>& e1, Scalar tol,
                                         const MountainPassOptions& opts = {}) {
    using std::abs;
    using std::max;
    const int P = opts.segments;
    if (P < 8) throw UsageError("mountain_pass: need at least 8 path segments");
    if (!(tol > Scalar(0))) throw UsageError("mountain_pass: need tol > 0");
    detail::require_same_size(e0.size(), prob.n(), "mountain_pass e0");
    detail::require_same_size(e1.size(), prob.n(), "mountain_pass e1");
    const Scalar span = (e1 - e0).norm();
    if (!(span > Scalar(0))) throw UsageError("mountain_pass: endpoints coincide");
    const Scalar h = prob.h();

    MountainPassResult<Scalar> out;
    std::vector<GridFunction<Scalar>> path(std::size_t(P) + 1);
    for (int k = 0; k <= P; ++k) path[std::size_t(k)] = e0 + (Scalar(k) / Scalar(P)) * (e1 - e0);

    auto energies = [&](const std::vector<GridFunction<Scalar>>& a) {
        std::vector<Scalar> E(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) E[k] = energy(a[k], prob);
        return E;
    };
    auto top = [&](const std::vector<Scalar>& E) {
        return std::size_t(std::max_element(E.begin() + 1, E.end() - 1) - E.begin());
    };

    std::vector<Scalar> E = energies(path);
    std::size_t kmax = top(E);
    Scalar level = E[kmax];
    const Scalar ends = max(E.front(), E.back());
    if (!(level > ends))
        throw SolverError("mountain_pass: the segment [e0, e1] does not rise above its endpoints",
                          path[kmax].template cast<double>(), 0);

    // step from the curvature scale at the initial top vertex
    Scalar lmax;
    {
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(hessian(path[kmax], prob), Eigen::EigenvaluesOnly);
        lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    Scalar step = Scalar(1) / lmax;
    const Scalar step_cap = step;
    out.point.trace.push_back(level);

    int stall = 0;
    int it = 0;
    for (; it < opts.string_iter && stall < 20; ++it) {
        std::vector<GridFunction<Scalar>> next = path;
        for (int k = 1; k < P; ++k) {
            const std::size_t kk = std::size_t(k);
            // vertices already below the endpoint level do not bear on the min-max level
            if (E[kk] <= ends) continue;
            GridFunction<Scalar> tangent = path[kk + 1] - path[kk - 1];
            tangent /= tangent.norm();
            GridFunction<Scalar> g = gradient(path[kk], prob);
            g -= g.dot(tangent) * tangent;
            GridFunction<Scalar> move = step * g;
            const Scalar room = Scalar(0.5) * std::min((path[kk + 1] - path[kk]).norm(), (path[kk] - path[kk - 1]).norm());
            if (move.norm() > room) move *= room / move.norm();
            next[kk] -= move;
        }
        std::vector<Scalar> En = energies(next);
        detail::reparametrize(next, En);
        En = energies(next);
        const std::size_t kn = top(En);
        if (En[kn] > level + Scalar(1e-14) * abs(level)) {
            step *= Scalar(0.5);
            if (step < Scalar(1e-12) * step_cap) break;
            continue;
        }
        stall = (level - En[kn]) <= Scalar(opts.level_rtol) * abs(level) ? stall + 1 : 0;
        path = std::move(next);
        E = std::move(En);
        kmax = kn;
        level = E[kmax];
        out.point.trace.push_back(level);
        step = std::min(step * Scalar(1.2), step_cap);
    }
    out.string_iterations = it;

    Scalar far = 0;
    for (int k = 1; k < P; ++k)
        far = max(far, std::min((path[std::size_t(k)] - e0).norm(), (path[std::size_t(k)] - e1).norm()));
    if (far < Scalar(opts.collapse_eps) * span)
        throw SolverError("mountain_pass: path collapsed onto its endpoints", path[kmax].template cast<double>(), it);

    // min-mode refinement from the top vertex
    GridFunction<Scalar> u = path[kmax];
    GridFunction<Scalar> soft;
    Scalar eta = Scalar(1) / lmax;
    Scalar res = std::numeric_limits<Scalar>::infinity();
    int r = 0;
    for (; r <= opts.refine_iter; ++r) {
        const GridFunction<Scalar> g = gradient(u, prob);
        res = residual_of(g, h);
        if (res <= tol) break;
        if (r % opts.hessian_every == 0) {
            Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(hessian(u, prob));
            GridFunction<Scalar> v = es.eigenvectors().col(0);
            if (soft.size() && v.dot(soft) < Scalar(0)) v = -v;
            soft = v;
            eta = Scalar(1) / es.eigenvalues().cwiseAbs().maxCoeff();
        }
        u -= eta * (g - Scalar(2) * g.dot(soft) * soft);
    }
    out.refine_iterations = r;
    if (!(res <= tol))
        throw SolverError("mountain_pass: saddle refinement did not reach tol (residual " +
                              std::to_string(double(res)) + ")",
                          u.template cast<double>(), it + r);

    const Scalar value = energy(u, prob);
    // The top vertex sits on the path near the saddle, so the critical level
    // must lie above the endpoints and close to the final path level.
    const Scalar slack = Scalar(5e-2) * (abs(level) + Scalar(1e-12));
    if (!(value > ends && value <= level + slack && value >= level - slack))
        throw SolverError("mountain_pass: refined point at level " + std::to_string(double(value)) +
                              " is inconsistent with the path level " + std::to_string(double(level)),
                          u.template cast<double>(), it + r);

    out.point.u = std::move(u);
    out.point.value = value;
    out.point.residual = res;
    out.point.iterations = it + r;
    out.point.path_value = level;
    out.point.tag = Tag::MountainPass;
    out.path = std::move(path);
    return out;
}

/// Lower bound on the energy over the ring ||u|| = tau lambda^-r.
template <class Scalar>
Scalar ring_floor(const Problem<Scalar>& prob, const GeometryConstants<Scalar>& gc) {
    using std::pow;
    const Scalar p = prob.p();
    return gc.ring_c1(p) * pow(gc.tau * pow(prob.lambda, -prob.r()), p);
}

template <class Scalar>
struct RingCheck {
    int samples = 0;
    int violations = 0;
    Scalar floor{};
    Scalar min_energy{};
};

/// Energy on `count` random points of the ring ||u|| = tau lambda^-r, half
/// smooth sine series with random signs and half positive bumps.
template <class Scalar>
RingCheck<Scalar> ring_check(const Problem<Scalar>& prob, const GeometryConstants<Scalar>& gc, int count,
                             std::uint64_t seed) {
    using std::pow;
    using std::sin;
    const Kernel<Scalar>& K = *prob.kernel;
    const Scalar radius = gc.tau * pow(prob.lambda, -prob.r());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Scalar pi = Scalar(3.14159265358979323846);

    RingCheck<Scalar> rc;
    rc.floor = ring_floor(prob, gc);
    rc.min_energy = std::numeric_limits<Scalar>::infinity();
    const Eigen::Index n = prob.n();
    for (int k = 0; k < count; ++k) {
        GridFunction<Scalar> u = GridFunction<Scalar>::Zero(n);
        const Vector<Scalar> x = (prob.grid.nodes.array() - prob.grid.a) / prob.grid.length();
        if (k % 2 == 0) {
            for (int m = 1; m <= 8; ++m) {
                const Scalar amp = Scalar(normal(rng)) / Scalar(m);
                for (Eigen::Index i = 0; i < n; ++i) u[i] += amp * sin(Scalar(m) * pi * x[i]);
            }
        } else {
            const Scalar centre = Scalar(0.2 + 0.6 * unif(rng));
            const Scalar width = Scalar(0.05 + 0.3 * unif(rng));
            for (Eigen::Index i = 0; i < n; ++i) {
                const Scalar z = (x[i] - centre) / width;
                u[i] = std::max(Scalar(0), Scalar(1) - z * z);
            }
        }
        if (!(u.cwiseAbs().maxCoeff() > Scalar(0))) u = prob.grid.dist;
        u *= radius / wnorm(u, K);
        const Scalar J = energy(u, prob);
        rc.min_energy = std::min(rc.min_energy, J);
        ++rc.samples;
        if (J < rc.floor) ++rc.violations;
    }
    return rc;
}

template <class Scalar>
struct ComparisonResult {
    bool hypothesis = false;  // <A(u) - A(v), (u - v)^+> <= 0
    bool conclusion = false;  // u <= v nodewise
    Scalar pairing{};
    Scalar max_excess{};      // max(u - v)
    bool holds() const { return !hypothesis || conclusion; }
};

/// Discrete comparison principle for A(w) = apply_flap(w)/p + h V Φ_p(w).
/// Requires V >= 0 at every node.
template <class Scalar>
ComparisonResult<Scalar> comparison_check(const GridFunction<Scalar>& u, const GridFunction<Scalar>& v,
                                          const Problem<Scalar>& prob) {
    detail::require_same_size(u.size(), v.size(), "comparison_check");
    detail::require_same_size(u.size(), prob.n(), "comparison_check");
    if (!prob.V.nonnegative()) throw ConfigError("comparison_check: needs V >= 0 at every node");
    const Scalar p = prob.p();
    auto action = [&](const GridFunction<Scalar>& w) {
        GridFunction<Scalar> a = apply_flap(w, *prob.kernel) / p;
        for (Eigen::Index i = 0; i < w.size(); ++i) a[i] += prob.h() * prob.V.values[i] * detail::signed_pow(w[i], p);
        return a;
    };
    const GridFunction<Scalar> phi = (u - v).cwiseMax(Scalar(0));
    ComparisonResult<Scalar> out;
    const GridFunction<Scalar> Au = action(u), Av = action(v);
    out.pairing = (Au - Av).dot(phi);
    const Scalar scale = (Au.cwiseAbs() + Av.cwiseAbs()).dot(phi.cwiseAbs()) + std::numeric_limits<Scalar>::min();
    out.hypothesis = out.pairing <= Scalar(1e-12) * scale;
    out.max_excess = (u - v).maxCoeff();
    out.conclusion = out.max_excess <= Scalar(1e-10);
    return out;
}

template <class Scalar>
struct PositivityReport {
    bool all_positive = false;
    Scalar min_value{};
    Vector<Scalar> quotient;  // u_i / d_i^s
};

template <class Scalar>
PositivityReport<Scalar> positivity_check(const GridFunction<Scalar>& u, const Grid<Scalar>& grid, Scalar s) {
    using std::pow;
    detail::require_same_size(u.size(), grid.n, "positivity_check");
    PositivityReport<Scalar> out;
    out.min_value = u.size() ? u.minCoeff() : Scalar(0);
    out.all_positive = u.size() > 0 && out.min_value > Scalar(0);
    out.quotient.resize(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out.quotient[i] = u[i] / pow(grid.dist[i], s);
    return out;
}

struct SecondSolutionOptions {
    int random_starts = 4;
    std::uint64_t seed = 777;
    DescendOptions descend;
};

/// Searches for a critical point distinct from `first` by descending from
/// beyond the mountain (1.5 u), from zero and small random starts when
/// f(0) != 0, and from rescaled or sign-flipped copies of `first`. When
/// f(0) = 0 the trivial solution is not accepted.
template <class Scalar>
std::optional<CriticalPoint<Scalar>> find_second_solution(const Problem<Scalar>& prob,
                                                          const CriticalPoint<Scalar>& first, Scalar tol,
                                                          const SecondSolutionOptions& opts = {}) {
    const Eigen::Index n = prob.n();
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Scalar amp = Scalar(1e-3) * std::max(first.u.template lpNorm<Eigen::Infinity>(), Scalar(1));

    std::vector<GridFunction<Scalar>> starts;
    starts.push_back(Scalar(1.5) * first.u);
    if (prob.nl.f0 != Scalar(0)) {
        starts.push_back(GridFunction<Scalar>::Zero(n));
        for (int k = 0; k < opts.random_starts; ++k) {
            GridFunction<Scalar> u(n);
            for (Eigen::Index i = 0; i < n; ++i) u[i] = amp * Scalar(unif(rng));
            starts.push_back(u);
        }
    }
    starts.push_back(-first.u);
    starts.push_back(Scalar(0.5) * first.u);
    starts.push_back(Scalar(0.9) * first.u);

    const GridFunction<Scalar> zero = GridFunction<Scalar>::Zero(n);
    for (const auto& u0 : starts) {
        try {
            CriticalPoint<Scalar> cp = descend(u0, prob, tol, opts.descend);
            if (!(residual_norm(cp.u, prob) <= tol)) continue;
            if (!distinct(first.u, cp.u)) continue;
            if (prob.nl.f0 == Scalar(0) && !distinct(cp.u, zero)) continue;
            return cp;
        } catch (const SolverError&) {
            continue;
        }
    }
    return std::nullopt;
}

}  // namespace fracmp
