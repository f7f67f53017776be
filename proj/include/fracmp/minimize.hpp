#pragma once

#include "fracmp/core.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace fracmp {

struct MinimizeOptions {
    double tol = 1e-8;
    int max_iter = 10000;
    int memory = 8;
    // Stop as diverged once the objective falls below this.
    double floor = -1e30;
    double armijo = 1e-4;
};

template <class Scalar>
struct MinimizeResult {
    Vector<Scalar> x;
    Scalar value{};
    Scalar residual{};
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    std::vector<Scalar> trace;
};

/// Limited-memory BFGS with backtracking Armijo search.
///
/// `objective(x, grad)` returns the value and writes the gradient.
/// `residual(grad)` maps a gradient to the stopping measure compared against
/// `opts.tol`. Accepted steps never increase the objective beyond a few ulps,
/// so `trace` is monotone up to rounding.
template <class Scalar, class Objective, class Residual>
MinimizeResult<Scalar> minimize_lbfgs(Vector<Scalar> x, Objective&& objective, Residual&& residual,
                                      const MinimizeOptions& opts) {
    using std::abs;
    using std::isfinite;
    const Eigen::Index n = x.size();
    MinimizeResult<Scalar> out;
    Vector<Scalar> g(n);
    Scalar fx = objective(x, g);
    out.trace.push_back(fx);

    std::deque<Vector<Scalar>> S, Y;
    std::deque<Scalar> rho;
    Vector<Scalar> gnew(n), xnew(n), d(n);
    int stalls = 0;

    for (int it = 0;; ++it) {
        out.iterations = it;
        const Scalar res = residual(g);
        if (res <= Scalar(opts.tol)) {
            out.converged = true;
            break;
        }
        if (it >= opts.max_iter || !isfinite(fx)) break;
        if (fx < Scalar(opts.floor)) {
            out.diverged = true;
            break;
        }

        // two-loop recursion
        d = -g;
        std::vector<Scalar> alpha(S.size());
        for (std::size_t k = S.size(); k-- > 0;) {
            alpha[k] = rho[k] * S[k].dot(d);
            d -= alpha[k] * Y[k];
        }
        if (!S.empty()) d *= S.back().dot(Y.back()) / Y.back().squaredNorm();
        for (std::size_t k = 0; k < S.size(); ++k) {
            const Scalar beta = rho[k] * Y[k].dot(d);
            d += (alpha[k] - beta) * S[k];
        }
        Scalar slope = g.dot(d);
        if (!(slope < Scalar(0))) {
            S.clear();
            Y.clear();
            rho.clear();
            d = -g;
            slope = -g.squaredNorm();
        }
        // first step of a fresh history is scaled to unit length in the infinity norm
        Scalar step = S.empty() ? Scalar(1) / std::max(Scalar(1), d.template lpNorm<Eigen::Infinity>()) : Scalar(1);

        bool accepted = false;
        Scalar fnew = fx;
        for (int ls = 0; ls < 60; ++ls) {
            xnew = x + step * d;
            fnew = objective(xnew, gnew);
            if (isfinite(fnew) && fnew <= fx + Scalar(opts.armijo) * step * slope) {
                accepted = true;
                break;
            }
            // Near a minimizer the decrease drops below rounding of fx; accept a
            // step that leaves the value flat while shrinking the gradient.
            const Scalar flat = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (abs(fx) + Scalar(1));
            if (isfinite(fnew) && fnew <= fx + flat && residual(gnew) < res) {
                accepted = true;
                break;
            }
            step *= Scalar(0.5);
        }
        if (!accepted) {
            if (++stalls > 3) break;
            S.clear();
            Y.clear();
            rho.clear();
            continue;
        }
        stalls = 0;
        const Vector<Scalar> s = xnew - x;
        const Vector<Scalar> y = gnew - g;
        const Scalar sy = s.dot(y);
        if (sy > Scalar(1e-14) * s.norm() * y.norm()) {
            S.push_back(s);
            Y.push_back(y);
            rho.push_back(Scalar(1) / sy);
            if (int(S.size()) > opts.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        x = xnew;
        g = gnew;
        fx = fnew;
        out.trace.push_back(fx);
    }
    out.x = std::move(x);
    out.value = fx;
    out.residual = residual(g);
    return out;
}

}  // namespace fracmp
