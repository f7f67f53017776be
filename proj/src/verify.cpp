#include "fracmp/verify.hpp"

#include "fracmp/io.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace fracmp {

double gradient_check(const Problem<double>& prob, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.5, 1.5);
    const Eigen::Index n = prob.n();
    double worst = 0;
    for (int k = 0; k < samples; ++k) {
        Eigen::VectorXd u(n);
        for (Eigen::Index i = 0; i < n; ++i) u[i] = unif(rng);
        const Eigen::VectorXd g = gradient(u, prob);
        Eigen::VectorXd fd(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double eps = 1e-4 * std::max(1.0, std::abs(u[i]));
            Eigen::VectorXd up = u, dn = u;
            up[i] += eps;
            dn[i] -= eps;
            fd[i] = (energy(up, prob) - energy(dn, prob)) / (2 * eps);
        }
        worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / g.lpNorm<Eigen::Infinity>());
    }
    return worst;
}

namespace {

std::string fmt(double x) {
    std::ostringstream o;
    o.precision(6);
    o << x;
    return o.str();
}

}  // namespace

std::vector<CheckResult> verify(const Instance& inst) {
    const Config& cfg = inst.cfg;
    const Kernel<double>& K = *inst.kernel;
    const Grid<double>& grid = inst.grid;
    const double p = cfg.p;
    std::vector<CheckResult> out;

    auto run = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
        CheckResult c{name, false, {}};
        try {
            auto [ok, detail] = body();
            c.passed = ok;
            c.detail = std::move(detail);
        } catch (const std::exception& e) {
            c.detail = std::string("error: ") + e.what();
        }
        out.push_back(std::move(c));
    };

    std::mt19937_64 rng(derive_seed(cfg.seed, 1000));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd probe(grid.n);
    for (Eigen::Index i = 0; i < grid.n; ++i) probe[i] = normal(rng);

    run("seminorm.homogeneity", [&] {
        const double a = seminorm_p(Eigen::VectorXd(2.0 * probe), K), b = std::pow(2.0, p) * seminorm_p(probe, K);
        const double err = std::abs(a - b) / b;
        return std::pair{err <= 1e-12, "rel err " + fmt(err)};
    });
    run("seminorm.reflection", [&] {
        const double a = seminorm_p(reflect(probe), K), b = seminorm_p(probe, K);
        const double err = std::abs(a - b) / b;
        return std::pair{err <= 1e-12, "rel err " + fmt(err)};
    });
    run("operator.pairing", [&] {
        const double a = apply_flap(probe, K).dot(probe), b = p * seminorm_p(probe, K);
        const double err = std::abs(a - b) / b;
        return std::pair{err <= 1e-10, "<A u, u> vs p S(u), rel err " + fmt(err)};
    });
    run("gradient.finite_difference", [&] {
        const double err = gradient_check(inst.problem(1.0), 3, derive_seed(cfg.seed, 1001));
        const double tol = p == 2.0 ? 1e-5 : 1e-3;
        return std::pair{err <= tol, "max rel err " + fmt(err) + " (tol " + fmt(tol) + ")"};
    });
    run("eigen.defect", [&] {
        const bool nonneg = inst.eigen.phi1.minCoeff() >= 0;
        return std::pair{nonneg && inst.eigen.residual <= cfg.tol_eigen,
                         "lambda1 " + fmt(inst.eigen.lambda1) + ", defect " + fmt(inst.eigen.residual) +
                             (nonneg ? ", phi1 >= 0" : ", phi1 has negative nodes")};
    });
    run("eigen.second_order", [&] {
        const double l1 = inst.eigen.lambda1;
        double worst = std::numeric_limits<double>::infinity();
        for (double eps : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
            const Eigen::VectorXd v = inst.eigen.phi1 + eps * probe / wnorm(probe, K);
            worst = std::min(worst, (rayleigh(v, K, grid) - l1) / l1);
        }
        return std::pair{worst >= -1e-7, "min (R - lambda1)/lambda1 = " + fmt(worst)};
    });
    if (p == 2.0)
        run("eigen.inverse_power", [&] {
            const auto lin = first_eigenpair_linear(K, grid);
            const double err = std::abs(lin.lambda1 - inst.eigen.lambda1) / lin.lambda1;
            return std::pair{err <= 1e-6, "rel diff " + fmt(err)};
        });

    std::optional<TorsionResult<double>> torsion;
    run("torsion.positive", [&] {
        TorsionOptions to;
        to.tol = cfg.tol_torsion;
        to.cap_factor = cfg.torsion_cap_factor;
        torsion = torsion_solve(K, grid, inst.V, to, 1.0, std::optional<double>(inst.eigen.lambda1));
        bool monotone = true;
        for (std::size_t k = 1; k < torsion->trace.size(); ++k)
            monotone = monotone && torsion->trace[k] <= torsion->trace[k - 1] + 1e-12 * std::abs(torsion->trace[k - 1]);
        return std::pair{torsion->positive && monotone, "min " + fmt(torsion->u.minCoeff()) + ", residual " +
                                                            fmt(torsion->residual) +
                                                            (monotone ? ", monotone" : ", energy increased")};
    });
    if (inst.V.nonnegative())
        run("comparison.scaled", [&] {
            if (!torsion) throw SolverError("no torsion solution", {}, 0);
            const auto cmp = comparison_check(Eigen::VectorXd(0.5 * torsion->u), torsion->u, inst.problem(1.0));
            return std::pair{cmp.hypothesis && cmp.conclusion, "pairing " + fmt(cmp.pairing)};
        });

    std::optional<GeometryConstants<double>> gc;
    run("geometry.constants", [&] {
        gc = instance_constants(inst);
        return std::pair{gc->lambda3() > 0, "c " + fmt(gc->c) + ", tau " + fmt(gc->tau) + ", lambda_hat1 " +
                                                fmt(gc->lambda_hat1) + ", lambda_hat2 " + fmt(gc->lambda_hat2)};
    });
    if (gc && std::isfinite(gc->lambda3())) {
        const Problem<double> half = inst.problem(gc->lambda3() / 2);
        run("geometry.endpoint", [&] {
            const auto ep = construct_endpoints(half, inst.eigen.phi1, *gc);
            const double J = energy(ep.e1, half);
            return std::pair{J <= 0, "J(e1) = " + fmt(J) + " at lambda3/2"};
        });
        run("geometry.ring", [&] {
            const auto rc = ring_check(half, *gc, cfg.ring_samples, derive_seed(cfg.seed, 1002));
            return std::pair{rc.violations == 0, std::to_string(rc.violations) + "/" + std::to_string(rc.samples) +
                                                     " below floor " + fmt(rc.floor) + ", min " + fmt(rc.min_energy)};
        });
    }

    if (gc) {
        run("solve.first_lambda", [&] {
            const double l3 = gc->lambda3();
            const auto lambdas = lambda_list(cfg, std::isfinite(l3) ? l3 : 1.0);
            const auto so = solve_at(inst, *gc, lambdas.front(), derive_seed(cfg.seed, 0));
            const bool ok = so.mountain.residual <= cfg.tol_mp && so.mountain.value > std::max(0.0, so.e1_energy);
            return std::pair{ok, "lambda " + fmt(so.lambda) + ", level " + fmt(so.mountain.value) + ", residual " +
                                     fmt(so.mountain.residual) + ", solutions " + std::to_string(so.distinct_count) +
                                     (so.positive ? ", positive" : ", not all positive")};
        });
    }
    return out;
}

std::vector<CheckResult> verify(const Config& cfg) { return verify(build_instance(cfg)); }

}  // namespace fracmp
