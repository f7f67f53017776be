#include "fracmp/eigenpair.hpp"
#include "fracmp/solve.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>

using namespace fracmp;

namespace {

struct Setup {
    Grid<double> grid;
    std::shared_ptr<const Kernel<double>> K;
    EigenResult<double> eig;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup out{build_grid(0.0, 1.0, 60), nullptr, {}};
        out.K = std::make_shared<const Kernel<double>>(assemble_kernel(out.grid, 0.4, 2.0));
        out.eig = first_eigenpair(*out.K, out.grid);
        return out;
    }();
    return s;
}

Problem<double> problem(double lambda, double f0, double V = 0.0) {
    const Setup& s = setup();
    return make_problem(s.grid, s.K, constant_potential(s.grid.n, V), lambda, make_nonlinearity(3.0, f0, 2.0, 0.4));
}

GeometryConstants<double> constants(double f0, double V = 0.0) {
    return certify_constants(problem(1.0, f0, V), setup().eig.phi1);
}

}  // namespace

TEST_CASE("distinct") {
    const Eigen::VectorXd u = oracle::random_vector(60, 1);
    const Eigen::VectorXd v = oracle::random_vector(60, 2);
    CHECK_FALSE(distinct(u, u));
    CHECK(distinct(u, v) == distinct(v, u));
    CHECK(distinct(u, v));
    CHECK_FALSE(distinct(u, Eigen::VectorXd(u + 1e-12 * v)));
}

TEST_CASE("descend") {
    SUBCASE("zero is a critical point when f(0) = 0") {
        const auto prob = problem(0.5, 0.0);
        const auto cp = descend(Eigen::VectorXd(Eigen::VectorXd::Zero(60)), prob, 1e-8);
        CHECK(cp.u.cwiseAbs().maxCoeff() == 0.0);
        CHECK(cp.value == 0.0);
        CHECK(cp.tag == Tag::LocalMin);
        CHECK(classify(cp, prob) == Tag::LocalMin);
    }
    SUBCASE("monotone descent with f(0) > 0") {
        const auto prob = problem(0.5, 1.0, 0.25);
        const auto t = torsion_solve(*setup().K, setup().grid, constant_potential(60, 0.0));
        const Eigen::VectorXd u0 = 1e-2 * t.u;
        const auto cp = descend(u0, prob, 1e-8);
        CHECK(cp.residual <= 1e-8);
        CHECK(residual_norm(cp.u, prob) <= 1e-8);
        CHECK(cp.value <= energy(u0, prob));
        for (std::size_t k = 1; k < cp.trace.size(); ++k) CHECK(cp.trace[k] <= cp.trace[k - 1] + 1e-13 * std::abs(cp.trace[k - 1]));
        CHECK(cp.tag == Tag::LocalMin);
        CHECK(positivity_check(cp.u, setup().grid, 0.4).all_positive);
    }
    CHECK_THROWS_AS(descend(Eigen::VectorXd(Eigen::VectorXd::Zero(60)), problem(0.5, 0.0), 0.0), UsageError);
}

TEST_CASE("endpoints") {
    const auto gc = constants(1.0);
    const double l3 = gc.lambda3();
    REQUIRE(std::isfinite(l3));
    const auto prob = problem(l3 / 2, 1.0);
    const auto ep = construct_endpoints(prob, setup().eig.phi1, gc);
    CHECK(ep.in_window());
    CHECK(energy(ep.e1, prob) <= 0);
    CHECK(ep.e0.cwiseAbs().maxCoeff() == 0.0);
    const double r = prob.r();
    CHECK(wnorm(ep.e1, *setup().K) == doctest::Approx(gc.c * std::pow(l3 / 2, -r)).epsilon(1e-12));

    // halving lambda^r doubles the endpoint
    const auto ep2 = construct_endpoints(problem(l3 / 2 / std::pow(2.0, 1 / r), 1.0), setup().eig.phi1, gc);
    CHECK((ep2.e1 - 2 * ep.e1).cwiseAbs().maxCoeff() <= 1e-12 * ep2.e1.maxCoeff());

    CHECK_FALSE(construct_endpoints(problem(2 * l3, 1.0), setup().eig.phi1, gc).in_window());
    Eigen::VectorXd bad = setup().eig.phi1;
    bad[3] = -1e-3;
    CHECK_THROWS_AS(construct_endpoints(prob, bad, gc), UsageError);
}

TEST_CASE("ring bound") {
    for (double f0 : {0.0, 1.0}) {
        const auto gc = constants(f0, 0.25);
        const double l3 = std::isfinite(gc.lambda3()) ? gc.lambda3() : gc.lambda_hat2;
        for (double frac : {0.5, 0.1}) {
            const auto prob = problem(frac * l3, f0, 0.25);
            const auto rc = ring_check(prob, gc, 30, 11);
            CAPTURE(f0);
            CAPTURE(frac);
            CHECK(rc.samples == 30);
            CHECK(rc.violations == 0);
            CHECK(rc.min_energy >= ring_floor(prob, gc));
        }
    }
}

TEST_CASE("mountain pass") {
    const auto gc = constants(1.0);
    const auto prob = problem(gc.lambda3() / 2, 1.0);
    const auto ep = construct_endpoints(prob, setup().eig.phi1, gc);
    const auto mp = mountain_pass(prob, ep.e0, ep.e1, 1e-8);
    const auto& cp = mp.point;
    CHECK(cp.residual <= 1e-8);
    CHECK(residual_norm(cp.u, prob) <= 1e-8);
    CHECK(cp.value >= ring_floor(prob, gc));
    CHECK(cp.tag == Tag::MountainPass);
    CHECK(classify(cp, prob) != Tag::LocalMin);
    for (std::size_t k = 1; k < cp.trace.size(); ++k) CHECK(cp.trace[k] <= cp.trace[k - 1] + 1e-13 * std::abs(cp.trace[k - 1]));
    CHECK(mp.path.size() == 21);
    CHECK(positivity_check(cp.u, setup().grid, 0.4).all_positive);

    MountainPassOptions few;
    few.segments = 7;
    CHECK_THROWS_AS(mountain_pass(prob, ep.e0, ep.e1, 1e-8, few), UsageError);
    CHECK_THROWS_AS(mountain_pass(prob, ep.e0, ep.e0, 1e-8), UsageError);
}

TEST_CASE("comparison principle") {
    const auto prob = problem(1.0, 1.0, 0.5);
    const auto t = torsion_solve(*setup().K, setup().grid, constant_potential(60, 0.5));
    const auto same = comparison_check(t.u, t.u, prob);
    CHECK(same.hypothesis);
    CHECK(same.conclusion);
    const auto scaled = comparison_check(Eigen::VectorXd(0.5 * t.u), t.u, prob);
    CHECK(scaled.hypothesis);
    CHECK(scaled.conclusion);
    // a tall bump over v breaks both
    Eigen::VectorXd bump = t.u;
    for (Eigen::Index i = 25; i < 35; ++i) bump[i] += 1.0;
    const auto up = comparison_check(bump, t.u, prob);
    CHECK_FALSE(up.hypothesis);
    CHECK_FALSE(up.conclusion);
    CHECK_THROWS_AS(comparison_check(t.u, t.u, problem(1.0, 1.0, -0.5)), ConfigError);
}

TEST_CASE("positivity report") {
    const auto& g = setup().grid;
    const auto t = torsion_solve(*setup().K, g, constant_potential(60, 0.0));
    const auto rep = positivity_check(t.u, g, 0.4);
    CHECK(rep.all_positive);
    CHECK(rep.min_value > 0);
    CHECK(rep.quotient[0] == doctest::Approx(t.u[0] / std::pow(g.h, 0.4)));
    const auto z = positivity_check(Eigen::VectorXd(Eigen::VectorXd::Zero(60)), g, 0.4);
    CHECK_FALSE(z.all_positive);
    CHECK(z.min_value == 0.0);
}

TEST_CASE("second solution") {
    SUBCASE("f(0) > 0 gives a second, distinct positive solution") {
        const auto gc = constants(1.0);
        const auto prob = problem(gc.lambda3() / 4, 1.0);
        const auto ep = construct_endpoints(prob, setup().eig.phi1, gc);
        const auto mp = mountain_pass(prob, ep.e0, ep.e1, 1e-8);
        const auto second = find_second_solution(prob, mp.point, 1e-8);
        REQUIRE(second);
        CHECK(distinct(second->u, mp.point.u));
        CHECK(residual_norm(second->u, prob) <= 1e-8);
        CHECK(second->tag == Tag::LocalMin);
        CHECK(second->value < mp.point.value);
        CHECK(positivity_check(second->u, setup().grid, 0.4).all_positive);
    }
    SUBCASE("f(0) = 0: the origin is a local minimum and the mountain pass is nontrivial") {
        const auto gc = constants(0.0);
        const auto prob = problem(gc.lambda_hat2 / 2, 0.0);
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(60);
        CriticalPoint<double> origin;
        origin.u = zero;
        CHECK(classify(origin, prob) == Tag::LocalMin);
        const auto ep = construct_endpoints(prob, setup().eig.phi1, gc);
        const auto mp = mountain_pass(prob, ep.e0, ep.e1, 1e-8);
        CHECK(distinct(mp.point.u, zero));
        CHECK(mp.point.value > 0);
        CHECK(residual_norm(mp.point.u, prob) <= 1e-8);
    }
}
