#include "fracmp/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

using namespace fracmp;

namespace {

Problem<double> instance(Eigen::Index n, double s, double p, double q, double f0, double V, double lambda) {
    auto g = build_grid(0.0, 1.0, n);
    auto K = std::make_shared<const Kernel<double>>(assemble_kernel(g, s, p));
    return make_problem(g, K, constant_potential(n, V), lambda, make_nonlinearity(q, f0, p, s));
}

}  // namespace

TEST_CASE("phi_p") {
    CHECK(phi_p(2.0, 3.0) == 4.0);
    CHECK(phi_p(-2.0, 3.0) == -4.0);
    CHECK(phi_p(0.0, 2.5) == 0.0);
    CHECK(phi_p(-1.7, 2.0) == -1.7);
    CHECK(phi_p(0.3, 2.5) == doctest::Approx(std::pow(0.3, 1.5)));
    double prev = phi_p(-3.0, 1.5);
    for (double x = -2.9; x < 3; x += 0.1) {
        const double cur = phi_p(x, 1.5);
        CHECK(cur > prev);
        CHECK(phi_p(-x, 1.5) == doctest::Approx(-cur));
        prev = cur;
    }
}

TEST_CASE("built-in nonlinearity") {
    const auto nl = make_nonlinearity(3.0, 1.0, 2.0, 0.4);
    CHECK(f_eval(0.0, nl) == 1.0);
    CHECK(f_eval(-1.0, nl) == 0.0);
    CHECK(f_eval(-2.0, nl) == 0.0);
    CHECK(f_eval(2.0, nl) == 9.0);
    CHECK(F_eval(0.0, nl) == 0.0);
    CHECK(F_eval(1.0, nl) == doctest::Approx(1.25));
    CHECK(F_eval(-1.0, nl) == doctest::Approx(-0.5));
    CHECK(F_eval(-5.0, nl) == doctest::Approx(-0.5));
    double minF = std::numeric_limits<double>::infinity();
    for (double x = -10; x <= 10; x += 1e-3) minF = std::min(minF, F_eval(x, nl));
    CHECK(minF == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("nonlinearity is continuous and F' = f") {
    for (double f0 : {0.0, 1.0, -0.5}) {
        const auto nl = make_nonlinearity(3.0, f0, 2.0, 0.4);
        CAPTURE(f0);
        for (double x : {-1.0, 0.0}) {
            CHECK(f_eval(x - 1e-12, nl) == doctest::Approx(f_eval(x, nl)).epsilon(1e-9));
            CHECK(f_eval(x + 1e-12, nl) == doctest::Approx(f_eval(x, nl)).epsilon(1e-9));
        }
        for (double x = -3.05; x < 3; x += 0.1) {
            const double e = 1e-6;
            CHECK((F_eval(x + e, nl) - F_eval(x - e, nl)) / (2 * e) == doctest::Approx(f_eval(x, nl)).epsilon(1e-7));
        }
        CHECK(F_eval(-1.5, nl) == F_eval(-7.0, nl));
    }
}

TEST_CASE("exponent window and defaults") {
    CHECK(critical_exponent(2.0, 0.4) == doctest::Approx(10.0));
    CHECK(default_theta(3.0, 2.0) == doctest::Approx(3.8));
    CHECK_THROWS_AS(make_nonlinearity(9.5, 0.0, 2.0, 0.4), HypothesisError);
    CHECK_THROWS_AS(make_nonlinearity(9.0, 0.0, 2.0, 0.4), HypothesisError);
    CHECK_THROWS_AS(make_nonlinearity(1.0, 0.0, 2.0, 0.4), HypothesisError);
    CHECK_THROWS_AS(make_nonlinearity(0.5, 0.0, 2.0, 0.4), HypothesisError);
    CHECK_NOTHROW(make_nonlinearity(8.9, 0.0, 2.0, 0.4));
    CHECK_NOTHROW(make_nonlinearity(1.1, 0.0, 2.0, 0.4));
}

TEST_CASE("validate_h1") {
    SUBCASE("f0 = 0 sits on both envelopes") {
        const auto nl = make_nonlinearity(3.0, 0.0, 2.0, 0.4);
        CHECK(nl.A == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(nl.B == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("f0 = 1") {
        const auto nl = make_nonlinearity(3.0, 1.0, 2.0, 0.4);
        CHECK(nl.A == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(nl.B == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("envelope holds on a denser grid") {
        for (double f0 : {0.0, 1.0, -0.5, 2.0}) {
            const auto nl = make_nonlinearity(3.0, f0, 2.0, 0.4);
            for (double lx = -6; lx <= 6; lx += 0.0037) {
                const double x = std::pow(10.0, lx), xq = std::pow(x, 3.0), fx = f_eval(x, nl);
                CHECK(nl.A * (xq - 1) <= fx * (1 + 1e-9) + 1e-12);
                CHECK(fx <= nl.B * (xq + 1) * (1 + 1e-9));
            }
        }
    }
    SUBCASE("semipositone limit") {
        CHECK_THROWS_AS(make_nonlinearity(3.0, -1.0, 2.0, 0.4), HypothesisError);
        CHECK_THROWS_AS(make_nonlinearity(3.0, -1.5, 2.0, 0.4), HypothesisError);
        const auto nl = make_nonlinearity(3.0, -0.5, 2.0, 0.4);
        // A (s^3 - 1) <= s^3 - 1/2 holds for every A in [1/2, 1]
        CHECK(nl.A == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("validate_ar") {
    SUBCASE("exact cancellation at theta = q + 1, f0 = 0") {
        const auto nl = make_nonlinearity(3.0, 0.0, 2.0, 0.4, std::optional<double>(4.0));
        CHECK(nl.K == doctest::Approx(0.0));
    }
    SUBCASE("q = 3, f0 = 1, theta = 3 against a dense grid") {
        const auto nl = make_nonlinearity(3.0, 1.0, 2.0, 0.4, std::optional<double>(3.0));
        // independent: s f - 3F written out per branch
        double ref = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 100000; ++k) {
            const double x = -2 + 52.0 * k / 100000;
            double d;
            if (x >= 0) d = x * (x * x * x + 1) - 3 * (x * x * x * x / 4 + x);
            else if (x >= -1) d = x * (1 + x) - 3 * (x + x * x / 2);
            else d = 1.5;
            ref = std::min(ref, d);
        }
        CHECK(nl.K == doctest::Approx(ref).epsilon(1e-12));
        CHECK(nl.K == doctest::Approx(-1.88988).epsilon(1e-5));
    }
    SUBCASE("deficit bounded by K at the samples") {
        for (double f0 : {0.0, 1.0, -0.5}) {
            const auto nl = make_nonlinearity(3.0, f0, 2.0, 0.4);
            for (double x = -2; x <= 50; x += 0.01)
                CHECK(x * f_eval(x, nl) - nl.theta * F_eval(x, nl) - nl.K >= -1e-9 * (1 + std::pow(std::abs(x), 4)));
            CHECK(nl.min_sf <= 0.0);
        }
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(make_nonlinearity(3.0, 0.0, 2.0, 0.4, std::optional<double>(5.0)), HypothesisError);
        CHECK_THROWS_AS(make_nonlinearity(3.0, 1.0, 2.0, 0.4, std::optional<double>(4.5)), HypothesisError);
        CHECK_THROWS_AS(make_nonlinearity(3.0, 0.0, 2.0, 0.4, std::optional<double>(2.0)), HypothesisError);
        CHECK_THROWS_AS(make_nonlinearity(3.0, 0.0, 2.0, 0.4, std::optional<double>(1.5)), HypothesisError);
        // s f - (q+1) F = -(q+1) f0 s when f0 > 0: unbounded below
        CHECK_THROWS_AS(make_nonlinearity(3.0, 1.0, 2.0, 0.4, std::optional<double>(4.0)), HypothesisError);
    }
}

TEST_CASE("primitive bounds") {
    for (double f0 : {0.0, 1.0, -0.5}) {
        const auto nl = make_nonlinearity(3.0, f0, 2.0, 0.4);
        const auto pb = primitive_bounds(nl);
        CAPTURE(f0);
        CHECK(pb.A1 > 0);
        CHECK(pb.B1 > 0);
        CHECK(pb.C1 >= 0);
        for (double x = -20; x <= 20; x += 0.01) {
            CHECK(F_eval(x, nl) <= pb.B1 * (std::pow(std::abs(x), 4) + 1) * (1 + 1e-9));
            if (x >= 0) CHECK(F_eval(x, nl) >= pb.A1 * (std::pow(x, 4) - pb.C1) - 1e-9 * (1 + std::pow(x, 4)));
        }
    }
    CHECK(primitive_bounds(make_nonlinearity(3.0, 1.0, 2.0, 0.4)).C1 == 0.0);
}

TEST_CASE("potential") {
    Potential<double> V{Eigen::Vector3d(0.5, -2.0, 1.0)};
    CHECK(V.cV() == 2.0);
    CHECK(V.sup() == 2.0);
    CHECK_FALSE(V.nonnegative());
    CHECK(constant_potential<double>(4, 0.25).cV() == 0.0);
    CHECK(constant_potential<double>(4, 0.25).nonnegative());
}

TEST_CASE("problem construction") {
    auto g = build_grid(0.0, 1.0, 10);
    auto K = std::make_shared<const Kernel<double>>(assemble_kernel(g, 0.4, 2.0));
    const auto nl = make_nonlinearity(3.0, 1.0, 2.0, 0.4);
    CHECK_THROWS_AS(make_problem(g, K, constant_potential<double>(10, 0.0), 0.0, nl), ConfigError);
    CHECK_THROWS_AS(make_problem(g, K, constant_potential<double>(9, 0.0), 1.0, nl), UsageError);
    CHECK_THROWS_AS(make_problem(g, std::shared_ptr<const Kernel<double>>{}, constant_potential<double>(10, 0.0), 1.0, nl),
                    UsageError);
    const auto prob = make_problem(g, K, constant_potential<double>(10, 0.0), 1.0, nl);
    CHECK(prob.r() == doctest::Approx(0.5));
    CHECK(with_lambda(prob, 3.0).lambda == 3.0);
    CHECK_THROWS_AS(with_lambda(prob, -1.0), ConfigError);
}

TEST_CASE("energy") {
    const auto prob = instance(100, 0.4, 2.0, 3.0, 1.0, 0.5, 1.0);
    SUBCASE("zero") { CHECK(energy(Eigen::VectorXd(Eigen::VectorXd::Zero(100)), prob) == 0.0); }
    SUBCASE("lambda = 0, V = 0 reduces to S/p") {
        const auto p0 = instance(30, 0.3, 2.5, 3.0, 1.0, 0.0, 1.0);
        Problem<double> q = p0;
        q.lambda = 0;
        const Eigen::VectorXd u = oracle::random_vector(30, 4);
        CHECK(energy(u, q) == doctest::Approx(seminorm_p(u, *q.kernel) / 2.5).epsilon(1e-14));
    }
    SUBCASE("independent summation") {
        const Eigen::VectorXd u = oracle::random_vector(100, 8, -1.5, 2.0);
        const auto& K = *prob.kernel;
        const double h = prob.h();
        // full double sum over ordered pairs, every term separately
        double pair = 0;
        for (Eigen::Index i = 0; i < 100; ++i)
            for (Eigen::Index j = 0; j < 100; ++j)
                if (i != j) pair += K.weights(i, j) * (u[i] - u[j]) * (u[i] - u[j]);
        double tail = 0, pot = 0, prim = 0;
        for (Eigen::Index i = 0; i < 100; ++i) {
            tail += 2 * h * K.tail[i] * u[i] * u[i];
            pot += h * 0.5 * u[i] * u[i];
            const double x = u[i];
            prim += h * (x >= 0 ? x * x * x * x / 4 + x : x >= -1 ? x + x * x / 2 : -0.5);
        }
        const double ref = (pair + tail) / 2 + pot / 2 - prim;
        CHECK(energy(u, prob) == doctest::Approx(ref).epsilon(1e-10));
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(energy(Eigen::VectorXd(Eigen::VectorXd::Zero(99)), prob), UsageError);
        CHECK_THROWS_AS(gradient(Eigen::VectorXd(Eigen::VectorXd::Zero(99)), prob), UsageError);
    }
}

TEST_CASE("gradient") {
    SUBCASE("at zero") {
        const auto prob = instance(50, 0.4, 2.0, 3.0, 1.0, 0.7, 2.5);
        const Eigen::VectorXd g = gradient(Eigen::VectorXd(Eigen::VectorXd::Zero(50)), prob);
        for (Eigen::Index i = 0; i < 50; ++i) CHECK(g[i] == doctest::Approx(-2.5 * prob.h() * 1.0));
    }
    SUBCASE("central differences") {
        for (double p : {2.0, 2.5, 3.0}) {
            const auto prob = instance(100, p == 2.0 ? 0.4 : 0.3, p, 3.0, 1.0, 0.25, 1.0);
            double worst = 0;
            for (unsigned k = 0; k < 5; ++k) {
                const Eigen::VectorXd u = oracle::random_vector(100, 50 + k, -1.5, 1.5);
                const Eigen::VectorXd fd =
                    oracle::fd_gradient([&](const Eigen::VectorXd& v) { return energy(v, prob); }, u, 1e-4);
                const Eigen::VectorXd g = gradient(u, prob);
                worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff());
            }
            CAPTURE(p);
            CHECK(worst <= (p == 2.0 ? 1e-5 : 1e-3));
        }
    }
    SUBCASE("directional derivatives") {
        const auto prob = instance(60, 0.3, 2.5, 3.0, -0.5, 0.25, 1.3);
        for (unsigned k = 0; k < 10; ++k) {
            const Eigen::VectorXd u = oracle::random_vector(60, 200 + k, -1.5, 1.5);
            const Eigen::VectorXd g = gradient(u, prob);
            for (unsigned d = 0; d < 10; ++d) {
                const Eigen::VectorXd dir = oracle::random_vector(60, 1000 + 10 * k + d);
                const double e = 1e-5;
                const double fd = (energy(Eigen::VectorXd(u + e * dir), prob) - energy(Eigen::VectorXd(u - e * dir), prob)) / (2 * e);
                CHECK(g.dot(dir) == doctest::Approx(fd).epsilon(1e-6).scale(g.norm() * dir.norm()));
            }
        }
    }
    SUBCASE("chain rule along rays") {
        const auto prob = instance(60, 0.4, 2.0, 3.0, 1.0, 0.0, 1.0);
        const Eigen::VectorXd u = oracle::random_vector(60, 17);
        const double e = 1e-5;
        const double dJ = (energy(Eigen::VectorXd((1 + e) * u), prob) - energy(Eigen::VectorXd((1 - e) * u), prob)) / (2 * e);
        CHECK(dJ == doctest::Approx(gradient(u, prob).dot(u)).epsilon(1e-8));
    }
}

TEST_CASE("hessian") {
    for (double p : {2.0, 3.0, 1.5}) {
        const double s = p == 2.0 ? 0.4 : 0.3;
        const auto prob = instance(30, s, p, p < 2 ? 1.2 : 3.0, 1.0, 0.25, 1.0);
        const Eigen::VectorXd u = oracle::random_vector(30, 9, -1.5, 1.5);
        const Eigen::MatrixXd H = hessian(u, prob);
        CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
        Eigen::MatrixXd fd(30, 30);
        for (Eigen::Index k = 0; k < 30; ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(30);
            e[k] = 1e-6;
            fd.col(k) = (gradient(Eigen::VectorXd(u + e), prob) - gradient(Eigen::VectorXd(u - e), prob)) / 2e-6;
        }
        CAPTURE(p);
        CHECK((H - fd).cwiseAbs().maxCoeff() <= 1e-5 * H.cwiseAbs().maxCoeff());
        const Eigen::VectorXd v = oracle::random_vector(30, 10);
        CHECK((hessian_times(u, v, prob) - H * v).norm() <= 1e-5 * (H * v).norm());
    }
}
