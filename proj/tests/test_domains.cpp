#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qdmae/domains.hpp"
#include "qdmae/rng.hpp"

using namespace qdmae;

TEST_CASE("clip keeps the interior and inverts outside") {
    CHECK(lp_clip(3.0) == 3.0);
    CHECK(lp_clip(5.12) == 5.12);
    CHECK(lp_clip(-5.12) == -5.12);
    CHECK(lp_clip(6.0) == doctest::Approx(5.12 / 6.0));
    CHECK(lp_clip(-10.0) == doctest::Approx(-0.512));
    CHECK(lp_clip_grad(0.3) == 1.0);
    CHECK(lp_clip_grad(8.0) == doctest::Approx(-5.12 / 64.0));
}

TEST_CASE("projection measures") {
    const auto domain = make_domain(DomainKind::LpSphere, 100);
    CHECK(domain->spec().measure_lower[0] == doctest::Approx(-256.0));
    CHECK(domain->spec().measure_upper[1] == doctest::Approx(256.0));

    const auto zero = domain->evaluate(Eigen::VectorXd::Zero(100), false);
    CHECK(zero.measures[0] == 0.0);
    CHECK(zero.measures[1] == 0.0);

    const auto corner = domain->evaluate(Eigen::VectorXd::Constant(100, 5.12), false);
    CHECK(corner.measures[0] == doctest::Approx(256.0));
    CHECK(corner.measures[1] == doctest::Approx(256.0));
}

TEST_CASE("sphere anchors") {
    const auto domain = make_domain(DomainKind::LpSphere, 20);
    const auto optimum = domain->evaluate(Eigen::VectorXd::Constant(20, 2.048), true);
    CHECK(optimum.objective == doctest::Approx(100.0));
    CHECK(optimum.objective_gradient->norm() == doctest::Approx(0.0));
    const auto worst = domain->evaluate(Eigen::VectorXd::Constant(20, -5.12), false);
    CHECK(worst.objective == doctest::Approx(0.0));
}

TEST_CASE("plateau is flat inside the box") {
    const auto domain = make_domain(DomainKind::LpPlateau, 10);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd theta(10);
        for (int d = 0; d < 10; ++d) theta[d] = -5.12 + 10.24 * rng.uniform();
        const auto eval = domain->evaluate(theta, true);
        CHECK(eval.objective == 100.0);
        CHECK(eval.objective_gradient->norm() == 0.0);
    }
    // One coordinate outside pays a quadratic penalty.
    Eigen::VectorXd outside = Eigen::VectorXd::Zero(10);
    outside[4] = 7.12;
    const auto eval = domain->evaluate(outside, false);
    CHECK(eval.raw_objective == doctest::Approx(4.0 / 10.0));
    CHECK(eval.objective == doctest::Approx(100.0 - 0.4));
}

TEST_CASE("rastrigin forms") {
    const auto standard = make_domain(DomainKind::LpRastrigin, 4);
    const auto optimum = standard->evaluate(Eigen::VectorXd::Constant(4, 2.048), false);
    CHECK(optimum.raw_objective == doctest::Approx(0.0));
    CHECK(optimum.objective == doctest::Approx(100.0));

    // The squared-cosine variant is a different function away from the optimum.
    const auto squared = make_domain(DomainKind::LpRastrigin, 4, true);
    const Eigen::VectorXd probe = Eigen::VectorXd::Constant(4, 1.0);
    CHECK(standard->evaluate(probe, false).raw_objective !=
          doctest::Approx(squared->evaluate(probe, false).raw_objective));
    CHECK(squared->evaluate(Eigen::VectorXd::Constant(4, 2.048), false).raw_objective ==
          doctest::Approx(0.0));
}

TEST_CASE("arm evaluation") {
    const auto domain = make_domain(DomainKind::ArmRepertoire, 12);

    SUBCASE("equal angles reach zero variance") {
        const auto eval = domain->evaluate(Eigen::VectorXd::Constant(12, 0.7), false);
        CHECK(eval.raw_objective == doctest::Approx(0.0));
        CHECK(eval.objective == doctest::Approx(100.0));
    }
    SUBCASE("straight arm ends at (n, 0)") {
        const auto eval = domain->evaluate(Eigen::VectorXd::Zero(12), false);
        CHECK(eval.measures[0] == doctest::Approx(12.0));
        CHECK(eval.measures[1] == doctest::Approx(0.0));
    }
    SUBCASE("high variance clamps to zero") {
        Eigen::VectorXd spread(12);
        for (int i = 0; i < 12; ++i) spread[i] = (i % 2 == 0) ? 2.0 : -2.0;
        const auto eval = domain->evaluate(spread, true);
        CHECK(eval.raw_objective > 1.0);
        CHECK(eval.objective == 0.0);
        CHECK(eval.objective_gradient->norm() == 0.0);
    }
    SUBCASE("right-angle elbow") {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
        theta[1] = std::numbers::pi / 2.0;
        const auto eval = make_domain(DomainKind::ArmRepertoire, 2)->evaluate(theta, false);
        CHECK(eval.measures[0] == doctest::Approx(1.0));
        CHECK(eval.measures[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("gradients match finite differences") {
    Rng rng(17);
    auto check = [&](const Domain& domain, const Eigen::VectorXd& theta) {
        const auto at = domain.evaluate(theta, true);
        REQUIRE(at.objective_gradient.has_value());
        REQUIRE(at.measure_jacobian.has_value());
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
            Eigen::VectorXd lo = theta, hi = theta;
            lo[i] -= h;
            hi[i] += h;
            const auto elo = domain.evaluate(lo, false);
            const auto ehi = domain.evaluate(hi, false);
            const double fd = (ehi.objective - elo.objective) / (2 * h);
            CHECK((*at.objective_gradient)[i] ==
                  doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
            for (int j = 0; j < 2; ++j) {
                const double fdm = (ehi.measures[j] - elo.measures[j]) / (2 * h);
                CHECK((*at.measure_jacobian)(j, i) ==
                      doctest::Approx(fdm).epsilon(1e-5).scale(std::max(1.0, std::abs(fdm))));
            }
        }
    };
    for (DomainKind kind :
         {DomainKind::LpSphere, DomainKind::LpRastrigin, DomainKind::LpPlateau}) {
        const auto domain = make_domain(kind, 8);
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::VectorXd theta(8);
            for (int i = 0; i < 8; ++i) {
                do {
                    theta[i] = -8.0 + 16.0 * rng.uniform();
                } while (std::abs(std::abs(theta[i]) - 5.12) < 1e-3);
            }
            check(*domain, theta);
        }
    }
    const auto arm = make_domain(DomainKind::ArmRepertoire, 6);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd theta =
            Eigen::VectorXd::Constant(6, rng.normal()) + 0.3 * rng.normal_vector(6);
        check(*arm, theta);
    }
}

TEST_CASE("transformed objectives stay in range over the documented boxes") {
    Rng rng(23);
    // Sampling boxes where the worst-case anchors hold: sphere and plateau
    // over [-5.12, 5.12] (plateau up to +-15.12), Rastrigin over
    // [-2.048, 5.12], arm over [-pi, pi].
    auto sample_and_check = [&](const Domain& domain, double lo, double hi, int reps) {
        const int n = domain.spec().dimension;
        for (int rep = 0; rep < reps; ++rep) {
            Eigen::VectorXd theta(n);
            for (int i = 0; i < n; ++i) theta[i] = lo + (hi - lo) * rng.uniform();
            const double f = domain.evaluate(theta, false).objective;
            CHECK(f >= 0.0);
            CHECK(f <= 100.0);
        }
    };
    sample_and_check(*make_domain(DomainKind::LpSphere, 10), -5.12, 5.12, 3000);
    sample_and_check(*make_domain(DomainKind::LpPlateau, 10), -15.12, 15.12, 3000);
    sample_and_check(*make_domain(DomainKind::LpRastrigin, 10), -2.048, 5.12, 3000);
    sample_and_check(*make_domain(DomainKind::ArmRepertoire, 10), -std::numbers::pi,
                     std::numbers::pi, 3000);
}

TEST_CASE("measures are bounded by the clip construction") {
    Rng rng(29);
    const auto domain = make_domain(DomainKind::LpSphere, 10);
    for (int rep = 0; rep < 2000; ++rep) {
        Eigen::VectorXd theta(10);
        for (int i = 0; i < 10; ++i) theta[i] = -200.0 + 400.0 * rng.uniform();
        const auto eval = domain->evaluate(theta, false);
        CHECK(std::abs(eval.measures[0]) <= 5.12 * 5 + 1e-12);
        CHECK(std::abs(eval.measures[1]) <= 5.12 * 5 + 1e-12);
    }
}

TEST_CASE("arm optimal coverage") {
    CHECK(arm_optimal_coverage(1) == 1.0);
    CHECK(100.0 * arm_optimal_coverage(100) == doctest::Approx(80.24).epsilon(1e-6));
    const double quarter_pi = std::numbers::pi / 4.0;
    CHECK(arm_optimal_coverage(2000) == doctest::Approx(quarter_pi).epsilon(0.005));
    // Refinement decreases toward the area limit (discretization noise aside).
    double previous = arm_optimal_coverage(10);
    for (int res : {50, 100, 400, 1000}) {
        const double now = arm_optimal_coverage(res);
        CHECK(now <= previous + 2.0 / (res * static_cast<double>(res)));
        CHECK(now >= quarter_pi);
        previous = now;
    }
}
