#include "welsch/optimizer.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "welsch/errors.hpp"
#include "welsch/estimators.hpp"
#include "welsch/loss.hpp"
#include "test_support.hpp"

namespace welsch {
namespace {

Objective quadratic_around(const Eigen::VectorXd& b) {
    return [b](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad = x - b;
        return 0.5 * (x - b).squaredNorm();
    };
}

Objective rosenbrock() {
    return [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        grad.resize(2);
        grad[0] = -2.0 * a - 400.0 * x[0] * b;
        grad[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
}

TEST(Optimizer, QuadraticConvergesToUniqueMinimum) {
    Eigen::VectorXd b(2);
    b << 1.0, 2.0;
    OptimizerConfig cfg;
    const MinimizeResult res = minimize(quadratic_around(b), Eigen::VectorXd::Zero(2), cfg);
    EXPECT_EQ(res.trace.status, TerminationStatus::converged_grad);
    EXPECT_LT((res.x - b).norm(), 1e-7);
    EXPECT_LE(res.trace.entries.back().grad_norm, cfg.grad_tol);
}

TEST(Optimizer, RosenbrockFromStandardStart) {
    OptimizerConfig cfg;
    cfg.memory = 10;
    Eigen::VectorXd init(2);
    init << -1.2, 1.0;
    const MinimizeResult res = minimize(rosenbrock(), init, cfg);
    Eigen::VectorXd target(2);
    target << 1.0, 1.0;
    EXPECT_LT((res.x - target).norm(), 1e-6);
}

TEST(Optimizer, WelschFixtureMatchesDenseGridSearch) {
    // 5-point fixture, p = 2, init inside the quadratic-like region.
    Dataset data;
    data.X.resize(5, 2);
    data.X << 1.0, 0.2, -0.5, 1.0, 0.3, -1.2, 1.5, 0.4, -0.7, -0.9;
    Eigen::VectorXd beta_star(2);
    beta_star << 0.8, -0.4;
    Eigen::VectorXd noise(5);
    noise << 0.1, -0.2, 0.05, 0.15, -0.1;
    data.y = data.X * beta_star + noise;

    const LossSpec loss = LossSpec::welsch(1.0);
    OptimizerConfig cfg;
    cfg.grad_tol = 1e-9;
    const Objective obj = make_loss_objective(data, loss);
    const MinimizeResult res = minimize(obj, beta_star, cfg);
    EXPECT_LE(res.trace.entries.back().grad_norm, 1e-8);

    const Eigen::Vector2d grid = test::grid_argmin_2d(
        [&](double b1, double b2) {
            Eigen::VectorXd beta(2);
            beta << b1, b2;
            return loss_objective_value(data, loss, beta);
        },
        beta_star, 1.0, 1e-3);
    EXPECT_LT((res.x - grid.eval()).norm(), 2e-3);
}

TEST(Optimizer, WolfeAcceptsExactQuadraticStep) {
    Eigen::VectorXd origin(1);
    origin << 1.0;
    const Objective f = quadratic_around(Eigen::VectorXd::Zero(1));
    Eigen::VectorXd dir(1);
    dir << -1.0;  // -gradient at x=1; the exact line minimum is t = 1
    const double t = wolfe_line_search(f, origin, dir, 1e-4, 0.9, 60);
    EXPECT_DOUBLE_EQ(t, 1.0);
}

TEST(Optimizer, WolfeSatisfiesArmijoOnWelschPlateauSlice) {
    Dataset data = test::make_contaminated_dataset(30, Eigen::Vector2d(1.0, -1.0), 6, 50.0, 99);
    const Objective obj = make_loss_objective(data, LossSpec::welsch(0.5));
    Eigen::VectorXd point(2);
    point << 0.4, -0.6;
    Eigen::VectorXd grad(2);
    const double f0 = obj(point, grad);
    const Eigen::VectorXd dir = -grad;
    const double slope = grad.dot(dir);
    const double t = wolfe_line_search(obj, point, dir, 1e-4, 0.9, 60);
    Eigen::VectorXd scratch(2);
    const double ft = obj(point + t * dir, scratch);
    EXPECT_LE(ft, f0 + 1e-4 * t * slope);
    EXPECT_LT(ft, f0);
}

TEST(Optimizer, AscentDirectionIsAContractError) {
    const Objective f = quadratic_around(Eigen::VectorXd::Zero(2));
    Eigen::VectorXd point(2);
    point << 1.0, 1.0;
    Eigen::VectorXd grad(2);
    f(point, grad);
    EXPECT_THROW((void)wolfe_line_search(f, point, grad, 1e-4, 0.9, 60), std::invalid_argument);
}

TEST(Optimizer, LineSearchBudgetExhaustionRaises) {
    // The curvature condition is unattainable for c2 ~ 0 on a plateau-free
    // descent, so the bracket collapses until the budget runs out.
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad.resize(1);
        grad[0] = 1.0;  // constant slope, curvature condition never met
        return x[0];
    };
    Eigen::VectorXd point(1);
    point << 0.0;
    Eigen::VectorXd dir(1);
    dir << -1.0;
    EXPECT_THROW((void)wolfe_line_search(f, point, dir, 1e-4, 0.9, 20), LineSearchError);
}

TEST(Optimizer, FiniteDifferenceGradient) {
    const Objective square = [](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        grad.resize(1);
        grad[0] = 2.0 * x[0];
        return x[0] * x[0];
    };
    Eigen::VectorXd at(1);
    at << 3.0;
    const Eigen::VectorXd g = finite_diff_gradient(square, at, 1e-5);
    EXPECT_NEAR(g[0], 6.0, 1e-6);

    const Objective constant = [](const Eigen::VectorXd&, Eigen::VectorXd& grad) {
        grad.setZero();
        return 42.0;
    };
    Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
    EXPECT_LT(finite_diff_gradient(constant, zero3, 1e-5).norm(), 1e-9);

    EXPECT_THROW((void)finite_diff_gradient(square, at, 0.0), std::invalid_argument);
}

TEST(Optimizer, WelschAnalyticGradientMatchesFiniteDifferences) {
    Dataset data = test::make_gaussian_dataset(40, Eigen::Vector3d(0.5, -1.0, 0.25), 1.0, 21);
    const Objective obj = make_loss_objective(data, LossSpec::welsch(0.7));
    Rng rng(22);
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd point(3);
        for (int j = 0; j < 3; ++j) point[j] = rng.uniform01() * 4.0 - 2.0;
        Eigen::VectorXd analytic(3);
        obj(point, analytic);
        const Eigen::VectorXd fd = finite_diff_gradient(obj, point, 1e-6);
        EXPECT_LT((analytic - fd).norm(), 1e-5 * std::max(1.0, analytic.norm()));
    }
}

TEST(Optimizer, TraceValuesStrictlyDecreaseUnderWolfe) {
    Dataset data = test::make_gaussian_dataset(60, Eigen::Vector2d(1.0, 2.0), 1.0, 5);
    OptimizerConfig cfg;
    const Objective obj = make_loss_objective(data, LossSpec::welsch(0.5));
    const MinimizeResult res = minimize(obj, Eigen::VectorXd::Zero(2), cfg);
    ASSERT_GE(res.trace.entries.size(), 2u);
    for (std::size_t k = 1; k < res.trace.entries.size(); ++k) {
        EXPECT_LT(res.trace.entries[k].value, res.trace.entries[k - 1].value);
    }
}

TEST(Optimizer, FirstIterationIsSteepestDescent) {
    Dataset data = test::make_gaussian_dataset(50, Eigen::Vector2d(0.7, -0.3), 1.0, 9);
    OptimizerConfig cfg;
    cfg.record_iterates = true;
    const Objective obj = make_loss_objective(data, LossSpec::welsch(1.0));
    const MinimizeResult res = minimize(obj, Eigen::VectorXd::Zero(2), cfg);
    ASSERT_GE(res.trace.entries.size(), 2u);
    Eigen::VectorXd g0(2);
    obj(Eigen::VectorXd::Zero(2), g0);
    const Eigen::VectorXd step = *res.trace.entries[1].point - *res.trace.entries[0].point;
    const double cosine = -step.dot(g0) / (step.norm() * g0.norm());
    EXPECT_NEAR(cosine, 1.0, 1e-12);
}

TEST(Optimizer, GradientDescentHalvesOnIncrease) {
    Dataset data = test::make_contaminated_dataset(80, Eigen::Vector2d(1.0, -1.0), 8, 100.0, 31);
    OptimizerConfig cfg;
    cfg.method = OptimMethod::gradient_descent;
    cfg.gd_step = 0.5;
    cfg.max_iters = 200;
    const Objective obj = make_loss_objective(data, LossSpec::welsch(0.2));
    const MinimizeResult res = minimize(obj, Eigen::VectorXd::Zero(2), cfg);
    for (std::size_t k = 1; k < res.trace.entries.size(); ++k) {
        EXPECT_LE(res.trace.entries[k].value, res.trace.entries[k - 1].value);
    }
}

TEST(Optimizer, DeterministicTraces) {
    Dataset data = test::make_gaussian_dataset(60, Eigen::Vector3d(1.0, 0.0, -1.0), 1.0, 77);
    OptimizerConfig cfg;
    const Objective obj = make_loss_objective(data, LossSpec::welsch(0.3));
    const MinimizeResult a = minimize(obj, Eigen::VectorXd::Zero(3), cfg);
    const MinimizeResult b = minimize(obj, Eigen::VectorXd::Zero(3), cfg);
    ASSERT_EQ(a.trace.entries.size(), b.trace.entries.size());
    for (std::size_t k = 0; k < a.trace.entries.size(); ++k) {
        EXPECT_EQ(a.trace.entries[k].value, b.trace.entries[k].value);
        EXPECT_EQ(a.trace.entries[k].grad_norm, b.trace.entries[k].grad_norm);
    }
    EXPECT_TRUE((a.x.array() == b.x.array()).all());
}

TEST(Optimizer, ConfigValidation) {
    OptimizerConfig cfg;
    cfg.wolfe_c1 = 0.95;  // violates c1 < c2
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = OptimizerConfig{};
    cfg.memory = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = OptimizerConfig{};
    cfg.grad_tol = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Optimizer, NonFiniteInitialObjectiveCarriesIterate) {
    const Objective bad = [](const Eigen::VectorXd&, Eigen::VectorXd& grad) {
        grad.setZero();
        return std::numeric_limits<double>::quiet_NaN();
    };
    OptimizerConfig cfg;
    Eigen::VectorXd init(2);
    init << 3.0, 4.0;
    try {
        (void)minimize(bad, init, cfg);
        FAIL() << "expected OptimizationError";
    } catch (const OptimizationError& e) {
        EXPECT_TRUE((e.last_good_iterate.array() == init.array()).all());
    }
}

}  // namespace
}  // namespace welsch
