#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gnflow/certificate.hpp"
#include "gnflow/linear_model.hpp"

using namespace gnflow;

namespace {

CertificateInputs worked_inputs(double v = 0.1)
{
    // N1 = N2 = 1 and alpha'(0)/alpha(0) = -0.1 give C1 = 0.5, C2 = 0.9 - 2 v, C3 = v.
    return {1.0, 1.0, v, 0.1, -0.1, 10.0, std::nullopt, SourceCondition::Assumed};
}

/// Classical RK4 integration of u' = C1 u^2 - C2 u + C3.
double riccati_rk4(double c1, double c2, double c3, double u0, double t_end, int steps)
{
    auto f = [&](double u) { return c1 * u * u - c2 * u + c3; };
    const double h = t_end / steps;
    double u = u0;
    for (int k = 0; k < steps; ++k) {
        const double k1 = f(u);
        const double k2 = f(u + 0.5 * h * k1);
        const double k3 = f(u + 0.5 * h * k2);
        const double k4 = f(u + h * k3);
        u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return u;
}

RunReport empty_report()
{
    const Grid g(1.0, 3);
    return {0, GridFunction::constant(g, 0.0), 0.0, std::nullopt, std::nullopt, {}, false, {}};
}

const ConditionVerdict& condition(const Certificate& cert, std::size_t i) { return cert.conditions.at(i); }

} // namespace

TEST(Certificate, WorkedExampleConstantsAndRoots)
{
    const auto cert = build_certificate(worked_inputs());
    EXPECT_DOUBLE_EQ(cert.c1, 0.5);
    EXPECT_NEAR(cert.c2, 0.7, 1e-15);
    EXPECT_DOUBLE_EQ(cert.c3, 0.1);
    ASSERT_TRUE(cert.has_roots());
    EXPECT_NEAR(*cert.c, std::sqrt(0.29), 1e-15);
    EXPECT_NEAR(*cert.u1, 0.16148352, 1e-8);
    EXPECT_NEAR(*cert.u2, 1.23851648, 1e-8);
    EXPECT_NEAR(*cert.u1 * *cert.u2, cert.c3 / cert.c1, 1e-14);
    EXPECT_NEAR(*cert.u1 + *cert.u2, cert.c2 / cert.c1, 1e-14);
    EXPECT_NEAR(cert.rate_cap, 0.7, 1e-15);
    EXPECT_TRUE(cert.passes());
    EXPECT_EQ(condition(cert, 3).status, VerdictStatus::NotChecked);
    EXPECT_EQ(condition(cert, 4).status, VerdictStatus::Assumed);
}

TEST(Certificate, LargeSourceFailsWithoutRoots)
{
    const auto cert = build_certificate(worked_inputs(0.5));
    EXPECT_NEAR(cert.c2, -0.1, 1e-15);
    EXPECT_EQ(condition(cert, 0).status, VerdictStatus::Fail);
    EXPECT_FALSE(cert.passes());
    EXPECT_FALSE(cert.has_roots());
    EXPECT_THROW(bound_curve(cert, 0.5, 1.0), InvalidArgument);
    EXPECT_THROW(default_u0(cert), InvalidArgument);
}

TEST(Certificate, ZeroSourceIsLogisticDecay)
{
    const auto cert = build_certificate(worked_inputs(0.0));
    ASSERT_TRUE(cert.has_roots());
    EXPECT_EQ(*cert.u1, 0.0);
    EXPECT_NEAR(*cert.u2, 1.8, 1e-15);
    EXPECT_NEAR(*cert.c, 0.9, 1e-15);
    const double u0 = 0.5;
    for (double t : {0.0, 1.0, 5.0}) {
        const double logistic = 1.8 / ((1.8 - u0) / u0 * std::exp(0.9 * t) + 1.0);
        EXPECT_NEAR(bound_curve(cert, u0, t), logistic, 1e-14);
    }
}

TEST(Certificate, TouchingRootsAreRejected)
{
    // N1 N2 = 1, |v| = 0.5, alpha'(0)/alpha(0) = 1: C2 = 1 and C2^2 = 2 N1 N2 |v|, so c = 0.
    const auto cert = build_certificate({1.0, 1.0, 0.5, 0.1, 1.0, 10.0, std::nullopt, SourceCondition::Assumed});
    EXPECT_EQ(condition(cert, 1).status, VerdictStatus::Fail);
    EXPECT_FALSE(cert.has_roots());
    EXPECT_THROW(bound_curve(cert, 0.5, 0.0), InvalidArgument);
}

TEST(Certificate, RadiusAndStartConditions)
{
    auto in = worked_inputs();
    in.radius = 0.05;  // alpha0 C2 / (N1 N2) = 0.07
    in.w0 = 0.8;       // above C2 / (2 C1) = 0.7
    in.source = SourceCondition::Constructed;
    const auto cert = build_certificate(in);
    EXPECT_EQ(condition(cert, 2).status, VerdictStatus::Fail);
    EXPECT_NEAR(condition(cert, 2).value, 0.07, 1e-15);
    EXPECT_EQ(condition(cert, 3).status, VerdictStatus::Fail);
    EXPECT_EQ(condition(cert, 4).status, VerdictStatus::Constructed);
    EXPECT_FALSE(cert.passes());
    EXPECT_TRUE(cert.has_roots());
}

TEST(Certificate, InvalidInputsThrow)
{
    auto in = worked_inputs();
    in.n1 = 0.0;
    EXPECT_THROW(build_certificate(in), InvalidArgument);
    in = worked_inputs();
    in.v_norm = -1.0;
    EXPECT_THROW(build_certificate(in), InvalidArgument);
    in = worked_inputs();
    in.logderiv0 = NAN;
    EXPECT_THROW(build_certificate(in), InvalidArgument);
    in = worked_inputs();
    in.w0 = -0.1;
    EXPECT_THROW(build_certificate(in), InvalidArgument);
}

TEST(BoundCurve, EndpointsAndDomain)
{
    const auto cert = build_certificate(worked_inputs());
    EXPECT_NEAR(bound_curve(cert, 0.7, 0.0), 0.7, 1e-15);
    EXPECT_NEAR(bound_curve(cert, 0.7, 200.0), *cert.u1, 1e-12);
    EXPECT_THROW(bound_curve(cert, 0.1, 0.0), InvalidArgument);
    EXPECT_THROW(bound_curve(cert, 1.3, 0.0), InvalidArgument);
    EXPECT_THROW(bound_curve(cert, *cert.u1, 0.0), InvalidArgument);
    EXPECT_THROW(bound_curve(cert, 0.7, -0.5), InvalidArgument);
}

TEST(BoundCurve, MatchesHighPrecisionOracle)
{
    // u(1) for u0 = 0.7, from an arbitrary-precision ODE integration.
    constexpr double kOracle = 0.5584054428106468;
    const auto cert = build_certificate(worked_inputs());
    EXPECT_NEAR(bound_curve(cert, 0.7, 1.0), kOracle, 1e-12);
    EXPECT_NEAR(riccati_rk4(0.5, 0.7, 0.1, 0.7, 1.0, 10000), kOracle, 1e-8);
}

// Property: closed form agrees with RK4 on random certificates up to t = 20/c.
TEST(BoundCurve, MatchesRk4OnRandomCertificates)
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> nrange(0.2, 2.0);
    std::uniform_real_distribution<double> vrange(0.0, 0.2);
    std::uniform_real_distribution<double> ldrange(-0.5, 0.0);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    int checked = 0;
    while (checked < 20) {
        const CertificateInputs in{nrange(rng), nrange(rng), vrange(rng), 0.1, ldrange(rng), 100.0, std::nullopt,
                                   SourceCondition::Assumed};
        const auto cert = build_certificate(in);
        if (!cert.has_roots()) continue;
        const double u0 = *cert.u1 + unit(rng) * (*cert.u2 - *cert.u1);
        const double horizon = 20.0 / *cert.c;
        for (double frac : {0.1, 0.5, 1.0}) {
            const double t = frac * horizon;
            EXPECT_NEAR(bound_curve(cert, u0, t), riccati_rk4(cert.c1, cert.c2, cert.c3, u0, t, 20000), 1e-7)
                << "certificate " << checked << " at t = " << t;
        }
        ++checked;
    }
}

TEST(BoundCurve, MonotoneTowardLowerRoot)
{
    const auto cert = build_certificate(worked_inputs());
    for (double u0 : {0.2, 0.7, 1.2}) {
        double prev = bound_curve(cert, u0, 0.0);
        for (int k = 1; k <= 1000; ++k) {
            const double u = bound_curve(cert, u0, 0.02 * k);
            EXPECT_LE(u, prev);
            EXPECT_GE(u, *cert.u1);
            prev = u;
        }
    }
}

// Property: the overall verdict is the conjunction of the checkable conditions.
TEST(Certificate, VerdictIsConjunctionOfConditions)
{
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double n1 = 0.1 + 2 * ud(rng), n2 = 0.1 + 2 * ud(rng), v = 0.5 * ud(rng);
        const double a0 = 0.01 + ud(rng), ld = -ud(rng), r = 0.01 + ud(rng), w0 = 2 * ud(rng);
        const auto cert = build_certificate({n1, n2, v, a0, ld, r, w0, SourceCondition::Assumed});
        const double c2 = 1 - 2 * n1 * n2 * v + ld;
        const bool expected = c2 > 0 && c2 * c2 - 2 * n1 * n2 * v > 0 && a0 * c2 / (n1 * n2) <= r &&
                              w0 < c2 / (n1 * n2);
        EXPECT_EQ(cert.passes(), expected) << "trial " << trial;
        EXPECT_EQ(cert.has_roots(), c2 > 0 && c2 * c2 - 2 * n1 * n2 * v > 0);
    }
}

TEST(DefaultU0, StaysInsideTheRootInterval)
{
    const auto cert = build_certificate(worked_inputs());
    EXPECT_NEAR(default_u0(cert), 0.7, 1e-15);
    EXPECT_NEAR(default_u0(cert, 0.9), 0.909, 1e-15);
    const double high = default_u0(cert, 5.0);
    EXPECT_LT(high, *cert.u2);
    EXPECT_GT(high, *cert.u2 - 1e-6);
    EXPECT_NO_THROW(bound_curve(cert, high, 3.0));
}

TEST(ComparisonCheck, DetectsFirstViolation)
{
    const auto cert = build_certificate(worked_inputs());
    RunReport report = empty_report();
    for (int k = 0; k <= 10; ++k) {
        const double t = 0.5 * k;
        TrajectorySample s{k, t, 0.1, 0.0, 0.9 * bound_curve(cert, 0.7, t), std::nullopt};
        report.trajectory.push_back(s);
    }
    const auto ok = comparison_check(cert, report, 0.7);
    EXPECT_TRUE(ok.passed);
    EXPECT_FALSE(ok.first_violation.has_value());
    EXPECT_GT(ok.min_margin, 0.0);

    report.trajectory[4].w = bound_curve(cert, 0.7, 2.0) + 1e-6;
    report.trajectory[7].w = 10.0;
    const auto bad = comparison_check(cert, report, 0.7);
    EXPECT_FALSE(bad.passed);
    EXPECT_EQ(bad.first_violation, 4);
    EXPECT_NEAR(bad.min_margin, bound_curve(cert, 0.7, 3.5) - 10.0, 1e-12);

    report.trajectory[2].w.reset();
    EXPECT_THROW(comparison_check(cert, report, 0.7), InvalidArgument);
    EXPECT_THROW(comparison_check(cert, empty_report(), 0.7), InvalidArgument);
}

// Synthetic instance where every hypothesis is known: diagonal operator,
// source v built explicitly, phi'' = 0 so any positive N2 bounds it.
TEST(ComparisonCheck, CertifiedDiagonalProblemStaysBelowTheCurve)
{
    const Grid g(1.0, 11);
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> drange(0.2, 1.0);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    Eigen::VectorXd d(11), xhat(11), v(11);
    for (Eigen::Index i = 0; i < 11; ++i) {
        d[i] = drange(rng);
        xhat[i] = ud(rng);
        v[i] = ud(rng);
    }
    d[5] = 1.0;
    const auto w = simpson_weights(g);
    v *= 0.05 / weighted_norm(v, w.weights());
    const auto problem = make_diagonal_source_problem(g, d, xhat, v);
    EXPECT_DOUBLE_EQ(problem.jacobian_norm, 1.0);
    EXPECT_NEAR(problem.source_norm, 0.05, 1e-14);

    const auto schedule = Schedule::inverse_power(10.0, 100.0, 1.0);
    const auto rate = validate_rate_function(schedule);
    const double w0 = weighted_norm(problem.initial_guess.values() - xhat, w.weights()) / rate.alpha0;
    const auto cert = build_certificate({problem.jacobian_norm, 1.0, problem.source_norm, rate.alpha0, rate.logderiv0,
                                         1.0, w0, SourceCondition::Constructed});
    ASSERT_TRUE(cert.passes());
    ASSERT_TRUE(cert.has_roots());

    SolverConfig cfg;
    cfg.stepper = Stepper::RungeKuttaMidpoint;
    cfg.tau = 0.01;
    cfg.stop_rule = FixedSteps{2000};
    cfg.max_steps = 2000;
    const auto report = run_flow(problem.model, schedule, problem.initial_guess, cfg, problem.solution);
    ASSERT_FALSE(report.diverged);

    const double u0 = default_u0(cert, w0);
    const auto verdict = comparison_check(cert, report, u0);
    EXPECT_TRUE(verdict.passed) << "first violation at step " << verdict.first_violation.value_or(-1);
    for (const auto& s : report.trajectory) {
        EXPECT_LT(*s.w, cert.rate_cap);
    }
}
