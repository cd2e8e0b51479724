#pragma once

// Continuous regularized Gauss-Newton flow
//
//   x'(t) = -[J*J + alpha(t) I]^{-1} [J* phi(x) + alpha(t) (x - x0)],   x(0) = x0,
//
// where J = phi'(x) and J* is its adjoint in the weighted L2 inner product of
// the grid, J* = W^{-1} J^T W.  Multiplying the system by W gives the
// symmetric positive definite form
//
//   (J^T W J + alpha W) d = -(J^T W phi(x) + alpha W (x - x0)),
//
// which is what is factorized (Cholesky) at every velocity evaluation.
// Euler with tau = 1 is the classical regularized Gauss-Newton iteration.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "gnflow/errors.hpp"
#include "gnflow/grid.hpp"
#include "gnflow/regularization.hpp"

namespace gnflow {

/// Square matrix of phi'(x) on the grid together with the quadrature weights
/// that define the inner product in both the domain and the range space.
class JacobianMatrix {
public:
    JacobianMatrix(Eigen::MatrixXd matrix, Eigen::VectorXd weights)
        : matrix_(std::move(matrix)), weights_(std::move(weights))
    {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() != weights_.size()) {
            throw InvalidArgument(fmt::format("jacobian must be n x n with n weights, got {}x{} and {}",
                                              matrix_.rows(), matrix_.cols(), weights_.size()));
        }
        if (!matrix_.allFinite()) {
            throw NumericalError("jacobian contains non-finite entries");
        }
        if (!weights_.allFinite() || (weights_.array() <= 0.0).any()) {
            throw InvalidArgument("jacobian weights must be positive and finite");
        }
    }

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    Eigen::Index size() const noexcept { return matrix_.rows(); }

    Eigen::VectorXd apply(const Eigen::VectorXd& h) const { return matrix_ * h; }

    /// J* g = W^{-1} J^T W g
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& g) const
    {
        return (matrix_.transpose() * weights_.cwiseProduct(g)).cwiseQuotient(weights_);
    }

    Eigen::MatrixXd adjoint() const
    {
        return weights_.cwiseInverse().asDiagonal() * matrix_.transpose() * weights_.asDiagonal();
    }

private:
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd weights_;
};

/// Factorization of J*J + alpha I (held as J^T W J + alpha W).
class RegularizedNormalSystem {
public:
    RegularizedNormalSystem(const JacobianMatrix& jac, double alpha) : weights_(jac.weights())
    {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw InvalidArgument(fmt::format("regularization parameter must be positive, got {}", alpha));
        }
        const Eigen::MatrixXd wj = jac.weights().asDiagonal() * jac.matrix();
        Eigen::MatrixXd normal = jac.matrix().transpose() * wj;
        normal.diagonal() += alpha * jac.weights();
        llt_.compute(normal);
        if (llt_.info() != Eigen::Success) {
            throw NumericalError(fmt::format(
                "Cholesky factorization of the regularized normal operator failed (alpha = {:.3e})", alpha));
        }
    }

    /// Solves (J*J + alpha I) d = rhs.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const
    {
        Eigen::VectorXd d = llt_.solve(weights_.cwiseProduct(rhs));
        if (!d.allFinite()) {
            throw NumericalError("regularized normal solve produced non-finite values");
        }
        return d;
    }

private:
    Eigen::VectorXd weights_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

// clang-format off
template <typename M>
concept OperatorModel = requires(const M& m, const GridFunction& x) {
    { m.grid() } -> std::convertible_to<const Grid&>;
    { m.quadrature() } -> std::convertible_to<const QuadratureWeights&>;
    { m.residual(x) } -> std::convertible_to<GridFunction>;
    { m.jacobian(x) } -> std::convertible_to<JacobianMatrix>;
    { m.admissible(x) } -> std::convertible_to<bool>;
};
// clang-format on

enum class Stepper { Euler, RungeKuttaMidpoint };

struct FixedSteps {
    int steps;
};

struct DiscrepancyFloor {
    double tol;
};

/// Stops once `patience` steps have passed without improving on the smallest
/// discrepancy seen; the run then reports that minimum-discrepancy iterate.
struct FirstDiscrepancyIncrease {
    int patience;
};

using StopRule = std::variant<FixedSteps, DiscrepancyFloor, FirstDiscrepancyIncrease>;

struct SolverConfig {
    Stepper stepper = Stepper::Euler;
    double tau = 0.1;
    int max_steps = 1000;
    StopRule stop_rule = FirstDiscrepancyIncrease{3};
    int record_every = 1;

    void validate() const
    {
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw InvalidArgument(fmt::format("step size tau must be positive, got {}", tau));
        }
        if (max_steps < 1) {
            throw InvalidArgument(fmt::format("max_steps must be at least 1, got {}", max_steps));
        }
        if (record_every < 1) {
            throw InvalidArgument(fmt::format("record_every must be at least 1, got {}", record_every));
        }
        std::visit(
            [](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, FixedSteps>) {
                    if (r.steps < 0) throw InvalidArgument("fixed step count must be nonnegative");
                } else if constexpr (std::is_same_v<R, DiscrepancyFloor>) {
                    if (!(r.tol >= 0.0)) throw InvalidArgument("discrepancy floor must be nonnegative");
                } else {
                    if (r.patience < 1) throw InvalidArgument("patience must be at least 1");
                }
            },
            stop_rule);
    }
};

inline Stepper parse_stepper(std::string_view text)
{
    const std::string s = detail::lowercase(detail::trim(text));
    if (s == "euler") return Stepper::Euler;
    if (s == "rk" || s == "rk2" || s == "midpoint") return Stepper::RungeKuttaMidpoint;
    throw InvalidArgument(fmt::format("unknown stepper '{}' (expected euler or rk)", text));
}

inline std::string to_string(Stepper s) { return s == Stepper::Euler ? "euler" : "rk"; }

/// "fixed:N", "floor:tol" or "increase:patience"
inline StopRule parse_stop_rule(std::string_view text)
{
    const std::string s = detail::lowercase(detail::trim(text));
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        throw InvalidArgument(fmt::format("malformed stop rule '{}': expected fixed:N, floor:tol or increase:P", text));
    }
    const std::string kind = s.substr(0, colon);
    const std::string arg = s.substr(colon + 1);
    const double value = detail::parse_number(arg, kind);
    auto as_int = [&](const char* what) {
        if (value != std::floor(value) || value < 0 || value > 1e9) {
            throw InvalidArgument(fmt::format("stop rule '{}' needs a nonnegative integer {}", text, what));
        }
        return static_cast<int>(value);
    };
    if (kind == "fixed") return FixedSteps{as_int("step count")};
    if (kind == "floor") {
        if (!(value >= 0.0)) throw InvalidArgument("discrepancy floor must be nonnegative");
        return DiscrepancyFloor{value};
    }
    if (kind == "increase") return FirstDiscrepancyIncrease{as_int("patience")};
    throw InvalidArgument(fmt::format("unknown stop rule '{}'", kind));
}

inline std::string to_string(const StopRule& rule)
{
    return std::visit(
        [](const auto& r) -> std::string {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, FixedSteps>) return fmt::format("fixed:{}", r.steps);
            else if constexpr (std::is_same_v<R, DiscrepancyFloor>) return fmt::format("floor:{}", r.tol);
            else return fmt::format("increase:{}", r.patience);
        },
        rule);
}

struct TrajectorySample {
    int step;
    double t;
    double alpha;
    double sigma;                     ///< ||phi(x_k)||, weighted L2
    std::optional<double> w;          ///< ||x_k - x_ref|| / alpha(t_k)
    std::optional<double> error_sup;  ///< sup |x_k - x_ref|
};

struct RunReport {
    int steps_taken;
    GridFunction final_x;
    double discrepancy;
    std::optional<double> error_sup;
    std::optional<double> error_l2;
    std::vector<TrajectorySample> trajectory;
    bool diverged = false;
    std::string diagnostic;
};

template <OperatorModel Model>
GridFunction velocity(const Model& model, const Schedule& schedule, double t, const GridFunction& x,
                      const GridFunction& x0)
{
    detail::require_same_grid(model.grid(), x.grid(), "velocity");
    detail::require_same_grid(model.grid(), x0.grid(), "velocity");
    if (!model.admissible(x)) {
        throw DomainError(fmt::format("velocity: point at t = {} is outside the admissible set", t));
    }
    const double a = alpha(schedule, t);
    const JacobianMatrix jac = model.jacobian(x);
    const GridFunction r = model.residual(x);

    const Eigen::VectorXd rhs = -(jac.apply_adjoint(r.values()) + a * (x.values() - x0.values()));
    return {x.grid(), RegularizedNormalSystem(jac, a).solve(rhs)};
}

namespace detail {

inline GridFunction axpy(const GridFunction& x, double scale, const GridFunction& d)
{
    return {x.grid(), x.values() + scale * d.values()};
}

} // namespace detail

/// x_{k+1} = x_k + tau * F(t_k, x_k)
template <OperatorModel Model>
GridFunction euler_step(const Model& model, const Schedule& schedule, double t_k, const GridFunction& x_k,
                        const GridFunction& x0, double tau)
{
    return detail::axpy(x_k, tau, velocity(model, schedule, t_k, x_k, x0));
}

/// Explicit midpoint rule; the second stage samples alpha at t_k + tau/2.
template <OperatorModel Model>
GridFunction rk_midpoint_step(const Model& model, const Schedule& schedule, double t_k, const GridFunction& x_k,
                              const GridFunction& x0, double tau)
{
    const GridFunction half = detail::axpy(x_k, 0.5 * tau, velocity(model, schedule, t_k, x_k, x0));
    if (!model.admissible(half)) {
        throw DomainError(fmt::format("half-step point at t = {} is outside the admissible set", t_k + 0.5 * tau));
    }
    return detail::axpy(x_k, tau, velocity(model, schedule, t_k + 0.5 * tau, half, x0));
}

template <OperatorModel Model>
GridFunction step(Stepper stepper, const Model& model, const Schedule& schedule, double t_k,
                  const GridFunction& x_k, const GridFunction& x0, double tau)
{
    return stepper == Stepper::Euler ? euler_step(model, schedule, t_k, x_k, x0, tau)
                                     : rk_midpoint_step(model, schedule, t_k, x_k, x0, tau);
}

/// Integrates the flow from t = 0 until the stop rule fires.  Failures after
/// the first step (domain violations, factorization breakdown, non-finite
/// values) end the run with `diverged` set instead of throwing.
template <OperatorModel Model>
RunReport run_flow(const Model& model, const Schedule& schedule, const GridFunction& x0, const SolverConfig& config,
                   const std::optional<GridFunction>& reference = std::nullopt)
{
    config.validate();
    validate_rate_function(schedule);
    detail::require_same_grid(model.grid(), x0.grid(), "run_flow");
    if (reference) {
        detail::require_same_grid(model.grid(), reference->grid(), "run_flow reference");
    }
    if (!model.admissible(x0)) {
        throw DomainError("run_flow: initial point is outside the admissible set");
    }

    const QuadratureWeights& quad = model.quadrature();
    auto discrepancy = [&](const GridFunction& x) { return l2_norm(model.residual(x), quad); };

    struct State {
        GridFunction x;
        int k;
        double sigma;
    };

    RunReport report{0, x0, 0.0, std::nullopt, std::nullopt, {}, false, {}};
    auto record = [&](const State& s) {
        const double t = s.k * config.tau;
        const double a = alpha(schedule, t);
        TrajectorySample sample{s.k, t, a, s.sigma, std::nullopt, std::nullopt};
        if (reference) {
            const Eigen::VectorXd e = s.x.values() - reference->values();
            sample.w = weighted_norm(e, quad.weights()) / a;
            sample.error_sup = e.cwiseAbs().maxCoeff();
        }
        report.trajectory.push_back(sample);
    };

    State current{x0, 0, discrepancy(x0)};
    State best = current;
    record(current);

    const bool keep_best = std::holds_alternative<FirstDiscrepancyIncrease>(config.stop_rule);
    auto should_stop = [&](const State& s) {
        if (s.k >= config.max_steps) return true;
        return std::visit(
            [&](const auto& r) {
                using R = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<R, FixedSteps>) return s.k >= r.steps;
                else if constexpr (std::is_same_v<R, DiscrepancyFloor>) return s.sigma <= r.tol;
                else return s.k - best.k >= r.patience;
            },
            config.stop_rule);
    };

    while (!should_stop(current)) {
        const double t_k = current.k * config.tau;
        try {
            GridFunction next = step(config.stepper, model, schedule, t_k, current.x, x0, config.tau);
            if (!model.admissible(next)) {
                throw DomainError(fmt::format("iterate {} left the admissible set", current.k + 1));
            }
            const double sigma = discrepancy(next);
            if (!std::isfinite(sigma)) {
                throw NumericalError(fmt::format("discrepancy of iterate {} is not finite", current.k + 1));
            }
            current = State{std::move(next), current.k + 1, sigma};
        } catch (const DomainError& e) {
            report.diverged = true;
            report.diagnostic = e.what();
            break;
        } catch (const NumericalError& e) {
            report.diverged = true;
            report.diagnostic = e.what();
            break;
        }
        if (current.sigma < best.sigma) {
            best = current;
        }
        if (current.k % config.record_every == 0) {
            record(current);
        }
    }
    if (report.trajectory.back().step != current.k) {
        record(current);
    }

    const State& chosen = keep_best ? best : current;
    report.steps_taken = chosen.k;
    report.final_x = chosen.x;
    report.discrepancy = chosen.sigma;
    if (reference) {
        const Eigen::VectorXd e = chosen.x.values() - reference->values();
        report.error_sup = e.cwiseAbs().maxCoeff();
        report.error_l2 = weighted_norm(e, quad.weights());
    }
    return report;
}

} // namespace gnflow
