#pragma once

#include <Eigen/Core>

#include <cmath>

#include "gnflow/errors.hpp"
#include "gnflow/flow_solver.hpp"
#include "gnflow/grid.hpp"

namespace gnflow {

/// phi(x) = A x - b on a grid with Simpson weights. Every point is admissible.
class LinearModel {
public:
    LinearModel(Grid grid, Eigen::MatrixXd a, Eigen::VectorXd b)
        : grid_(grid), quad_(simpson_weights(grid)), a_(std::move(a)), b_(std::move(b))
    {
        const auto n = static_cast<Eigen::Index>(grid.node_count());
        if (a_.rows() != n || a_.cols() != n || b_.size() != n) {
            throw GridMismatch("linear model dimensions do not match the grid");
        }
        if (!a_.allFinite() || !b_.allFinite()) {
            throw InvalidArgument("linear model has non-finite coefficients");
        }
    }

    const Grid& grid() const noexcept { return grid_; }
    const QuadratureWeights& quadrature() const noexcept { return quad_; }
    const Eigen::MatrixXd& matrix() const noexcept { return a_; }

    GridFunction residual(const GridFunction& x) const { return {grid_, a_ * x.values() - b_}; }
    JacobianMatrix jacobian(const GridFunction&) const { return {a_, quad_.weights()}; }
    bool admissible(const GridFunction& x) const { return x.values().allFinite(); }

private:
    Grid grid_;
    QuadratureWeights quad_;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
};

/// Diagonal linear problem whose source representation is known exactly:
/// x_hat - x0 = A* A v with A = diag(d), so the initial guess is x0 = x_hat - d^2 v.
struct DiagonalSourceProblem {
    LinearModel model;
    GridFunction solution;
    GridFunction initial_guess;
    GridFunction source;  ///< v

    /// ||A|| in the weighted norm; A is diagonal so this is max |d_i|.
    double jacobian_norm;
    double source_norm;  ///< weighted L2 norm of v
};

inline DiagonalSourceProblem make_diagonal_source_problem(const Grid& grid, const Eigen::VectorXd& diagonal,
                                                          const Eigen::VectorXd& solution,
                                                          const Eigen::VectorXd& source)
{
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    if (diagonal.size() != n || solution.size() != n || source.size() != n) {
        throw GridMismatch("diagonal problem data does not match the grid");
    }
    const Eigen::MatrixXd a = diagonal.asDiagonal();
    LinearModel model(grid, a, a * solution);
    const Eigen::VectorXd x0 = solution - diagonal.cwiseAbs2().cwiseProduct(source);
    const double vnorm = weighted_norm(source, model.quadrature().weights());
    const double anorm = diagonal.cwiseAbs().maxCoeff();
    return {std::move(model), GridFunction(grid, solution), GridFunction(grid, x0), GridFunction(grid, source),
            anorm, vnorm};
}

} // namespace gnflow
