#pragma once

// Discrete stand-in for L2[-l, l]: a uniform odd-sized grid, composite
// Simpson weights, and the weighted inner product / norms built on them.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>

#include "gnflow/errors.hpp"

namespace gnflow {

/// Uniform grid t_i = -l + i*h, i = 0..n-1, with h = 2l/(n-1) and n odd.
class Grid {
public:
    Grid(double half_width, std::size_t node_count)
        : half_width_(half_width), node_count_(node_count)
    {
        if (!(half_width > 0.0) || !std::isfinite(half_width)) {
            throw InvalidArgument("grid half-width must be positive and finite");
        }
        if (node_count < 3) {
            throw InvalidArgument("grid needs at least 3 nodes, got " + std::to_string(node_count));
        }
        if (node_count % 2 == 0) {
            throw InvalidArgument("Simpson's rule needs an odd node count, got " +
                                  std::to_string(node_count));
        }
        spacing_ = 2.0 * half_width / static_cast<double>(node_count - 1);
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t node_count() const noexcept { return node_count_; }
    double spacing() const noexcept { return spacing_; }

    // Nodes are mirrored from the midpoint so the grid is symmetric about 0 bit-for-bit.
    double node(std::size_t i) const noexcept
    {
        const auto mid = (node_count_ - 1) / 2;
        if (i >= mid) {
            return static_cast<double>(i - mid) * spacing_;
        }
        return -static_cast<double>(mid - i) * spacing_;
    }

    Eigen::VectorXd nodes() const
    {
        Eigen::VectorXd t(static_cast<Eigen::Index>(node_count_));
        for (std::size_t i = 0; i < node_count_; ++i) {
            t[static_cast<Eigen::Index>(i)] = node(i);
        }
        return t;
    }

    friend bool operator==(const Grid& a, const Grid& b) noexcept
    {
        return a.half_width_ == b.half_width_ && a.node_count_ == b.node_count_;
    }

private:
    double half_width_;
    std::size_t node_count_;
    double spacing_;
};

/// Real function sampled at every node of a grid. Values are always finite.
class GridFunction {
public:
    GridFunction(Grid grid, Eigen::VectorXd values)
        : grid_(grid), values_(std::move(values))
    {
        if (static_cast<std::size_t>(values_.size()) != grid_.node_count()) {
            throw GridMismatch("grid function has " + std::to_string(values_.size()) +
                               " values for a grid of " + std::to_string(grid_.node_count()) +
                               " nodes");
        }
        if (!values_.allFinite()) {
            throw NumericalError("grid function contains non-finite values");
        }
    }

    static GridFunction constant(const Grid& grid, double value)
    {
        return {grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.node_count()), value)};
    }

    template <typename F>
    static GridFunction sample(const Grid& grid, F&& f)
    {
        Eigen::VectorXd v(static_cast<Eigen::Index>(grid.node_count()));
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            v[static_cast<Eigen::Index>(i)] = f(grid.node(i));
        }
        return {grid, std::move(v)};
    }

    const Grid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return grid_.node_count(); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

private:
    Grid grid_;
    Eigen::VectorXd values_;
};

/// Composite Simpson weights h/3 * (1, 4, 2, 4, ..., 2, 4, 1).
class QuadratureWeights {
public:
    const Grid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double operator[](std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }

    /// Integral of a sampled function.
    double integrate(const Eigen::VectorXd& values) const { return weights_.dot(values); }

private:
    QuadratureWeights(Grid grid, Eigen::VectorXd w) : grid_(grid), weights_(std::move(w)) {}
    friend QuadratureWeights simpson_weights(const Grid& grid);

    Grid grid_;
    Eigen::VectorXd weights_;
};

inline QuadratureWeights simpson_weights(const Grid& grid)
{
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    const double third = grid.spacing() / 3.0;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i == 0 || i == n - 1) {
            w[i] = third;
        } else {
            w[i] = (i % 2 == 1 ? 4.0 : 2.0) * third;
        }
    }
    return {grid, std::move(w)};
}

namespace detail {

inline void require_same_grid(const Grid& a, const Grid& b, const char* what)
{
    if (!(a == b)) {
        throw GridMismatch(std::string(what) + ": operands live on different grids");
    }
}

} // namespace detail

inline double inner_product(const GridFunction& f, const GridFunction& g, const QuadratureWeights& w)
{
    detail::require_same_grid(f.grid(), g.grid(), "inner_product");
    detail::require_same_grid(f.grid(), w.grid(), "inner_product");
    return (w.weights().array() * f.values().array() * g.values().array()).sum();
}

inline double l2_norm(const GridFunction& f, const QuadratureWeights& w)
{
    detail::require_same_grid(f.grid(), w.grid(), "l2_norm");
    return std::sqrt((w.weights().array() * f.values().array().square()).sum());
}

inline double sup_norm(const GridFunction& f)
{
    return f.values().size() == 0 ? 0.0 : f.values().cwiseAbs().maxCoeff();
}

/// Weighted L2 norm of a raw vector; used on hot paths where the grid is known to match.
inline double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& weights)
{
    return std::sqrt((weights.array() * v.array().square()).sum());
}

} // namespace gnflow
