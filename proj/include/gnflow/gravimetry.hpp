#pragma once

// Inverse gravimetry benchmark.
//
// The interface x(s) between two media of density contrast rho, buried at
// depth H under the strip [-l, l], produces the surface anomaly
//
//   g(t) = rho/(4 pi) * int_{-l}^{l} ln[((t-s)^2 + H^2) / ((t-s)^2 + (H - x(s))^2)] ds.
//
// The integral is discretized with composite Simpson weights on the same grid
// that carries x, which makes the Jacobian square.

#include <Eigen/Core>

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gnflow/errors.hpp"
#include "gnflow/flow_solver.hpp"
#include "gnflow/grid.hpp"

namespace gnflow::gravimetry {

struct Params {
    double depth = 2.0;     ///< H
    double density = 1.0;   ///< rho
    double epsilon = 1e-3;  ///< admissible interfaces satisfy x <= H - epsilon
    Grid grid{1.0, 201};

    double half_width() const noexcept { return grid.half_width(); }
    double ceiling() const noexcept { return depth - epsilon; }
    double prefactor() const noexcept { return density / (4.0 * std::numbers::pi); }

    void validate() const
    {
        if (!(depth > 0.0) || !std::isfinite(depth)) {
            throw InvalidArgument(fmt::format("depth H must be positive, got {}", depth));
        }
        if (!(density > 0.0) || !std::isfinite(density)) {
            throw InvalidArgument(fmt::format("density rho must be positive, got {}", density));
        }
        if (!(epsilon > 0.0) || !(epsilon < depth)) {
            throw InvalidArgument(fmt::format("domain margin epsilon must lie in (0, H), got {}", epsilon));
        }
    }
};

inline double kernel(double t, double s, double xs, const Params& p)
{
    if (!(xs <= p.ceiling())) {
        throw DomainError(fmt::format("interface value {} exceeds H - epsilon = {}", xs, p.ceiling()));
    }
    const double d2 = (t - s) * (t - s);
    const double gap = p.depth - xs;
    return std::log((d2 + p.depth * p.depth) / (d2 + gap * gap));
}

namespace detail {

inline void require_admissible(const GridFunction& x, const Params& p)
{
    gnflow::detail::require_same_grid(x.grid(), p.grid, "gravimetry");
    const double top = x.values().maxCoeff();
    if (!(top <= p.ceiling())) {
        throw DomainError(fmt::format("interface reaches {} above the admissible ceiling H - epsilon = {}", top,
                                      p.ceiling()));
    }
}

} // namespace detail

/// Simpson-discretized anomaly of interface x.
inline GridFunction forward(const GridFunction& x, const Params& p)
{
    detail::require_admissible(x, p);
    const Grid& grid = p.grid;
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    const Eigen::VectorXd t = grid.nodes();
    const Eigen::VectorXd w = simpson_weights(grid).weights();
    const double h2 = p.depth * p.depth;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double gap = p.depth - x.values()[j];
        const double gap2 = gap * gap;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d2 = (t[i] - t[j]) * (t[i] - t[j]);
            g[i] += w[j] * std::log((d2 + h2) / (d2 + gap2));
        }
    }
    return {grid, p.prefactor() * g};
}

/// J[i][j] = rho/(4 pi) * w_j * 2 (H - x_j) / ((t_i - s_j)^2 + (H - x_j)^2)
inline JacobianMatrix frechet_matrix(const GridFunction& x, const Params& p)
{
    detail::require_admissible(x, p);
    const Grid& grid = p.grid;
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    const Eigen::VectorXd t = grid.nodes();
    Eigen::VectorXd w = simpson_weights(grid).weights();

    Eigen::MatrixXd j(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        const double gap = p.depth - x.values()[col];
        const double scale = p.prefactor() * w[col] * 2.0 * gap;
        for (Eigen::Index row = 0; row < n; ++row) {
            const double d2 = (t[row] - t[col]) * (t[row] - t[col]);
            j(row, col) = scale / (d2 + gap * gap);
        }
    }
    return {std::move(j), std::move(w)};
}

/// Model interface (1 - t^2)^2 used to synthesize data.
inline double model_interface(double t)
{
    const double u = 1.0 - t * t;
    return u * u;
}

inline GridFunction model_interface_on(const Grid& grid) { return GridFunction::sample(grid, model_interface); }

/// Noise-free anomaly of the model interface, on the inversion grid.
inline GridFunction synthesize_data(const Params& p)
{
    p.validate();
    return forward(model_interface_on(p.grid), p);
}

/// Constant interface x = 1.
inline GridFunction initial_guess(const Params& p) { return GridFunction::constant(p.grid, 1.0); }

/// phi(x) = forward(x) - y
class Model {
public:
    Model(Params params, GridFunction data)
        : params_(params), data_(std::move(data)), quad_(simpson_weights(params.grid))
    {
        params_.validate();
        gnflow::detail::require_same_grid(params_.grid, data_.grid(), "gravimetry data");
    }

    /// Model built on data synthesized from the model interface.
    static Model synthetic(const Params& params) { return {params, synthesize_data(params)}; }

    const Params& params() const noexcept { return params_; }
    const Grid& grid() const noexcept { return params_.grid; }
    const QuadratureWeights& quadrature() const noexcept { return quad_; }
    const GridFunction& data() const noexcept { return data_; }

    GridFunction residual(const GridFunction& x) const
    {
        return {grid(), forward(x, params_).values() - data_.values()};
    }

    JacobianMatrix jacobian(const GridFunction& x) const { return frechet_matrix(x, params_); }

    bool admissible(const GridFunction& x) const
    {
        return x.grid() == params_.grid && x.values().maxCoeff() <= params_.ceiling();
    }

private:
    Params params_;
    GridFunction data_;
    QuadratureWeights quad_;
};

static_assert(OperatorModel<Model>);

} // namespace gnflow::gravimetry
