#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "modeqfi/errors.hpp"

namespace modeqfi {

using Complex = std::complex<double>;

enum class GridKind { gauss_legendre, trapezoid };

// Discretized integration domain with quadrature weights. 1D grids are a
// single node/weight list; 2D grids are tensor products of one rule per axis
// with product weights. Immutable after construction.
class CoordinateGrid {
public:
    int dimension() const { return dimension_; }
    std::size_t size() const { return flat_weights_.size(); }

    double x(std::size_t p) const;
    double y(std::size_t p) const; // 2D only
    double weight(std::size_t p) const { return flat_weights_[p]; }

    const Eigen::ArrayXd& weights() const { return flat_weights_; }
    const std::vector<double>& axis_points(int axis) const;
    const std::vector<double>& axis_weights(int axis) const;

    // Total measure covered by the weights (interval length / area).
    double measure() const { return measure_; }

    bool operator==(const CoordinateGrid& other) const;

    friend std::shared_ptr<const CoordinateGrid>
    make_grid(GridKind, double, double, int, int);
    friend std::shared_ptr<const CoordinateGrid> make_periodic_grid(double, double, int);
    friend std::shared_ptr<const CoordinateGrid>
    make_grid_from_nodes(const std::vector<double>&);

private:
    CoordinateGrid() = default;
    void finalize(); // builds flat weights, checks the measure invariant

    int dimension_ = 1;
    std::vector<std::vector<double>> axis_points_;
    std::vector<std::vector<double>> axis_weights_;
    Eigen::ArrayXd flat_weights_;
    double measure_ = 0.0;
};

using GridPtr = std::shared_ptr<const CoordinateGrid>;

GridPtr make_grid(GridKind kind, double lo, double hi, int n, int dimension);

// Uniform nodes on [lo, hi) with equal weights; for periodic coordinates the
// trapezoid rule degenerates to this and converges spectrally.
GridPtr make_periodic_grid(double lo, double hi, int n);

// Non-uniform 1D trapezoid rule over externally supplied nodes (sampled data).
GridPtr make_grid_from_nodes(const std::vector<double>& nodes);

// A complex-valued function sampled on a grid, one value per grid point.
class SampledFunction {
public:
    SampledFunction(GridPtr grid, Eigen::VectorXcd values);

    const CoordinateGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const Eigen::VectorXcd& values() const { return values_; }

private:
    GridPtr grid_;
    Eigen::VectorXcd values_;
};

// (a|b) = sum_p w_p conj(a_p) b_p. Conjugate-linear in the first argument.
Complex inner_product(const SampledFunction& a, const SampledFunction& b);

double grid_norm(const SampledFunction& a);

// d/dtheta at theta=0 via the 4th-order central stencil
// (-f[2h] + 8 f[h] - 8 f[-h] + f[-2h]) / (12 h), evaluated pointwise.
SampledFunction numeric_derivative(const std::function<SampledFunction(double)>& family_eval,
                                   double h);

// Scalar version of the same stencil, for d/ds of overlap integrals.
double numeric_derivative_scalar(const std::function<double(double)>& f, double h);

// Default per-axis quadrature resolution; MODEQFI_QUAD_N overrides.
int default_quad_points();

} // namespace modeqfi
