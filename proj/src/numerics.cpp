#include "modeqfi/numerics.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace modeqfi {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
// Legendre recurrence (standard construction, accurate to ~1e-15).
void gauss_legendre_reference(int n, std::vector<double>& x, std::vector<double>& w)
{
    constexpr double eps = 1e-15;
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double z_prev = 2.0;
        double dp = 0.0;
        int guard = 0;
        while (std::abs(z - z_prev) > eps && guard++ < 200) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            dp = n * (z * p1 - p2) / (z * z - 1.0);
            z_prev = z;
            z = z_prev - p1 / dp;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
}

void scaled_axis(GridKind kind, double lo, double hi, int n,
                 std::vector<double>& pts, std::vector<double>& wts)
{
    if (kind == GridKind::gauss_legendre) {
        gauss_legendre_reference(n, pts, wts);
        const double mid = 0.5 * (hi + lo);
        const double half = 0.5 * (hi - lo);
        for (int i = 0; i < n; ++i) {
            pts[i] = mid + half * pts[i];
            wts[i] *= half;
        }
    } else {
        pts.resize(n);
        wts.resize(n);
        const double h = (hi - lo) / (n - 1);
        for (int i = 0; i < n; ++i) {
            pts[i] = lo + h * i;
            wts[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
        }
    }
}

} // namespace

void CoordinateGrid::finalize()
{
    measure_ = 1.0;
    std::size_t total = 1;
    for (int a = 0; a < dimension_; ++a) {
        double span = 0.0;
        for (double w : axis_weights_[a]) {
            if (!(w > 0.0))
                throw NumericalError("invalid-weights", "quadrature weights must be positive");
            span += w;
        }
        for (std::size_t i = 1; i < axis_points_[a].size(); ++i)
            if (!(axis_points_[a][i] > axis_points_[a][i - 1]))
                throw ValidationError("invalid-nodes", "grid nodes must be strictly increasing");
        measure_ *= span;
        total *= axis_points_[a].size();
    }

    flat_weights_.resize(static_cast<Eigen::Index>(total));
    if (dimension_ == 1) {
        for (std::size_t p = 0; p < total; ++p)
            flat_weights_[static_cast<Eigen::Index>(p)] = axis_weights_[0][p];
    } else {
        const std::size_t ny = axis_points_[1].size();
        for (std::size_t p = 0; p < total; ++p)
            flat_weights_[static_cast<Eigen::Index>(p)] =
                axis_weights_[0][p / ny] * axis_weights_[1][p % ny];
    }

    const double covered = flat_weights_.sum();
    if (std::abs(covered - measure_) > 1e-12 * std::max(1.0, std::abs(measure_)))
        throw NumericalError("measure-mismatch", "weights do not sum to the domain measure");
}

double CoordinateGrid::x(std::size_t p) const
{
    if (dimension_ == 1)
        return axis_points_[0][p];
    return axis_points_[0][p / axis_points_[1].size()];
}

double CoordinateGrid::y(std::size_t p) const
{
    if (dimension_ != 2)
        throw ValidationError("dimension-mismatch", "y() requires a 2D grid");
    return axis_points_[1][p % axis_points_[1].size()];
}

const std::vector<double>& CoordinateGrid::axis_points(int axis) const
{
    return axis_points_.at(static_cast<std::size_t>(axis));
}

const std::vector<double>& CoordinateGrid::axis_weights(int axis) const
{
    return axis_weights_.at(static_cast<std::size_t>(axis));
}

bool CoordinateGrid::operator==(const CoordinateGrid& other) const
{
    return dimension_ == other.dimension_ && axis_points_ == other.axis_points_ &&
           axis_weights_ == other.axis_weights_;
}

GridPtr make_grid(GridKind kind, double lo, double hi, int n, int dimension)
{
    if (!(lo < hi))
        throw ValidationError("invalid-bounds", "grid requires lo < hi");
    if (n < 8)
        throw ValidationError("too-coarse", "grid requires at least 8 points per axis");
    if (dimension != 1 && dimension != 2)
        throw ValidationError("dimension-mismatch", "grids are 1D or 2D");

    auto grid = std::shared_ptr<CoordinateGrid>(new CoordinateGrid());
    grid->dimension_ = dimension;
    grid->axis_points_.resize(dimension);
    grid->axis_weights_.resize(dimension);
    for (int a = 0; a < dimension; ++a)
        scaled_axis(kind, lo, hi, n, grid->axis_points_[a], grid->axis_weights_[a]);
    grid->finalize();
    return grid;
}

GridPtr make_periodic_grid(double lo, double hi, int n)
{
    if (!(lo < hi))
        throw ValidationError("invalid-bounds", "grid requires lo < hi");
    if (n < 8)
        throw ValidationError("too-coarse", "grid requires at least 8 points");

    auto grid = std::shared_ptr<CoordinateGrid>(new CoordinateGrid());
    grid->dimension_ = 1;
    grid->axis_points_.resize(1);
    grid->axis_weights_.resize(1);
    const double h = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
        grid->axis_points_[0].push_back(lo + h * i);
        grid->axis_weights_[0].push_back(h);
    }
    grid->finalize();
    return grid;
}

GridPtr make_grid_from_nodes(const std::vector<double>& nodes)
{
    if (nodes.size() < 8)
        throw ValidationError("too-coarse", "need at least 8 sample nodes");

    auto grid = std::shared_ptr<CoordinateGrid>(new CoordinateGrid());
    grid->dimension_ = 1;
    grid->axis_points_.assign(1, nodes);
    std::vector<double> w(nodes.size());
    const std::size_t n = nodes.size();
    w[0] = 0.5 * (nodes[1] - nodes[0]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        w[i] = 0.5 * (nodes[i + 1] - nodes[i - 1]);
    w[n - 1] = 0.5 * (nodes[n - 1] - nodes[n - 2]);
    grid->axis_weights_.assign(1, std::move(w));
    grid->finalize();
    return grid;
}

SampledFunction::SampledFunction(GridPtr grid, Eigen::VectorXcd values)
    : grid_(std::move(grid)), values_(std::move(values))
{
    if (!grid_)
        throw ValidationError("grid-mismatch", "sampled function requires a grid");
    if (static_cast<std::size_t>(values_.size()) != grid_->size())
        throw ValidationError("grid-mismatch", "value count does not match grid size");
    for (Eigen::Index i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i].real()) || !std::isfinite(values_[i].imag()))
            throw NumericalError("non-finite", "sampled function contains NaN/Inf");
}

namespace {

void require_same_grid(const SampledFunction& a, const SampledFunction& b)
{
    if (a.grid_ptr() == b.grid_ptr())
        return;
    if (!(a.grid() == b.grid()))
        throw ValidationError("grid-mismatch", "operands sampled on different grids");
}

} // namespace

Complex inner_product(const SampledFunction& a, const SampledFunction& b)
{
    require_same_grid(a, b);
    const Eigen::ArrayXcd prod = a.values().conjugate().cwiseProduct(b.values()).array();
    return (prod * a.grid().weights().cast<Complex>()).sum();
}

double grid_norm(const SampledFunction& a)
{
    return std::sqrt(std::max(0.0, inner_product(a, a).real()));
}

SampledFunction numeric_derivative(const std::function<SampledFunction(double)>& family_eval,
                                   double h)
{
    if (!(h > 0.0))
        throw ValidationError("invalid-step", "derivative step must be positive");

    const SampledFunction f2p = family_eval(2.0 * h);
    const SampledFunction fp = family_eval(h);
    const SampledFunction fm = family_eval(-h);
    const SampledFunction f2m = family_eval(-2.0 * h);
    require_same_grid(f2p, fp);
    require_same_grid(fp, fm);
    require_same_grid(fm, f2m);

    Eigen::VectorXcd v =
        (-f2p.values() + 8.0 * fp.values() - 8.0 * fm.values() + f2m.values()) / (12.0 * h);
    return SampledFunction(fp.grid_ptr(), std::move(v));
}

double numeric_derivative_scalar(const std::function<double(double)>& f, double h)
{
    if (!(h > 0.0))
        throw ValidationError("invalid-step", "derivative step must be positive");
    return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

int default_quad_points()
{
    if (const char* env = std::getenv("MODEQFI_QUAD_N")) {
        const int n = std::atoi(env);
        if (n >= 8)
            return n;
    }
    return 200;
}

} // namespace modeqfi
