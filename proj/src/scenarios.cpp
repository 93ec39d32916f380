#include "modeqfi/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace modeqfi {

namespace {

double param_double(const Params& p, const std::string& key, double fallback)
{
    auto it = p.find(key);
    if (it == p.end())
        return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ValidationError("validation", "parameter '" + key + "' is not a number: '" +
                                                it->second + "'");
    }
}

int param_int(const Params& p, const std::string& key, int fallback)
{
    const double v = param_double(p, key, fallback);
    if (v != std::floor(v))
        throw ValidationError("validation", "parameter '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::string param_str(const Params& p, const std::string& key, const std::string& fallback)
{
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown_keys(const Params& p, const std::vector<std::string>& allowed,
                         const std::string& scenario)
{
    for (const auto& [key, value] : p)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError("validation", "scenario '" + scenario +
                                                    "' does not accept parameter '" + key + "'");
}

Eigen::VectorXcd sample_1d(const CoordinateGrid& grid,
                           const std::function<Complex(double)>& fn)
{
    Eigen::VectorXcd v(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t p = 0; p < grid.size(); ++p)
        v[static_cast<Eigen::Index>(p)] = fn(grid.x(p));
    return v;
}

Eigen::VectorXcd sample_2d(const CoordinateGrid& grid,
                           const std::function<Complex(double, double)>& fn)
{
    Eigen::VectorXcd v(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t p = 0; p < grid.size(); ++p)
        v[static_cast<Eigen::Index>(p)] = fn(grid.x(p), grid.y(p));
    return v;
}

// Natural cubic spline for sampled PSFs; zero outside the sample range.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)), m_(x_.size(), 0.0)
    {
        const std::size_t n = x_.size();
        std::vector<double> a(n, 0.0), b(n, 2.0), c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            a[i] = h0 / (h0 + h1);
            c[i] = h1 / (h0 + h1);
            d[i] = 6.0 / (h0 + h1) *
                   ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        m_[n - 1] = d[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;)
            m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }

    double value(double x) const
    {
        const auto seg = segment(x);
        if (!seg)
            return 0.0;
        const auto [i, h, t] = *seg;
        const double u = 1.0 - t;
        return u * y_[i] + t * y_[i + 1] +
               h * h / 6.0 * ((u * u * u - u) * m_[i] + (t * t * t - t) * m_[i + 1]);
    }

    double derivative(double x) const
    {
        const auto seg = segment(x);
        if (!seg)
            return 0.0;
        const auto [i, h, t] = *seg;
        const double u = 1.0 - t;
        return (y_[i + 1] - y_[i]) / h +
               h / 6.0 * ((3.0 * t * t - 1.0) * m_[i + 1] - (3.0 * u * u - 1.0) * m_[i]);
    }

private:
    std::optional<std::tuple<std::size_t, double, double>> segment(double x) const
    {
        if (x < x_.front() || x > x_.back())
            return std::nullopt;
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.end() ? x_.size() - 2 : static_cast<std::size_t>(it - x_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        return std::make_tuple(i, h, (x - x_[i]) / h);
    }

    std::vector<double> x_, y_, m_;
};

// ---------------------------------------------------------------------------
// Hermite-Gauss machinery

double hermite_function(int n, double u)
{
    // h_n(u) = H_n(u) exp(-u^2/2) / sqrt(2^n n! sqrt(pi)), stable recurrence.
    const double h0 = std::exp(-0.5 * u * u) / std::pow(M_PI, 0.25);
    if (n == 0)
        return h0;
    double prev = h0;
    double cur = std::sqrt(2.0) * u * h0;
    for (int m = 2; m <= n; ++m) {
        const double next =
            u * std::sqrt(2.0 / m) * cur - std::sqrt((m - 1.0) / m) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

} // namespace

double hermite_gauss(int n, double w, double x)
{
    if (n < 0 || w <= 0.0)
        throw ValidationError("unphysical-params", "hermite_gauss needs n >= 0 and w > 0");
    return std::sqrt(std::sqrt(2.0) / w) * hermite_function(n, std::sqrt(2.0) * x / w);
}

namespace {

// d/dx of the 1D mode: (1/w) (sqrt(n) f_{n-1} - sqrt(n+1) f_{n+1}).
double hermite_gauss_dx(int n, double w, double x)
{
    const double lower = n > 0 ? std::sqrt(static_cast<double>(n)) * hermite_gauss(n - 1, w, x)
                               : 0.0;
    return (lower - std::sqrt(n + 1.0) * hermite_gauss(n + 1, w, x)) / w;
}

// d/dw of the 1D mode: (1/2w) (sqrt((n+1)(n+2)) f_{n+2} - sqrt(n(n-1)) f_{n-2}).
double hermite_gauss_dw(int n, double w, double x)
{
    const double upper = std::sqrt((n + 1.0) * (n + 2.0)) * hermite_gauss(n + 2, w, x);
    const double lower =
        n >= 2 ? std::sqrt(n * (n - 1.0)) * hermite_gauss(n - 2, w, x) : 0.0;
    return (upper - lower) / (2.0 * w);
}

// ---------------------------------------------------------------------------
// Mode family builders

ModeFamily displaced_gaussian_family(double w)
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -8.0 * w, 8.0 * w, default_quad_points(), 1);
    fam.labels = {"f1"};
    fam.populated = {0};
    fam.length_scale = w;
    fam.eval = [grid = fam.grid, w](std::size_t, double theta) {
        return SampledFunction(
            grid, sample_1d(*grid, [&](double x) { return Complex(hermite_gauss(0, w, x + theta)); }));
    };
    fam.analytic_derivative = [grid = fam.grid, w](std::size_t) {
        return SampledFunction(
            grid, sample_1d(*grid, [&](double x) { return Complex(hermite_gauss_dx(0, w, x)); }));
    };
    return fam;
}

ModeFamily oam_family(int ell)
{
    ModeFamily fam;
    fam.grid = make_periodic_grid(0.0, 2.0 * M_PI, std::max(default_quad_points(), 64));
    fam.labels = {"f1"};
    fam.populated = {0};
    fam.length_scale = 1.0;
    const double norm = 1.0 / std::sqrt(2.0 * M_PI);
    fam.eval = [grid = fam.grid, ell, norm](std::size_t, double theta) {
        return SampledFunction(grid, sample_1d(*grid, [&](double phi) {
                                   return norm * std::exp(Complex(0.0, -ell * (phi + theta)));
                               }));
    };
    fam.analytic_derivative = [grid = fam.grid, ell, norm](std::size_t) {
        return SampledFunction(grid, sample_1d(*grid, [&](double phi) {
                                   return Complex(0.0, -ell) * norm *
                                          std::exp(Complex(0.0, -ell * phi));
                               }));
    };
    return fam;
}

// Envelope A(x + theta) times the translated linear phase exp(-i rate (x - x0 + theta)).
// Covers both the spectral (rate = T) and temporal (rate = omega0) cases.
ModeFamily envelope_phase_family(double width, double rate, double x0)
{
    ModeFamily fam;
    fam.grid =
        make_grid(GridKind::gauss_legendre, -8.0 * width, 8.0 * width, default_quad_points(), 1);
    fam.labels = {"f1"};
    fam.populated = {0};
    fam.length_scale = width;
    fam.eval = [grid = fam.grid, width, rate, x0](std::size_t, double theta) {
        return SampledFunction(grid, sample_1d(*grid, [&](double x) {
                                   return hermite_gauss(0, width, x + theta) *
                                          std::exp(Complex(0.0, -rate * (x - x0 + theta)));
                               }));
    };
    fam.analytic_derivative = [grid = fam.grid, width, rate, x0](std::size_t) {
        return SampledFunction(grid, sample_1d(*grid, [&](double x) {
                                   const Complex phase = std::exp(Complex(0.0, -rate * (x - x0)));
                                   return (hermite_gauss_dx(0, width, x) +
                                           Complex(0.0, -rate) * hermite_gauss(0, width, x)) *
                                          phase;
                               }));
    };
    return fam;
}

// HG00 under transverse displacement plus its normalized derivative mode
// -HG10. Both populated.
ModeFamily hg_displacement_family(double w)
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -8.0 * w, 8.0 * w, default_quad_points(), 2);
    fam.labels = {"hg00", "-hg10"};
    fam.populated = {0, 1};
    fam.length_scale = w;
    fam.eval = [grid = fam.grid, w](std::size_t k, double theta) {
        return SampledFunction(grid, sample_2d(*grid, [&](double x, double y) {
            const double gy = hermite_gauss(0, w, y);
            if (k == 0)
                return Complex(hermite_gauss(0, w, x + theta) * gy);
            return Complex(-hermite_gauss(1, w, x + theta) * gy);
        }));
    };
    fam.analytic_derivative = [grid = fam.grid, w](std::size_t k) {
        return SampledFunction(grid, sample_2d(*grid, [&](double x, double y) {
            const double gy = hermite_gauss(0, w, y);
            if (k == 0)
                return Complex(hermite_gauss_dx(0, w, x) * gy);
            return Complex(-hermite_gauss_dx(1, w, x) * gy);
        }));
    };
    return fam;
}

// HG00 under waist variation plus its normalized derivative mode
// (HG20 + HG02)/sqrt(2). The whole family deforms with the waist.
ModeFamily hg_waist_family(double w)
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -9.0 * w, 9.0 * w, default_quad_points(), 2);
    fam.labels = {"hg00", "(hg20+hg02)/sqrt2"};
    fam.populated = {0, 1};
    fam.length_scale = w;
    fam.eval = [grid = fam.grid, w](std::size_t k, double theta) {
        const double wt = w + theta;
        return SampledFunction(grid, sample_2d(*grid, [&](double x, double y) {
            if (k == 0)
                return Complex(hermite_gauss(0, wt, x) * hermite_gauss(0, wt, y));
            return Complex((hermite_gauss(2, wt, x) * hermite_gauss(0, wt, y) +
                            hermite_gauss(0, wt, x) * hermite_gauss(2, wt, y)) /
                           std::sqrt(2.0));
        }));
    };
    fam.analytic_derivative = [grid = fam.grid, w](std::size_t k) {
        return SampledFunction(grid, sample_2d(*grid, [&](double x, double y) {
            const double f0x = hermite_gauss(0, w, x), f0y = hermite_gauss(0, w, y);
            const double d0x = hermite_gauss_dw(0, w, x), d0y = hermite_gauss_dw(0, w, y);
            if (k == 0)
                return Complex(d0x * f0y + f0x * d0y);
            const double f2x = hermite_gauss(2, w, x), f2y = hermite_gauss(2, w, y);
            const double d2x = hermite_gauss_dw(2, w, x), d2y = hermite_gauss_dw(2, w, y);
            return Complex((d2x * f0y + f2x * d0y + d0x * f2y + f0x * d2y) / std::sqrt(2.0));
        }));
    };
    return fam;
}

// Interferometer arms mixed with phase theta: f_{1,2} = (g1 e^{-i theta/2}
// +- g2 e^{i theta/2}) / sqrt(2) over two fixed orthonormal carriers.
ModeFamily mach_zehnder_family()
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -8.0, 8.0, default_quad_points(), 1);
    fam.labels = {"f1", "f2"};
    fam.populated = {0, 1};
    fam.length_scale = 1.0;
    fam.eval = [grid = fam.grid](std::size_t k, double theta) {
        const Complex em = std::exp(Complex(0.0, -0.5 * theta));
        const Complex ep = std::exp(Complex(0.0, 0.5 * theta));
        const double sign = k == 0 ? 1.0 : -1.0;
        return SampledFunction(grid, sample_1d(*grid, [&](double x) {
                                   return (em * hermite_gauss(0, 1.0, x) +
                                           sign * ep * hermite_gauss(1, 1.0, x)) /
                                          std::sqrt(2.0);
                               }));
    };
    fam.analytic_derivative = [grid = fam.grid](std::size_t k) {
        // f1' = -(i/2) f2, f2' = -(i/2) f1
        const std::size_t other = k == 0 ? 1 : 0;
        const double sign = other == 0 ? 1.0 : -1.0;
        return SampledFunction(grid, sample_1d(*grid, [&](double x) {
                                   return Complex(0.0, -0.5) *
                                          ((hermite_gauss(0, 1.0, x) +
                                            sign * hermite_gauss(1, 1.0, x)) /
                                           std::sqrt(2.0));
                               }));
    };
    return fam;
}

double rms_width(const SampledFunction& u)
{
    const Eigen::ArrayXd w = u.grid().weights();
    Eigen::ArrayXd u2(w.size());
    Eigen::ArrayXd x(w.size());
    for (std::size_t p = 0; p < u.grid().size(); ++p) {
        u2[static_cast<Eigen::Index>(p)] = std::norm(u.values()[static_cast<Eigen::Index>(p)]);
        x[static_cast<Eigen::Index>(p)] = u.grid().x(p);
    }
    const double total = (w * u2).sum();
    const double mean = (w * x * u2).sum() / total;
    const double var = (w * (x - mean).square() * u2).sum() / total;
    return std::sqrt(std::max(var, 0.0));
}

PsfScenario finish_psf(std::function<double(double)> u_raw, std::function<double(double)> du_raw,
                       GridPtr grid, double s, double eta, double mean_photons, double k_phase)
{
    if (!(s > 0.0))
        throw ValidationError("unphysical-params", "separation s must be > 0");
    if (!(eta > 0.0 && eta <= 1.0))
        throw ValidationError("unphysical-params", "eta must lie in (0, 1]");
    if (!(mean_photons >= 0.0))
        throw ValidationError("unphysical-params", "mean photon number must be >= 0");
    if (!std::isfinite(k_phase))
        throw ValidationError("unphysical-params", "k must be finite");

    // Normalize the amplitude by quadrature so downstream identities hold.
    double norm2 = 0.0;
    for (std::size_t p = 0; p < grid->size(); ++p)
        norm2 += grid->weight(p) * u_raw(grid->x(p)) * u_raw(grid->x(p));
    if (!(norm2 > 0.0))
        throw ValidationError("unphysical-params", "PSF amplitude has zero norm");
    const double scale = 1.0 / std::sqrt(norm2);

    PsfScenario psf{
        SampledFunction(grid, sample_1d(*grid, [&](double x) { return Complex(scale * u_raw(x)); })),
        [u_raw, scale](double x) { return scale * u_raw(x); },
        [du_raw, scale](double x) { return scale * du_raw(x); },
        k_phase,
        s,
        eta,
        mean_photons};

    const auto amplitude_overlap = [&](double sep) {
        double acc = 0.0;
        for (std::size_t p = 0; p < grid->size(); ++p) {
            const double x = grid->x(p);
            acc += grid->weight(p) * psf.u_of_x(x - 0.5 * sep) * psf.u_of_x(x + 0.5 * sep);
        }
        return acc;
    };

    const double overlap = amplitude_overlap(s);
    psf.delta_abs = std::abs(overlap);
    if (psf.delta_abs > 1.0 - 1e-12)
        throw NumericalError("degenerate-separation",
                             "source modes nearly coincide, |delta| = " +
                                 std::to_string(psf.delta_abs));
    psf.delta = std::polar(1.0, -k_phase * s) * overlap;

    const double h = 1e-4 * rms_width(psf.u);
    psf.gamma = numeric_derivative_scalar(
        [&](double d) { return std::abs(amplitude_overlap(s + d)); }, h);

    double beta = 0.0, dp2 = 0.0;
    for (std::size_t p = 0; p < grid->size(); ++p) {
        const double x = grid->x(p);
        const double w = grid->weight(p);
        beta += w * psf.du_of_x(x - 0.5 * s) * psf.du_of_x(x + 0.5 * s);
        dp2 += w * psf.du_of_x(x) * psf.du_of_x(x);
    }
    psf.beta = beta;
    psf.dp2 = dp2;
    psf.nplus = eta * (1.0 + psf.delta_abs) * mean_photons;
    psf.nminus = eta * (1.0 - psf.delta_abs) * mean_photons;
    return psf;
}

} // namespace

PsfScenario make_gaussian_psf_scenario(double sigma, double s, double eta, double mean_photons,
                                       double k_phase)
{
    if (!(sigma > 0.0))
        throw ValidationError("unphysical-params", "PSF width must be > 0");
    const double span = 8.0 * sigma + s;
    GridPtr grid = make_grid(GridKind::gauss_legendre, -span, span, default_quad_points(), 1);
    const double norm = std::pow(2.0 * M_PI * sigma * sigma, -0.25);
    auto u = [norm, sigma](double x) { return norm * std::exp(-x * x / (4.0 * sigma * sigma)); };
    auto du = [u, sigma](double x) { return -x / (2.0 * sigma * sigma) * u(x); };
    return finish_psf(u, du, grid, s, eta, mean_photons, k_phase);
}

PsfScenario make_psf_scenario_from_samples(const SampledFunction& u, double s, double eta,
                                           double mean_photons, double k_phase)
{
    if (u.grid().dimension() != 1)
        throw ValidationError("validation", "sampled PSFs must be one-dimensional");
    const double imag = u.values().imag().cwiseAbs().maxCoeff();
    if (imag > 1e-10 * std::max(1.0, u.values().cwiseAbs().maxCoeff()))
        throw ValidationError("validation", "PSF amplitude must be real");

    std::vector<double> xs = u.grid().axis_points(0);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        ys[i] = u.values()[static_cast<Eigen::Index>(i)].real();
    auto spline = std::make_shared<CubicSpline>(std::move(xs), std::move(ys));
    return finish_psf([spline](double x) { return spline->value(x); },
                      [spline](double x) { return spline->derivative(x); }, u.grid_ptr(), s, eta,
                      mean_photons, k_phase);
}

ModeFamily superresolution_family(const PsfScenario& psf)
{
    ModeFamily fam;
    fam.grid = psf.u.grid_ptr();
    fam.labels = {"f+", "f-"};
    fam.populated = {0, 1};
    fam.length_scale = rms_width(psf.u);
    fam.eval = [u = psf.u_of_x, k = psf.k_phase, s = psf.s, grid = fam.grid](std::size_t mode,
                                                                             double theta) {
        const double sep = s + theta;
        double overlap = 0.0;
        for (std::size_t p = 0; p < grid->size(); ++p) {
            const double x = grid->x(p);
            overlap += grid->weight(p) * u(x - 0.5 * sep) * u(x + 0.5 * sep);
        }
        const double mag = std::abs(overlap);
        const Complex unit_delta =
            std::polar(1.0, -k * sep) * (mag > 0.0 ? overlap / mag : 1.0);
        const double sign = mode == 0 ? 1.0 : -1.0;
        const double denom = std::sqrt(2.0 * (1.0 + sign * mag));
        return SampledFunction(grid, sample_1d(*grid, [&](double x) {
            const Complex right =
                std::exp(Complex(0.0, -k * (x + 0.5 * sep))) * u(x + 0.5 * sep);
            const Complex left =
                std::exp(Complex(0.0, -k * (x - 0.5 * sep))) * u(x - 0.5 * sep);
            return (right + sign * unit_delta * left) / denom;
        }));
    };
    return fam;
}

OverlapData superresolution_overlaps(const PsfScenario& psf)
{
    return compute_overlaps(superresolution_family(psf));
}

double superresolution_closed_form(const PsfScenario& psf)
{
    const double en = psf.eta * psf.mean_photons;
    const double d2 = psf.delta_abs * psf.delta_abs;
    const double denom = (1.0 + en) * (1.0 + en) - en * en * d2;
    return 2.0 * en * (psf.dp2 - en * (1.0 + en) * psf.gamma * psf.gamma / denom);
}

DensityOperator thermal_pair_state(const PsfScenario& psf, const FockOperatorSpace& space,
                                   bool with_population_derivatives)
{
    if (space.n_modes() != 2)
        throw ValidationError("dimension-mismatch", "thermal pair state needs a 2-mode space");
    const DensityOperator state = build_state(
        StateSpec::product({StateSpec::thermal(psf.nplus), StateSpec::thermal(psf.nminus)}),
        space);
    if (!with_population_derivatives)
        return state;

    // dN+- / dtheta = +- eta gamma N; the log-derivative of a geometric
    // population with mean M is n/M - (n+1)/(M+1).
    const double dn = psf.eta * psf.gamma * psf.mean_photons;
    const auto rate = [](int n, double mean) {
        return (n == 0 ? 0.0 : n / mean) - (n + 1.0) / (mean + 1.0);
    };

    Eigen::VectorXd dp(state.rank());
    for (Eigen::Index c = 0; c < state.rank(); ++c) {
        Eigen::Index row = 0;
        state.eigenvectors().col(c).cwiseAbs().maxCoeff(&row);
        const int n = state.space().occupation(static_cast<std::size_t>(row), 0);
        const int m = state.space().occupation(static_cast<std::size_t>(row), 1);
        dp[c] = state.eigenvalues()[c] *
                (rate(n, psf.nplus) * dn - rate(m, psf.nminus) * dn);
    }
    dp -= state.eigenvalues() * dp.sum(); // derivative of the renormalized populations
    return state.with_population_derivatives(dp);
}

QfiReport superresolution_thermal_qfi(const PsfScenario& psf)
{
    const double d = psf.delta_abs;
    const double g2 = psf.gamma * psf.gamma;
    const double en = psf.eta * psf.mean_photons;

    const double classical =
        2.0 * en *
        (g2 / (2.0 * (1.0 + d) * (1.0 + psf.nplus)) +
         g2 / (2.0 * (1.0 - d) * (1.0 + psf.nminus)));

    const double coeff_plus = (psf.dp2 - psf.beta - g2 / (1.0 + d)) / (1.0 + d);
    const double coeff_minus = (psf.dp2 + psf.beta - g2 / (1.0 - d)) / (1.0 - d);
    const double vacuum = coeff_plus * psf.nplus + coeff_minus * psf.nminus;

    double unitary = 0.0;
    if (psf.k_phase != 0.0) {
        const StateSpec recipe = StateSpec::product(
            {StateSpec::thermal(psf.nplus), StateSpec::thermal(psf.nminus)});
        const FockOperatorSpace space(adequate_cutoffs(recipe));
        const DensityOperator state = thermal_pair_state(psf, space, false);
        const Eigen::MatrixXcd h =
            0.5 * psf.k_phase * Eigen::MatrixXcd::Identity(2, 2);
        unitary = unitary_qfi(state, QuadraticHamiltonian(space, h));
    }

    std::ostringstream meta;
    meta << "superresolution thermal s=" << psf.s << " eta=" << psf.eta
         << " N=" << psf.mean_photons << " k=" << psf.k_phase;
    return QfiReport::make(classical, unitary, vacuum, meta.str());
}

// ---------------------------------------------------------------------------
// Scenario assembly

namespace {

double recipe_number_variance(const StateSpec& spec)
{
    switch (spec.kind) {
    case StateSpec::Kind::coherent:
        return std::norm(spec.alpha);
    case StateSpec::Kind::thermal:
        return spec.mean * (spec.mean + 1.0);
    case StateSpec::Kind::squeezed_vacuum: {
        const double sh = std::sinh(spec.r);
        const double ch = std::cosh(spec.r);
        return 2.0 * sh * sh * ch * ch;
    }
    case StateSpec::Kind::fock_superposition: {
        double norm = 0.0, m1 = 0.0, m2 = 0.0;
        for (const auto& [level, amp] : spec.amplitudes) {
            const double p = std::norm(amp);
            norm += p;
            m1 += p * level;
            m2 += p * level * level;
        }
        m1 /= norm;
        m2 /= norm;
        return m2 - m1 * m1;
    }
    case StateSpec::Kind::product: {
        double total = 0.0;
        for (const auto& f : spec.factors)
            total += recipe_number_variance(f);
        return total;
    }
    }
    throw ValidationError("validation", "unknown state kind");
}

// F_Q[rho, N] for the single-mode recipes with a simple closed form.
std::optional<double> closed_form_number_qfi(const StateSpec& spec)
{
    switch (spec.kind) {
    case StateSpec::Kind::coherent:
        return 4.0 * std::norm(spec.alpha);
    case StateSpec::Kind::fock_superposition:
        return 4.0 * recipe_number_variance(spec);
    case StateSpec::Kind::squeezed_vacuum:
        return 4.0 * recipe_number_variance(spec);
    case StateSpec::Kind::thermal:
        return 0.0; // number-diagonal
    case StateSpec::Kind::product:
        return std::nullopt;
    }
    return std::nullopt;
}

StateSpec parse_single_state(const Params& p, const std::string& kind_key,
                             const std::string& n_key, const std::string& default_kind,
                             double default_squeeze_phase)
{
    const std::string kind = param_str(p, kind_key, default_kind);
    const double n = param_double(p, n_key, 4.0);
    if (kind == "vacuum")
        return StateSpec::vacuum();
    if (kind == "coherent") {
        if (n < 0.0)
            throw ValidationError("unphysical-params", "mean photon number must be >= 0");
        return StateSpec::coherent(std::sqrt(n));
    }
    if (kind == "fock") {
        if (n < 0.0 || n != std::floor(n))
            throw ValidationError("unphysical-params", "Fock level must be a non-negative integer");
        return StateSpec::fock(static_cast<int>(n));
    }
    if (kind == "fock-superposition") {
        if (n <= 0.0 || n != std::floor(n))
            throw ValidationError("unphysical-params",
                                  "fock-superposition needs a positive integer N");
        const Complex amp(1.0 / std::sqrt(2.0), 0.0);
        return StateSpec::fock_superposition({{0, amp}, {static_cast<int>(n), amp}});
    }
    if (kind == "thermal") {
        if (n < 0.0)
            throw ValidationError("unphysical-params", "thermal mean must be >= 0");
        return StateSpec::thermal(n);
    }
    if (kind == "squeezed") {
        const double r = param_double(p, "r", 1.0);
        if (r < 0.0)
            throw ValidationError("unphysical-params", "squeeze parameter must be >= 0");
        return StateSpec::squeezed_vacuum(r, param_double(p, "phase", default_squeeze_phase));
    }
    throw ValidationError("validation", "unknown state kind '" + kind + "'");
}

FockOperatorSpace uniform_space(const StateSpec& recipe)
{
    const std::vector<int> per_mode = adequate_cutoffs(recipe);
    int c = 1;
    for (int v : per_mode)
        c = std::max(c, v);
    return FockOperatorSpace(static_cast<int>(per_mode.size()), c);
}

std::string describe_params(const Params& p)
{
    std::ostringstream out;
    for (const auto& [key, value] : p)
        out << " " << key << "=" << value;
    return out.str();
}

} // namespace

double recipe_mean_occupation(const StateSpec& spec)
{
    switch (spec.kind) {
    case StateSpec::Kind::coherent:
        return std::norm(spec.alpha);
    case StateSpec::Kind::thermal:
        return spec.mean;
    case StateSpec::Kind::squeezed_vacuum:
        return std::pow(std::sinh(spec.r), 2);
    case StateSpec::Kind::fock_superposition: {
        double norm = 0.0, mean = 0.0;
        for (const auto& [level, amp] : spec.amplitudes) {
            norm += std::norm(amp);
            mean += std::norm(amp) * level;
        }
        return mean / norm;
    }
    case StateSpec::Kind::product: {
        double total = 0.0;
        for (const auto& f : spec.factors)
            total += recipe_mean_occupation(f);
        return total;
    }
    }
    throw ValidationError("validation", "unknown state kind");
}

std::vector<std::string> scenario_names()
{
    return {"displaced-gaussian", "hg-displacement", "hg-waist",          "mach-zehnder",
            "oam-linear-phase",   "pulsed-time",     "spectroscopy-frequency",
            "superresolution"};
}

Scenario build_scenario(const std::string& name, const Params& params)
{
    if (name == "displaced-gaussian") {
        reject_unknown_keys(params, {"w", "state", "N", "r", "phase"}, name);
        const double w = param_double(params, "w", 1.0);
        if (!(w > 0.0))
            throw ValidationError("unphysical-params", "waist must be > 0");
        StateSpec recipe = parse_single_state(params, "state", "N", "coherent", 0.0);
        const double mean = recipe_mean_occupation(recipe);
        return Scenario{name,
                        "transverse displacement of a Gaussian beam; bound 4<N>/w^2",
                        displaced_gaussian_family(w),
                        recipe,
                        uniform_space(recipe),
                        4.0 * mean / (w * w),
                        std::nullopt,
                        params};
    }

    if (name == "oam-linear-phase") {
        reject_unknown_keys(params, {"ell", "state", "N", "r", "phase"}, name);
        const int ell = param_int(params, "ell", 1);
        StateSpec recipe = parse_single_state(params, "state", "N", "fock-superposition", 0.0);
        const auto fn = closed_form_number_qfi(recipe);
        return Scenario{name,
                        "rotation of a phase winding exp(-i ell phi); generator ell N",
                        oam_family(ell),
                        recipe,
                        uniform_space(recipe),
                        fn ? std::optional<double>(ell * static_cast<double>(ell) * *fn)
                           : std::nullopt,
                        std::nullopt,
                        params};
    }

    if (name == "spectroscopy-frequency" || name == "pulsed-time") {
        const bool spectral = name == "spectroscopy-frequency";
        reject_unknown_keys(params,
                            spectral
                                ? std::vector<std::string>{"T", "sigma", "omega0", "state", "N",
                                                           "r", "phase"}
                                : std::vector<std::string>{"omega0", "tau", "state", "N", "r",
                                                           "phase"},
                            name);
        const double rate = spectral ? param_double(params, "T", 1.0)
                                     : param_double(params, "omega0", 1.0);
        const double width = spectral ? param_double(params, "sigma", 1.0)
                                      : param_double(params, "tau", 1.0);
        const double x0 = spectral ? param_double(params, "omega0", 0.0) : 0.0;
        if (!(width > 0.0))
            throw ValidationError("unphysical-params", "envelope width must be > 0");
        StateSpec recipe = parse_single_state(params, "state", "N", "coherent", 0.0);
        const double mean = recipe_mean_occupation(recipe);
        const auto fn = closed_form_number_qfi(recipe);
        std::optional<double> closed;
        if (fn)
            closed = rate * rate * *fn + 4.0 * mean / (width * width);
        return Scenario{name,
                        spectral ? "center-frequency shift of a pulsed spectrum; generator T N"
                                 : "temporal translation of a pulsed carrier; generator omega0 N",
                        envelope_phase_family(width, rate, x0),
                        recipe,
                        uniform_space(recipe),
                        closed,
                        std::nullopt,
                        params};
    }

    if (name == "hg-displacement" || name == "hg-waist") {
        reject_unknown_keys(params, {"w", "state", "N", "state2", "N2", "r", "phase"}, name);
        const double w = param_double(params, "w", 1.0);
        if (!(w > 0.0))
            throw ValidationError("unphysical-params", "waist must be > 0");
        const StateSpec first = parse_single_state(params, "state", "N", "coherent", 0.0);
        const StateSpec second = parse_single_state(params, "state2", "N2", "vacuum", 0.0);
        StateSpec recipe = StateSpec::product({first, second});

        const double vac_weight = name == "hg-displacement" ? 8.0 : 16.0;
        std::optional<double> closed;
        if (first.kind == StateSpec::Kind::coherent &&
            second.kind == StateSpec::Kind::fock_superposition &&
            second.amplitudes.size() == 1 && second.amplitudes[0].first == 0) {
            closed = 4.0 * std::norm(first.alpha) / (w * w);
        } else if (first.kind == StateSpec::Kind::coherent &&
                   second.kind == StateSpec::Kind::squeezed_vacuum &&
                   second.squeeze_phase == 0.0) {
            const double sh2 = std::pow(std::sinh(second.r), 2);
            closed = (4.0 * (std::norm(first.alpha) * std::exp(2.0 * second.r) + sh2) +
                      vac_weight * sh2) /
                     (w * w);
        }
        return Scenario{name,
                        name == "hg-displacement"
                            ? "beam displacement with the derivative mode -HG10 populated"
                            : "beam waist variation with the derivative mode (HG20+HG02)/sqrt2 "
                              "populated",
                        name == "hg-displacement" ? hg_displacement_family(w)
                                                  : hg_waist_family(w),
                        recipe,
                        uniform_space(recipe),
                        closed,
                        std::nullopt,
                        params};
    }

    if (name == "mach-zehnder") {
        reject_unknown_keys(params, {"state", "N", "state2", "N2", "r", "phase"}, name);
        const StateSpec first = parse_single_state(params, "state", "N", "coherent", M_PI);
        const StateSpec second = parse_single_state(params, "state2", "N2", "vacuum", M_PI);
        StateSpec recipe = StateSpec::product({first, second});

        std::optional<double> closed;
        if (first.kind == StateSpec::Kind::coherent &&
            second.kind == StateSpec::Kind::fock_superposition &&
            second.amplitudes.size() == 1 && second.amplitudes[0].first == 0) {
            closed = std::norm(first.alpha);
        } else if (first.kind == StateSpec::Kind::coherent &&
                   second.kind == StateSpec::Kind::squeezed_vacuum &&
                   second.squeeze_phase == M_PI) {
            closed = std::norm(first.alpha) * std::exp(2.0 * second.r) +
                     std::pow(std::sinh(second.r), 2);
        }
        return Scenario{name,
                        "interferometer phase between two populated arms; closed two-mode system",
                        mach_zehnder_family(),
                        recipe,
                        uniform_space(recipe),
                        closed,
                        std::nullopt,
                        params};
    }

    if (name == "superresolution") {
        reject_unknown_keys(params, {"sigma", "s", "eta", "N", "k", "state", "psf"}, name);
        const double s = param_double(params, "s", 1.0);
        const double eta = param_double(params, "eta", 1.0);
        const double n = param_double(params, "N", 3.0);
        const double k = param_double(params, "k", 0.0);
        const std::string kind = param_str(params, "state", "thermal");

        PsfScenario psf = [&]() {
            if (auto it = params.find("psf"); it != params.end())
                return make_psf_scenario_from_samples(load_psf_csv(it->second), s, eta, n, k);
            return make_gaussian_psf_scenario(param_double(params, "sigma", 1.0), s, eta, n, k);
        }();

        if (kind == "thermal") {
            const StateSpec recipe = StateSpec::product(
                {StateSpec::thermal(psf.nplus), StateSpec::thermal(psf.nminus)});
            return Scenario{name,
                            "separation of two thermal point sources behind a diffraction-"
                            "limited aperture",
                            superresolution_family(psf),
                            recipe,
                            FockOperatorSpace(adequate_cutoffs(recipe)),
                            superresolution_closed_form(psf),
                            std::move(psf),
                            params};
        }
        if (kind == "fock-superposition") {
            const StateSpec emitter = parse_single_state(params, "state", "N", kind, 0.0);
            const StateSpec recipe = StateSpec::product({emitter, StateSpec::vacuum()});
            const double coeff_plus =
                (psf.dp2 - psf.beta - psf.gamma * psf.gamma / (1.0 + psf.delta_abs)) /
                (1.0 + psf.delta_abs);
            const double closed =
                0.25 * k * k * *closed_form_number_qfi(emitter) +
                coeff_plus * recipe_mean_occupation(emitter);
            return Scenario{name,
                            "separation of two point sources with a nonclassical emitter in the "
                            "symmetric image mode",
                            superresolution_family(psf),
                            recipe,
                            FockOperatorSpace(adequate_cutoffs(recipe)),
                            closed,
                            std::move(psf),
                            params};
        }
        throw ValidationError("validation",
                              "superresolution supports state=thermal or fock-superposition");
    }

    throw ValidationError("unknown-scenario", "no scenario named '" + name + "'");
}

QfiReport evaluate_scenario(const Scenario& scenario)
{
    QfiReport report;
    if (scenario.psf && scenario.state_recipe.kind == StateSpec::Kind::product &&
        scenario.state_recipe.factors[0].kind == StateSpec::Kind::thermal) {
        report = superresolution_thermal_qfi(*scenario.psf);
    } else {
        const OverlapData overlaps = compute_overlaps(scenario.family);
        const DensityOperator state = build_state(scenario.state_recipe, scenario.space);
        report = mode_parameter_qfi(state, overlaps);
    }
    report.breakdown_meta = scenario.name + describe_params(scenario.params);
    return report;
}

double scenario_oracle(const Scenario& scenario, double dtheta)
{
    const OverlapData overlaps = compute_overlaps(scenario.family);
    const DensityOperator state = scenario.psf && scenario.state_recipe.factors.size() == 2 &&
                                          scenario.state_recipe.factors[0].kind ==
                                              StateSpec::Kind::thermal
                                      ? thermal_pair_state(*scenario.psf, scenario.space, false)
                                      : build_state(scenario.state_recipe, scenario.space);
    const QuadraticHamiltonian h =
        assemble_hamiltonian(overlaps, HamiltonianScope::populated_only, state.space());
    return fd_fidelity_oracle(state, h, dtheta);
}

} // namespace modeqfi
