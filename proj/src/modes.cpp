#include "modeqfi/modes.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace modeqfi {

SampledFunction derivative_mode(const ModeFamily& family, std::size_t k)
{
    if (k >= family.size())
        throw ValidationError("index-mismatch", "mode label out of range");
    if (family.analytic_derivative)
        return family.analytic_derivative(k);
    const double h = 1e-4 * family.length_scale;
    return numeric_derivative([&](double theta) { return family.eval(k, theta); }, h);
}

OverlapData compute_overlaps(const ModeFamily& family)
{
    const std::size_t n = family.size();
    if (n == 0)
        throw ValidationError("index-mismatch", "mode family is empty");
    for (std::size_t p : family.populated)
        if (p >= n)
            throw ValidationError("index-mismatch", "populated index out of range");

    std::vector<SampledFunction> f;
    std::vector<SampledFunction> df;
    f.reserve(n);
    df.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        f.push_back(family.eval(k, 0.0));
        df.push_back(derivative_mode(family, k));
    }

    // Gram check at theta=0.
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j; k < n; ++k) {
            const Complex g = inner_product(f[j], f[k]);
            const double dev = std::abs(g - (j == k ? 1.0 : 0.0));
            worst = std::max(worst, dev);
        }
    if (worst > 1e-6)
        throw NumericalError("orthonormality-violation",
                             "theta=0 modes deviate from orthonormality by " +
                                 std::to_string(worst));
    if (worst > 1e-8)
        std::cerr << "modeqfi: warning: mode Gram deviates from identity by " << worst
                  << " (quadrature may be too coarse)\n";

    OverlapData out;
    out.labels = family.labels;
    out.populated = family.populated;
    out.C.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.G.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            out.C(j, k) = inner_product(f[j], df[k]);
            out.G(j, k) = inner_product(df[j], df[k]);
        }

    const std::size_t ni = family.populated.size();
    out.V.resize(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(ni));
    for (std::size_t a = 0; a < ni; ++a)
        for (std::size_t b = 0; b < ni; ++b) {
            const std::size_t ka = family.populated[a];
            const std::size_t kb = family.populated[b];
            Complex v = out.G(ka, kb);
            for (std::size_t j : family.populated)
                v -= std::conj(out.C(j, ka)) * out.C(j, kb);
            out.V(a, b) = v;
        }
    return out;
}

std::pair<Complex, double>
single_mode_phase_amplitude_overlaps(const SampledFunction& amplitude,
                                     const SampledFunction& amplitude_derivative,
                                     const SampledFunction& phase_derivative)
{
    const auto check_real = [](const SampledFunction& s, const char* name) {
        const double scale = std::max(1.0, s.values().cwiseAbs().maxCoeff());
        if (s.values().imag().cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ValidationError("validation", std::string(name) + " must be real-valued");
    };
    check_real(amplitude, "amplitude");
    check_real(amplitude_derivative, "amplitude derivative");
    check_real(phase_derivative, "phase derivative");

    const Eigen::ArrayXd w = amplitude.grid().weights();
    if (!(amplitude.grid() == amplitude_derivative.grid()) ||
        !(amplitude.grid() == phase_derivative.grid()))
        throw ValidationError("grid-mismatch", "all inputs must share one grid");

    const Eigen::ArrayXd a = amplitude.values().real().array();
    const Eigen::ArrayXd da = amplitude_derivative.values().real().array();
    const Eigen::ArrayXd dphi = phase_derivative.values().real().array();

    const double phase_integral = (w * a.square() * dphi).sum();
    const double norm_integral = (w * (da.square() + a.square() * dphi.square())).sum();
    return {Complex(0.0, -phase_integral), norm_integral};
}

SampledFunction load_psf_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("file-io", "cannot open " + path);

    std::vector<double> xs;
    std::vector<Complex> vals;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos)
            line.erase(h);
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;

        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cols.push_back(cell);
        if (cols.size() != 2 && cols.size() != 3)
            throw ValidationError("validation",
                                  path + ":" + std::to_string(lineno) +
                                      ": expected 2 or 3 comma-separated columns");
        try {
            const double x = std::stod(cols[0]);
            const double re = std::stod(cols[1]);
            const double im = cols.size() == 3 ? std::stod(cols[2]) : 0.0;
            xs.push_back(x);
            vals.emplace_back(re, im);
        } catch (const std::exception&) {
            if (lineno == 1 && xs.empty())
                continue; // header row
            throw ValidationError("validation", path + ":" + std::to_string(lineno) +
                                                    ": cannot parse numeric columns");
        }
    }
    if (xs.size() < 8)
        throw ValidationError("too-coarse", path + ": need at least 8 samples");

    GridPtr grid = make_grid_from_nodes(xs);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = vals[i];
    return SampledFunction(std::move(grid), std::move(v));
}

} // namespace modeqfi
