#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modeqfi/numerics.hpp"

namespace modeqfi {

// A theta-parametrized set of K mode functions, orthonormal at theta=0.
// eval(k, theta) samples mode k of the deformed basis; analytic_derivative,
// when set, returns d f_k / d theta at theta=0 and takes precedence over the
// finite-difference stencil. `populated` lists the modes the state occupies.
struct ModeFamily {
    GridPtr grid;
    std::vector<std::string> labels;
    std::vector<std::size_t> populated;
    double length_scale = 1.0;
    std::function<SampledFunction(std::size_t, double)> eval;
    std::function<SampledFunction(std::size_t)> analytic_derivative; // optional

    std::size_t size() const { return labels.size(); }
};

// Overlap matrices at theta=0:
//   C(j,k) = (f_j | f_k')            mode/derivative overlaps
//   G(j,k) = (f_j' | f_k')           derivative Gram matrix
//   V(a,b) = (f_a' | Pi_vac | f_b')  restricted to populated modes, computed
//            as G - sum over populated j of (f_a'|f_j)(f_j|f_b').
// All entries are raw quadrature results; no i factors are folded in here.
struct OverlapData {
    Eigen::MatrixXcd C;
    Eigen::MatrixXcd G;
    Eigen::MatrixXcd V;
    std::vector<std::size_t> populated;
    std::vector<std::string> labels;
};

// f_k' = d f_k[theta] / d theta at theta=0. Not normalized.
SampledFunction derivative_mode(const ModeFamily& family, std::size_t k);

// Populates C, G and V by quadrature. Throws orthonormality-violation if the
// theta=0 Gram matrix deviates from identity beyond 1e-6; deviations beyond
// 1e-8 only warn (quadrature noise vs. modeling mistakes).
OverlapData compute_overlaps(const ModeFamily& family);

// Single-mode overlaps for f = A e^{-i phi} from the theta-derivatives of the
// real amplitude and phase:
//   (f|f')  = -i * integral A^2 dphi
//   (f'|f') =      integral [ dA^2 + A^2 dphi^2 ]
std::pair<Complex, double>
single_mode_phase_amplitude_overlaps(const SampledFunction& amplitude,
                                     const SampledFunction& amplitude_derivative,
                                     const SampledFunction& phase_derivative);

// CSV ingestion for sampled point-spread functions: columns x,Re[,Im], header
// optional, comma separated. The samples are placed on a trapezoid grid over
// the given nodes.
SampledFunction load_psf_csv(const std::string& path);

} // namespace modeqfi
