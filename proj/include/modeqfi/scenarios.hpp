#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "modeqfi/fock.hpp"
#include "modeqfi/modes.hpp"
#include "modeqfi/qfi.hpp"

namespace modeqfi {

using Params = std::map<std::string, std::string>;

// 1D Hermite-Gauss mode of waist w, normalized so that the squared modulus
// integrates to one; HG(0, w, x) = (2 / pi w^2)^{1/4} exp(-x^2 / w^2).
double hermite_gauss(int n, double w, double x);

// Two incoherent point sources separated by s, imaged through a system with
// amplitude point-spread function u(x) and linear phase exp(-i k x). Carries
// the derived scalars: the source-mode overlap delta, gamma = d|delta|/ds,
// beta, the derivative bandwidth dp2 = integral (du/dx)^2, and the mean
// occupations of the symmetric/antisymmetric image modes.
struct PsfScenario {
    SampledFunction u;
    std::function<double(double)> u_of_x;
    std::function<double(double)> du_of_x;
    double k_phase = 0.0;
    double s = 1.0;
    double eta = 1.0;
    double mean_photons = 1.0;

    Complex delta{0.0, 0.0};
    double delta_abs = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double dp2 = 0.0;
    double nplus = 0.0;
    double nminus = 0.0;
};

// A named, parametrized estimation problem: the deformed mode family, the
// state recipe on the populated modes, an adequate Fock space, and (when a
// formula exists) the closed-form bound used for cross-checking.
struct Scenario {
    std::string name;
    std::string description;
    ModeFamily family;
    StateSpec state_recipe;
    FockOperatorSpace space;
    std::optional<double> expected_closed_form;
    std::optional<PsfScenario> psf; // superresolution only
    Params params;
};

PsfScenario make_gaussian_psf_scenario(double sigma, double s, double eta, double mean_photons,
                                       double k_phase);
PsfScenario make_psf_scenario_from_samples(const SampledFunction& u, double s, double eta,
                                           double mean_photons, double k_phase);

// Orthonormal symmetric/antisymmetric image modes of a PSF scenario as a
// separation-parametrized family (theta shifts s).
ModeFamily superresolution_family(const PsfScenario& psf);

// Quadrature overlaps of the image-mode pair. The identities
// (f|f') = -ik/2 on the diagonal and vanishing cross terms hold for any PSF
// with a linear phase.
OverlapData superresolution_overlaps(const PsfScenario& psf);

// Bound for two thermal sources, assembled piecewise: classical information
// of the separation-dependent populations (closed form), vacuum-loss weights
// from the derived scalars times the mode occupations, and the unitary part
// of the number-diagonal generator (zero for thermal light).
QfiReport superresolution_thermal_qfi(const PsfScenario& psf);

// 2 eta N (dp2 - eta N (1 + eta N) gamma^2 / ((1+eta N)^2 - eta^2 N^2 delta^2)).
double superresolution_closed_form(const PsfScenario& psf);

// Two-mode thermal state with means N+ and N-; optionally with the analytic
// population derivatives induced by the separation dependence of delta.
DensityOperator thermal_pair_state(const PsfScenario& psf, const FockOperatorSpace& space,
                                   bool with_population_derivatives);

std::vector<std::string> scenario_names(); // alphabetical

Scenario build_scenario(const std::string& name, const Params& params);

QfiReport evaluate_scenario(const Scenario& scenario);

// Finite-difference fidelity check of the scenario's unitary term.
double scenario_oracle(const Scenario& scenario, double dtheta = 1e-3);

// Exact mean photon number of a recipe (before truncation).
double recipe_mean_occupation(const StateSpec& spec);

} // namespace modeqfi
