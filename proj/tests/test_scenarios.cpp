#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "modeqfi/qfi.hpp"
#include "modeqfi/scenarios.hpp"
#include "test_support.hpp"

using namespace modeqfi;
using test_support::close;

TEST_CASE("every scenario with a closed form reproduces it")
{
    const std::vector<std::pair<std::string, Params>> cases = {
        {"displaced-gaussian", {{"N", "4"}}},
        {"displaced-gaussian", {{"w", "2"}, {"state", "thermal"}, {"N", "3"}}},
        {"oam-linear-phase", {{"ell", "3"}, {"N", "4"}}},
        {"spectroscopy-frequency", {{"T", "2"}, {"sigma", "1.5"}, {"N", "2"}}},
        {"pulsed-time", {{"omega0", "3"}, {"tau", "0.5"}, {"N", "1"}}},
        {"hg-displacement", {{"N", "4"}}},
        {"mach-zehnder", {{"N", "4"}}},
        {"hg-waist", {{"N", "4"}}},
    };
    for (const auto& [name, params] : cases) {
        CAPTURE(name);
        const Scenario sc = build_scenario(name, params);
        REQUIRE(sc.expected_closed_form.has_value());
        const QfiReport r = evaluate_scenario(sc);
        CHECK(close(r.total, *sc.expected_closed_form,
                    1e-7 * std::max(1.0, *sc.expected_closed_form)));
    }
}

TEST_CASE("generator coefficients follow the phase rates")
{
    const Scenario spectro =
        build_scenario("spectroscopy-frequency", {{"T", "1.7"}, {"omega0", "5"}});
    const OverlapData ov1 = compute_overlaps(spectro.family);
    const QuadraticHamiltonian h1 = assemble_hamiltonian(
        ov1, HamiltonianScope::populated_only, FockOperatorSpace(1, 4));
    CHECK(close(h1.coeffs()(0, 0).real(), 1.7, 1e-9));

    const Scenario pulsed = build_scenario("pulsed-time", {{"omega0", "2.3"}});
    const OverlapData ov2 = compute_overlaps(pulsed.family);
    const QuadraticHamiltonian h2 = assemble_hamiltonian(
        ov2, HamiltonianScope::populated_only, FockOperatorSpace(1, 4));
    CHECK(close(h2.coeffs()(0, 0).real(), 2.3, 1e-9));
}

TEST_CASE("displacement pair: squeezed vacuum in the derivative mode raises the bound")
{
    const double n1 = 4.0;
    const Scenario base = build_scenario("hg-displacement", {{"N", "4"}});
    const double reference = evaluate_scenario(base).total;
    CHECK(close(reference, 4.0 * n1, 1e-7));

    double previous = reference;
    for (const char* r : {"0.2", "0.5", "1.0"}) {
        const Scenario sq = build_scenario(
            "hg-displacement", {{"N", "4"}, {"state2", "squeezed"}, {"r", r}});
        const double total = evaluate_scenario(sq).total;
        CHECK(total > previous);
        previous = total;
    }
}

TEST_CASE("waist pair: vacuum weight per derivative-mode photon is 16/w^2")
{
    const Scenario sc = build_scenario("hg-waist", {});
    const OverlapData ov = compute_overlaps(sc.family);

    // Norm of the second derivative mode and its vacuum projection.
    CHECK(close(ov.G(1, 1).real(), 5.0, 1e-7));
    CHECK(close(ov.V(1, 1).real(), 4.0, 1e-7));
    CHECK(std::abs(ov.V(0, 0)) < 1e-9);
    CHECK(std::abs(ov.V(0, 1)) < 1e-9);
    CHECK(close(ov.C(0, 1).imag(), 0.0, 1e-9));
    CHECK(close(ov.C(0, 1).real(), -1.0, 1e-8));

    // Photons in the derivative mode only: the whole vacuum term is 16 <n2>.
    const Scenario populated = build_scenario(
        "hg-waist", {{"state", "vacuum"}, {"state2", "coherent"}, {"N2", "1.5"}});
    const QfiReport r = evaluate_scenario(populated);
    CHECK(close(r.vacuum_term, 16.0 * 1.5, 1e-6));
}

TEST_CASE("displacement pair: vacuum weight per derivative-mode photon is 8/w^2")
{
    const Scenario sc = build_scenario("hg-displacement", {});
    const OverlapData ov = compute_overlaps(sc.family);
    CHECK(close(ov.G(1, 1).real(), 3.0, 1e-7));
    CHECK(close(ov.V(1, 1).real(), 2.0, 1e-7));
    CHECK(std::abs(ov.V(0, 0)) < 1e-9);
}

TEST_CASE("interferometer: no vacuum loss for any state")
{
    std::mt19937_64 rng(41);
    const Scenario sc = build_scenario("mach-zehnder", {});
    const OverlapData ov = compute_overlaps(sc.family);
    const FockOperatorSpace space(2, 6);
    for (int trial = 0; trial < 5; ++trial) {
        const DensityOperator state = test_support::random_state(space, 3, rng);
        CHECK(std::abs(mode_parameter_qfi(state, ov).vacuum_term) < 1e-10);
    }
}

TEST_CASE("interferometer with squeezed vacuum beats the coherent benchmark")
{
    const Scenario sc = build_scenario(
        "mach-zehnder", {{"N", "4"}, {"state2", "squeezed"}, {"r", "1"}});
    const QfiReport r = evaluate_scenario(sc);
    const double n_total = 4.0 + std::pow(std::sinh(1.0), 2);
    CHECK(r.total >= 1.1 * n_total);
    REQUIRE(sc.expected_closed_form.has_value());
    CHECK(close(r.total, *sc.expected_closed_form, 1e-6 * r.total));
}

TEST_CASE("image-mode overlap identities for a linear-phase PSF")
{
    for (double k : {0.0, 1.0, 2.0}) {
        for (double s : {0.5, 1.0, 2.0}) {
            CAPTURE(k);
            CAPTURE(s);
            const PsfScenario psf = make_gaussian_psf_scenario(1.0, s, 1.0, 3.0, k);
            const OverlapData ov = superresolution_overlaps(psf);

            CHECK(std::abs(ov.C(0, 0) - Complex(0.0, -0.5 * k)) < 1e-7);
            CHECK(std::abs(ov.C(1, 1) - Complex(0.0, -0.5 * k)) < 1e-7);
            CHECK(std::abs(ov.C(0, 1)) < 1e-7);
            CHECK(std::abs(ov.C(1, 0)) < 1e-7);
            CHECK(std::abs(ov.G(0, 1)) < 1e-7);

            const double d = psf.delta_abs;
            for (int mode = 0; mode < 2; ++mode) {
                const double sign = mode == 0 ? 1.0 : -1.0;
                const double expected =
                    k * k / 4.0 +
                    (psf.dp2 - sign * psf.beta) / (4.0 * (1.0 + sign * d)) -
                    psf.gamma * psf.gamma / (4.0 * std::pow(1.0 + sign * d, 2));
                CHECK(close(ov.G(mode, mode).real(), expected, 1e-7));
            }
        }
    }
}

TEST_CASE("PSF scalars match the gaussian closed forms")
{
    const double sigma = 1.0, s = 1.0;
    const PsfScenario psf = make_gaussian_psf_scenario(sigma, s, 1.0, 3.0, 0.0);
    const double expected_delta = std::exp(-s * s / (8.0 * sigma * sigma));
    CHECK(close(psf.delta_abs, expected_delta, 1e-9));
    CHECK(close(psf.gamma, -s / (4.0 * sigma * sigma) * expected_delta, 1e-9));
    CHECK(close(psf.dp2, 1.0 / (4.0 * sigma * sigma), 1e-9));
    CHECK(close(psf.beta,
                expected_delta * (sigma * sigma - s * s / 4.0) / (4.0 * std::pow(sigma, 4)),
                1e-9));
    CHECK(close(psf.nplus, 3.0 * (1.0 + expected_delta), 1e-9));
    CHECK(close(psf.nminus, 3.0 * (1.0 - expected_delta), 1e-9));
}

TEST_CASE("coincident sources are rejected")
{
    CHECK_THROWS_AS(make_gaussian_psf_scenario(1.0, 1e-8, 1.0, 3.0, 0.0), NumericalError);
    try {
        make_gaussian_psf_scenario(1.0, 1e-8, 1.0, 3.0, 0.0);
    } catch (const Error& e) {
        CHECK(e.code() == "degenerate-separation");
    }
}

TEST_CASE("thermal superresolution bound")
{
    SUBCASE("piecewise assembly equals the closed form")
    {
        const PsfScenario psf = make_gaussian_psf_scenario(1.0, 1.0, 1.0, 3.0, 0.0);
        const QfiReport r = superresolution_thermal_qfi(psf);
        CHECK(close(r.total, superresolution_closed_form(psf), 1e-8));
        CHECK(r.unitary_term == 0.0);
    }

    SUBCASE("well-separated sources approach 2 eta N dp2")
    {
        const PsfScenario psf = make_gaussian_psf_scenario(1.0, 8.0, 0.7, 2.0, 0.0);
        const QfiReport r = superresolution_thermal_qfi(psf);
        CHECK(close(r.total, 2.0 * 0.7 * 2.0 * psf.dp2, 1e-4));
        CHECK(r.classical_term < 1e-4);
    }

    SUBCASE("independent of the phase gradient for thermal light")
    {
        const PsfScenario k0 = make_gaussian_psf_scenario(1.0, 1.0, 1.0, 1.0, 0.0);
        const PsfScenario k2 = make_gaussian_psf_scenario(1.0, 1.0, 1.0, 1.0, 2.0);
        CHECK(close(superresolution_thermal_qfi(k0).total,
                    superresolution_thermal_qfi(k2).total, 1e-9));
    }

    SUBCASE("classical term matches a direct population-series evaluation")
    {
        const PsfScenario psf = make_gaussian_psf_scenario(1.0, 1.2, 0.8, 1.0, 0.0);
        // Independent series: geometric pair populations and their separation
        // derivatives, summed to convergence.
        const double dn = psf.eta * psf.gamma * psf.mean_photons;
        double series = 0.0;
        for (int n = 0; n < 400; ++n)
            for (int m = 0; m < 400; ++m) {
                const auto g = [](int j, double mean) {
                    return std::pow(mean / (mean + 1.0), j) / (mean + 1.0);
                };
                const auto dg = [&](int j, double mean, double dmean) {
                    const double rate =
                        (j == 0 ? 0.0 : j / mean) - (j + 1.0) / (mean + 1.0);
                    return g(j, mean) * rate * dmean;
                };
                const double p = g(n, psf.nplus) * g(m, psf.nminus);
                if (p < 1e-18)
                    continue;
                const double dp = dg(n, psf.nplus, dn) * g(m, psf.nminus) +
                                  g(n, psf.nplus) * dg(m, psf.nminus, -dn);
                series += dp * dp / p;
            }
        const QfiReport r = superresolution_thermal_qfi(psf);
        CHECK(close(r.classical_term, series, 1e-9));
    }

    SUBCASE("full engine agrees with the closed-form assembly")
    {
        const PsfScenario psf = make_gaussian_psf_scenario(1.0, 1.0, 1.0, 0.6, 0.0);
        const OverlapData ov = superresolution_overlaps(psf);
        const StateSpec recipe = StateSpec::product(
            {StateSpec::thermal(psf.nplus), StateSpec::thermal(psf.nminus)});
        const FockOperatorSpace space(adequate_cutoffs(recipe));
        const DensityOperator state = thermal_pair_state(psf, space, true);
        const QfiReport engine = mode_parameter_qfi(state, ov);
        const QfiReport assembled = superresolution_thermal_qfi(psf);
        CHECK(close(engine.classical_term, assembled.classical_term, 1e-6));
        CHECK(close(engine.vacuum_term, assembled.vacuum_term, 1e-6));
        CHECK(close(engine.total, assembled.total, 1e-6));
    }
}

TEST_CASE("nonclassical emitter exploits the phase-gradient generator")
{
    const Scenario sc = build_scenario(
        "superresolution", {{"state", "fock-superposition"}, {"N", "4"}, {"k", "1"}});
    const QfiReport r = evaluate_scenario(sc);
    CHECK(close(r.unitary_term, 4.0, 1e-6)); // k^2 N^2 / 4
    CHECK(r.unitary_term >= 1e-2);
    REQUIRE(sc.expected_closed_form.has_value());
    CHECK(close(r.total, *sc.expected_closed_form, 1e-7 * std::max(1.0, r.total)));
}

TEST_CASE("sampled PSFs reproduce the analytic gaussian results")
{
    const std::string path = "/tmp/modeqfi_scenarios_psf.csv";
    {
        std::ofstream out(path);
        for (int i = 0; i <= 2000; ++i) {
            const double x = -10.0 + 20.0 * i / 2000.0;
            out << x << "," << std::pow(2.0 * M_PI, -0.25) * std::exp(-x * x / 4.0) << "\n";
        }
    }
    const PsfScenario sampled =
        make_psf_scenario_from_samples(load_psf_csv(path), 1.0, 1.0, 3.0, 0.0);
    const PsfScenario analytic = make_gaussian_psf_scenario(1.0, 1.0, 1.0, 3.0, 0.0);
    CHECK(close(sampled.delta_abs, analytic.delta_abs, 1e-5));
    CHECK(close(sampled.gamma, analytic.gamma, 1e-4));
    CHECK(close(superresolution_thermal_qfi(sampled).total,
                superresolution_thermal_qfi(analytic).total, 1e-3));
    std::remove(path.c_str());
}

TEST_CASE("relabeling invariance of the bound")
{
    std::mt19937_64 rng(57);
    for (const char* name : {"mach-zehnder", "hg-displacement"}) {
        CAPTURE(name);
        const Scenario sc = build_scenario(
            name, {{"N", "1"}, {"state2", "coherent"}, {"N2", "0.5"}});
        const OverlapData ov = compute_overlaps(sc.family);
        const DensityOperator state = build_state(sc.state_recipe, sc.space);
        const double reference = mode_parameter_qfi(state, ov).total;

        for (int trial = 0; trial < 3; ++trial) {
            const Eigen::Matrix2cd u = test_support::random_unitary(rng);
            const ModeFamily rotated_family = test_support::rotate_family(sc.family, u);
            const DensityOperator rotated_state = test_support::rotate_state(state, u);
            const double rotated =
                mode_parameter_qfi(rotated_state, compute_overlaps(rotated_family)).total;
            CHECK(close(rotated, reference, 1e-8 * std::max(1.0, reference)));
        }
    }
}

TEST_CASE("scenario construction rejects bad inputs")
{
    CHECK_THROWS_AS(build_scenario("unknown-name", {}), ValidationError);
    try {
        build_scenario("unknown-name", {});
    } catch (const Error& e) {
        CHECK(e.code() == "unknown-scenario");
    }
    CHECK_THROWS_AS(build_scenario("displaced-gaussian", {{"w", "-1"}}), ValidationError);
    CHECK_THROWS_AS(build_scenario("displaced-gaussian", {{"N", "-2"}}), ValidationError);
    CHECK_THROWS_AS(build_scenario("displaced-gaussian", {{"bogus", "1"}}), ValidationError);
    CHECK_THROWS_AS(build_scenario("superresolution", {{"eta", "1.5"}}), ValidationError);
    CHECK_THROWS_AS(build_scenario("superresolution", {{"state", "thermal"}, {"s", "-1"}}),
                    ValidationError);
}

TEST_CASE("quadrature resolution override is honored")
{
    setenv("MODEQFI_QUAD_N", "96", 1);
    CHECK(default_quad_points() == 96);
    const Scenario sc = build_scenario("displaced-gaussian", {{"N", "4"}});
    CHECK(sc.family.grid->size() == 96);
    CHECK(close(evaluate_scenario(sc).total, 16.0, 1e-6));
    unsetenv("MODEQFI_QUAD_N");
    CHECK(default_quad_points() == 200);
}
