#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "modeqfi/modes.hpp"
#include "modeqfi/scenarios.hpp"
#include "test_support.hpp"

using namespace modeqfi;
using test_support::close;
using test_support::strip_analytic;

namespace {

SampledFunction sample(GridPtr grid, const std::function<Complex(double)>& fn)
{
    Eigen::VectorXcd v(static_cast<Eigen::Index>(grid->size()));
    for (std::size_t p = 0; p < grid->size(); ++p)
        v[static_cast<Eigen::Index>(p)] = fn(grid->x(p));
    return SampledFunction(std::move(grid), std::move(v));
}

// Single mode A(x) exp(-i k (x + theta)) with a theta-independent envelope.
ModeFamily linear_phase_family(double k)
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -8.0, 8.0, default_quad_points(), 1);
    fam.labels = {"f"};
    fam.populated = {0};
    fam.length_scale = 1.0;
    fam.eval = [grid = fam.grid, k](std::size_t, double theta) {
        return sample(grid, [&](double x) {
            return hermite_gauss(0, 1.0, x) * std::exp(Complex(0.0, -k * (x + theta)));
        });
    };
    return fam;
}

} // namespace

TEST_CASE("derivative mode of the displaced fundamental is -HG10/w")
{
    for (double w : {1.0, 2.0}) {
        Params params{{"w", std::to_string(w)}};
        const ModeFamily fam = strip_analytic(build_scenario("hg-displacement", params).family);
        const SampledFunction d = derivative_mode(fam, 0);

        Eigen::VectorXcd expected(static_cast<Eigen::Index>(fam.grid->size()));
        for (std::size_t p = 0; p < fam.grid->size(); ++p)
            expected[static_cast<Eigen::Index>(p)] =
                -hermite_gauss(1, w, fam.grid->x(p)) * hermite_gauss(0, w, fam.grid->y(p)) / w;
        CHECK(grid_norm(SampledFunction(fam.grid, d.values() - expected)) < 1e-7);
    }
}

TEST_CASE("derivative mode under waist variation is (HG20+HG02)/sqrt(2 w^2)")
{
    const double w = 1.0;
    const ModeFamily fam = strip_analytic(build_scenario("hg-waist", {}).family);
    const SampledFunction d = derivative_mode(fam, 0);

    Eigen::VectorXcd expected(static_cast<Eigen::Index>(fam.grid->size()));
    for (std::size_t p = 0; p < fam.grid->size(); ++p) {
        const double x = fam.grid->x(p), y = fam.grid->y(p);
        expected[static_cast<Eigen::Index>(p)] =
            (hermite_gauss(2, w, x) * hermite_gauss(0, w, y) +
             hermite_gauss(0, w, x) * hermite_gauss(2, w, y)) /
            (std::sqrt(2.0) * w);
    }
    CHECK(grid_norm(SampledFunction(fam.grid, d.values() - expected)) < 1e-7);
}

TEST_CASE("theta-independent mode has a vanishing derivative mode")
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -8.0, 8.0, 64, 1);
    fam.labels = {"f"};
    fam.populated = {0};
    fam.eval = [grid = fam.grid](std::size_t, double) {
        return sample(grid, [](double x) { return Complex(hermite_gauss(0, 1.0, x)); });
    };
    CHECK(grid_norm(derivative_mode(fam, 0)) < 1e-11);
}

TEST_CASE("analytic and numeric derivative modes agree for every built-in family")
{
    const std::vector<std::pair<std::string, Params>> cases = {
        {"displaced-gaussian", {}},
        {"oam-linear-phase", {{"ell", "2"}}},
        {"spectroscopy-frequency", {}},
        {"pulsed-time", {}},
        {"hg-displacement", {}},
        {"hg-waist", {}},
        {"mach-zehnder", {}},
    };
    for (const auto& [name, params] : cases) {
        const ModeFamily fam = build_scenario(name, params).family;
        REQUIRE(static_cast<bool>(fam.analytic_derivative));
        const ModeFamily numeric = strip_analytic(fam);
        for (std::size_t k = 0; k < fam.size(); ++k) {
            const SampledFunction da = derivative_mode(fam, k);
            const SampledFunction dn = derivative_mode(numeric, k);
            CHECK(grid_norm(SampledFunction(fam.grid, da.values() - dn.values())) < 1e-7);
        }
    }
}

TEST_CASE("overlaps of the displaced gaussian: (f'|f') = 1/w^2")
{
    for (double w : {1.0, 2.0}) {
        Params params{{"w", std::to_string(w)}};
        const OverlapData ov =
            compute_overlaps(build_scenario("displaced-gaussian", params).family);
        CHECK(std::abs(ov.C(0, 0)) < 1e-10);
        CHECK(close(ov.G(0, 0).real(), 1.0 / (w * w), 1e-8));
        CHECK(close(ov.V(0, 0).real(), 1.0 / (w * w), 1e-8));
    }
}

TEST_CASE("overlaps of a pure linear phase: C = -ik, V = 0")
{
    const double k = 3.0;
    const OverlapData ov = compute_overlaps(linear_phase_family(k));
    CHECK(std::abs(ov.C(0, 0) - Complex(0.0, -k)) < 1e-8);
    CHECK(std::abs(ov.V(0, 0)) < 1e-9);
}

TEST_CASE("overlaps of the interferometer pair")
{
    const OverlapData ov =
        compute_overlaps(strip_analytic(build_scenario("mach-zehnder", {}).family));
    CHECK(std::abs(ov.C(0, 0)) < 1e-9);
    CHECK(std::abs(ov.C(1, 1)) < 1e-9);
    CHECK(std::abs(ov.C(0, 1) - Complex(0.0, -0.5)) < 1e-8);
    CHECK(std::abs(ov.C(1, 0) - Complex(0.0, -0.5)) < 1e-8);
    CHECK(ov.V.cwiseAbs().maxCoeff() < 1e-9); // closed two-mode system
}

TEST_CASE("anti-Hermiticity of C holds for every built-in family")
{
    for (const auto& name : scenario_names()) {
        const OverlapData ov = compute_overlaps(build_scenario(name, {}).family);
        const Eigen::MatrixXcd dev = ov.C + ov.C.adjoint();
        CHECK(dev.cwiseAbs().maxCoeff() < 1e-8);

        // G and V are Gram matrices: Hermitian and positive semidefinite.
        CHECK((ov.G - ov.G.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_g(ov.G);
        CHECK(es_g.eigenvalues().minCoeff() > -1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_v(ov.V);
        CHECK(es_v.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("orthonormality violations are rejected")
{
    ModeFamily fam;
    fam.grid = make_grid(GridKind::gauss_legendre, -8.0, 8.0, 64, 1);
    fam.labels = {"a", "b"};
    fam.populated = {0, 1};
    fam.eval = [grid = fam.grid](std::size_t k, double theta) {
        // Two displaced copies of the same Gaussian: strongly non-orthogonal.
        const double shift = k == 0 ? 0.0 : 0.3;
        return sample(grid, [&](double x) {
            return Complex(hermite_gauss(0, 1.0, x + shift + theta));
        });
    };
    CHECK_THROWS_AS(compute_overlaps(fam), NumericalError);
    try {
        compute_overlaps(fam);
    } catch (const Error& e) {
        CHECK(e.code() == "orthonormality-violation");
    }
}

TEST_CASE("single-mode phase/amplitude overlap formulas")
{
    auto grid = make_grid(GridKind::gauss_legendre, -8.0, 8.0, 200, 1);
    const double w = 1.0;
    auto amplitude = sample(grid, [&](double x) { return Complex(hermite_gauss(0, w, x)); });
    auto zero = sample(grid, [](double) { return Complex(0.0); });

    SUBCASE("displacement: dA = dA/dx, dphi = 0")
    {
        auto da = sample(grid, [&](double x) { return Complex(-hermite_gauss(1, w, x) / w); });
        const auto [ff, gg] = single_mode_phase_amplitude_overlaps(amplitude, da, zero);
        CHECK(std::abs(ff) < 1e-12);
        CHECK(close(gg, 1.0 / (w * w), 1e-8));
    }

    SUBCASE("constant phase rate: (f|f') = -ik, (f'|f') = k^2")
    {
        const double k = 2.5;
        auto dphi = sample(grid, [&](double) { return Complex(k); });
        const auto [ff, gg] = single_mode_phase_amplitude_overlaps(amplitude, zero, dphi);
        CHECK(std::abs(ff - Complex(0.0, -k)) < 1e-10);
        CHECK(close(gg, k * k, 1e-9));
    }

    SUBCASE("agrees with the full complex-mode quadrature for dphi = x")
    {
        auto dphi = sample(grid, [](double x) { return Complex(x); });
        auto da = sample(grid, [&](double x) { return Complex(-hermite_gauss(1, w, x) / w); });
        const auto [ff, gg] = single_mode_phase_amplitude_overlaps(amplitude, da, dphi);

        // Independent route: sample f[theta] = A(x+theta) e^{-i phi(x,theta)}
        // with phi = x*theta (so dphi/dtheta = x) and differentiate.
        ModeFamily fam;
        fam.grid = grid;
        fam.labels = {"f"};
        fam.populated = {0};
        fam.eval = [grid, w](std::size_t, double theta) {
            return sample(grid, [&](double x) {
                return hermite_gauss(0, w, x + theta) * std::exp(Complex(0.0, -x * theta));
            });
        };
        const OverlapData ov = compute_overlaps(fam);
        CHECK(std::abs(ov.C(0, 0) - ff) < 1e-9);
        CHECK(close(ov.G(0, 0).real(), gg, 1e-9));
    }
}

TEST_CASE("phase/amplitude split agrees with the full overlaps on every single-mode scenario")
{
    struct Case {
        std::string name;
        Params params;
        std::function<double(double)> amplitude;
        std::function<double(double)> amplitude_derivative;
        double phase_rate; // dphi/dtheta, constant for all of these
    };
    const double t = 1.3, omega0 = 2.1, ell = 2.0;
    const std::vector<Case> cases = {
        {"displaced-gaussian", {},
         [](double x) { return hermite_gauss(0, 1.0, x); },
         [](double x) { return -hermite_gauss(1, 1.0, x); }, 0.0},
        {"oam-linear-phase", {{"ell", "2"}},
         [](double) { return 1.0 / std::sqrt(2.0 * M_PI); },
         [](double) { return 0.0; }, ell},
        {"spectroscopy-frequency", {{"T", "1.3"}},
         [](double x) { return hermite_gauss(0, 1.0, x); },
         [](double x) { return -hermite_gauss(1, 1.0, x); }, t},
        {"pulsed-time", {{"omega0", "2.1"}},
         [](double x) { return hermite_gauss(0, 1.0, x); },
         [](double x) { return -hermite_gauss(1, 1.0, x); }, omega0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const ModeFamily fam = build_scenario(c.name, c.params).family;
        const GridPtr grid = fam.grid;
        const auto amplitude = sample(grid, [&](double x) { return Complex(c.amplitude(x)); });
        const auto da =
            sample(grid, [&](double x) { return Complex(c.amplitude_derivative(x)); });
        const auto dphi = sample(grid, [&](double) { return Complex(c.phase_rate); });
        const auto [ff, gg] = single_mode_phase_amplitude_overlaps(amplitude, da, dphi);

        const OverlapData ov = compute_overlaps(fam);
        CHECK(std::abs(ov.C(0, 0) - ff) < 1e-9);
        CHECK(std::abs(ov.G(0, 0).real() - gg) < 1e-9);
    }
}

TEST_CASE("relabeling the family by a fixed unitary maps C to U^dag C U")
{
    std::mt19937_64 rng(2024);
    const ModeFamily fam = build_scenario("mach-zehnder", {}).family;
    const OverlapData base = compute_overlaps(fam);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Matrix2cd u = test_support::random_unitary(rng);
        const OverlapData rotated = compute_overlaps(test_support::rotate_family(fam, u));
        const Eigen::MatrixXcd expected = u.adjoint() * base.C * u;
        CHECK((rotated.C - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("PSF CSV ingestion")
{
    const std::string path = "/tmp/modeqfi_test_psf.csv";
    {
        std::ofstream out(path);
        out << "x,re\n"; // header should be skipped
        for (int i = 0; i <= 400; ++i) {
            const double x = -8.0 + 16.0 * i / 400.0;
            out << x << "," << std::pow(2.0 * M_PI, -0.25) * std::exp(-x * x / 4.0) << "\n";
        }
    }
    const SampledFunction u = load_psf_csv(path);
    CHECK(u.grid().size() == 401);
    CHECK(close(inner_product(u, u).real(), 1.0, 1e-4)); // trapezoid-rule accuracy
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_psf_csv("/nonexistent/file.csv"), ValidationError);

    const std::string complex_path = "/tmp/modeqfi_test_complex.csv";
    {
        std::ofstream out(complex_path);
        for (int i = 0; i < 16; ++i)
            out << 0.25 * i << ",1.0,0.5\n"; // three columns: x, Re, Im
    }
    const SampledFunction c = load_psf_csv(complex_path);
    CHECK(c.values()[4] == Complex(1.0, 0.5));
    // Complex amplitudes are fine for ingestion but not as a PSF.
    CHECK_THROWS_AS(make_psf_scenario_from_samples(c, 1.0, 1.0, 1.0, 0.0), ValidationError);
    std::remove(complex_path.c_str());

    const std::string bad = "/tmp/modeqfi_test_bad.csv";
    {
        std::ofstream out(bad);
        out << "0.0,1.0\n0.1,oops\n";
    }
    CHECK_THROWS_AS(load_psf_csv(bad), ValidationError);
    std::remove(bad.c_str());
}
