#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "modeqfi/fock.hpp"
#include "modeqfi/qfi.hpp"
#include "modeqfi/scenarios.hpp"

namespace test_support {

using modeqfi::Complex;

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline modeqfi::ModeFamily strip_analytic(modeqfi::ModeFamily family)
{
    family.analytic_derivative = nullptr;
    return family;
}

inline Eigen::Matrix2cd random_unitary(std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Matrix2cd g;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            g(i, j) = Complex(gauss(rng), gauss(rng));
    const Eigen::HouseholderQR<Eigen::Matrix2cd> qr(g);
    Eigen::Matrix2cd q = qr.householderQ();
    const Eigen::Matrix2cd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < 2; ++j)
        q.col(j) *= r(j, j) / std::abs(r(j, j));
    return q;
}

// Relabeled family g_j[theta] = sum_k U(k,j) f_k[theta]; the quadrature
// overlap matrix transforms as C -> U^dag C U.
inline modeqfi::ModeFamily rotate_family(const modeqfi::ModeFamily& family,
                                         const Eigen::Matrix2cd& u)
{
    modeqfi::ModeFamily out = family;
    out.eval = [family, u](std::size_t j, double theta) {
        Eigen::VectorXcd values =
            u(0, static_cast<Eigen::Index>(j)) * family.eval(0, theta).values() +
            u(1, static_cast<Eigen::Index>(j)) * family.eval(1, theta).values();
        return modeqfi::SampledFunction(family.grid, std::move(values));
    };
    if (family.analytic_derivative) {
        out.analytic_derivative = [family, u](std::size_t j) {
            Eigen::VectorXcd values =
                u(0, static_cast<Eigen::Index>(j)) * family.analytic_derivative(0).values() +
                u(1, static_cast<Eigen::Index>(j)) * family.analytic_derivative(1).values();
            return modeqfi::SampledFunction(family.grid, std::move(values));
        };
    }
    return out;
}

// Re-expresses a two-mode state in the relabeled basis: the passive
// transformation generated by A = i log U, applied through evolve.
inline modeqfi::DensityOperator rotate_state(const modeqfi::DensityOperator& state,
                                             const Eigen::Matrix2cd& u)
{
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(u);
    Eigen::Matrix2cd vectors = es.eigenvectors();
    vectors.col(0).normalize();
    vectors.col(1).normalize();
    Eigen::Vector2d phases;
    phases[0] = std::arg(es.eigenvalues()[0]);
    phases[1] = std::arg(es.eigenvalues()[1]);
    Eigen::Matrix2cd a = vectors * phases.asDiagonal().toDenseMatrix().cast<Complex>() *
                         vectors.adjoint();
    a = 0.5 * (a + a.adjoint().eval());
    return modeqfi::evolve(state, modeqfi::QuadraticHamiltonian(state.space(), a), 1.0);
}

// Random mixed state of the given rank, eigenbasis drawn Haar-like.
inline modeqfi::DensityOperator random_state(const modeqfi::FockOperatorSpace& space, int rank,
                                             std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd g(static_cast<Eigen::Index>(space.dim()), rank);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            g(i, j) = Complex(gauss(rng), gauss(rng));
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    const Eigen::MatrixXcd q =
        Eigen::MatrixXcd(qr.householderQ()).leftCols(rank);

    Eigen::VectorXd p(rank);
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    for (int i = 0; i < rank; ++i)
        p[i] = uni(rng);
    p /= p.sum();
    return modeqfi::DensityOperator(space, std::move(p), q);
}

} // namespace test_support
