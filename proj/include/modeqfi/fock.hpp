#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "modeqfi/errors.hpp"
#include "modeqfi/modes.hpp"

namespace modeqfi {

// Truncated multimode Fock space. Mode k keeps occupations 0..cutoff(k);
// dim = prod_k (cutoff(k)+1). Mode 0 is the slowest-varying index.
class FockOperatorSpace {
public:
    FockOperatorSpace(int n_modes, int cutoff);
    explicit FockOperatorSpace(std::vector<int> cutoffs);

    int n_modes() const { return static_cast<int>(cutoffs_.size()); }
    int cutoff(int mode) const { return cutoffs_.at(static_cast<std::size_t>(mode)); }
    const std::vector<int>& cutoffs() const { return cutoffs_; }
    std::size_t dim() const { return dim_; }

    int occupation(std::size_t index, int mode) const;
    std::size_t stride(int mode) const { return strides_[static_cast<std::size_t>(mode)]; }

    // H = sum_jk h(j,k) a_j^dag a_k as a sparse dim x dim matrix. Matrix
    // elements that would leave the truncated space are dropped.
    Eigen::SparseMatrix<Complex> quadratic_operator(const Eigen::MatrixXcd& h) const;

    Eigen::VectorXcd apply_annihilation(const Eigen::VectorXcd& v, int mode) const;
    Eigen::VectorXcd apply_creation(const Eigen::VectorXcd& v, int mode) const;

    bool operator==(const FockOperatorSpace& other) const { return cutoffs_ == other.cutoffs_; }

private:
    std::vector<int> cutoffs_;
    std::vector<std::size_t> strides_;
    std::size_t dim_ = 0;
};

// Photon-number-conserving quadratic generator H = sum_jk h_jk a_j^dag a_k
// with Hermitian coefficient matrix h.
class QuadraticHamiltonian {
public:
    QuadraticHamiltonian(FockOperatorSpace space, Eigen::MatrixXcd coeffs);

    const FockOperatorSpace& space() const { return space_; }
    const Eigen::MatrixXcd& coeffs() const { return coeffs_; }
    const Eigen::SparseMatrix<Complex>& sparse() const { return sparse_; }

    bool is_zero() const { return zero_; }
    bool coeffs_diagonal() const { return diagonal_; }

private:
    FockOperatorSpace space_;
    Eigen::MatrixXcd coeffs_;
    Eigen::SparseMatrix<Complex> sparse_;
    bool zero_ = false;
    bool diagonal_ = false;
};

// Spectrally decomposed state: rho = sum_n p_n |psi_n><psi_n| with only the
// numerically relevant eigenpairs stored (p_n >= ~1e-14 after truncation).
// population_derivatives, when present, carries dp_n/dtheta per stored pair.
class DensityOperator {
public:
    DensityOperator(FockOperatorSpace space, Eigen::VectorXd eigenvalues,
                    Eigen::MatrixXcd eigenvectors,
                    std::optional<Eigen::VectorXd> population_derivatives = std::nullopt);

    // Skips the O(R^2 dim) Gram validation; for internal builders whose
    // eigenvectors are orthonormal by construction (Fock basis columns,
    // Kronecker products of normalized vectors, unitary rotations).
    static DensityOperator trusted(FockOperatorSpace space, Eigen::VectorXd eigenvalues,
                                   Eigen::MatrixXcd eigenvectors,
                                   std::optional<Eigen::VectorXd> population_derivatives =
                                       std::nullopt);

    // Eigendecomposition of a dense density matrix; eigenvalues below the
    // retention threshold are dropped and the rest renormalized.
    static DensityOperator from_matrix(const FockOperatorSpace& space,
                                       const Eigen::MatrixXcd& rho);

    const FockOperatorSpace& space() const { return space_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::MatrixXcd& eigenvectors() const { return eigenvectors_; }
    const std::optional<Eigen::VectorXd>& population_derivatives() const
    {
        return population_derivatives_;
    }

    Eigen::Index rank() const { return eigenvalues_.size(); }
    bool is_pure() const { return eigenvalues_.size() == 1; }
    double purity() const { return eigenvalues_.squaredNorm(); }

    // <a_k^dag a_l> as an n_modes x n_modes Hermitian matrix.
    Eigen::MatrixXcd mode_correlations() const;
    double mean_occupation(int mode) const;
    double mean_total_occupation() const;

    Eigen::MatrixXcd dense_matrix() const;

    DensityOperator with_population_derivatives(Eigen::VectorXd dp) const;

private:
    DensityOperator() = default;
    void validate_spectrum() const;

    FockOperatorSpace space_{1, 1};
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXcd eigenvectors_; // dim x rank, one column per eigenvalue
    std::optional<Eigen::VectorXd> population_derivatives_;
};

// Recipe for build_state.
struct StateSpec {
    enum class Kind { fock_superposition, coherent, thermal, squeezed_vacuum, product };

    Kind kind = Kind::fock_superposition;
    std::vector<std::pair<int, Complex>> amplitudes; // fock_superposition
    Complex alpha{0.0, 0.0};                         // coherent
    double mean = 0.0;                               // thermal
    double r = 0.0;                                  // squeezed_vacuum
    double squeeze_phase = 0.0;
    std::vector<StateSpec> factors;                  // product

    static StateSpec vacuum();
    static StateSpec fock(int level);
    static StateSpec fock_superposition(std::vector<std::pair<int, Complex>> amps);
    static StateSpec coherent(Complex alpha);
    static StateSpec thermal(double mean);
    static StateSpec squeezed_vacuum(double r, double phase = 0.0);
    static StateSpec product(std::vector<StateSpec> factors);
};

// Minimal per-mode cutoffs so that the truncated state carries all but
// ~1e-11 of its probability (and of its mean occupation).
std::vector<int> adequate_cutoffs(const StateSpec& spec);

DensityOperator build_state(const StateSpec& spec, const FockOperatorSpace& space);

enum class HamiltonianScope { populated_only, extended };

// populated_only: h = i C restricted to the populated block (the effective
// generator of the deformation on the occupied modes). extended: h = i C over
// the full label set, for oracle runs with explicitly modeled vacuum modes.
QuadraticHamiltonian assemble_hamiltonian(const OverlapData& overlaps, HamiltonianScope which,
                                          const FockOperatorSpace& space);

// rho(theta) = exp(-i H theta) rho exp(i H theta). Eigenvalues are unchanged;
// eigenvectors rotate.
DensityOperator evolve(const DensityOperator& state, const QuadraticHamiltonian& h,
                       double theta);

DensityOperator mix(const DensityOperator& a, const DensityOperator& b, double lambda);

} // namespace modeqfi
