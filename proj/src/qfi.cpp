#include "modeqfi/qfi.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace modeqfi {

namespace {

constexpr double kZeroEigenvalue = 1e-12; // below this, populations count as exact zeros

// Detects eigenvector sets that are single Fock basis vectors up to a phase
// (thermal and other number-diagonal states). Such states admit exact
// index-matching shortcuts that avoid dense rank^2 x dim products.
std::optional<std::vector<std::size_t>> one_hot_structure(const Eigen::MatrixXcd& vecs)
{
    std::vector<std::size_t> indices(static_cast<std::size_t>(vecs.cols()));
    for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
        Eigen::Index row = 0;
        const double top = vecs.col(c).cwiseAbs().maxCoeff(&row);
        if (std::abs(top - 1.0) > 1e-13)
            return std::nullopt;
        for (Eigen::Index r = 0; r < vecs.rows(); ++r)
            if (r != row && std::abs(vecs(r, c)) > 1e-13)
                return std::nullopt;
        indices[static_cast<std::size_t>(c)] = static_cast<std::size_t>(row);
    }
    return indices;
}

} // namespace

QfiReport QfiReport::make(double classical, double unitary, double vacuum, std::string meta)
{
    for (double term : {classical, unitary, vacuum})
        if (term < -1e-12)
            throw NumericalError("negative-term",
                                 "QFI term is negative: " + std::to_string(term));
    QfiReport r;
    r.classical_term = classical;
    r.unitary_term = unitary;
    r.vacuum_term = vacuum;
    r.total = classical + unitary + vacuum;
    r.breakdown_meta = std::move(meta);
    return r;
}

double unitary_qfi(const DensityOperator& state, const QuadraticHamiltonian& h)
{
    if (!(state.space() == h.space()))
        throw ValidationError("dimension-mismatch",
                              "state and Hamiltonian live on different spaces");
    if (h.is_zero())
        return 0.0;

    std::vector<Eigen::Index> live;
    for (Eigen::Index n = 0; n < state.rank(); ++n)
        if (state.eigenvalues()[n] >= kZeroEigenvalue)
            live.push_back(n);
    if (live.empty())
        return 0.0;

    Eigen::VectorXd p(static_cast<Eigen::Index>(live.size()));
    Eigen::MatrixXcd psi(state.eigenvectors().rows(), static_cast<Eigen::Index>(live.size()));
    for (std::size_t i = 0; i < live.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = state.eigenvalues()[live[i]];
        psi.col(static_cast<Eigen::Index>(i)) = state.eigenvectors().col(live[i]);
    }

    if (const auto indices = one_hot_structure(psi)) {
        // Matrix elements reduce to entries of the sparse operator between
        // the occupied basis states.
        std::vector<Eigen::Index> owner(h.space().dim(), Eigen::Index(-1));
        for (std::size_t i = 0; i < indices->size(); ++i)
            owner[(*indices)[i]] = static_cast<Eigen::Index>(i);

        Eigen::VectorXd column_norm2 = Eigen::VectorXd::Zero(h.sparse().cols());
        double sub = 0.0;
        for (int outer = 0; outer < h.sparse().outerSize(); ++outer)
            for (Eigen::SparseMatrix<Complex>::InnerIterator it(h.sparse(), outer); it; ++it) {
                column_norm2[it.col()] += std::norm(it.value());
                const Eigen::Index n = owner[static_cast<std::size_t>(it.row())];
                const Eigen::Index m = owner[static_cast<std::size_t>(it.col())];
                if (n >= 0 && m >= 0)
                    sub += (p[n] * p[m] / (p[n] + p[m])) * std::norm(it.value());
            }
        double mean_h2 = 0.0;
        for (std::size_t i = 0; i < indices->size(); ++i)
            mean_h2 += p[static_cast<Eigen::Index>(i)] *
                       column_norm2[static_cast<Eigen::Index>((*indices)[i])];
        double value = 4.0 * mean_h2 - 8.0 * sub;
        if (value < 0.0 && value > -1e-10 * std::max(1.0, 4.0 * mean_h2))
            value = 0.0;
        return value;
    }

    const Eigen::MatrixXcd h_psi = h.sparse() * psi;
    double mean_h2 = 0.0;
    for (Eigen::Index n = 0; n < p.size(); ++n)
        mean_h2 += p[n] * h_psi.col(n).squaredNorm();

    const Eigen::MatrixXcd b = psi.adjoint() * h_psi; // b(n,m) = <psi_n|H|psi_m>
    double sub = 0.0;
    for (Eigen::Index n = 0; n < p.size(); ++n)
        for (Eigen::Index m = 0; m < p.size(); ++m) {
            const double denom = p[n] + p[m];
            sub += (p[n] * p[m] / denom) * std::norm(b(n, m));
        }
    double value = 4.0 * mean_h2 - 8.0 * sub;
    // States commuting with H cancel the two terms exactly; absorb the
    // leftover rounding so downstream positivity checks stay meaningful.
    if (value < 0.0 && value > -1e-10 * std::max(1.0, 4.0 * mean_h2))
        value = 0.0;
    return value;
}

QfiReport mode_parameter_qfi(const DensityOperator& state, const OverlapData& overlaps,
                             const std::optional<Eigen::VectorXd>& population_derivatives)
{
    const std::size_t ni = overlaps.populated.size();
    if (static_cast<int>(ni) != state.space().n_modes())
        throw ValidationError("index-mismatch",
                              "state has " + std::to_string(state.space().n_modes()) +
                                  " modes, populated set has " + std::to_string(ni));

    const std::optional<Eigen::VectorXd>& dp =
        population_derivatives ? population_derivatives : state.population_derivatives();
    double classical = 0.0;
    if (dp) {
        if (dp->size() != state.rank())
            throw ValidationError("index-mismatch",
                                  "population derivative count != eigenvalue count");
        for (Eigen::Index n = 0; n < state.rank(); ++n) {
            const double p = state.eigenvalues()[n];
            if (p < -1e-12)
                throw NumericalError("negative-population", "negative eigenvalue in state");
            if (p >= kZeroEigenvalue)
                classical += (*dp)[n] * (*dp)[n] / p;
        }
    }

    const QuadraticHamiltonian h_pop =
        assemble_hamiltonian(overlaps, HamiltonianScope::populated_only, state.space());
    const double unitary = unitary_qfi(state, h_pop);

    const Eigen::MatrixXcd corr = state.mode_correlations();
    Complex acc(0.0, 0.0);
    double scale = 0.0;
    for (std::size_t k = 0; k < ni; ++k)
        for (std::size_t l = 0; l < ni; ++l) {
            const Complex term =
                overlaps.V(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) *
                corr(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
            acc += term;
            scale += std::abs(term);
        }
    Complex vacuum4 = 4.0 * acc;
    vacuum4 = 0.5 * (vacuum4 + std::conj(vacuum4)); // symmetrized against rounding in V
    if (std::abs((4.0 * acc).imag()) > 1e-10 * std::max(1.0, std::abs(vacuum4.real())))
        throw NumericalError("numerical", "vacuum term has a non-negligible imaginary part");
    double vacuum = vacuum4.real();
    if (vacuum < 0.0 && vacuum > -1e-10 * std::max(1.0, 4.0 * scale))
        vacuum = 0.0; // projector cancellation noise

    return QfiReport::make(classical, unitary, vacuum, "");
}

double uhlmann_root_fidelity(const DensityOperator& rho, const DensityOperator& sigma)
{
    if (!(rho.space() == sigma.space()))
        throw ValidationError("dimension-mismatch", "states live on different spaces");

    if (const auto rho_idx = one_hot_structure(rho.eigenvectors())) {
        if (const auto sigma_idx = one_hot_structure(sigma.eigenvectors())) {
            // Both states diagonal in the Fock basis: the fidelity kernel
            // pairs eigenvalues on matching basis states.
            std::vector<double> q_at(rho.space().dim(), 0.0);
            for (std::size_t m = 0; m < sigma_idx->size(); ++m)
                q_at[(*sigma_idx)[m]] = sigma.eigenvalues()[static_cast<Eigen::Index>(m)];
            double root_fidelity = 0.0;
            for (std::size_t n = 0; n < rho_idx->size(); ++n)
                root_fidelity +=
                    std::sqrt(std::max(0.0, rho.eigenvalues()[static_cast<Eigen::Index>(n)] *
                                                q_at[(*rho_idx)[n]]));
            return root_fidelity;
        }
    }

    // Nonzero spectrum of sqrt(rho) sigma sqrt(rho) equals that of K K^dag
    // with K = sqrt(p) Psi_rho^dag Psi_sigma sqrt(q).
    const Eigen::MatrixXcd overlap = rho.eigenvectors().adjoint() * sigma.eigenvectors();
    const Eigen::VectorXd sp = rho.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::VectorXd sq = sigma.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXcd k =
        sp.asDiagonal().toDenseMatrix().cast<Complex>() * overlap *
        sq.asDiagonal().toDenseMatrix().cast<Complex>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k * k.adjoint());
    if (es.info() != Eigen::Success)
        throw NumericalError("numerical", "fidelity eigendecomposition failed");

    double root_fidelity = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double lambda = es.eigenvalues()[i];
        if (lambda < -1e-10)
            throw NumericalError("non-psd-state",
                                 "fidelity kernel has eigenvalue " + std::to_string(lambda));
        lambda = std::max(lambda, 0.0);
        root_fidelity += std::sqrt(lambda);
    }
    return root_fidelity;
}

double fd_fidelity_oracle(const DensityOperator& state, const QuadraticHamiltonian& h,
                          double dtheta)
{
    if (!(dtheta >= 1e-5 && dtheta <= 1e-2))
        throw ValidationError("validation", "dtheta must lie in [1e-5, 1e-2]");

    const DensityOperator shifted = evolve(state, h, dtheta);
    const double root_fidelity = std::min(uhlmann_root_fidelity(state, shifted), 1.0);
    return 8.0 * (1.0 - root_fidelity) / (dtheta * dtheta);
}

std::pair<double, double> extended_space_check(const ModeFamily& family,
                                               const DensityOperator& state,
                                               int n_extra_vacuum_modes)
{
    if (n_extra_vacuum_modes < 0)
        throw ValidationError("validation", "extension size must be >= 0");

    const OverlapData overlaps = compute_overlaps(family);
    const std::size_t ni = overlaps.populated.size();
    if (static_cast<int>(ni) != state.space().n_modes())
        throw ValidationError("index-mismatch", "state modes != populated set");

    std::vector<SampledFunction> populated_modes;
    std::vector<SampledFunction> derivatives;
    for (std::size_t k : family.populated) {
        populated_modes.push_back(family.eval(k, 0.0));
        derivatives.push_back(derivative_mode(family, k));
    }

    // Orthonormal extension spanning the derivative modes' vacuum components.
    std::vector<SampledFunction> extension;
    for (const auto& d : derivatives) {
        Eigen::VectorXcd residual = d.values();
        for (const auto& f : populated_modes) {
            const Complex c = inner_product(f, d);
            residual -= c * f.values();
        }
        SampledFunction r(d.grid_ptr(), residual);
        for (const auto& e : extension) {
            const Complex c = inner_product(e, r);
            residual -= c * e.values();
            r = SampledFunction(d.grid_ptr(), residual);
        }
        const double norm = grid_norm(r);
        if (norm <= 1e-8)
            continue; // derivative already inside the modeled span
        if (static_cast<int>(extension.size()) >= n_extra_vacuum_modes)
            throw NumericalError("span-deficiency",
                                 "Gram-Schmidt residual " + std::to_string(norm) +
                                     " left after " + std::to_string(n_extra_vacuum_modes) +
                                     " extension modes");
        extension.emplace_back(r.grid_ptr(), r.values() / norm);
    }

    const std::size_t ne = extension.size();
    const std::size_t total = ni + ne;

    // Extended coefficient matrix. Columns for the populated modes are exact
    // quadratures; columns for the extension modes are fixed by Hermiticity
    // of the generator. The result cannot depend on the latter because the
    // extension modes annihilate every eigenvector of the state.
    Eigen::MatrixXcd c_ext = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(total),
                                                    static_cast<Eigen::Index>(total));
    for (std::size_t a = 0; a < ni; ++a)
        for (std::size_t b = 0; b < ni; ++b)
            c_ext(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                overlaps.C(static_cast<Eigen::Index>(family.populated[a]),
                           static_cast<Eigen::Index>(family.populated[b]));
    for (std::size_t e = 0; e < ne; ++e)
        for (std::size_t b = 0; b < ni; ++b) {
            const Complex c = inner_product(extension[e], derivatives[b]);
            c_ext(static_cast<Eigen::Index>(ni + e), static_cast<Eigen::Index>(b)) = c;
            c_ext(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(ni + e)) =
                -std::conj(c);
        }

    std::vector<int> cutoffs = state.space().cutoffs();
    for (std::size_t e = 0; e < ne; ++e)
        cutoffs.push_back(1);
    const FockOperatorSpace ext_space(cutoffs);

    // Embed the state with the extension modes in vacuum. Extension modes are
    // the fastest-varying indices, so each old amplitude lands at a scaled
    // position in the larger space.
    std::size_t pad = 1;
    for (std::size_t e = 0; e < ne; ++e)
        pad *= 2;
    Eigen::MatrixXcd vecs = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(ext_space.dim()),
                                                   state.rank());
    for (Eigen::Index col = 0; col < state.rank(); ++col)
        for (Eigen::Index row = 0; row < state.eigenvectors().rows(); ++row)
            vecs(static_cast<Eigen::Index>(static_cast<std::size_t>(row) * pad), col) =
                state.eigenvectors()(row, col);
    const DensityOperator ext_state =
        DensityOperator::trusted(ext_space, state.eigenvalues(), std::move(vecs));

    OverlapData ext_overlaps;
    ext_overlaps.C = c_ext;
    ext_overlaps.populated.resize(total);
    for (std::size_t i = 0; i < total; ++i)
        ext_overlaps.populated[i] = i;
    const QuadraticHamiltonian h_full =
        assemble_hamiltonian(ext_overlaps, HamiltonianScope::extended, ext_space);

    const double full_value = unitary_qfi(ext_state, h_full);
    const QfiReport r = mode_parameter_qfi(state, overlaps, Eigen::VectorXd::Zero(state.rank()));
    return {full_value, r.unitary_term + r.vacuum_term};
}

} // namespace modeqfi
