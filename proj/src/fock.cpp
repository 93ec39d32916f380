#include "modeqfi/fock.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace modeqfi {

namespace {

constexpr double kRetainEigenvalue = 1e-14; // storage threshold for p_n
constexpr double kCaptureGate = 1e-8;       // build_state adequacy gate
constexpr double kCutoffTail = 1e-12;       // adequate_cutoffs mass target
constexpr double kCutoffMeanTail = 2e-11;   // adequate_cutoffs first-moment target
constexpr double kCutoffM2Tail = 2e-11;     // adequate_cutoffs second-moment target

} // namespace

FockOperatorSpace::FockOperatorSpace(int n_modes, int cutoff)
    : FockOperatorSpace(std::vector<int>(static_cast<std::size_t>(std::max(n_modes, 0)), cutoff))
{
}

FockOperatorSpace::FockOperatorSpace(std::vector<int> cutoffs) : cutoffs_(std::move(cutoffs))
{
    if (cutoffs_.empty())
        throw ValidationError("dimension-mismatch", "space needs at least one mode");
    dim_ = 1;
    for (int c : cutoffs_) {
        if (c < 0)
            throw ValidationError("validation", "mode cutoff must be non-negative");
        dim_ *= static_cast<std::size_t>(c) + 1;
    }
    if (dim_ < 2)
        throw ValidationError("dimension-mismatch", "space dimension must be at least 2");
    strides_.resize(cutoffs_.size());
    std::size_t s = 1;
    for (std::size_t m = cutoffs_.size(); m-- > 0;) {
        strides_[m] = s;
        s *= static_cast<std::size_t>(cutoffs_[m]) + 1;
    }
}

int FockOperatorSpace::occupation(std::size_t index, int mode) const
{
    const auto m = static_cast<std::size_t>(mode);
    return static_cast<int>((index / strides_[m]) % (static_cast<std::size_t>(cutoffs_[m]) + 1));
}

Eigen::SparseMatrix<Complex> FockOperatorSpace::quadratic_operator(const Eigen::MatrixXcd& h) const
{
    const int m = n_modes();
    if (h.rows() != m || h.cols() != m)
        throw ValidationError("dimension-mismatch", "coefficient matrix size != n_modes");

    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(dim_ * static_cast<std::size_t>(m));
    for (std::size_t idx = 0; idx < dim_; ++idx) {
        Complex diag(0.0, 0.0);
        for (int j = 0; j < m; ++j) {
            const int nj = occupation(idx, j);
            if (h(j, j) != Complex(0.0, 0.0))
                diag += h(j, j) * static_cast<double>(nj);
            for (int k = 0; k < m; ++k) {
                if (k == j || h(j, k) == Complex(0.0, 0.0))
                    continue;
                const int nk = occupation(idx, k);
                if (nk == 0 || nj + 1 > cutoff(j))
                    continue; // a_j^dag a_k |idx>: leaves the truncated space
                const std::size_t target = idx - strides_[static_cast<std::size_t>(k)] +
                                           strides_[static_cast<std::size_t>(j)];
                const double amp = std::sqrt(static_cast<double>(nk) * (nj + 1.0));
                trips.emplace_back(static_cast<int>(target), static_cast<int>(idx),
                                   h(j, k) * amp);
            }
        }
        if (diag != Complex(0.0, 0.0))
            trips.emplace_back(static_cast<int>(idx), static_cast<int>(idx), diag);
    }
    Eigen::SparseMatrix<Complex> out(static_cast<int>(dim_), static_cast<int>(dim_));
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

Eigen::VectorXcd FockOperatorSpace::apply_annihilation(const Eigen::VectorXcd& v, int mode) const
{
    if (static_cast<std::size_t>(v.size()) != dim_)
        throw ValidationError("dimension-mismatch", "vector size != space dimension");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
    const std::size_t s = strides_[static_cast<std::size_t>(mode)];
    for (std::size_t idx = 0; idx < dim_; ++idx) {
        const int n = occupation(idx, mode);
        if (n > 0)
            out[static_cast<Eigen::Index>(idx - s)] +=
                std::sqrt(static_cast<double>(n)) * v[static_cast<Eigen::Index>(idx)];
    }
    return out;
}

Eigen::VectorXcd FockOperatorSpace::apply_creation(const Eigen::VectorXcd& v, int mode) const
{
    if (static_cast<std::size_t>(v.size()) != dim_)
        throw ValidationError("dimension-mismatch", "vector size != space dimension");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
    const std::size_t s = strides_[static_cast<std::size_t>(mode)];
    for (std::size_t idx = 0; idx < dim_; ++idx) {
        const int n = occupation(idx, mode);
        if (n < cutoff(mode))
            out[static_cast<Eigen::Index>(idx + s)] +=
                std::sqrt(n + 1.0) * v[static_cast<Eigen::Index>(idx)];
    }
    return out;
}

QuadraticHamiltonian::QuadraticHamiltonian(FockOperatorSpace space, Eigen::MatrixXcd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs))
{
    if (coeffs_.rows() != space_.n_modes() || coeffs_.cols() != space_.n_modes())
        throw ValidationError("dimension-mismatch", "coefficient matrix size != n_modes");
    const double herm_dev = (coeffs_ - coeffs_.adjoint()).cwiseAbs().maxCoeff();
    if (herm_dev > 1e-12 * std::max(1.0, coeffs_.cwiseAbs().maxCoeff()))
        throw NumericalError("non-hermitian-input",
                             "coefficient matrix deviates from Hermiticity by " +
                                 std::to_string(herm_dev));
    coeffs_ = 0.5 * (coeffs_ + coeffs_.adjoint().eval());

    zero_ = coeffs_.cwiseAbs().maxCoeff() == 0.0;
    diagonal_ = true;
    for (Eigen::Index j = 0; j < coeffs_.rows() && diagonal_; ++j)
        for (Eigen::Index k = 0; k < coeffs_.cols(); ++k)
            if (j != k && coeffs_(j, k) != Complex(0.0, 0.0)) {
                diagonal_ = false;
                break;
            }
    sparse_ = space_.quadratic_operator(coeffs_);
}

void DensityOperator::validate_spectrum() const
{
    if (eigenvalues_.size() == 0)
        throw ValidationError("validation", "state needs at least one eigenpair");
    if (eigenvectors_.cols() != eigenvalues_.size())
        throw ValidationError("dimension-mismatch", "eigenvector count != eigenvalue count");
    if (static_cast<std::size_t>(eigenvectors_.rows()) != space_.dim())
        throw ValidationError("dimension-mismatch", "eigenvector length != space dimension");

    for (Eigen::Index n = 0; n < eigenvalues_.size(); ++n)
        if (eigenvalues_[n] < -1e-12)
            throw NumericalError("negative-population", "eigenvalue " + std::to_string(n) +
                                                            " is negative");
    const double trace = eigenvalues_.sum();
    if (std::abs(trace - 1.0) > 1e-10)
        throw NumericalError("validation",
                             "eigenvalues sum to " + std::to_string(trace) + ", expected 1");
    if (population_derivatives_) {
        if (population_derivatives_->size() != eigenvalues_.size())
            throw ValidationError("dimension-mismatch",
                                  "population derivative count != eigenvalue count");
        if (std::abs(population_derivatives_->sum()) > 1e-10)
            throw NumericalError("validation", "population derivatives must sum to zero");
    }
}

DensityOperator::DensityOperator(FockOperatorSpace space, Eigen::VectorXd eigenvalues,
                                 Eigen::MatrixXcd eigenvectors,
                                 std::optional<Eigen::VectorXd> population_derivatives)
    : space_(std::move(space)), eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      population_derivatives_(std::move(population_derivatives))
{
    validate_spectrum();
    const Eigen::MatrixXcd gram = eigenvectors_.adjoint() * eigenvectors_;
    const double dev =
        (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-10)
        throw NumericalError("validation", "eigenvectors deviate from orthonormality by " +
                                               std::to_string(dev));
}

DensityOperator DensityOperator::trusted(FockOperatorSpace space, Eigen::VectorXd eigenvalues,
                                         Eigen::MatrixXcd eigenvectors,
                                         std::optional<Eigen::VectorXd> population_derivatives)
{
    DensityOperator out;
    out.space_ = std::move(space);
    out.eigenvalues_ = std::move(eigenvalues);
    out.eigenvectors_ = std::move(eigenvectors);
    out.population_derivatives_ = std::move(population_derivatives);
    out.validate_spectrum();
    return out;
}

DensityOperator DensityOperator::from_matrix(const FockOperatorSpace& space,
                                             const Eigen::MatrixXcd& rho)
{
    if (static_cast<std::size_t>(rho.rows()) != space.dim() || rho.rows() != rho.cols())
        throw ValidationError("dimension-mismatch", "matrix size != space dimension");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double p = es.eigenvalues()[i];
        if (p < -1e-10)
            throw NumericalError("negative-population", "density matrix is not PSD");
        if (p >= kRetainEigenvalue)
            keep.push_back(i);
    }
    if (keep.empty())
        throw NumericalError("validation", "density matrix has no retained eigenvalues");

    Eigen::VectorXd p(static_cast<Eigen::Index>(keep.size()));
    Eigen::MatrixXcd v(rho.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = es.eigenvalues()[keep[i]];
        v.col(static_cast<Eigen::Index>(i)) = es.eigenvectors().col(keep[i]);
    }
    p /= p.sum();
    return trusted(space, std::move(p), std::move(v));
}

Eigen::MatrixXcd DensityOperator::mode_correlations() const
{
    const int m = space_.n_modes();
    std::vector<Eigen::MatrixXcd> lowered;
    lowered.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        Eigen::MatrixXcd a(eigenvectors_.rows(), eigenvectors_.cols());
        for (Eigen::Index c = 0; c < eigenvectors_.cols(); ++c)
            a.col(c) = space_.apply_annihilation(eigenvectors_.col(c), k);
        lowered.push_back(std::move(a));
    }
    Eigen::MatrixXcd corr(m, m);
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
            Complex sum(0.0, 0.0);
            for (Eigen::Index c = 0; c < eigenvectors_.cols(); ++c)
                sum += eigenvalues_[c] * lowered[static_cast<std::size_t>(k)].col(c).dot(
                                             lowered[static_cast<std::size_t>(l)].col(c));
            corr(k, l) = sum;
        }
    return corr;
}

double DensityOperator::mean_occupation(int mode) const
{
    double total = 0.0;
    for (Eigen::Index c = 0; c < eigenvectors_.cols(); ++c)
        total += eigenvalues_[c] *
                 space_.apply_annihilation(eigenvectors_.col(c), mode).squaredNorm();
    return total;
}

double DensityOperator::mean_total_occupation() const
{
    double total = 0.0;
    for (int k = 0; k < space_.n_modes(); ++k)
        total += mean_occupation(k);
    return total;
}

Eigen::MatrixXcd DensityOperator::dense_matrix() const
{
    return eigenvectors_ * eigenvalues_.asDiagonal().toDenseMatrix().cast<Complex>() *
           eigenvectors_.adjoint();
}

DensityOperator DensityOperator::with_population_derivatives(Eigen::VectorXd dp) const
{
    return trusted(space_, eigenvalues_, eigenvectors_, std::move(dp));
}

namespace {

// Single-mode ingredients: spectral weights plus vectors over cutoff+1 levels.
struct ModeSpectrum {
    std::vector<double> weights;
    std::vector<Eigen::VectorXcd> vectors;
    double captured = 1.0;
};

ModeSpectrum pure_vector(Eigen::VectorXcd v, double captured)
{
    ModeSpectrum s;
    const double norm = v.norm();
    s.weights = {1.0};
    s.vectors = {v / norm};
    s.captured = captured;
    return s;
}

ModeSpectrum single_mode_spectrum(const StateSpec& spec, int cutoff)
{
    const Eigen::Index levels = cutoff + 1;
    switch (spec.kind) {
    case StateSpec::Kind::fock_superposition: {
        if (spec.amplitudes.empty())
            throw ValidationError("validation", "fock superposition needs amplitudes");
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(levels);
        for (const auto& [level, amp] : spec.amplitudes) {
            if (level < 0)
                throw ValidationError("unphysical-params", "negative Fock level");
            if (level > cutoff)
                throw NumericalError("truncation-too-small",
                                     "Fock level " + std::to_string(level) +
                                         " exceeds cutoff " + std::to_string(cutoff));
            v[level] += amp;
        }
        if (v.norm() == 0.0)
            throw ValidationError("validation", "fock superposition has zero norm");
        return pure_vector(std::move(v), 1.0);
    }
    case StateSpec::Kind::coherent: {
        if (!std::isfinite(std::abs(spec.alpha)))
            throw ValidationError("unphysical-params", "coherent amplitude must be finite");
        Eigen::VectorXcd v(levels);
        v[0] = std::exp(-0.5 * std::norm(spec.alpha));
        for (Eigen::Index n = 1; n < levels; ++n)
            v[n] = v[n - 1] * spec.alpha / std::sqrt(static_cast<double>(n));
        const double captured = v.squaredNorm();
        return pure_vector(std::move(v), captured);
    }
    case StateSpec::Kind::thermal: {
        if (spec.mean < 0.0)
            throw ValidationError("unphysical-params", "thermal mean must be >= 0");
        const double q = spec.mean / (spec.mean + 1.0);
        ModeSpectrum s;
        double p = 1.0 / (spec.mean + 1.0);
        double captured = 0.0;
        for (Eigen::Index n = 0; n < levels; ++n) {
            captured += p;
            if (p >= kRetainEigenvalue) {
                Eigen::VectorXcd v = Eigen::VectorXcd::Zero(levels);
                v[n] = 1.0;
                s.weights.push_back(p);
                s.vectors.push_back(std::move(v));
            }
            p *= q;
        }
        s.captured = captured;
        return s;
    }
    case StateSpec::Kind::squeezed_vacuum: {
        if (spec.r < 0.0)
            throw ValidationError("unphysical-params", "squeeze parameter must be >= 0");
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(levels);
        const Complex ratio = -std::exp(Complex(0.0, spec.squeeze_phase)) * std::tanh(spec.r);
        Complex c = 1.0 / std::sqrt(std::cosh(spec.r));
        for (int m = 0; 2 * m <= cutoff; ++m) {
            v[2 * m] = c;
            c *= ratio * std::sqrt((2.0 * m + 1.0) * (2.0 * m + 2.0)) / (2.0 * (m + 1.0));
        }
        const double captured = v.squaredNorm();
        return pure_vector(std::move(v), captured);
    }
    case StateSpec::Kind::product:
        throw ValidationError("validation", "product spec inside a single mode");
    }
    throw ValidationError("validation", "unknown state kind");
}

int single_mode_adequate_cutoff(const StateSpec& spec)
{
    constexpr int hard_limit = 100000;
    switch (spec.kind) {
    case StateSpec::Kind::fock_superposition: {
        int top = 0;
        for (const auto& [level, amp] : spec.amplitudes)
            top = std::max(top, level);
        return top;
    }
    case StateSpec::Kind::coherent: {
        const double lambda = std::norm(spec.alpha);
        double p = std::exp(-lambda);
        double tail = 1.0 - p;
        double mean_tail = lambda;
        double m2_tail = lambda * (lambda + 1.0);
        for (int n = 0; n < hard_limit; ++n) {
            if (tail <= kCutoffTail && mean_tail <= kCutoffMeanTail &&
                m2_tail <= kCutoffM2Tail)
                return n + 2;
            p *= lambda / (n + 1.0);
            tail = std::max(tail - p, 0.0);
            mean_tail = std::max(mean_tail - p * (n + 1.0), 0.0);
            m2_tail = std::max(m2_tail - p * (n + 1.0) * (n + 1.0), 0.0);
        }
        throw ValidationError("unphysical-params", "coherent amplitude too large");
    }
    case StateSpec::Kind::thermal: {
        if (spec.mean == 0.0)
            return 1;
        const double q = spec.mean / (spec.mean + 1.0);
        double tail = 1.0;
        double mean_tail = spec.mean;
        double m2_tail = spec.mean * (2.0 * spec.mean + 1.0);
        double p = 1.0 / (spec.mean + 1.0);
        for (int n = 0; n < hard_limit; ++n) {
            tail = std::max(tail - p, 0.0);
            mean_tail = std::max(mean_tail - p * n, 0.0);
            m2_tail = std::max(m2_tail - p * n * static_cast<double>(n), 0.0);
            if (tail <= kCutoffTail && mean_tail <= kCutoffMeanTail &&
                m2_tail <= kCutoffM2Tail)
                return n + 2;
            p *= q;
        }
        throw ValidationError("unphysical-params", "thermal mean too large");
    }
    case StateSpec::Kind::squeezed_vacuum: {
        if (spec.r == 0.0)
            return 1;
        const double t2 = std::pow(std::tanh(spec.r), 2);
        const double sh2 = std::pow(std::sinh(spec.r), 2);
        double prev = 1.0 / std::cosh(spec.r); // |c_0|^2
        double tail = 1.0 - prev;
        double mean_tail = sh2;
        double m2_tail = sh2 * (3.0 * sh2 + 2.0);
        for (int m = 1; 2 * m < hard_limit; ++m) {
            prev *= t2 * (2.0 * m - 1.0) / (2.0 * m);
            tail = std::max(tail - prev, 0.0);
            mean_tail = std::max(mean_tail - prev * 2.0 * m, 0.0);
            m2_tail = std::max(m2_tail - prev * 4.0 * m * static_cast<double>(m), 0.0);
            if (tail <= kCutoffTail && mean_tail <= kCutoffMeanTail &&
                m2_tail <= kCutoffM2Tail)
                return 2 * m + 2;
        }
        throw ValidationError("unphysical-params", "squeeze parameter too large");
    }
    case StateSpec::Kind::product:
        throw ValidationError("validation", "nested product state specs are not supported");
    }
    throw ValidationError("validation", "unknown state kind");
}

} // namespace

StateSpec StateSpec::vacuum() { return fock(0); }

StateSpec StateSpec::fock(int level)
{
    StateSpec s;
    s.kind = Kind::fock_superposition;
    s.amplitudes = {{level, Complex(1.0, 0.0)}};
    return s;
}

StateSpec StateSpec::fock_superposition(std::vector<std::pair<int, Complex>> amps)
{
    StateSpec s;
    s.kind = Kind::fock_superposition;
    s.amplitudes = std::move(amps);
    return s;
}

StateSpec StateSpec::coherent(Complex alpha)
{
    StateSpec s;
    s.kind = Kind::coherent;
    s.alpha = alpha;
    return s;
}

StateSpec StateSpec::thermal(double mean)
{
    StateSpec s;
    s.kind = Kind::thermal;
    s.mean = mean;
    return s;
}

StateSpec StateSpec::squeezed_vacuum(double r, double phase)
{
    StateSpec s;
    s.kind = Kind::squeezed_vacuum;
    s.r = r;
    s.squeeze_phase = phase;
    return s;
}

StateSpec StateSpec::product(std::vector<StateSpec> factors)
{
    StateSpec s;
    s.kind = Kind::product;
    s.factors = std::move(factors);
    return s;
}

std::vector<int> adequate_cutoffs(const StateSpec& spec)
{
    if (spec.kind == StateSpec::Kind::product) {
        std::vector<int> out;
        out.reserve(spec.factors.size());
        for (const auto& f : spec.factors)
            out.push_back(single_mode_adequate_cutoff(f));
        return out;
    }
    return {single_mode_adequate_cutoff(spec)};
}

DensityOperator build_state(const StateSpec& spec, const FockOperatorSpace& space)
{
    const std::vector<StateSpec>* factors;
    std::vector<StateSpec> single{spec};
    if (spec.kind == StateSpec::Kind::product)
        factors = &spec.factors;
    else
        factors = &single;

    if (static_cast<int>(factors->size()) != space.n_modes())
        throw ValidationError("dimension-mismatch",
                              "state recipe covers " + std::to_string(factors->size()) +
                                  " modes, space has " + std::to_string(space.n_modes()));

    std::vector<ModeSpectrum> parts;
    double captured = 1.0;
    for (int m = 0; m < space.n_modes(); ++m) {
        parts.push_back(single_mode_spectrum((*factors)[static_cast<std::size_t>(m)],
                                             space.cutoff(m)));
        captured *= parts.back().captured;
    }
    if (captured < 1.0 - kCaptureGate)
        throw NumericalError("truncation-too-small",
                             "cutoffs capture only " + std::to_string(captured) +
                                 " of the state");

    // Assemble the tensor product spectrum, pruning negligible weights.
    std::vector<double> weights{1.0};
    std::vector<Eigen::VectorXcd> vectors{Eigen::VectorXcd::Ones(1)};
    for (const auto& part : parts) {
        std::vector<double> w_next;
        std::vector<Eigen::VectorXcd> v_next;
        for (std::size_t i = 0; i < weights.size(); ++i)
            for (std::size_t j = 0; j < part.weights.size(); ++j) {
                const double w = weights[i] * part.weights[j];
                if (w < kRetainEigenvalue)
                    continue;
                w_next.push_back(w);
                Eigen::VectorXcd v(vectors[i].size() * part.vectors[j].size());
                for (Eigen::Index a = 0; a < vectors[i].size(); ++a)
                    v.segment(a * part.vectors[j].size(), part.vectors[j].size()) =
                        vectors[i][a] * part.vectors[j];
                v_next.push_back(std::move(v));
            }
        weights = std::move(w_next);
        vectors = std::move(v_next);
    }
    if (weights.empty())
        throw NumericalError("truncation-too-small", "no eigenvalues survive pruning");

    Eigen::VectorXd p(static_cast<Eigen::Index>(weights.size()));
    Eigen::MatrixXcd vecs(static_cast<Eigen::Index>(space.dim()),
                          static_cast<Eigen::Index>(weights.size()));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = weights[i];
        vecs.col(static_cast<Eigen::Index>(i)) = vectors[i];
    }
    p /= p.sum();
    return DensityOperator::trusted(space, std::move(p), std::move(vecs));
}

QuadraticHamiltonian assemble_hamiltonian(const OverlapData& overlaps, HamiltonianScope which,
                                          const FockOperatorSpace& space)
{
    Eigen::MatrixXcd c;
    if (which == HamiltonianScope::populated_only) {
        const auto& idx = overlaps.populated;
        c.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = 0; b < idx.size(); ++b)
                c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                    overlaps.C(static_cast<Eigen::Index>(idx[a]),
                               static_cast<Eigen::Index>(idx[b]));
    } else {
        c = overlaps.C;
    }
    if (c.rows() != space.n_modes())
        throw ValidationError("dimension-mismatch",
                              "space has " + std::to_string(space.n_modes()) +
                                  " modes, overlap block has " + std::to_string(c.rows()));

    Eigen::MatrixXcd h = Complex(0.0, 1.0) * c;
    const double dev = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (dev > 1e-8)
        throw NumericalError("non-hermitian-input",
                             "i C deviates from Hermiticity by " + std::to_string(dev) +
                                 "; mode overlaps violate the orthonormality condition");
    h = 0.5 * (h + h.adjoint().eval());
    // Entries at the derivative-stencil noise floor are snapped so that
    // number-diagonal generators stay structurally diagonal; their
    // contribution to any bound is O(|h|^2) ~ 1e-18 relative.
    const double scale = h.cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
        h(j, j) = Complex(h(j, j).real(), 0.0);
        for (Eigen::Index k = 0; k < h.cols(); ++k)
            if (std::abs(h(j, k)) < 1e-9 * scale)
                h(j, k) = Complex(0.0, 0.0);
    }
    return QuadraticHamiltonian(space, std::move(h));
}

DensityOperator evolve(const DensityOperator& state, const QuadraticHamiltonian& h, double theta)
{
    if (!(state.space() == h.space()))
        throw ValidationError("dimension-mismatch", "state and Hamiltonian live on different spaces");
    if (theta == 0.0 || h.is_zero())
        return state;

    Eigen::MatrixXcd rotated;
    if (h.coeffs_diagonal()) {
        // Number-diagonal generator: exp(-iH theta) is a pure phase per basis
        // state, no eigensolve needed.
        const auto& space = h.space();
        Eigen::VectorXcd phases(static_cast<Eigen::Index>(space.dim()));
        for (std::size_t idx = 0; idx < space.dim(); ++idx) {
            double e = 0.0;
            for (int m = 0; m < space.n_modes(); ++m)
                e += h.coeffs()(m, m).real() * space.occupation(idx, m);
            phases[static_cast<Eigen::Index>(idx)] = std::exp(Complex(0.0, -theta * e));
        }
        rotated = phases.asDiagonal() * state.eigenvectors();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(h.sparse()));
        if (es.info() != Eigen::Success)
            throw NumericalError("numerical", "Hamiltonian eigendecomposition failed");
        const Eigen::VectorXcd phases =
            (Complex(0.0, -theta) * es.eigenvalues().cast<Complex>()).array().exp();
        rotated = es.eigenvectors() *
                  (phases.asDiagonal() * (es.eigenvectors().adjoint() * state.eigenvectors()));
    }
    return DensityOperator::trusted(state.space(), state.eigenvalues(), std::move(rotated),
                                    state.population_derivatives());
}

DensityOperator mix(const DensityOperator& a, const DensityOperator& b, double lambda)
{
    if (!(a.space() == b.space()))
        throw ValidationError("dimension-mismatch", "mixing states from different spaces");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValidationError("validation", "mixing weight must be in [0, 1]");
    return DensityOperator::from_matrix(a.space(), lambda * a.dense_matrix() +
                                                       (1.0 - lambda) * b.dense_matrix());
}

} // namespace modeqfi
