#include "qzeno/qcore.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "qzeno/error.hpp"
#include "qzeno/kernels.hpp"

namespace qzeno {
namespace {

bool is_pow2(std::size_t v) { return v != 0 && std::has_single_bit(v); }

unsigned log2_exact(std::size_t v) { return static_cast<unsigned>(std::countr_zero(v)); }

void check_qubit_count(unsigned n) {
    if (n > kMaxQubits) {
        throw SizeLimitError("dense backends are limited to " + std::to_string(kMaxQubits) + " qubits, got " +
                             std::to_string(n));
    }
}

void check_targets(std::span<const unsigned> targets, unsigned n_qubits, std::size_t matrix_dim) {
    if (!is_pow2(matrix_dim)) throw InvalidArgument("gate dimension must be a power of two");
    if (targets.size() != log2_exact(matrix_dim)) {
        throw InvalidArgument("gate acts on " + std::to_string(log2_exact(matrix_dim)) + " qubits but " +
                              std::to_string(targets.size()) + " targets were given");
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= n_qubits) {
            throw InvalidArgument("target qubit " + std::to_string(targets[i]) + " out of range for " +
                                  std::to_string(n_qubits) + " qubits");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (targets[i] == targets[j]) throw InvalidArgument("duplicate target qubit " + std::to_string(targets[i]));
        }
    }
}

using EigenMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenMat> as_eigen(std::span<const cplx> e, std::size_t dim) {
    return Eigen::Map<const EigenMat>(e.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
}

}  // namespace

void apply_matrix(std::span<cplx> amps, unsigned n_qubits, std::span<const cplx> m,
                  std::span<const unsigned> targets) {
    const std::size_t k = targets.size();
    if (k == 1) {
        kernels::apply_1q(amps, targets[0], std::span<const cplx, 4>(m.data(), 4));
        return;
    }
    if (k == 2) {
        kernels::apply_2q(amps, targets[0], targets[1], std::span<const cplx, 16>(m.data(), 16));
        return;
    }
    if (k == 0) return;

    // Generic path for k >= 3: gather, multiply, scatter.
    const std::size_t local = std::size_t{1} << k;
    std::vector<unsigned> sorted(targets.begin(), targets.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> offsets(local, 0);
    for (std::size_t j = 0; j < local; ++j) {
        for (std::size_t b = 0; b < k; ++b) {
            if ((j >> b) & 1U) offsets[j] |= std::size_t{1} << targets[b];
        }
    }
    std::vector<cplx> in(local), out(local);
    const std::size_t groups = (std::size_t{1} << n_qubits) >> k;
    for (std::size_t g = 0; g < groups; ++g) {
        std::size_t base = g;
        for (unsigned t : sorted) base = kernels::insert_zero_bit(base, t);
        for (std::size_t j = 0; j < local; ++j) in[j] = amps[base | offsets[j]];
        for (std::size_t r = 0; r < local; ++r) {
            cplx acc{0.0, 0.0};
            for (std::size_t c = 0; c < local; ++c) acc += m[r * local + c] * in[c];
            out[r] = acc;
        }
        for (std::size_t j = 0; j < local; ++j) amps[base | offsets[j]] = out[j];
    }
}

// ---------------------------------------------------------------- UnitaryMatrix

UnitaryMatrix UnitaryMatrix::from_entries(std::size_t dim, std::vector<cplx> row_major, double tol) {
    if (!is_pow2(dim)) throw InvalidArgument("unitary dimension must be a power of two");
    if (row_major.size() != dim * dim) throw InvalidArgument("unitary entry count does not match dimension");
    for (const cplx& z : row_major) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw InvalidArgument("non-finite unitary entry");
    }
    UnitaryMatrix u(dim, std::move(row_major));
    const double err = u.unitarity_error();
    if (err > tol) throw InvalidArgument("matrix is not unitary: ||U^dagger U - I|| = " + std::to_string(err));
    return u;
}

UnitaryMatrix UnitaryMatrix::identity(std::size_t dim) {
    std::vector<cplx> e(dim * dim, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = 1.0;
    return UnitaryMatrix(dim, std::move(e));
}

UnitaryMatrix UnitaryMatrix::trusted(std::size_t dim, std::vector<cplx> row_major) {
    return UnitaryMatrix(dim, std::move(row_major));
}

unsigned UnitaryMatrix::n_qubits() const noexcept { return log2_exact(dim_); }

UnitaryMatrix UnitaryMatrix::adjoint() const {
    std::vector<cplx> e(dim_ * dim_);
    for (std::size_t r = 0; r < dim_; ++r)
        for (std::size_t c = 0; c < dim_; ++c) e[c * dim_ + r] = std::conj(entries_[r * dim_ + c]);
    return UnitaryMatrix(dim_, std::move(e));
}

UnitaryMatrix UnitaryMatrix::operator*(const UnitaryMatrix& rhs) const {
    if (rhs.dim_ != dim_) throw InvalidArgument("unitary dimension mismatch in product");
    std::vector<cplx> e(dim_ * dim_);
    Eigen::Map<EigenMat>(e.data(), static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_)) =
        as_eigen(entries_, dim_) * as_eigen(rhs.entries_, dim_);
    return UnitaryMatrix(dim_, std::move(e));
}

double UnitaryMatrix::unitarity_error() const {
    const auto u = as_eigen(entries_, dim_);
    const EigenMat prod = u.adjoint() * u;
    return (prod - EigenMat::Identity(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_))).norm();
}

UnitaryMatrix u3_matrix(double theta, double phi, double lambda) {
    if (!std::isfinite(theta) || !std::isfinite(phi) || !std::isfinite(lambda)) {
        throw InvalidArgument("u3_matrix: angles must be finite");
    }
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return UnitaryMatrix::trusted(2, {cplx{c, 0.0}, -std::polar(s, lambda), std::polar(s, phi),
                                      std::polar(c, phi + lambda)});
}

// ---------------------------------------------------------------- StateVector

StateVector::StateVector(unsigned n_qubits) : n_qubits_(n_qubits) {
    check_qubit_count(n_qubits);
    amps_.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector StateVector::basis(unsigned n_qubits, std::size_t index) {
    StateVector psi(n_qubits);
    if (index >= psi.dim()) throw InvalidArgument("basis index out of range");
    psi.amps_[0] = 0.0;
    psi.amps_[index] = 1.0;
    return psi;
}

StateVector StateVector::from_amplitudes(std::vector<cplx> amplitudes, double tol) {
    if (!is_pow2(amplitudes.size())) throw InvalidArgument("state length must be a power of two");
    const unsigned n = log2_exact(amplitudes.size());
    check_qubit_count(n);
    for (const cplx& z : amplitudes) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw InvalidArgument("non-finite amplitude");
    }
    StateVector psi(n, std::move(amplitudes));
    const double norm = psi.norm_sq();
    if (std::abs(norm - 1.0) > tol) throw InvalidArgument("state is not normalized: norm^2 = " + std::to_string(norm));
    return psi;
}

double StateVector::norm_sq() const { return kernels::norm_sq(amps_); }

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(amps_.size());
    std::transform(amps_.begin(), amps_.end(), p.begin(), [](const cplx& z) { return std::norm(z); });
    return p;
}

void StateVector::apply_in_place(const UnitaryMatrix& u, std::span<const unsigned> targets) {
    check_targets(targets, n_qubits_, u.dim());
    apply_matrix(amps_, n_qubits_, u.entries(), targets);
}

StateVector apply_gate(const StateVector& psi, const UnitaryMatrix& u, std::span<const unsigned> targets) {
    StateVector out = psi;
    out.apply_in_place(u, targets);
    return out;
}

// ---------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(unsigned n_qubits) : n_qubits_(n_qubits) {
    check_qubit_count(n_qubits);
    entries_.assign(dim() * dim(), cplx{0.0, 0.0});
    entries_[0] = 1.0;
}

DensityMatrix DensityMatrix::from_state(const StateVector& psi) {
    const std::size_t d = psi.dim();
    std::vector<cplx> e(d * d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) e[r * d + c] = psi[r] * std::conj(psi[c]);
    return DensityMatrix(psi.n_qubits(), std::move(e));
}

DensityMatrix DensityMatrix::from_entries(unsigned n_qubits, std::vector<cplx> row_major, double tol) {
    check_qubit_count(n_qubits);
    const std::size_t d = std::size_t{1} << n_qubits;
    if (row_major.size() != d * d) throw InvalidArgument("density matrix entry count does not match qubit count");
    DensityMatrix rho(n_qubits, std::move(row_major));
    if (rho.hermiticity_error() > tol) throw InvalidArgument("density matrix is not Hermitian");
    if (std::abs(rho.trace() - cplx{1.0, 0.0}) > tol) throw InvalidArgument("density matrix trace is not 1");
    if (rho.min_eigenvalue() < -1e-9) throw InvalidArgument("density matrix is not positive semidefinite");
    return rho;
}

cplx DensityMatrix::trace() const {
    cplx t{0.0, 0.0};
    for (std::size_t i = 0; i < dim(); ++i) t += entries_[i * dim() + i];
    return t;
}

double DensityMatrix::hermiticity_error() const {
    double worst = 0.0;
    const std::size_t d = dim();
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = r; c < d; ++c)
            worst = std::max(worst, std::abs(entries_[r * d + c] - std::conj(entries_[c * d + r])));
    return worst;
}

double DensityMatrix::min_eigenvalue() const {
    const EigenMat m = as_eigen(entries_, dim());
    const EigenMat herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

std::vector<double> DensityMatrix::probabilities() const {
    std::vector<double> p(dim());
    for (std::size_t i = 0; i < dim(); ++i) p[i] = entries_[i * dim() + i].real();
    return p;
}

void DensityMatrix::apply_in_place(const UnitaryMatrix& u, std::span<const unsigned> targets) {
    check_targets(targets, n_qubits_, u.dim());
    // With entries laid out row-major, column bits are qubits [0, n) and row
    // bits are [n, 2n). U rho U^dagger = U on the row bits, conj(U) on the
    // column bits.
    std::vector<unsigned> row_targets(targets.begin(), targets.end());
    for (unsigned& t : row_targets) t += n_qubits_;
    std::vector<cplx> conj_u(u.entries().begin(), u.entries().end());
    for (cplx& z : conj_u) z = std::conj(z);
    apply_matrix(entries_, 2 * n_qubits_, u.entries(), row_targets);
    apply_matrix(entries_, 2 * n_qubits_, conj_u, targets);
}

void DensityMatrix::apply_kraus_in_place(std::span<const Mat2> kraus, unsigned qubit) {
    if (qubit >= n_qubits_) throw InvalidArgument("Kraus target qubit out of range");
    if (kraus.empty()) return;
    std::vector<cplx> acc(entries_.size(), cplx{0.0, 0.0});
    std::vector<cplx> term;
    const unsigned row_target[1] = {qubit + n_qubits_};
    const unsigned col_target[1] = {qubit};
    for (const Mat2& k : kraus) {
        term = entries_;
        const Mat2 kc = {std::conj(k[0]), std::conj(k[1]), std::conj(k[2]), std::conj(k[3])};
        apply_matrix(term, 2 * n_qubits_, k, row_target);
        apply_matrix(term, 2 * n_qubits_, kc, col_target);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
    }
    entries_ = std::move(acc);
}

DensityMatrix apply_gate(const DensityMatrix& rho, const UnitaryMatrix& u, std::span<const unsigned> targets) {
    DensityMatrix out = rho;
    out.apply_in_place(u, targets);
    return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const unsigned> keep) {
    if (keep.empty()) throw InvalidArgument("partial_trace: keep list is empty");
    check_targets(keep, rho.n_qubits(), std::size_t{1} << keep.size());

    const unsigned k = static_cast<unsigned>(keep.size());
    std::size_t keep_mask = 0;
    for (unsigned q : keep) keep_mask |= std::size_t{1} << q;

    auto reduce = [&](std::size_t full) {
        std::size_t r = 0;
        for (unsigned i = 0; i < k; ++i) r |= ((full >> keep[i]) & 1U) << i;
        return r;
    };

    const std::size_t d = rho.dim();
    const std::size_t dk = std::size_t{1} << k;
    std::vector<cplx> out(dk * dk, cplx{0.0, 0.0});
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            if ((r & ~keep_mask) != (c & ~keep_mask)) continue;
            out[reduce(r) * dk + reduce(c)] += rho.entries_[r * d + c];
        }
    }
    return DensityMatrix(k, std::move(out));
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    const unsigned n = a.n_qubits() + b.n_qubits();
    check_qubit_count(n);
    std::vector<cplx> out(a.dim() * b.dim());
    for (std::size_t ib = 0; ib < b.dim(); ++ib)
        for (std::size_t ia = 0; ia < a.dim(); ++ia) out[ia + a.dim() * ib] = a[ia] * b[ib];
    return StateVector(n, std::move(out));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    const unsigned n = a.n_qubits() + b.n_qubits();
    check_qubit_count(n);
    const std::size_t da = a.dim(), db = b.dim(), d = da * db;
    std::vector<cplx> out(d * d);
    for (std::size_t rb = 0; rb < db; ++rb)
        for (std::size_t ra = 0; ra < da; ++ra)
            for (std::size_t cb = 0; cb < db; ++cb)
                for (std::size_t ca = 0; ca < da; ++ca)
                    out[(ra + da * rb) * d + (ca + da * cb)] = a(ra, ca) * b(rb, cb);
    return DensityMatrix(n, std::move(out));
}

}  // namespace qzeno
