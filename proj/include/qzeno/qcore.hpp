#pragma once

// Dense complex linear algebra for pure and mixed states of a few qubits.
//
// Ordering is little-endian throughout: qubit 0 is the least significant bit
// of a basis index, so |q2 q1 q0> = |1 0 1> is index 5. Tensor products put
// the left operand's qubits in the low-order positions.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qzeno {

using cplx = std::complex<double>;

// Tolerances for exact algebraic identities and for composed pipelines.
inline constexpr double kAlgebraTol = 1e-10;
inline constexpr double kPipelineTol = 1e-8;

// Dense matrices are used up to this many qubits.
inline constexpr unsigned kMaxQubits = 10;

// Row-major 2x2 single-qubit operator (Kraus operators, fixups).
using Mat2 = std::array<cplx, 4>;

class UnitaryMatrix {
public:
    // Validates U^dagger U = I within `tol` (Frobenius norm).
    static UnitaryMatrix from_entries(std::size_t dim, std::vector<cplx> row_major, double tol = kAlgebraTol);
    static UnitaryMatrix identity(std::size_t dim);
    // Products and adjoints of unitaries stay unitary, so they skip the check.
    static UnitaryMatrix trusted(std::size_t dim, std::vector<cplx> row_major);

    std::size_t dim() const noexcept { return dim_; }
    unsigned n_qubits() const noexcept;
    cplx operator()(std::size_t r, std::size_t c) const { return entries_[r * dim_ + c]; }
    std::span<const cplx> entries() const noexcept { return entries_; }

    UnitaryMatrix adjoint() const;
    UnitaryMatrix operator*(const UnitaryMatrix& rhs) const;
    // ||U^dagger U - I||_F
    double unitarity_error() const;

private:
    UnitaryMatrix(std::size_t dim, std::vector<cplx> entries) : dim_(dim), entries_(std::move(entries)) {}
    std::size_t dim_ = 0;
    std::vector<cplx> entries_;
};

class StateVector {
public:
    explicit StateVector(unsigned n_qubits);  // |0...0>
    static StateVector basis(unsigned n_qubits, std::size_t index);
    // Validates power-of-two length and unit norm within `tol`.
    static StateVector from_amplitudes(std::vector<cplx> amplitudes, double tol = kAlgebraTol);

    unsigned n_qubits() const noexcept { return n_qubits_; }
    std::size_t dim() const noexcept { return amps_.size(); }
    cplx operator[](std::size_t i) const { return amps_[i]; }
    std::span<const cplx> amplitudes() const noexcept { return amps_; }
    double norm_sq() const;
    std::vector<double> probabilities() const;

    // In-place evolution for simulator loops. Targets as in apply_gate.
    void apply_in_place(const UnitaryMatrix& u, std::span<const unsigned> targets);

private:
    StateVector(unsigned n, std::vector<cplx> amps) : n_qubits_(n), amps_(std::move(amps)) {}
    unsigned n_qubits_ = 0;
    std::vector<cplx> amps_;

    friend StateVector tensor(const StateVector&, const StateVector&);
};

class DensityMatrix {
public:
    explicit DensityMatrix(unsigned n_qubits);  // |0...0><0...0|
    static DensityMatrix from_state(const StateVector& psi);
    // Validates Hermiticity, unit trace and positive semidefiniteness
    // (minimum eigenvalue >= -1e-9).
    static DensityMatrix from_entries(unsigned n_qubits, std::vector<cplx> row_major, double tol = kAlgebraTol);

    unsigned n_qubits() const noexcept { return n_qubits_; }
    std::size_t dim() const noexcept { return std::size_t{1} << n_qubits_; }
    cplx operator()(std::size_t r, std::size_t c) const { return entries_[r * dim() + c]; }
    std::span<const cplx> entries() const noexcept { return entries_; }

    cplx trace() const;
    double hermiticity_error() const;  // max |rho - rho^dagger|
    double min_eigenvalue() const;
    std::vector<double> probabilities() const;  // real diagonal

    void apply_in_place(const UnitaryMatrix& u, std::span<const unsigned> targets);
    // rho -> sum_k K_k rho K_k^dagger on one qubit.
    void apply_kraus_in_place(std::span<const Mat2> kraus, unsigned qubit);

private:
    DensityMatrix(unsigned n, std::vector<cplx> entries) : n_qubits_(n), entries_(std::move(entries)) {}
    unsigned n_qubits_ = 0;
    std::vector<cplx> entries_;  // row-major; viewed as a 2n-qubit vector with row bits high

    friend DensityMatrix tensor(const DensityMatrix&, const DensityMatrix&);
    friend DensityMatrix partial_trace(const DensityMatrix&, std::span<const unsigned>);
};

// Single-qubit rotation
//   [[cos(t/2),            -e^{i l} sin(t/2)],
//    [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]].
// Throws InvalidArgument on a non-finite angle.
UnitaryMatrix u3_matrix(double theta, double phi, double lambda);

// |psi> -> (U (x) I)|psi>, with targets[k] receiving bit k of U's local index.
// Throws InvalidArgument on out-of-range/duplicate targets or arity mismatch.
StateVector apply_gate(const StateVector& psi, const UnitaryMatrix& u, std::span<const unsigned> targets);
DensityMatrix apply_gate(const DensityMatrix& rho, const UnitaryMatrix& u, std::span<const unsigned> targets);

// Reduced state on `keep`; qubit i of the result is keep[i].
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const unsigned> keep);

// Kronecker product, `a` occupying the low-order qubits.
StateVector tensor(const StateVector& a, const StateVector& b);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

// Applies a row-major 2^k x 2^k matrix to an amplitude array over `n_qubits`
// qubits. Shared by the state, density-matrix and unitary-builder paths.
void apply_matrix(std::span<cplx> amps, unsigned n_qubits, std::span<const cplx> m,
                  std::span<const unsigned> targets);

}  // namespace qzeno
