#pragma once

// Readout (SPAM) mitigation from a full 2^M x 2^M calibration matrix.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qzeno/circuit.hpp"
#include "qzeno/simulator.hpp"

namespace qzeno {

inline constexpr unsigned kMaxCalibrationQubits = 7;

// Column j is the measured distribution after preparing basis state |j>.
class CalibrationMatrix {
public:
    // Validates non-negative columns summing to 1 within 1e-9.
    CalibrationMatrix(unsigned n_qubits, std::vector<double> row_major, std::uint64_t shots = 0);

    unsigned n_qubits() const noexcept { return m_; }
    std::size_t dim() const noexcept { return std::size_t{1} << m_; }
    std::uint64_t shots() const noexcept { return shots_; }
    double operator()(std::size_t r, std::size_t c) const { return a_[r * dim() + c]; }
    std::span<const double> entries() const noexcept { return a_; }

private:
    unsigned m_ = 0;
    std::vector<double> a_;
    std::uint64_t shots_ = 0;
};

// Circuit j prepares |j> with X gates and measures qubit k into clbit k.
// Throws SizeLimitError for M > 7 and InvalidArgument for M = 0.
std::vector<Circuit> build_calibration_circuits(unsigned m);
// Same states on the given device qubits; clbit k reads qubits[k].
std::vector<Circuit> build_calibration_circuits(std::span<const unsigned> qubits, unsigned n_device_qubits);

// Throws InvalidArgument unless there are 2^M histograms with equal shots.
CalibrationMatrix assemble_matrix(std::span<const CountsHistogram> histograms);

struct InverseMitigation {
    ProbabilityDistribution quasi;  // may contain negative entries; sums to 1
    double condition_number = 0.0;  // 2-norm
};

// A^-1 p. Throws DomainError when A is numerically singular.
InverseMitigation mitigate_inverse(const CalibrationMatrix& a, std::span<const double> p_meas);

double condition_number(const CalibrationMatrix& a);

// argmin ||A q - p|| over the probability simplex. Returns the inverse
// result unchanged when it is already a distribution; otherwise projected
// accelerated gradient followed by an exact solve on the detected support.
// Throws ConvergenceError when neither stage settles.
ProbabilityDistribution mitigate_constrained(const CalibrationMatrix& a, std::span<const double> p_meas);

// Euclidean projection onto {q >= 0, sum q = 1}.
std::vector<double> project_to_simplex(std::span<const double> v);

struct FidelityResult {
    double value = 0.0;
    bool clipped = false;  // a negative entry was zeroed and the input renormalized
};

// [sum sqrt(p_i q_i)]^2. Throws InvalidArgument on a length mismatch or an
// input with no positive mass.
FidelityResult fidelity(std::span<const double> p, std::span<const double> q);

// "# qzeno.calibration/1 M=<m> shots=<n>" then 2^M comma-separated rows.
std::string calibration_csv(const CalibrationMatrix& a);
CalibrationMatrix calibration_from_csv(const std::string& text);

}  // namespace qzeno
