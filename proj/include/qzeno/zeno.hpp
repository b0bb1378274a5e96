#pragma once

// Zeno experiments: circuit builders, closed-form survival curves, the Zeno
// time of a Hamiltonian and fitting of measured decay curves.
//
// Units: times in microseconds, energies and couplings in rad/us, hbar = 1.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qzeno/circuit.hpp"
#include "qzeno/device.hpp"
#include "qzeno/qcore.hpp"
#include "qzeno/simulator.hpp"
#include "qzeno/transpiler.hpp"

namespace qzeno {

inline constexpr std::uint64_t kDefaultShots = 20000;
// Ancillas available for emulated intermediate measurements.
inline constexpr unsigned kMaxAncillas = 6;

// Rabi rotation exp(-i theta X / 2) = U3(theta, -pi/2, pi/2), split into N
// equal pieces each followed by CX(system -> fresh ancilla).
struct RabiSpec {
    double theta = 0.0;  // radians, [0, 2 pi]
    unsigned n_measurements = 0;
    std::uint64_t shots = kDefaultShots;
};

// Qubit 0 is the system, qubits 1..N the ancillas; clbit k reads qubit k.
// N = 0 is a bare rotation. Throws InvalidArgument for N > kMaxAncillas or
// theta outside [0, 2 pi].
Circuit build_rabi_circuit(const RabiSpec& spec);

struct PseudomodeModel {
    double g_rad_per_us = 0.0;
};

struct SnapshotNoiseModel {
    // Physical system qubit; defaults to the best-connected one.
    std::optional<unsigned> system_qubit;
};

struct DecaySpec {
    double total_time_us = 0.0;
    unsigned n_measurements = 1;
    std::variant<PseudomodeModel, SnapshotNoiseModel> model;
    std::uint64_t shots = kDefaultShots;
};

struct DecayCircuit {
    // Pseudomode: logical circuit with system 0, environment 1, ancillas
    // 2..N+1. Snapshot noise: lowered circuit on the device.
    Circuit circuit;
    std::optional<LoweredCircuit> lowered;
    unsigned system_clbit = 0;
    std::vector<unsigned> record_clbits;  // ancilla clbits 1..N
    int target = 1;
    // Measurement instants relative to the end of state preparation, as
    // realized after delay quantization, and the ideal equal spacing.
    std::vector<double> measurement_times_us;
    std::vector<double> ideal_times_us;
    double max_spacing_error_us() const;
};

// Prepares |1> and splits the evolution into N equal segments, each ended by
// CX(system -> fresh ancilla).
//   pseudomode: XY(2 g t / N) between system and environment per segment.
//   snapshot noise: a delay per segment, sized so that the measurements of
//     the lowered circuit land t/N apart and the last one ends t after the
//     preparation.
// Throws InvalidArgument on a bad spec or exhausted qubit budget, and
// DomainError when gate overhead or alignment leaves a segment without a
// positive delay.
DecayCircuit build_decay_circuit(const DecaySpec& spec, const DeviceSnapshot& device);
// Pseudomode only; no device involved.
DecayCircuit build_decay_circuit(const DecaySpec& spec);

// Snapshot-noise layout: system first, then ancillas by distance from it.
std::vector<unsigned> decay_layout(const DeviceSnapshot& device, unsigned n_measurements,
                                   std::optional<unsigned> system_qubit = std::nullopt);

struct SurvivalEstimate {
    double p = 0.0;
    double std_error = 0.0;  // sqrt(p (1 - p) / shots)
    std::uint64_t shots = 0;
};

// Fraction of shots whose system bit equals `target`. With record bits, the
// ancillas must also all read `target`, i.e. the state survived every
// intermediate measurement. Bit k is clbit k (rightmost character is 0).
SurvivalEstimate survival_probability(const CountsHistogram& hist, unsigned system_bit, int target,
                                      std::span<const unsigned> record_bits = {});
// Same on an exact distribution; stderr uses `shots`.
SurvivalEstimate survival_probability(std::span<const double> distribution, unsigned system_bit, int target,
                                      std::span<const unsigned> record_bits, std::uint64_t shots);

// [cos^2(theta / 2N)]^N. Throws InvalidArgument for N = 0.
double theory_rabi(double theta, unsigned n);
// exp(-theta^2 / 4N)
double theory_rabi_limit(double theta, unsigned n);
// (1 - t^2 / (N T)^2)^N. Throws DomainError for t >= N T.
double theory_decay(double t_us, unsigned n, double T_us);
// exp(-t^2 / (N T^2))
double theory_decay_limit(double t_us, unsigned n, double T_us);

// Hermitian operator on 2^k levels, rad/us.
class Hamiltonian {
public:
    static Hamiltonian from_entries(std::size_t dim, std::vector<cplx> row_major, double tol = kAlgebraTol);
    // g (sigma+ sigma- + sigma- sigma+) on two qubits.
    static Hamiltonian flip_flop(double g);
    // omega * sigma_x
    static Hamiltonian rabi(double omega);

    std::size_t dim() const noexcept { return dim_; }
    cplx operator()(std::size_t r, std::size_t c) const { return entries_[r * dim_ + c]; }

private:
    Hamiltonian(std::size_t dim, std::vector<cplx> e) : dim_(dim), entries_(std::move(e)) {}
    std::size_t dim_ = 0;
    std::vector<cplx> entries_;
};

// 1 / sqrt(<H^2> - <H>^2). Throws DomainError when the variance vanishes.
double zeno_time(const Hamiltonian& h, const StateVector& psi0);

struct SurvivalPoint {
    double t_us = 0.0;
    unsigned n_measurements = 0;
    double p = 0.0;
    double std_error = 0.0;
};

struct ZenoFit {
    double T_us = 0.0;
    double sigma_us = 0.0;
    double residual_norm = 0.0;  // sqrt(sum w r^2)
    unsigned iterations = 0;
};

// Weighted least squares of theory_decay over T with weights 1/stderr^2.
// Zero stderr entries take the smallest positive stderr; if every stderr is
// zero the fit is unweighted. Throws InvalidArgument for fewer than three
// points, negative/non-finite stderr or N = 0; DomainError when no point
// shows decay; ConvergenceError after the iteration budget.
ZenoFit fit_zeno_time(std::span<const SurvivalPoint> points, unsigned n);

}  // namespace qzeno
