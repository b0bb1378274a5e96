#pragma once

// Backends:
//   ideal     exact statevector, delays and noise ignored
//   sampling  multinomial shots drawn from the ideal distribution
//   noisy     density matrix with T1/T2 idle channels and readout confusion
//
// Classical outcomes are indexed little-endian over clbits; in bitstrings
// clbit 0 is the rightmost character.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qzeno/circuit.hpp"
#include "qzeno/device.hpp"
#include "qzeno/qcore.hpp"

namespace qzeno {

using ProbabilityDistribution = std::vector<double>;

struct CountsHistogram {
    unsigned n_bits = 0;
    std::uint64_t shots = 0;
    std::map<std::string, std::uint64_t> counts;  // only non-zero entries

    // Dense counts / shots indexed by outcome.
    ProbabilityDistribution frequencies() const;

    friend bool operator==(const CountsHistogram&, const CountsHistogram&) = default;
};

std::string bitstring(std::uint64_t outcome, unsigned n_bits);
std::uint64_t outcome_index(std::string_view bits);

// Parallelism knob; 0 means std::thread::hardware_concurrency(). Results
// never depend on it.
struct RunOptions {
    unsigned threads = 1;
};

struct IdealResult {
    StateVector state;
    ProbabilityDistribution distribution;  // over the circuit's clbits
};

// Throws SizeLimitError above kMaxQubits.
IdealResult run_ideal(const Circuit& circuit);

// Distribution over clbits induced by qubit-basis probabilities and the
// circuit's measurements. Unmeasured clbits read 0.
ProbabilityDistribution clbit_distribution(std::span<const double> qubit_probs, const Circuit& circuit);

// Multinomial draw. Shots are cut into fixed blocks, each with its own
// generator seeded from (seed, block index).
CountsHistogram sample_counts(std::span<const double> distribution, unsigned n_bits, std::uint64_t shots,
                              std::uint64_t seed, RunOptions options = {});

CountsHistogram run_sampling(const Circuit& circuit, std::uint64_t shots, std::uint64_t seed,
                             RunOptions options = {});

struct NoiseModel {
    explicit NoiseModel(DeviceSnapshot device_) : device(std::move(device_)) {}
    // Same device, every channel switched off.
    static NoiseModel disabled(DeviceSnapshot device);

    DeviceSnapshot device;
    bool relaxation = true;
    bool dephasing = true;
    bool readout = true;
    bool idle_noise_on_delays = true;
    bool noise_on_gate_durations = true;
};

// Kraus set for an idle interval of dt_count * dt_ns: amplitude damping
// gamma = 1 - exp(-t/T1) followed by pure dephasing at rate 1/T2 - 1/(2 T1),
// so coherences decay by exp(-t/T2). Either part can be switched off.
// Infinite T1/T2 mean no decay. Throws InvalidArgument on dt_count < 0,
// non-positive times or T2 > 2 T1.
std::vector<Mat2> idle_kraus(std::int64_t dt_count, double T1_us, double T2_us, double dt_ns,
                             bool relaxation = true, bool dephasing = true);

DensityMatrix idle_channel(const DensityMatrix& rho, unsigned qubit, std::int64_t dt_count, double T1_us,
                           double T2_us, double dt_ns);

// Per-clbit readout confusion: clbit k (measuring qubit q) flips 0->1 with
// p01[q] and 1->0 with p10[q].
ProbabilityDistribution apply_readout_error(std::span<const double> distribution, const Circuit& circuit,
                                            const DeviceSnapshot& device);

struct NoisyResult {
    CountsHistogram counts;
    DensityMatrix state;                   // just before measurement
    ProbabilityDistribution distribution;  // over clbits, after readout error
};

inline constexpr unsigned kMaxNoisyQubits = 7;

// Evolves the circuit in schedule order. Each qubit keeps a clock; gaps
// before its next instruction get idle noise, gates get idle noise for
// their duration, delays for their length. Measurement time is not noisy.
// Throws SizeLimitError above kMaxNoisyQubits and ValidationError when the
// device lacks a duration.
NoisyResult run_noisy(const Circuit& circuit, const NoiseModel& noise, std::uint64_t shots, std::uint64_t seed,
                      RunOptions options = {});

nlohmann::json to_json(const CountsHistogram& hist);
CountsHistogram histogram_from_json(const nlohmann::json& doc);
// "bitstring,probability" rows in outcome order.
std::string distribution_csv(std::span<const double> distribution, unsigned n_bits);

}  // namespace qzeno
