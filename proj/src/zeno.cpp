#include "qzeno/zeno.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "qzeno/error.hpp"

namespace qzeno {
namespace {

constexpr double kPi = std::numbers::pi;

void check_measurements(unsigned n, bool allow_zero) {
    if (n == 0 && !allow_zero) throw InvalidArgument("n_measurements must be >= 1");
    if (n > kMaxAncillas) {
        throw InvalidArgument("n_measurements " + std::to_string(n) + " exceeds the ancilla budget of " +
                              std::to_string(kMaxAncillas));
    }
}

DecayCircuit build_pseudomode(const DecaySpec& spec, const PseudomodeModel& model) {
    const double g = model.g_rad_per_us;
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("pseudomode coupling g must be positive");
    const unsigned n = spec.n_measurements;
    const double beta = 2.0 * g * spec.total_time_us / n;

    DecayCircuit out;
    out.circuit = Circuit(n + 2, n + 1);
    out.circuit.append(Instruction::x(0));
    for (unsigned k = 1; k <= n; ++k) {
        out.circuit.append(Instruction::xy(0, 1, beta));
        out.circuit.append(Instruction::cx(0, k + 1).with_tag(static_cast<int>(k)));
    }
    out.circuit.append(Instruction::measure(0, 0));
    for (unsigned k = 1; k <= n; ++k) out.circuit.append(Instruction::measure(k + 1, k));
    for (unsigned k = 1; k <= n; ++k) {
        out.record_clbits.push_back(k);
        out.ideal_times_us.push_back(spec.total_time_us * k / n);
    }
    out.measurement_times_us = out.ideal_times_us;
    return out;
}

Circuit decay_skeleton(unsigned n, std::span<const std::int64_t> delays) {
    Circuit c(n + 1, n + 1);
    c.append(Instruction::x(0).with_tag(0));
    for (unsigned k = 1; k <= n; ++k) {
        if (!delays.empty() && delays[k - 1] > 0) c.append(Instruction::delay(0, delays[k - 1]));
        c.append(Instruction::cx(0, k).with_tag(static_cast<int>(k)));
    }
    for (unsigned k = 0; k <= n; ++k) c.append(Instruction::measure(k, k));
    return c;
}

// End time of the last instruction carrying each tag 0..n.
std::vector<std::int64_t> tag_ends(const LoweredCircuit& lowered, unsigned n) {
    std::vector<std::int64_t> ends(n + 1, -1);
    const auto instrs = lowered.circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        const int tag = instrs[i].tag;
        if (tag >= 0 && static_cast<unsigned>(tag) <= n) {
            ends[tag] = std::max(ends[tag], lowered.schedule.end_dt(i));
        }
    }
    return ends;
}

DecayCircuit build_snapshot_decay(const DecaySpec& spec, const SnapshotNoiseModel& model,
                                  const DeviceSnapshot& device) {
    const unsigned n = spec.n_measurements;
    const Layout layout = decay_layout(device, n, model.system_qubit);
    const double dt_us = device.dt_ns() * 1e-3;
    const double seg_dt = spec.total_time_us / dt_us / n;

    const LoweredCircuit skeleton = lower(decay_skeleton(n, {}), device, layout);
    const auto base = tag_ends(skeleton, n);

    std::vector<std::int64_t> delays(n);
    for (unsigned k = 1; k <= n; ++k) {
        const double overhead = static_cast<double>(base[k] - base[k - 1]);
        const auto d = static_cast<std::int64_t>(std::llround(seg_dt - overhead));
        if (d <= 0 || quantize_dt(d, device.granularity_dt()) == 0) {
            throw DomainError("segment " + std::to_string(k) + " of " + std::to_string(spec.total_time_us / n) +
                              " us is shorter than its gate overhead of " +
                              std::to_string(device.dt_to_us(base[k] - base[k - 1])) + " us");
        }
        delays[k - 1] = d;
    }

    DecayCircuit out;
    LoweredCircuit lowered = lower(decay_skeleton(n, delays), device, layout);
    const auto ends = tag_ends(lowered, n);
    for (unsigned k = 1; k <= n; ++k) {
        out.record_clbits.push_back(k);
        out.ideal_times_us.push_back(spec.total_time_us * k / n);
        out.measurement_times_us.push_back(device.dt_to_us(ends[k] - ends[0]));
    }
    out.circuit = lowered.circuit;
    out.lowered = std::move(lowered);
    return out;
}

}  // namespace

double DecayCircuit::max_spacing_error_us() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < measurement_times_us.size(); ++k) {
        worst = std::max(worst, std::abs(measurement_times_us[k] - ideal_times_us[k]));
    }
    return worst;
}

Circuit build_rabi_circuit(const RabiSpec& spec) {
    if (!std::isfinite(spec.theta) || spec.theta < 0.0 || spec.theta > 2.0 * kPi) {
        throw InvalidArgument("theta must lie in [0, 2 pi]");
    }
    check_measurements(spec.n_measurements, true);
    const unsigned n = spec.n_measurements;
    Circuit c(n + 1, n + 1);
    if (n == 0) {
        c.append(Instruction::u3(0, spec.theta, -kPi / 2, kPi / 2));
    } else {
        for (unsigned k = 1; k <= n; ++k) {
            c.append(Instruction::u3(0, spec.theta / n, -kPi / 2, kPi / 2));
            c.append(Instruction::cx(0, k).with_tag(static_cast<int>(k)));
        }
    }
    for (unsigned k = 0; k <= n; ++k) c.append(Instruction::measure(k, k));
    return c;
}

std::vector<unsigned> decay_layout(const DeviceSnapshot& device, unsigned n_measurements,
                                   std::optional<unsigned> system_qubit) {
    const CouplingMap& map = device.coupling();
    unsigned sys = 0;
    if (system_qubit) {
        if (*system_qubit >= device.n_qubits()) throw InvalidArgument("system qubit out of range");
        sys = *system_qubit;
    } else {
        for (unsigned q = 1; q < device.n_qubits(); ++q) {
            if (map.neighbors(q).size() > map.neighbors(sys).size()) sys = q;
        }
    }
    const auto dist = map.distances_from(sys);
    std::vector<unsigned> others;
    for (unsigned q = 0; q < device.n_qubits(); ++q) {
        if (q != sys && dist[q] > 0) others.push_back(q);
    }
    std::stable_sort(others.begin(), others.end(), [&](unsigned a, unsigned b) { return dist[a] < dist[b]; });
    if (others.size() < n_measurements) {
        throw InvalidArgument("device '" + device.name() + "' has only " + std::to_string(others.size()) +
                              " qubits connected to system qubit " + std::to_string(sys) + "; " +
                              std::to_string(n_measurements) + " ancillas needed");
    }
    std::vector<unsigned> layout{sys};
    layout.insert(layout.end(), others.begin(), others.begin() + n_measurements);
    return layout;
}

namespace {

void check_decay_spec(const DecaySpec& spec) {
    if (!(spec.total_time_us > 0.0) || !std::isfinite(spec.total_time_us)) {
        throw InvalidArgument("total_time_us must be positive");
    }
    check_measurements(spec.n_measurements, false);
}

}  // namespace

DecayCircuit build_decay_circuit(const DecaySpec& spec, const DeviceSnapshot& device) {
    check_decay_spec(spec);
    if (const auto* pm = std::get_if<PseudomodeModel>(&spec.model)) return build_pseudomode(spec, *pm);
    return build_snapshot_decay(spec, std::get<SnapshotNoiseModel>(spec.model), device);
}

DecayCircuit build_decay_circuit(const DecaySpec& spec) {
    check_decay_spec(spec);
    const auto* pm = std::get_if<PseudomodeModel>(&spec.model);
    if (!pm) throw InvalidArgument("the snapshot-noise model needs a device");
    return build_pseudomode(spec, *pm);
}

// ---------------------------------------------------------------- survival

namespace {

SurvivalEstimate make_estimate(double p, std::uint64_t shots) {
    p = std::clamp(p, 0.0, 1.0);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(shots)), shots};
}

std::uint64_t survival_mask(unsigned n_bits, unsigned system_bit, std::span<const unsigned> record_bits) {
    if (system_bit >= n_bits) throw InvalidArgument("system bit out of range");
    std::uint64_t mask = std::uint64_t{1} << system_bit;
    for (unsigned b : record_bits) {
        if (b >= n_bits) throw InvalidArgument("record bit out of range");
        mask |= std::uint64_t{1} << b;
    }
    return mask;
}

}  // namespace

SurvivalEstimate survival_probability(const CountsHistogram& hist, unsigned system_bit, int target,
                                      std::span<const unsigned> record_bits) {
    if (hist.shots == 0) throw InvalidArgument("survival_probability: empty histogram");
    if (target != 0 && target != 1) throw InvalidArgument("target must be 0 or 1");
    const std::uint64_t mask = survival_mask(hist.n_bits, system_bit, record_bits);
    const std::uint64_t want = target ? mask : 0;
    std::uint64_t hits = 0;
    for (const auto& [bits, n] : hist.counts) {
        if ((outcome_index(bits) & mask) == want) hits += n;
    }
    return make_estimate(static_cast<double>(hits) / static_cast<double>(hist.shots), hist.shots);
}

SurvivalEstimate survival_probability(std::span<const double> distribution, unsigned system_bit, int target,
                                      std::span<const unsigned> record_bits, std::uint64_t shots) {
    if (shots == 0) throw InvalidArgument("survival_probability: shots must be >= 1");
    if (target != 0 && target != 1) throw InvalidArgument("target must be 0 or 1");
    const auto n_bits = static_cast<unsigned>(std::bit_width(distribution.size()) - 1);
    if (distribution.size() != (std::size_t{1} << n_bits)) throw InvalidArgument("distribution length must be 2^n");
    const std::uint64_t mask = survival_mask(n_bits, system_bit, record_bits);
    const std::uint64_t want = target ? mask : 0;
    double p = 0.0;
    for (std::size_t i = 0; i < distribution.size(); ++i) {
        if ((i & mask) == want) p += distribution[i];
    }
    return make_estimate(p, shots);
}

// ---------------------------------------------------------------- theory

double theory_rabi(double theta, unsigned n) {
    if (n == 0) throw InvalidArgument("theory_rabi: N must be >= 1");
    const double c = std::cos(theta / (2.0 * n));
    return std::pow(c * c, static_cast<double>(n));
}

double theory_rabi_limit(double theta, unsigned n) {
    if (n == 0) throw InvalidArgument("theory_rabi_limit: N must be >= 1");
    return std::exp(-theta * theta / (4.0 * n));
}

double theory_decay(double t_us, unsigned n, double T_us) {
    if (n == 0) throw InvalidArgument("theory_decay: N must be >= 1");
    if (!(T_us > 0.0) || !(t_us >= 0.0)) throw InvalidArgument("theory_decay: need t >= 0 and T > 0");
    const double x = t_us / (n * T_us);
    if (x >= 1.0) throw DomainError("theory_decay: t must be below N*T");
    return std::pow(1.0 - x * x, static_cast<double>(n));
}

double theory_decay_limit(double t_us, unsigned n, double T_us) {
    if (n == 0) throw InvalidArgument("theory_decay_limit: N must be >= 1");
    if (!(T_us > 0.0)) throw InvalidArgument("theory_decay_limit: T must be positive");
    return std::exp(-t_us * t_us / (n * T_us * T_us));
}

// ---------------------------------------------------------------- Zeno time

Hamiltonian Hamiltonian::from_entries(std::size_t dim, std::vector<cplx> row_major, double tol) {
    if (dim < 2 || (dim & (dim - 1)) != 0) throw InvalidArgument("Hamiltonian dimension must be a power of two >= 2");
    if (row_major.size() != dim * dim) throw InvalidArgument("Hamiltonian entry count must be dim^2");
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            const cplx a = row_major[r * dim + c];
            if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw InvalidArgument("non-finite Hamiltonian entry");
            if (std::abs(a - std::conj(row_major[c * dim + r])) > tol) throw InvalidArgument("Hamiltonian is not Hermitian");
        }
    }
    return Hamiltonian(dim, std::move(row_major));
}

Hamiltonian Hamiltonian::flip_flop(double g) {
    std::vector<cplx> h(16, 0.0);
    h[1 * 4 + 2] = g;
    h[2 * 4 + 1] = g;
    return from_entries(4, std::move(h));
}

Hamiltonian Hamiltonian::rabi(double omega) { return from_entries(2, {0.0, omega, omega, 0.0}); }

double zeno_time(const Hamiltonian& h, const StateVector& psi0) {
    const std::size_t d = h.dim();
    if (psi0.dim() != d) throw InvalidArgument("zeno_time: state and Hamiltonian dimensions differ");
    std::vector<cplx> hpsi(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) hpsi[r] += h(r, c) * psi0[c];
    }
    double mean = 0.0, second = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
        mean += std::real(std::conj(psi0[r]) * hpsi[r]);
        second += std::norm(hpsi[r]);
    }
    const double var = second - mean * mean;
    if (!(var > 1e-14 * std::max(1.0, second))) {
        throw DomainError("zeno_time: energy variance vanishes (stationary state)");
    }
    return 1.0 / std::sqrt(var);
}

}  // namespace qzeno
