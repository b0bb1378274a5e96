#include "qzeno/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "qzeno/error.hpp"
#include "qzeno/io.hpp"

namespace qzeno {
namespace {

constexpr std::uint64_t kShotBlock = 1u << 14;

void check_size(unsigned n, unsigned limit, const char* who) {
    if (n > limit) {
        throw SizeLimitError(std::string(who) + ": " + std::to_string(n) + " qubits exceeds limit of " +
                             std::to_string(limit));
    }
}

// (qubit, clbit) pairs of the circuit's measurements.
std::vector<std::pair<unsigned, unsigned>> measurements(const Circuit& circuit) {
    std::vector<std::pair<unsigned, unsigned>> out;
    for (const Instruction& i : circuit.instructions()) {
        if (i.kind == OpKind::Measure) out.emplace_back(i.qubits[0], static_cast<unsigned>(i.clbit));
    }
    return out;
}

unsigned resolve_threads(unsigned requested) {
    if (requested == 0) requested = std::max(1u, std::thread::hardware_concurrency());
    return requested;
}

}  // namespace

// ---------------------------------------------------------------- histograms

std::string bitstring(std::uint64_t outcome, unsigned n_bits) {
    std::string s(n_bits, '0');
    for (unsigned k = 0; k < n_bits; ++k) {
        if ((outcome >> k) & 1u) s[n_bits - 1 - k] = '1';
    }
    return s;
}

std::uint64_t outcome_index(std::string_view bits) {
    if (bits.size() > 63) throw InvalidArgument("bitstring too long");
    std::uint64_t idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') throw InvalidArgument("bitstring '" + std::string(bits) + "' has a non-binary digit");
        idx = (idx << 1) | static_cast<std::uint64_t>(c == '1');
    }
    return idx;
}

ProbabilityDistribution CountsHistogram::frequencies() const {
    if (shots == 0) throw InvalidArgument("histogram has no shots");
    check_size(n_bits, kMaxQubits, "frequencies");
    ProbabilityDistribution p(std::size_t{1} << n_bits, 0.0);
    for (const auto& [bits, n] : counts) p[outcome_index(bits)] += static_cast<double>(n) / static_cast<double>(shots);
    return p;
}

// ---------------------------------------------------------------- ideal + sampling

ProbabilityDistribution clbit_distribution(std::span<const double> qubit_probs, const Circuit& circuit) {
    const auto meas = measurements(circuit);
    ProbabilityDistribution out(std::size_t{1} << circuit.n_clbits(), 0.0);
    for (std::size_t i = 0; i < qubit_probs.size(); ++i) {
        std::size_t c = 0;
        for (const auto& [q, b] : meas) c |= ((i >> q) & 1u) << b;
        out[c] += qubit_probs[i];
    }
    return out;
}

IdealResult run_ideal(const Circuit& circuit) {
    check_size(circuit.n_qubits(), kMaxQubits, "run_ideal");
    StateVector psi(circuit.n_qubits());
    for (const Instruction& instr : circuit.instructions()) {
        if (!op_is_unitary(instr.kind)) continue;
        psi.apply_in_place(instruction_unitary(instr), instr.qubits);
    }
    const auto probs = psi.probabilities();
    ProbabilityDistribution dist = clbit_distribution(probs, circuit);
    return {std::move(psi), std::move(dist)};
}

CountsHistogram sample_counts(std::span<const double> distribution, unsigned n_bits, std::uint64_t shots,
                              std::uint64_t seed, RunOptions options) {
    if (shots == 0) throw InvalidArgument("shots must be >= 1");
    if (distribution.size() != (std::size_t{1} << n_bits)) throw InvalidArgument("distribution length must be 2^n_bits");
    std::vector<double> cdf(distribution.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < distribution.size(); ++i) {
        const double p = distribution[i];
        if (!(p >= -1e-12) || !std::isfinite(p)) throw InvalidArgument("distribution has a negative or non-finite entry");
        acc += std::max(p, 0.0);
        cdf[i] = acc;
    }
    if (!(acc > 0.0)) throw InvalidArgument("distribution sums to zero");
    for (double& c : cdf) c /= acc;
    cdf.back() = 1.0;

    const std::uint64_t n_blocks = (shots + kShotBlock - 1) / kShotBlock;
    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(options.threads), n_blocks));
    std::vector<std::vector<std::uint64_t>> partial(n_threads, std::vector<std::uint64_t>(cdf.size(), 0));
    std::atomic<std::uint64_t> next_block{0};

    auto worker = [&](unsigned w) {
        auto& local = partial[w];
        for (std::uint64_t blk = next_block++; blk < n_blocks; blk = next_block++) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(blk), static_cast<std::uint32_t>(blk >> 32)};
            std::mt19937_64 rng(seq);
            const std::uint64_t begin = blk * kShotBlock;
            const std::uint64_t end = std::min(shots, begin + kShotBlock);
            for (std::uint64_t s = begin; s < end; ++s) {
                const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
                const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                local[std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1)] += 1;
            }
        }
    };
    if (n_threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(worker, w);
        for (auto& t : pool) t.join();
    }

    CountsHistogram hist;
    hist.n_bits = n_bits;
    hist.shots = shots;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
        std::uint64_t n = 0;
        for (const auto& part : partial) n += part[i];
        if (n > 0) hist.counts.emplace(bitstring(i, n_bits), n);
    }
    return hist;
}

CountsHistogram run_sampling(const Circuit& circuit, std::uint64_t shots, std::uint64_t seed, RunOptions options) {
    const IdealResult ideal = run_ideal(circuit);
    return sample_counts(ideal.distribution, circuit.n_clbits(), shots, seed, options);
}

// ---------------------------------------------------------------- noise

NoiseModel NoiseModel::disabled(DeviceSnapshot device) {
    NoiseModel m(std::move(device));
    m.relaxation = m.dephasing = m.readout = false;
    return m;
}

std::vector<Mat2> idle_kraus(std::int64_t dt_count, double T1_us, double T2_us, double dt_ns, bool relaxation,
                             bool dephasing) {
    if (dt_count < 0) throw InvalidArgument("idle channel: dt_count must be >= 0");
    if (!(dt_ns > 0.0) || !std::isfinite(dt_ns)) throw InvalidArgument("idle channel: dt_ns must be positive");
    if (!(T1_us > 0.0) || !(T2_us > 0.0)) throw InvalidArgument("idle channel: T1 and T2 must be positive");
    if (T2_us > 2.0 * T1_us * (1.0 + 1e-12)) throw InvalidArgument("idle channel: T2 must not exceed 2*T1");

    const double t_us = static_cast<double>(dt_count) * dt_ns * 1e-3;
    const double gamma = (relaxation && std::isfinite(T1_us)) ? -std::expm1(-t_us / T1_us) : 0.0;
    // Pure-dephasing rate; clamped because T2 = 2 T1 can round slightly negative.
    double rate_phi = 0.0;
    if (dephasing && std::isfinite(T2_us)) {
        rate_phi = std::max(0.0, 1.0 / T2_us - (std::isfinite(T1_us) ? 0.5 / T1_us : 0.0));
    }
    const double lambda = -std::expm1(-2.0 * t_us * rate_phi);

    const Mat2 a0{1.0, 0.0, 0.0, std::sqrt(1.0 - gamma)};
    const Mat2 a1{0.0, std::sqrt(gamma), 0.0, 0.0};
    const Mat2 d0{1.0, 0.0, 0.0, std::sqrt(1.0 - lambda)};
    const Mat2 d1{0.0, 0.0, 0.0, std::sqrt(lambda)};
    auto mul = [](const Mat2& x, const Mat2& y) {
        return Mat2{x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
                    x[2] * y[1] + x[3] * y[3]};
    };
    std::vector<Mat2> ks;
    for (const Mat2& d : {d0, d1}) {
        for (const Mat2& a : {a0, a1}) {
            const Mat2 k = mul(d, a);
            if (std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]) + std::abs(k[3]) > 0.0) ks.push_back(k);
        }
    }
    return ks;
}

DensityMatrix idle_channel(const DensityMatrix& rho, unsigned qubit, std::int64_t dt_count, double T1_us,
                           double T2_us, double dt_ns) {
    if (qubit >= rho.n_qubits()) throw InvalidArgument("idle channel: qubit out of range");
    DensityMatrix out = rho;
    const auto ks = idle_kraus(dt_count, T1_us, T2_us, dt_ns);
    out.apply_kraus_in_place(ks, qubit);
    return out;
}

ProbabilityDistribution apply_readout_error(std::span<const double> distribution, const Circuit& circuit,
                                            const DeviceSnapshot& device) {
    ProbabilityDistribution p(distribution.begin(), distribution.end());
    for (const auto& [q, b] : measurements(circuit)) {
        const QubitProperties& props = device.qubit(q);
        const std::size_t bit = std::size_t{1} << b;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i & bit) continue;
            const double p0 = p[i], p1 = p[i | bit];
            p[i] = (1.0 - props.readout_p01) * p0 + props.readout_p10 * p1;
            p[i | bit] = props.readout_p01 * p0 + (1.0 - props.readout_p10) * p1;
        }
    }
    return p;
}

NoisyResult run_noisy(const Circuit& circuit, const NoiseModel& noise, std::uint64_t shots, std::uint64_t seed,
                      RunOptions options) {
    check_size(circuit.n_qubits(), kMaxNoisyQubits, "run_noisy");
    const DeviceSnapshot& dev = noise.device;
    const Schedule sched = schedule(circuit, dev);

    DensityMatrix rho(circuit.n_qubits());
    std::vector<std::int64_t> clock(circuit.n_qubits(), 0);
    const bool any_idle_noise = noise.relaxation || noise.dephasing;

    auto idle = [&](unsigned q, std::int64_t dt) {
        if (!any_idle_noise || dt <= 0) return;
        const QubitProperties& props = dev.qubit(q);
        const auto ks = idle_kraus(dt, props.T1_us, props.T2_us, dev.dt_ns(), noise.relaxation, noise.dephasing);
        rho.apply_kraus_in_place(ks, q);
    };

    const auto instrs = circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        const Instruction& instr = instrs[i];
        const std::int64_t start = sched.start_dt[i];
        const std::int64_t dur = sched.duration_dt[i];
        for (unsigned q : instr.qubits) idle(q, start - clock[q]);
        if (op_is_unitary(instr.kind)) {
            rho.apply_in_place(instruction_unitary(instr), instr.qubits);
            if (noise.noise_on_gate_durations) {
                for (unsigned q : instr.qubits) idle(q, dur);
            }
        } else if (instr.kind == OpKind::Delay && noise.idle_noise_on_delays) {
            idle(instr.qubits[0], dur);
        }
        for (unsigned q : instr.qubits) clock[q] = start + dur;
    }

    const auto probs = rho.probabilities();
    ProbabilityDistribution dist = clbit_distribution(probs, circuit);
    if (noise.readout) dist = apply_readout_error(dist, circuit, dev);
    CountsHistogram counts = sample_counts(dist, circuit.n_clbits(), shots, seed, options);
    return {std::move(counts), std::move(rho), std::move(dist)};
}

// ---------------------------------------------------------------- serialization

nlohmann::json to_json(const CountsHistogram& hist) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [bits, n] : hist.counts) counts[bits] = n;
    return {{"shots", hist.shots}, {"counts", counts}};
}

CountsHistogram histogram_from_json(const nlohmann::json& doc) {
    try {
        CountsHistogram h;
        h.shots = doc.at("shots").get<std::uint64_t>();
        std::uint64_t total = 0;
        bool first = true;
        for (const auto& [bits, n] : doc.at("counts").items()) {
            if (first) {
                h.n_bits = static_cast<unsigned>(bits.size());
                first = false;
            } else if (bits.size() != h.n_bits) {
                throw ValidationError("counts." + bits, "bitstring length differs from the others");
            }
            outcome_index(bits);
            const auto c = n.get<std::uint64_t>();
            total += c;
            if (c > 0) h.counts.emplace(bits, c);
        }
        if (total != h.shots) throw ValidationError("counts", "counts do not sum to shots");
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("", std::string("malformed histogram: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ValidationError("counts", e.what());
    }
}

std::string distribution_csv(std::span<const double> distribution, unsigned n_bits) {
    std::ostringstream out;
    out << "bitstring,probability\n";
    for (std::size_t i = 0; i < distribution.size(); ++i) {
        out << bitstring(i, n_bits) << ',' << format_real(distribution[i]) << '\n';
    }
    return out.str();
}

}  // namespace qzeno
