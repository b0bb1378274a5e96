#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracle.hpp"
#include "qzeno/error.hpp"
#include "qzeno/simulator.hpp"

namespace {

using namespace qzeno;

constexpr double kDtNs = 2.0 / 9.0;

double dt_to_us(std::int64_t dt) { return static_cast<double>(dt) * kDtNs * 1e-3; }

oracle::Mat kraus_apply(const std::vector<Mat2>& ks, const oracle::Mat& rho) {
    oracle::Mat out = oracle::Mat::Zero(2, 2);
    for (const Mat2& k : ks) {
        oracle::Mat m(2, 2);
        m << k[0], k[1], k[2], k[3];
        out += m * rho * m.adjoint();
    }
    return out;
}

// Single-qubit device with the given properties and a zero-length X, so
// delays alone account for elapsed time.
DeviceSnapshot one_qubit_device(QubitProperties props, std::int64_t x_dt = 0) {
    DeviceSpec spec;
    spec.name = "single";
    spec.n_qubits = 1;
    spec.basis_gates = {"rz", "sx", "x"};
    spec.qubits = {props};
    spec.durations = {{"rz", {0}, 0}, {"sx", {0}, x_dt}, {"x", {0}, x_dt}, {"measure", {0}, 3200}};
    return DeviceSnapshot(spec);
}

TEST(Bitstrings, ClbitZeroIsRightmost) {
    EXPECT_EQ(bitstring(1, 3), "001");
    EXPECT_EQ(bitstring(6, 3), "110");
    EXPECT_EQ(outcome_index("110"), 6u);
    for (std::uint64_t i = 0; i < 64; ++i) EXPECT_EQ(outcome_index(bitstring(i, 6)), i);
    EXPECT_THROW(outcome_index("012"), InvalidArgument);
}

TEST(Ideal, BellPair) {
    Circuit c(2, 2);
    c.append(Instruction::u3(0, oracle::kPi / 2, 0, oracle::kPi)).append(Instruction::cx(0, 1));
    c.append(Instruction::measure(0, 0)).append(Instruction::measure(1, 1));
    const auto r = run_ideal(c);
    EXPECT_NEAR(r.distribution[0], 0.5, 1e-14);
    EXPECT_NEAR(r.distribution[3], 0.5, 1e-14);
    EXPECT_NEAR(r.distribution[1] + r.distribution[2], 0.0, 1e-14);
}

TEST(Ideal, ClbitMappingAndUnmeasuredBits) {
    Circuit c(2, 3);
    c.append(Instruction::x(1)).append(Instruction::measure(1, 2)).append(Instruction::measure(0, 0));
    const auto r = run_ideal(c);
    EXPECT_NEAR(r.distribution[0b100], 1.0, 1e-15);
}

TEST(Ideal, DelaysAreIgnored) {
    Circuit c(1, 1);
    c.append(Instruction::x(0)).append(Instruction::delay(0, 100000)).append(Instruction::measure(0, 0));
    EXPECT_NEAR(run_ideal(c).distribution[1], 1.0, 1e-15);
}

TEST(Sampling, CountsSumToShots) {
    const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
    const auto h = sample_counts(p, 2, 100001, 3);
    std::uint64_t total = 0;
    for (const auto& [_, n] : h.counts) total += n;
    EXPECT_EQ(total, 100001u);
    EXPECT_EQ(h.shots, 100001u);
}

TEST(Sampling, SameSeedSameCountsAnyThreadCount) {
    std::mt19937_64 rng(1);
    std::vector<double> p(32);
    for (double& x : p) x = std::uniform_real_distribution<double>(0, 1)(rng);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= s;
    const auto a = sample_counts(p, 5, 200000, 99, {1});
    EXPECT_EQ(a, sample_counts(p, 5, 200000, 99, {1}));
    EXPECT_EQ(a, sample_counts(p, 5, 200000, 99, {3}));
    EXPECT_EQ(a, sample_counts(p, 5, 200000, 99, {0}));
    EXPECT_NE(a, sample_counts(p, 5, 200000, 100, {1}));
}

TEST(Sampling, ChiSquareAgainstDistribution) {
    // 15 degrees of freedom: P(chi2 > 37.7) ~ 1e-3. Several seeds; allow none to exceed.
    std::vector<double> p(16);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = (i + 1) / 136.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::uint64_t shots = 50000;
        const auto f = sample_counts(p, 4, shots, seed).frequencies();
        double chi2 = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double e = p[i] * shots, o = f[i] * shots;
            chi2 += (o - e) * (o - e) / e;
        }
        EXPECT_LT(chi2, 37.7) << "seed " << seed;
    }
}

TEST(Sampling, ZeroProbabilityNeverDrawn) {
    const std::vector<double> p = {0.5, 0.0, 0.5, 0.0};
    const auto h = sample_counts(p, 2, 50000, 8);
    EXPECT_EQ(h.counts.count("01"), 0u);
    EXPECT_EQ(h.counts.count("11"), 0u);
}

TEST(Sampling, RejectsBadInput) {
    const std::vector<double> p = {0.5, 0.5};
    EXPECT_THROW(sample_counts(p, 2, 10, 1), InvalidArgument);
    EXPECT_THROW(sample_counts(p, 1, 0, 1), InvalidArgument);
    const std::vector<double> neg = {1.5, -0.5};
    EXPECT_THROW(sample_counts(neg, 1, 10, 1), InvalidArgument);
}

TEST(IdleKraus, Complete) {
    for (auto [t1, t2] : {std::pair{100.0, 50.0}, std::pair{80.0, 160.0}, std::pair{30.0, 10.0}}) {
        for (std::int64_t dt : {0, 1, 161, 45000, 450000}) {
            for (bool relax : {true, false}) {
                for (bool deph : {true, false}) {
                    const auto ks = idle_kraus(dt, t1, t2, kDtNs, relax, deph);
                    oracle::Mat sum = oracle::Mat::Zero(2, 2);
                    for (const Mat2& k : ks) {
                        oracle::Mat m(2, 2);
                        m << k[0], k[1], k[2], k[3];
                        sum += m.adjoint() * m;
                    }
                    EXPECT_LT((sum - oracle::Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
                }
            }
        }
    }
}

TEST(IdleKraus, PopulationAndCoherenceDecay) {
    const double t1 = 90.0, t2 = 70.0;
    const std::int64_t dt = 123456;
    const double t = dt_to_us(dt);
    oracle::Mat plus(2, 2);
    plus << 0.5, 0.5, 0.5, 0.5;
    const oracle::Mat out = kraus_apply(idle_kraus(dt, t1, t2, kDtNs), plus);
    EXPECT_NEAR(std::abs(out(0, 1)), 0.5 * std::exp(-t / t2), 1e-12);
    EXPECT_NEAR(out(1, 1).real(), 0.5 * std::exp(-t / t1), 1e-12);

    oracle::Mat one(2, 2);
    one << 0, 0, 0, 1;
    const oracle::Mat relax_only = kraus_apply(idle_kraus(dt, t1, t2, kDtNs, true, false), one);
    EXPECT_NEAR(relax_only(1, 1).real(), std::exp(-t / t1), 1e-12);
    const oracle::Mat deph_only = kraus_apply(idle_kraus(dt, t1, t2, kDtNs, false, true), one);
    EXPECT_NEAR(deph_only(1, 1).real(), 1.0, 1e-12);
}

TEST(IdleKraus, InfiniteTimesMeanNoDecay) {
    const double inf = std::numeric_limits<double>::infinity();
    oracle::Mat plus(2, 2);
    plus << 0.5, 0.5, 0.5, 0.5;
    const oracle::Mat out = kraus_apply(idle_kraus(10000000, inf, inf, kDtNs), plus);
    EXPECT_LT((out - plus).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(IdleKraus, RejectsUnphysical) {
    EXPECT_THROW(idle_kraus(-1, 100, 100, kDtNs), InvalidArgument);
    EXPECT_THROW(idle_kraus(10, 100, 201, kDtNs), InvalidArgument);
    EXPECT_THROW(idle_kraus(10, 0, 10, kDtNs), InvalidArgument);
    EXPECT_NO_THROW(idle_kraus(10, 100, 200, kDtNs));
}

TEST(IdleChannel, ActsOnChosenQubitOnly) {
    auto rho = DensityMatrix::from_state(StateVector::basis(2, 3));
    const auto out = idle_channel(rho, 1, 450000, 100, 100, kDtNs);
    // |11>: qubit 1 decays to |01> with probability 1 - e^{-1}.
    EXPECT_NEAR(out(3, 3).real(), std::exp(-1.0), 1e-12);
    EXPECT_NEAR(out(1, 1).real(), 1 - std::exp(-1.0), 1e-12);
    EXPECT_NEAR(out(2, 2).real(), 0.0, 1e-15);
}

TEST(Readout, MatchesTensorOfConfusionMatrices) {
    DeviceSpec spec = one_qubit_device({100, 100, 0, 0}).spec();
    spec.n_qubits = 3;
    spec.qubits = {{100, 100, 0.01, 0.02}, {100, 100, 0.03, 0.05}, {100, 100, 0.07, 0.11}};
    spec.durations.clear();
    const DeviceSnapshot dev(spec);
    // clbit 0 <- qubit 2, clbit 1 <- qubit 0.
    Circuit c(3, 2);
    c.append(Instruction::measure(2, 0)).append(Instruction::measure(0, 1));
    const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
    auto confusion = [](double p01, double p10) {
        Eigen::Matrix2d m;
        m << 1 - p01, p10, p01, 1 - p10;
        return m;
    };
    const Eigen::Matrix2d a0 = confusion(0.07, 0.11), a1 = confusion(0.01, 0.02);
    Eigen::Matrix4d a;
    for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 4; ++col) a(r, col) = a0(r & 1, col & 1) * a1(r >> 1, col >> 1);
    const Eigen::Vector4d expect = a * Eigen::Vector4d(p.data());
    const auto out = apply_readout_error(p, c, dev);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(out[i], expect(i), 1e-15);
}

TEST(Noisy, DisabledNoiseMatchesIdeal) {
    Circuit c(3, 3);
    c.append(Instruction::u3(0, 1.1, 0.2, 0.3)).append(Instruction::cx(0, 1)).append(Instruction::delay(2, 5000));
    c.append(Instruction::cx(1, 2));
    for (unsigned q = 0; q < 3; ++q) c.append(Instruction::measure(q, q));
    // The noisy backend schedules on device durations, so U3 is spelled out in basis gates.
    Circuit native(3, 3);
    for (const auto& i : c.instructions()) {
        if (i.kind == OpKind::U3) {
            native.append(Instruction::rz(0, 0.3)).append(Instruction::sx(0)).append(Instruction::rz(0, 1.1 + oracle::kPi));
            native.append(Instruction::sx(0)).append(Instruction::rz(0, 0.2 + oracle::kPi));
        } else {
            native.append(i);
        }
    }
    const auto dev = make_linear_snapshot(3, {50, 30, 0.05, 0.05});
    const auto r = run_noisy(native, NoiseModel::disabled(dev), 1000, 1);
    const auto ideal = run_ideal(c).distribution;
    for (std::size_t i = 0; i < ideal.size(); ++i) EXPECT_NEAR(r.distribution[i], ideal[i], 1e-12);
}

TEST(Noisy, RelaxationDuringDelayAndGate) {
    const std::int64_t x_dt = 161, delay = 450000;
    const auto dev = one_qubit_device({100, 100, 0, 0}, x_dt);
    Circuit c(1, 1);
    c.append(Instruction::x(0)).append(Instruction::delay(0, delay)).append(Instruction::measure(0, 0));
    NoiseModel noise(dev);
    auto r = run_noisy(c, noise, 1000, 1);
    EXPECT_NEAR(r.distribution[1], std::exp(-dt_to_us(x_dt + delay) / 100.0), 1e-12);
    noise.noise_on_gate_durations = false;
    r = run_noisy(c, noise, 1000, 1);
    EXPECT_NEAR(r.distribution[1], std::exp(-dt_to_us(delay) / 100.0), 1e-12);
    noise.idle_noise_on_delays = false;
    r = run_noisy(c, noise, 1000, 1);
    EXPECT_NEAR(r.distribution[1], 1.0, 1e-12);
}

TEST(Noisy, SpectatorIdlesWhileOthersWork) {
    // Qubit 1 is excited, then waits for qubit 0's long delay before its measurement.
    const auto dev = make_linear_snapshot(2, {100, 100, 0, 0});
    Circuit c(2, 2);
    c.append(Instruction::x(1)).append(Instruction::delay(0, 90000)).append(Instruction::barrier({0, 1}));
    c.append(Instruction::measure(1, 1)).append(Instruction::measure(0, 0));
    NoiseModel noise(dev);
    noise.dephasing = false;
    const auto r = run_noisy(c, noise, 1000, 1);
    double p1 = 0;
    for (std::size_t i = 0; i < 4; ++i) p1 += (i & 2) ? r.distribution[i] : 0.0;
    EXPECT_NEAR(p1, std::exp(-dt_to_us(90000) / 100.0), 1e-12);
}

TEST(Noisy, ReadoutFlipsGroundState) {
    const auto dev = one_qubit_device({100, 100, 0.04, 0.0});
    Circuit c(1, 1);
    c.append(Instruction::measure(0, 0));
    const auto r = run_noisy(c, NoiseModel(dev), 200000, 5);
    EXPECT_NEAR(r.distribution[1], 0.04, 1e-15);
    const double f = r.counts.frequencies()[1];
    EXPECT_NEAR(f, 0.04, 5 * oracle::sampling_sigma(0.04, 200000));
}

TEST(Noisy, SizeLimit) {
    Circuit c(kMaxNoisyQubits + 1, 0);
    EXPECT_THROW(run_noisy(c, NoiseModel(make_linear_snapshot(kMaxNoisyQubits + 1)), 10, 1), SizeLimitError);
}

TEST(HistogramJson, RoundTrip) {
    const std::vector<double> p = {0.25, 0.25, 0.5, 0.0};
    const auto h = sample_counts(p, 2, 1000, 4);
    const auto back = histogram_from_json(nlohmann::json::parse(to_json(h).dump()));
    EXPECT_EQ(back, h);
    auto bad = to_json(h);
    bad["shots"] = 999;
    EXPECT_THROW(histogram_from_json(bad), ValidationError);
}

TEST(DistributionCsv, Format) {
    const std::vector<double> p = {0.25, 0.75};
    EXPECT_EQ(distribution_csv(p, 1), "bitstring,probability\n0,0.25\n1,0.75\n");
}

}  // namespace
