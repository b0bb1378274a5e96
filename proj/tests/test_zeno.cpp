#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "qzeno/error.hpp"
#include "qzeno/experiments.hpp"
#include "qzeno/zeno.hpp"

namespace {

using namespace qzeno;
using oracle::kPi;

// Survival through N projective checks after each Rx(theta/N) step, from
// the 2x2 rotation alone.
double rabi_oracle(double theta, unsigned n) {
    const double stay = std::norm(oracle::rx(theta / n)(0, 0));
    return std::pow(stay, n);
}

TEST(RabiCircuit, Structure) {
    const Circuit c = build_rabi_circuit({kPi / 2, 3});
    EXPECT_EQ(c.n_qubits(), 4u);
    EXPECT_EQ(c.n_clbits(), 4u);
    int cx = 0;
    for (const auto& i : c.instructions()) {
        if (i.kind == OpKind::CX) {
            ++cx;
            EXPECT_EQ(i.qubits[0], 0u);
            EXPECT_EQ(i.qubits[1], static_cast<unsigned>(i.tag));
        }
    }
    EXPECT_EQ(cx, 3);
    EXPECT_THROW(build_rabi_circuit({kPi, kMaxAncillas + 1}), InvalidArgument);
    EXPECT_THROW(build_rabi_circuit({-0.1, 1}), InvalidArgument);
    EXPECT_THROW(build_rabi_circuit({7.0, 1}), InvalidArgument);
    EXPECT_NO_THROW(build_rabi_circuit({0.0, 2}));
}

TEST(RabiCircuit, RecordSurvivalMatchesProjectiveOracle) {
    for (double theta : {kPi / 2, kPi / 3, kPi / 4, kPi / 5, kPi / 6, kPi, 2 * kPi}) {
        for (unsigned n = 1; n <= kMaxAncillas; ++n) {
            const Circuit c = build_rabi_circuit({theta, n});
            std::vector<unsigned> records;
            for (unsigned k = 1; k <= n; ++k) records.push_back(k);
            const auto dist = run_ideal(c).distribution;
            const double p = survival_probability(dist, 0, 0, records, 1).p;
            EXPECT_NEAR(p, rabi_oracle(theta, n), 1e-12) << theta << " " << n;
            EXPECT_NEAR(theory_rabi(theta, n), rabi_oracle(theta, n), 1e-14);
        }
    }
}

TEST(RabiCircuit, MarginalSurvivalTwoMeasurements) {
    // System alone after two half rotations with one intervening check:
    // 1/2 stays via |0>|0>, plus 1/2 * 1/2 returning from |1>.
    const auto dist = run_ideal(build_rabi_circuit({kPi / 2, 2})).distribution;
    EXPECT_NEAR(survival_probability(dist, 0, 0, {}, 1).p, 0.75, 1e-12);
}

TEST(RabiCircuit, NoMeasurementIsBareRotation) {
    const auto dist = run_ideal(build_rabi_circuit({kPi / 3, 0})).distribution;
    EXPECT_NEAR(dist[0], std::pow(std::cos(kPi / 6), 2), 1e-14);
}

TEST(Theory, ClosedForms) {
    EXPECT_NEAR(theory_rabi(kPi / 2, 1), 0.5, 1e-15);
    EXPECT_NEAR(theory_rabi(kPi / 2, 2), std::pow(std::cos(kPi / 8), 4), 1e-15);
    EXPECT_THROW(theory_rabi(1.0, 0), InvalidArgument);
    for (unsigned n = 1; n < 6; ++n) {
        EXPECT_LT(theory_rabi(kPi / 2, n), theory_rabi(kPi / 2, n + 1));
    }
    // Large N approaches the Gaussian limit.
    EXPECT_NEAR(theory_rabi(kPi / 2, 1000), theory_rabi_limit(kPi / 2, 1000), 1e-6);

    const double x = 10.25 / (6 * 15.8);
    EXPECT_NEAR(theory_decay(10.25, 6, 15.8), std::pow(1 - x * x, 6), 1e-15);
    EXPECT_NEAR(theory_decay(10.25, 6, 15.8), 0.932, 1e-3);
    EXPECT_THROW(theory_decay(6.0, 6, 1.0), DomainError);
    EXPECT_THROW(theory_decay(1.0, 0, 1.0), InvalidArgument);
    EXPECT_NEAR(theory_decay(0.01, 1000, 1.0), theory_decay_limit(0.01, 1000, 1.0), 1e-9);
}

TEST(ZenoTime, Rabi) {
    for (double omega : {0.1, 1.0, 7.5}) {
        EXPECT_NEAR(zeno_time(Hamiltonian::rabi(omega), StateVector(1)), 1.0 / omega, 1e-12 / omega);
    }
}

TEST(ZenoTime, FlipFlopPseudomode) {
    const double g = 1.0 / 15.8;
    // System excited (qubit 0), environment empty.
    EXPECT_NEAR(zeno_time(Hamiltonian::flip_flop(g), StateVector::basis(2, 1)), 1.0 / g, 1e-12 / g);
}

TEST(ZenoTime, AgreesWithShortTimeSurvival) {
    // 1 - |<psi| e^{-iHt} |psi>|^2 ~ (t / T)^2 for small t, with an oracle exponential.
    const double g = 0.37;
    const auto h = Hamiltonian::flip_flop(g);
    oracle::Mat hm(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) hm(r, c) = h(r, c);
    const double t = 1e-3 / g;
    const oracle::Mat u = oracle::evolve(hm, t);
    const double decay = 1 - std::norm(u(1, 1));
    const double T = zeno_time(h, StateVector::basis(2, 1));
    EXPECT_NEAR(decay / ((t / T) * (t / T)), 1.0, 1e-6);
}

TEST(ZenoTime, EigenstateHasNoZenoTime) {
    EXPECT_THROW(zeno_time(Hamiltonian::flip_flop(1.0), StateVector(2)), DomainError);
    const oracle::Vec plus = (oracle::Vec(2) << 1, 1).finished() / std::sqrt(2.0);
    EXPECT_THROW(zeno_time(Hamiltonian::rabi(1.0), StateVector::from_amplitudes({plus(0), plus(1)})), DomainError);
}

TEST(ZenoTime, RejectsNonHermitian) {
    EXPECT_THROW(Hamiltonian::from_entries(2, {0, 1, 0, 0}), InvalidArgument);
    EXPECT_THROW(Hamiltonian::from_entries(3, std::vector<cplx>(9, 0)), InvalidArgument);
    EXPECT_THROW(zeno_time(Hamiltonian::rabi(1.0), StateVector(2)), InvalidArgument);
}

TEST(PseudomodeDecay, RecordSurvivalIsCosinePower) {
    const double g = 1.0 / 15.8;
    for (unsigned n = 1; n <= kMaxAncillas; ++n) {
        for (double t : {2.05, 6.15, 10.25}) {
            const DecayCircuit dc = build_decay_circuit({t, n, PseudomodeModel{g}});
            EXPECT_EQ(dc.circuit.n_qubits(), n + 2);
            EXPECT_EQ(dc.record_clbits.size(), n);
            const auto dist = run_ideal(dc.circuit).distribution;
            const double p = survival_probability(dist, dc.system_clbit, dc.target, dc.record_clbits, 1).p;
            EXPECT_NEAR(p, std::pow(std::cos(g * t / n), 2 * n), 1e-12);
            EXPECT_EQ(dc.max_spacing_error_us(), 0.0);
        }
    }
}

TEST(PseudomodeDecay, MoreMeasurementsSlowDecay) {
    const double g = 1.0 / 15.8, t = 10.25;
    double prev = 0;
    for (unsigned n = 1; n <= kMaxAncillas; ++n) {
        const DecayCircuit dc = build_decay_circuit({t, n, PseudomodeModel{g}});
        const auto dist = run_ideal(dc.circuit).distribution;
        const double p = survival_probability(dist, 0, 1, dc.record_clbits, 1).p;
        EXPECT_GT(p, prev);
        prev = p;
    }
}

TEST(PseudomodeDecay, BadSpecs) {
    EXPECT_THROW(build_decay_circuit({1.0, 0, PseudomodeModel{1.0}}), InvalidArgument);
    EXPECT_THROW(build_decay_circuit({1.0, 7, PseudomodeModel{1.0}}), InvalidArgument);
    EXPECT_THROW(build_decay_circuit({-1.0, 2, PseudomodeModel{1.0}}), InvalidArgument);
    EXPECT_THROW(build_decay_circuit({1.0, 2, PseudomodeModel{0.0}}), InvalidArgument);
    EXPECT_THROW(build_decay_circuit({1.0, 2, SnapshotNoiseModel{}}), InvalidArgument);
}

TEST(DecayLayout, SystemAndAncillaOrder) {
    const DeviceSnapshot dev = resolve_snapshot("nairobi-like");
    EXPECT_EQ(decay_layout(dev, 6), (std::vector<unsigned>{1, 0, 2, 3, 5, 4, 6}));
    EXPECT_EQ(decay_layout(dev, 6, 5u), (std::vector<unsigned>{5, 3, 4, 6, 1, 0, 2}));
    EXPECT_EQ(decay_layout(dev, 2, 5u), (std::vector<unsigned>{5, 3, 4}));
    EXPECT_THROW(decay_layout(dev, 7, 5u), InvalidArgument);
    EXPECT_THROW(decay_layout(dev, 1, 9u), InvalidArgument);
}

TEST(SnapshotDecay, MeasurementTimesWithinRounding) {
    const DeviceSnapshot dev = resolve_snapshot("lima-like");
    for (unsigned n = 1; n <= 4; ++n) {
        const DecayCircuit dc = build_decay_circuit({8.38, n, SnapshotNoiseModel{4}}, dev);
        ASSERT_EQ(dc.measurement_times_us.size(), n);
        EXPECT_LE(dc.max_spacing_error_us(), dev.dt_to_us(8 * n) + 1e-12);
        EXPECT_NEAR(dc.ideal_times_us.back(), 8.38, 1e-12);
        EXPECT_NO_THROW(check_executable(dc.circuit, dev));
        for (const auto& d : dc.lowered->delays.delays) EXPECT_EQ(d.quantized_dt % 16, 0);
    }
}

TEST(SnapshotDecay, SegmentsShorterThanOverheadAreRejected) {
    const DeviceSnapshot dev = resolve_snapshot("nairobi-like");
    // 6 segments of 50 ns cannot hold a 300 ns CX each.
    EXPECT_THROW(build_decay_circuit({0.3, 6, SnapshotNoiseModel{5}}, dev), DomainError);
}

TEST(SnapshotDecay, NoiselessDeviceKeepsExcitation) {
    const DeviceSnapshot dev = resolve_snapshot("linear-5");
    const DecayCircuit dc = build_decay_circuit({5.0, 3, SnapshotNoiseModel{}}, dev);
    const auto r = run_noisy(dc.circuit, NoiseModel(dev), 1000, 1);
    EXPECT_NEAR(survival_probability(r.distribution, dc.system_clbit, 1, dc.record_clbits, 1000).p, 1.0, 1e-12);
}

TEST(Survival, HistogramAndDistributionAgree) {
    CountsHistogram h;
    h.n_bits = 3;
    h.shots = 100;
    h.counts = {{"111", 60}, {"011", 20}, {"001", 15}, {"000", 5}};
    const unsigned rec[] = {1, 2};
    EXPECT_NEAR(survival_probability(h, 0, 1).p, 0.95, 1e-15);
    EXPECT_NEAR(survival_probability(h, 0, 1, rec).p, 0.60, 1e-15);
    EXPECT_NEAR(survival_probability(h, 0, 1, rec).std_error, std::sqrt(0.6 * 0.4 / 100), 1e-15);
    EXPECT_NEAR(survival_probability(h, 0, 0).p, 0.05, 1e-15);
    const auto f = h.frequencies();
    EXPECT_NEAR(survival_probability(f, 0, 1, rec, 100).p, 0.60, 1e-15);
    EXPECT_THROW(survival_probability(h, 3, 1), InvalidArgument);
    EXPECT_THROW(survival_probability(h, 0, 2), InvalidArgument);
}

}  // namespace
