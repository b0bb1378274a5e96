#pragma once

// Lowering of logical circuits onto a device: single-qubit basis
// translation, SWAP routing on the coupling map, delay alignment and
// scheduling.

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "qzeno/circuit.hpp"
#include "qzeno/device.hpp"

namespace qzeno {

// U3(t, p, l) -> RZ(l) SX RZ(t + pi) SX RZ(p + pi) in circuit order; equal
// to the U3 matrix up to a global phase. Throws InvalidArgument if `u3` is
// not a U3 instruction.
std::vector<Instruction> decompose_u3(const Instruction& u3);

// Replaces every U3 by its RZ/SX sequence, and X by SX SX when the device
// lacks a native X.
Circuit decompose_single_qubit(const Circuit& circuit, const DeviceSnapshot& device);

// layout[logical] = physical.
using Layout = std::vector<unsigned>;

struct RoutedCircuit {
    Circuit circuit;  // on the device's qubits; clbits unchanged
    Layout initial_layout;
    Layout final_layout;
};

// Greedy routing: each two-qubit gate on non-adjacent wires first moves its
// first operand along the shortest path with SWAPs, which persist in the
// layout. SWAPs become three CX (or ECR-equivalent) gates oriented to the
// smallest summed duration; gates against an edge's direction are flipped
// with Hadamards; CX and ECR are converted to whichever the device offers.
// Throws InvalidArgument when the circuit does not fit the device and
// DomainError when two operands are disconnected.
RoutedCircuit route(const Circuit& circuit, const DeviceSnapshot& device,
                    std::optional<Layout> initial_layout = std::nullopt);

// Nearest multiple of `granularity`, ties rounding up.
std::int64_t quantize_dt(std::int64_t dt_count, std::int64_t granularity);

struct DelayRounding {
    std::size_t instruction = 0;  // index in the circuit
    std::int64_t requested_dt = 0;
    std::int64_t quantized_dt = 0;
    std::int64_t error_dt() const { return quantized_dt - requested_dt; }
};

struct DelayReport {
    std::int64_t granularity_dt = 0;
    std::vector<DelayRounding> delays;
    std::int64_t total_error_dt() const;
    // N * granularity for N delays.
    std::int64_t worst_case_bound_dt() const;
};

struct QuantizedCircuit {
    Circuit circuit;
    DelayReport report;
};

QuantizedCircuit quantize_delays(const Circuit& circuit, const DeviceSnapshot& device);

struct LoweredCircuit {
    Circuit circuit;
    Schedule schedule;
    Layout initial_layout;
    Layout final_layout;
    DelayReport delays;
};

// decompose_single_qubit -> route -> quantize_delays -> schedule. Throws
// InvalidArgument if anything outside the device basis survives.
LoweredCircuit lower(const Circuit& circuit, const DeviceSnapshot& device,
                     std::optional<Layout> initial_layout = std::nullopt);

// Throws InvalidArgument naming the first instruction that is not a basis
// gate or whose two qubits are not a directed coupling edge.
void check_executable(const Circuit& circuit, const DeviceSnapshot& device);

// {"schema": "qzeno.lowered/1", circuit, schedule, layouts, delay errors}.
inline constexpr std::string_view kLoweredSchema = "qzeno.lowered/1";
nlohmann::json to_json(const LoweredCircuit& lowered);

}  // namespace qzeno
