#pragma once

#include <cstdint>
#include "json.hpp"
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qzeno/qcore.hpp"

namespace qzeno {

class DeviceSnapshot;

enum class OpKind { U3, RZ, SX, X, CX, ECR, XY, SWAP, Delay, Measure, Barrier };

// Lower-case names used in JSON documents and device basis lists.
std::string_view op_name(OpKind kind);
std::optional<OpKind> op_from_name(std::string_view name);
// Fixed qubit count for the kind; Barrier returns 0 (any positive count).
unsigned op_arity(OpKind kind);
unsigned op_param_count(OpKind kind);
bool op_is_unitary(OpKind kind);

struct Instruction {
    OpKind kind = OpKind::Barrier;
    std::vector<unsigned> qubits;
    std::vector<double> params;  // radians
    std::int64_t dt_count = 0;   // Delay only
    int clbit = -1;              // Measure only
    int tag = -1;                // free label, carried through lowering

    static Instruction u3(unsigned q, double theta, double phi, double lambda);
    static Instruction rz(unsigned q, double phi);
    static Instruction sx(unsigned q);
    static Instruction x(unsigned q);
    static Instruction cx(unsigned control, unsigned target);
    static Instruction ecr(unsigned q0, unsigned q1);
    static Instruction xy(unsigned q0, unsigned q1, double beta);
    static Instruction swap(unsigned q0, unsigned q1);
    static Instruction delay(unsigned q, std::int64_t dt_count);
    static Instruction measure(unsigned q, unsigned clbit);
    static Instruction barrier(std::vector<unsigned> qubits);

    Instruction with_tag(int t) const {
        Instruction copy = *this;
        copy.tag = t;
        return copy;
    }

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

namespace gates {
UnitaryMatrix rz(double phi);  // diag(e^{-i phi/2}, e^{i phi/2})
UnitaryMatrix sx();
UnitaryMatrix x();
UnitaryMatrix cx();  // control = local bit 0
UnitaryMatrix ecr();
UnitaryMatrix swap();
// exp(-i (beta/2) (XX + YY)/2): identity on |00>,|11>, rotation by beta/2 in
// the {|01>,|10>} block.
UnitaryMatrix xy(double beta);
}  // namespace gates

// Unitary of a single unitary instruction, local ordering = instr.qubits.
UnitaryMatrix instruction_unitary(const Instruction& instr);

// Ordered instruction list. Measurement is terminal per qubit: once a qubit
// is measured only barriers may touch it again. Each clbit is written once.
class Circuit {
public:
    Circuit() = default;
    Circuit(unsigned n_qubits, unsigned n_clbits);

    // Validates and appends; throws InvalidArgument on a bad index, arity or
    // parameter, and on a gate after a measurement of the same qubit.
    Circuit& append(Instruction instr);

    unsigned n_qubits() const noexcept { return n_qubits_; }
    unsigned n_clbits() const noexcept { return n_clbits_; }
    std::span<const Instruction> instructions() const noexcept { return instrs_; }
    std::size_t size() const noexcept { return instrs_.size(); }
    bool empty() const noexcept { return instrs_.empty(); }
    bool is_measured(unsigned q) const { return measured_.at(q); }

    friend bool operator==(const Circuit&, const Circuit&) = default;

private:
    unsigned n_qubits_ = 0;
    unsigned n_clbits_ = 0;
    std::vector<Instruction> instrs_;
    std::vector<bool> measured_;
    std::vector<bool> clbit_written_;
};

// Value-returning append.
Circuit appended(const Circuit& circuit, Instruction instr);

// Same circuit without Measure, Delay and Barrier instructions.
Circuit unitary_part(const Circuit& circuit);

inline constexpr unsigned kMaxUnitaryQubits = 6;

// Product of the embedded instruction unitaries in program order.
// Throws InvalidArgument on Measure/Delay, SizeLimitError above 6 qubits.
UnitaryMatrix unitary_of(const Circuit& circuit);

struct Schedule {
    std::vector<std::int64_t> start_dt;     // per instruction
    std::vector<std::int64_t> duration_dt;  // per instruction
    std::int64_t total_duration_dt = 0;

    std::int64_t end_dt(std::size_t i) const { return start_dt[i] + duration_dt[i]; }
};

// As-soon-as-possible schedule in device dt units. Barriers synchronise their
// qubits and take no time. Throws ValidationError when the device has no
// duration for a gate/qubit pair.
Schedule schedule(const Circuit& circuit, const DeviceSnapshot& device);

// JSON document {"schema": "qzeno.circuit/1", ...}.
inline constexpr std::string_view kCircuitSchema = "qzeno.circuit/1";
nlohmann::json to_json(const Circuit& circuit);
Circuit circuit_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Schedule& sched);

}  // namespace qzeno
