#include "qzeno/circuit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "qzeno/device.hpp"
#include "qzeno/error.hpp"

namespace qzeno {
namespace {

struct OpInfo {
    OpKind kind;
    std::string_view name;
    unsigned arity;
    unsigned params;
    bool unitary;
};

constexpr std::array<OpInfo, 11> kOps{{
    {OpKind::U3, "u3", 1, 3, true},
    {OpKind::RZ, "rz", 1, 1, true},
    {OpKind::SX, "sx", 1, 0, true},
    {OpKind::X, "x", 1, 0, true},
    {OpKind::CX, "cx", 2, 0, true},
    {OpKind::ECR, "ecr", 2, 0, true},
    {OpKind::XY, "xy", 2, 1, true},
    {OpKind::SWAP, "swap", 2, 0, true},
    {OpKind::Delay, "delay", 1, 0, false},
    {OpKind::Measure, "measure", 1, 0, false},
    {OpKind::Barrier, "barrier", 0, 0, false},
}};

const OpInfo& info(OpKind kind) { return kOps[static_cast<std::size_t>(kind)]; }

}  // namespace

std::string_view op_name(OpKind kind) { return info(kind).name; }

std::optional<OpKind> op_from_name(std::string_view name) {
    for (const auto& op : kOps) {
        if (op.name == name) return op.kind;
    }
    return std::nullopt;
}

unsigned op_arity(OpKind kind) { return info(kind).arity; }
unsigned op_param_count(OpKind kind) { return info(kind).params; }
bool op_is_unitary(OpKind kind) { return info(kind).unitary; }

// ---------------------------------------------------------------- factories

Instruction Instruction::u3(unsigned q, double theta, double phi, double lambda) {
    return {OpKind::U3, {q}, {theta, phi, lambda}};
}
Instruction Instruction::rz(unsigned q, double phi) { return {OpKind::RZ, {q}, {phi}}; }
Instruction Instruction::sx(unsigned q) { return {OpKind::SX, {q}, {}}; }
Instruction Instruction::x(unsigned q) { return {OpKind::X, {q}, {}}; }
Instruction Instruction::cx(unsigned control, unsigned target) { return {OpKind::CX, {control, target}, {}}; }
Instruction Instruction::ecr(unsigned q0, unsigned q1) { return {OpKind::ECR, {q0, q1}, {}}; }
Instruction Instruction::xy(unsigned q0, unsigned q1, double beta) { return {OpKind::XY, {q0, q1}, {beta}}; }
Instruction Instruction::swap(unsigned q0, unsigned q1) { return {OpKind::SWAP, {q0, q1}, {}}; }
Instruction Instruction::delay(unsigned q, std::int64_t dt_count) {
    Instruction d{OpKind::Delay, {q}, {}};
    d.dt_count = dt_count;
    return d;
}
Instruction Instruction::measure(unsigned q, unsigned clbit) {
    Instruction m{OpKind::Measure, {q}, {}};
    m.clbit = static_cast<int>(clbit);
    return m;
}
Instruction Instruction::barrier(std::vector<unsigned> qubits) { return {OpKind::Barrier, std::move(qubits), {}}; }

// ---------------------------------------------------------------- gate matrices

namespace gates {

UnitaryMatrix rz(double phi) {
    return UnitaryMatrix::trusted(2, {std::polar(1.0, -phi / 2.0), 0.0, 0.0, std::polar(1.0, phi / 2.0)});
}

UnitaryMatrix sx() {
    const cplx a{0.5, 0.5}, b{0.5, -0.5};
    return UnitaryMatrix::trusted(2, {a, b, b, a});
}

UnitaryMatrix x() { return UnitaryMatrix::trusted(2, {0.0, 1.0, 1.0, 0.0}); }

UnitaryMatrix cx() {
    // |t c>: flips bit 1 when bit 0 is set.
    return UnitaryMatrix::trusted(4, {1, 0, 0, 0,  //
                                      0, 0, 0, 1,  //
                                      0, 0, 1, 0,  //
                                      0, 1, 0, 0});
}

UnitaryMatrix ecr() {
    // Echoed cross-resonance. Equals (X (x) X) . CX . (SX^dagger on q1,
    // RZ(pi/2) on q0) up to a global phase, i.e. CX-equivalent up to fixed
    // single-qubit rotations.
    const double s = 1.0 / std::numbers::sqrt2;
    const cplx i{0.0, s};
    return UnitaryMatrix::trusted(4, {0, s, 0, i,   //
                                      s, 0, -i, 0,  //
                                      0, i, 0, s,   //
                                      -i, 0, s, 0});
}

UnitaryMatrix swap() {
    return UnitaryMatrix::trusted(4, {1, 0, 0, 0,  //
                                      0, 0, 1, 0,  //
                                      0, 1, 0, 0,  //
                                      0, 0, 0, 1});
}

UnitaryMatrix xy(double beta) {
    if (!std::isfinite(beta)) throw InvalidArgument("xy: angle must be finite");
    const double c = std::cos(beta / 2.0);
    const cplx ms{0.0, -std::sin(beta / 2.0)};
    return UnitaryMatrix::trusted(4, {1, 0, 0, 0,   //
                                      0, c, ms, 0,  //
                                      0, ms, c, 0,  //
                                      0, 0, 0, 1});
}

}  // namespace gates

UnitaryMatrix instruction_unitary(const Instruction& instr) {
    switch (instr.kind) {
        case OpKind::U3: return u3_matrix(instr.params.at(0), instr.params.at(1), instr.params.at(2));
        case OpKind::RZ: return gates::rz(instr.params.at(0));
        case OpKind::SX: return gates::sx();
        case OpKind::X: return gates::x();
        case OpKind::CX: return gates::cx();
        case OpKind::ECR: return gates::ecr();
        case OpKind::XY: return gates::xy(instr.params.at(0));
        case OpKind::SWAP: return gates::swap();
        default: break;
    }
    throw InvalidArgument(std::string("instruction '") + std::string(op_name(instr.kind)) + "' is not unitary");
}

// ---------------------------------------------------------------- Circuit

Circuit::Circuit(unsigned n_qubits, unsigned n_clbits)
    : n_qubits_(n_qubits), n_clbits_(n_clbits), measured_(n_qubits, false), clbit_written_(n_clbits, false) {}

Circuit& Circuit::append(Instruction instr) {
    const std::string name(op_name(instr.kind));
    const unsigned arity = op_arity(instr.kind);
    if (arity != 0 && instr.qubits.size() != arity) {
        throw InvalidArgument(name + " takes " + std::to_string(arity) + " qubit(s)");
    }
    if (instr.qubits.empty()) throw InvalidArgument(name + " needs at least one qubit");
    for (std::size_t i = 0; i < instr.qubits.size(); ++i) {
        if (instr.qubits[i] >= n_qubits_) {
            throw InvalidArgument(name + ": qubit " + std::to_string(instr.qubits[i]) + " out of range");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (instr.qubits[i] == instr.qubits[j]) throw InvalidArgument(name + ": repeated qubit");
        }
    }
    if (instr.params.size() != op_param_count(instr.kind)) throw InvalidArgument(name + ": wrong parameter count");
    for (double p : instr.params) {
        if (!std::isfinite(p)) throw InvalidArgument(name + ": non-finite parameter");
    }
    if (instr.kind == OpKind::Delay && instr.dt_count < 0) throw InvalidArgument("delay: dt_count must be >= 0");
    if (instr.kind != OpKind::Barrier) {
        for (unsigned q : instr.qubits) {
            if (measured_[q]) {
                throw InvalidArgument(name + " on qubit " + std::to_string(q) +
                                      " after its measurement; measurement is terminal");
            }
        }
    }
    if (instr.kind == OpKind::Measure) {
        if (instr.clbit < 0 || static_cast<unsigned>(instr.clbit) >= n_clbits_) {
            throw InvalidArgument("measure: clbit out of range");
        }
        if (clbit_written_[instr.clbit]) {
            throw InvalidArgument("measure: clbit " + std::to_string(instr.clbit) + " already written");
        }
        clbit_written_[instr.clbit] = true;
        measured_[instr.qubits[0]] = true;
    }
    instrs_.push_back(std::move(instr));
    return *this;
}

Circuit appended(const Circuit& circuit, Instruction instr) {
    Circuit out = circuit;
    out.append(std::move(instr));
    return out;
}

Circuit unitary_part(const Circuit& circuit) {
    Circuit out(circuit.n_qubits(), circuit.n_clbits());
    for (const Instruction& instr : circuit.instructions()) {
        if (op_is_unitary(instr.kind)) out.append(instr);
    }
    return out;
}

UnitaryMatrix unitary_of(const Circuit& circuit) {
    const unsigned n = circuit.n_qubits();
    if (n > kMaxUnitaryQubits) {
        throw SizeLimitError("unitary_of: " + std::to_string(n) + " qubits exceeds limit of " +
                             std::to_string(kMaxUnitaryQubits));
    }
    const std::size_t dim = std::size_t{1} << n;
    // Column-major so every column is a contiguous state vector.
    std::vector<cplx> cols(dim * dim, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < dim; ++i) cols[i * dim + i] = 1.0;
    for (const Instruction& instr : circuit.instructions()) {
        if (instr.kind == OpKind::Barrier) continue;
        if (!op_is_unitary(instr.kind)) {
            throw InvalidArgument("unitary_of: circuit contains non-unitary instruction '" +
                                  std::string(op_name(instr.kind)) + "'");
        }
        const UnitaryMatrix g = instruction_unitary(instr);
        for (std::size_t c = 0; c < dim; ++c) {
            apply_matrix(std::span<cplx>(cols.data() + c * dim, dim), n, g.entries(), instr.qubits);
        }
    }
    std::vector<cplx> rows(dim * dim);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) rows[r * dim + c] = cols[c * dim + r];
    return UnitaryMatrix::trusted(dim, std::move(rows));
}

// ---------------------------------------------------------------- Schedule

Schedule schedule(const Circuit& circuit, const DeviceSnapshot& device) {
    if (circuit.n_qubits() > device.n_qubits()) {
        throw InvalidArgument("circuit uses " + std::to_string(circuit.n_qubits()) + " qubits but device '" +
                              device.name() + "' has " + std::to_string(device.n_qubits()));
    }
    Schedule out;
    out.start_dt.reserve(circuit.size());
    out.duration_dt.reserve(circuit.size());
    std::vector<std::int64_t> ready(circuit.n_qubits(), 0);
    for (const Instruction& instr : circuit.instructions()) {
        std::int64_t start = 0;
        for (unsigned q : instr.qubits) start = std::max(start, ready[q]);
        std::int64_t duration = 0;
        if (instr.kind == OpKind::Delay) {
            duration = instr.dt_count;
        } else if (instr.kind != OpKind::Barrier) {
            const auto d = device.duration_dt(op_name(instr.kind), instr.qubits);
            if (!d) {
                std::string qs;
                for (unsigned q : instr.qubits) qs += (qs.empty() ? "" : ",") + std::to_string(q);
                throw ValidationError("durations", "device '" + device.name() + "' has no duration for " +
                                                       std::string(op_name(instr.kind)) + "(" + qs + ")");
            }
            duration = *d;
        }
        for (unsigned q : instr.qubits) ready[q] = start + duration;
        out.start_dt.push_back(start);
        out.duration_dt.push_back(duration);
        out.total_duration_dt = std::max(out.total_duration_dt, start + duration);
    }
    return out;
}

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const Circuit& circuit) {
    nlohmann::json doc;
    doc["schema"] = kCircuitSchema;
    doc["n_qubits"] = circuit.n_qubits();
    doc["n_clbits"] = circuit.n_clbits();
    auto& list = doc["instructions"] = nlohmann::json::array();
    for (const Instruction& instr : circuit.instructions()) {
        nlohmann::json j;
        j["op"] = op_name(instr.kind);
        j["qubits"] = instr.qubits;
        if (!instr.params.empty()) j["params"] = instr.params;
        if (instr.kind == OpKind::Delay) j["dt"] = instr.dt_count;
        if (instr.kind == OpKind::Measure) j["clbit"] = instr.clbit;
        if (instr.tag >= 0) j["tag"] = instr.tag;
        list.push_back(std::move(j));
    }
    return doc;
}

Circuit circuit_from_json(const nlohmann::json& doc) {
    try {
        if (!doc.is_object()) throw ValidationError("", "circuit document must be a JSON object");
        const auto schema = doc.at("schema").get<std::string>();
        if (schema != kCircuitSchema) throw ValidationError("schema", "unrecognised circuit schema '" + schema + "'");
        Circuit c(doc.at("n_qubits").get<unsigned>(), doc.at("n_clbits").get<unsigned>());
        const auto& list = doc.at("instructions");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& j = list[i];
            const std::string path = "instructions[" + std::to_string(i) + "]";
            const auto name = j.at("op").get<std::string>();
            const auto kind = op_from_name(name);
            if (!kind) throw ValidationError(path + ".op", "unknown instruction '" + name + "'");
            Instruction instr;
            instr.kind = *kind;
            instr.qubits = j.at("qubits").get<std::vector<unsigned>>();
            if (j.contains("params")) instr.params = j.at("params").get<std::vector<double>>();
            if (*kind == OpKind::Delay) instr.dt_count = j.at("dt").get<std::int64_t>();
            if (*kind == OpKind::Measure) instr.clbit = j.at("clbit").get<int>();
            if (j.contains("tag")) instr.tag = j.at("tag").get<int>();
            try {
                c.append(std::move(instr));
            } catch (const InvalidArgument& e) {
                throw ValidationError(path, e.what());
            }
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("", std::string("malformed circuit document: ") + e.what());
    }
}

nlohmann::json to_json(const Schedule& sched) {
    return {{"total_duration_dt", sched.total_duration_dt},
            {"start_dt", sched.start_dt},
            {"duration_dt", sched.duration_dt}};
}

}  // namespace qzeno
