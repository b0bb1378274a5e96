#include "qzeno/transpiler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qzeno/error.hpp"

namespace qzeno {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) { return std::remainder(a, 2.0 * kPi); }

std::string describe(const Instruction& instr) {
    std::string s(op_name(instr.kind));
    s += '(';
    for (std::size_t i = 0; i < instr.qubits.size(); ++i) s += (i ? "," : "") + std::to_string(instr.qubits[i]);
    return s + ')';
}

class Router {
public:
    Router(const Circuit& circuit, const DeviceSnapshot& device, const std::optional<Layout>& initial)
        : dev_(device), map_(device.coupling()), out_(device.n_qubits(), circuit.n_clbits()) {
        const unsigned n_dev = device.n_qubits();
        if (circuit.n_qubits() > n_dev) {
            throw InvalidArgument("route: circuit has " + std::to_string(circuit.n_qubits()) +
                                  " qubits but device '" + device.name() + "' has " + std::to_string(n_dev));
        }
        l2p_.assign(n_dev, 0);
        std::vector<bool> used(n_dev, false);
        if (initial) {
            if (initial->size() != circuit.n_qubits()) {
                throw InvalidArgument("route: initial layout must list one physical qubit per circuit qubit");
            }
            for (std::size_t i = 0; i < initial->size(); ++i) {
                const unsigned p = (*initial)[i];
                if (p >= n_dev || used[p]) throw InvalidArgument("route: initial layout is not injective on the device");
                used[p] = true;
                l2p_[i] = p;
            }
        } else {
            for (unsigned i = 0; i < circuit.n_qubits(); ++i) {
                l2p_[i] = i;
                used[i] = true;
            }
        }
        // Idle wires take the remaining physical qubits in ascending order.
        unsigned next = 0;
        for (unsigned i = circuit.n_qubits(); i < n_dev; ++i) {
            while (used[next]) ++next;
            l2p_[i] = next;
            used[next] = true;
        }
        p2l_.assign(n_dev, 0);
        for (unsigned i = 0; i < n_dev; ++i) p2l_[l2p_[i]] = i;
        if (device.supports("cx")) {
            native_ = OpKind::CX;
        } else if (device.supports("ecr")) {
            native_ = OpKind::ECR;
        }
    }

    RoutedCircuit run(const Circuit& circuit) {
        RoutedCircuit result;
        result.initial_layout = l2p_;
        for (const Instruction& instr : circuit.instructions()) route_one(instr);
        result.final_layout = l2p_;
        result.circuit = std::move(out_);
        return result;
    }

private:
    using Sink = std::vector<Instruction>;

    void route_one(const Instruction& instr) {
        if (instr.qubits.size() != 2 || instr.kind == OpKind::Barrier) {
            Instruction mapped = instr;
            for (unsigned& q : mapped.qubits) q = l2p_[q];
            out_.append(std::move(mapped));
            return;
        }
        unsigned a = l2p_[instr.qubits[0]];
        const unsigned b = l2p_[instr.qubits[1]];
        if (!map_.adjacent(a, b)) {
            const std::vector<unsigned> path = shortest_path(map_, a, b);
            for (std::size_t i = 0; i + 2 < path.size(); ++i) {
                Sink sink;
                emit_swap(sink, path[i], path[i + 1], -1);
                flush(sink);
                relabel(path[i], path[i + 1]);
            }
            a = path[path.size() - 2];
        }
        Sink sink;
        switch (instr.kind) {
            case OpKind::CX: emit_cx(sink, a, b, instr.tag); break;
            case OpKind::ECR: emit_ecr(sink, a, b, instr.tag); break;
            case OpKind::SWAP: emit_swap(sink, a, b, instr.tag); break;
            case OpKind::XY: sink.push_back(Instruction::xy(a, b, instr.params.at(0)).with_tag(instr.tag)); break;
            default: throw InvalidArgument("route: unsupported two-qubit instruction " + describe(instr));
        }
        flush(sink);
    }

    void relabel(unsigned p, unsigned q) {
        std::swap(p2l_[p], p2l_[q]);
        l2p_[p2l_[p]] = p;
        l2p_[p2l_[q]] = q;
    }

    void flush(Sink& sink) {
        for (Instruction& i : sink) out_.append(std::move(i));
        sink.clear();
    }

    void emit_h(Sink& s, unsigned q, int tag) const {
        s.push_back(Instruction::rz(q, kPi / 2).with_tag(tag));
        s.push_back(Instruction::sx(q).with_tag(tag));
        s.push_back(Instruction::rz(q, kPi / 2).with_tag(tag));
    }

    void emit_x(Sink& s, unsigned q, int tag) const {
        if (dev_.supports("x")) {
            s.push_back(Instruction::x(q).with_tag(tag));
        } else {
            s.push_back(Instruction::sx(q).with_tag(tag));
            s.push_back(Instruction::sx(q).with_tag(tag));
        }
    }

    // Requires the directed edge c -> t.
    void emit_native_cx(Sink& s, unsigned c, unsigned t, int tag) const {
        if (native_ == OpKind::CX) {
            s.push_back(Instruction::cx(c, t).with_tag(tag));
        } else if (native_ == OpKind::ECR) {
            s.push_back(Instruction::rz(c, -kPi / 2).with_tag(tag));
            s.push_back(Instruction::sx(t).with_tag(tag));
            s.push_back(Instruction::ecr(c, t).with_tag(tag));
            emit_x(s, c, tag);
            emit_x(s, t, tag);
        } else {
            throw InvalidArgument("device '" + dev_.name() + "' has neither cx nor ecr in its basis");
        }
    }

    void emit_cx(Sink& s, unsigned c, unsigned t, int tag) const {
        if (map_.has_directed_edge(c, t)) {
            emit_native_cx(s, c, t, tag);
        } else {
            emit_h(s, c, tag);
            emit_h(s, t, tag);
            emit_native_cx(s, t, c, tag);
            emit_h(s, c, tag);
            emit_h(s, t, tag);
        }
    }

    void emit_ecr(Sink& s, unsigned q0, unsigned q1, int tag) const {
        if (native_ == OpKind::ECR && map_.has_directed_edge(q0, q1)) {
            s.push_back(Instruction::ecr(q0, q1).with_tag(tag));
            return;
        }
        // ECR = (X (x) X) . CX . (RZ(pi/2) (x) SX^dagger), SX^dagger ~ RZ(pi) SX RZ(pi).
        s.push_back(Instruction::rz(q0, kPi / 2).with_tag(tag));
        s.push_back(Instruction::rz(q1, kPi).with_tag(tag));
        s.push_back(Instruction::sx(q1).with_tag(tag));
        s.push_back(Instruction::rz(q1, kPi).with_tag(tag));
        emit_cx(s, q0, q1, tag);
        emit_x(s, q0, tag);
        emit_x(s, q1, tag);
    }

    std::int64_t serial_cost(const Sink& s) const {
        std::int64_t total = 0;
        for (const Instruction& i : s) total += dev_.duration_dt(op_name(i.kind), i.qubits).value_or(0);
        return total;
    }

    std::int64_t cx_cost(unsigned c, unsigned t) const {
        Sink scratch;
        emit_cx(scratch, c, t, -1);
        return serial_cost(scratch);
    }

    void emit_swap(Sink& s, unsigned a, unsigned b, int tag) const {
        // Three alternating CX; the outer pair runs in the cheaper direction.
        if (cx_cost(b, a) < cx_cost(a, b)) std::swap(a, b);
        emit_cx(s, a, b, tag);
        emit_cx(s, b, a, tag);
        emit_cx(s, a, b, tag);
    }

    const DeviceSnapshot& dev_;
    const CouplingMap& map_;
    Circuit out_;
    Layout l2p_;
    std::vector<unsigned> p2l_;
    std::optional<OpKind> native_;
};

}  // namespace

std::vector<Instruction> decompose_u3(const Instruction& u3) {
    if (u3.kind != OpKind::U3) throw InvalidArgument("decompose_u3: expected a u3 instruction");
    const unsigned q = u3.qubits.at(0);
    const double theta = u3.params.at(0), phi = u3.params.at(1), lambda = u3.params.at(2);
    std::vector<Instruction> seq{
        Instruction::rz(q, wrap_angle(lambda)),
        Instruction::sx(q),
        Instruction::rz(q, wrap_angle(theta + kPi)),
        Instruction::sx(q),
        Instruction::rz(q, wrap_angle(phi + kPi)),
    };
    for (Instruction& i : seq) i.tag = u3.tag;
    return seq;
}

Circuit decompose_single_qubit(const Circuit& circuit, const DeviceSnapshot& device) {
    const bool native_x = device.supports("x");
    Circuit out(circuit.n_qubits(), circuit.n_clbits());
    for (const Instruction& instr : circuit.instructions()) {
        if (instr.kind == OpKind::U3) {
            for (Instruction& i : decompose_u3(instr)) out.append(std::move(i));
        } else if (instr.kind == OpKind::X && !native_x) {
            out.append(Instruction::sx(instr.qubits[0]).with_tag(instr.tag));
            out.append(Instruction::sx(instr.qubits[0]).with_tag(instr.tag));
        } else {
            out.append(instr);
        }
    }
    return out;
}

RoutedCircuit route(const Circuit& circuit, const DeviceSnapshot& device, std::optional<Layout> initial_layout) {
    Router router(circuit, device, initial_layout);
    return router.run(circuit);
}

std::int64_t quantize_dt(std::int64_t dt_count, std::int64_t granularity) {
    if (granularity <= 0) throw InvalidArgument("quantize_dt: granularity must be positive");
    if (dt_count < 0) throw InvalidArgument("quantize_dt: negative delay");
    return ((2 * dt_count + granularity) / (2 * granularity)) * granularity;
}

std::int64_t DelayReport::total_error_dt() const {
    std::int64_t total = 0;
    for (const auto& d : delays) total += d.error_dt();
    return total;
}

std::int64_t DelayReport::worst_case_bound_dt() const {
    return static_cast<std::int64_t>(delays.size()) * granularity_dt;
}

QuantizedCircuit quantize_delays(const Circuit& circuit, const DeviceSnapshot& device) {
    QuantizedCircuit result{Circuit(circuit.n_qubits(), circuit.n_clbits()), {}};
    result.report.granularity_dt = device.granularity_dt();
    const auto instrs = circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        Instruction instr = instrs[i];
        if (instr.kind == OpKind::Delay) {
            const std::int64_t q = quantize_dt(instr.dt_count, device.granularity_dt());
            result.report.delays.push_back({i, instr.dt_count, q});
            instr.dt_count = q;
        }
        result.circuit.append(std::move(instr));
    }
    return result;
}

void check_executable(const Circuit& circuit, const DeviceSnapshot& device) {
    const auto instrs = circuit.instructions();
    for (std::size_t i = 0; i < instrs.size(); ++i) {
        const Instruction& instr = instrs[i];
        if (instr.kind == OpKind::Delay || instr.kind == OpKind::Measure || instr.kind == OpKind::Barrier) continue;
        const std::string where = "instruction " + std::to_string(i) + " " + describe(instr);
        if (!device.supports(op_name(instr.kind))) {
            throw InvalidArgument(where + " is not in the basis of device '" + device.name() + "'");
        }
        if (instr.qubits.size() == 2) {
            const unsigned a = instr.qubits[0], b = instr.qubits[1];
            const bool ok = instr.kind == OpKind::XY ? device.coupling().adjacent(a, b)
                                                     : device.coupling().has_directed_edge(a, b);
            if (!ok) throw InvalidArgument(where + " is not on a coupling edge");
        }
    }
}

LoweredCircuit lower(const Circuit& circuit, const DeviceSnapshot& device, std::optional<Layout> initial_layout) {
    RoutedCircuit routed = route(decompose_single_qubit(circuit, device), device, std::move(initial_layout));
    QuantizedCircuit quantized = quantize_delays(routed.circuit, device);
    check_executable(quantized.circuit, device);
    LoweredCircuit out;
    out.schedule = schedule(quantized.circuit, device);
    out.circuit = std::move(quantized.circuit);
    out.initial_layout = std::move(routed.initial_layout);
    out.final_layout = std::move(routed.final_layout);
    out.delays = std::move(quantized.report);
    return out;
}

nlohmann::json to_json(const LoweredCircuit& lowered) {
    nlohmann::json delays = nlohmann::json::array();
    for (const auto& d : lowered.delays.delays) {
        delays.push_back({{"instruction", d.instruction},
                          {"requested_dt", d.requested_dt},
                          {"quantized_dt", d.quantized_dt},
                          {"error_dt", d.error_dt()}});
    }
    return {{"schema", kLoweredSchema},
            {"circuit", to_json(lowered.circuit)},
            {"schedule", to_json(lowered.schedule)},
            {"initial_layout", lowered.initial_layout},
            {"final_layout", lowered.final_layout},
            {"delays",
             {{"granularity_dt", lowered.delays.granularity_dt},
              {"entries", delays},
              {"total_error_dt", lowered.delays.total_error_dt()},
              {"worst_case_bound_dt", lowered.delays.worst_case_bound_dt()}}}};
}

}  // namespace qzeno
