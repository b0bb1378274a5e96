#include "qzeno/device.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include "qzeno/error.hpp"

namespace qzeno {

// ---------------------------------------------------------------- CouplingMap

CouplingMap::CouplingMap(unsigned n_qubits, std::span<const Edge> directed_edges)
    : n_qubits_(n_qubits), adj_(n_qubits), directed_(n_qubits, std::vector<bool>(n_qubits, false)) {
    for (const auto& [a, b] : directed_edges) {
        check_qubit(a);
        check_qubit(b);
        if (a == b) throw InvalidArgument("coupling edge is a self-loop on qubit " + std::to_string(a));
        directed_[a][b] = true;
        adj_[a].push_back(b);
        adj_[b].push_back(a);
    }
    for (auto& row : adj_) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
}

void CouplingMap::check_qubit(unsigned q) const {
    if (q >= n_qubits_) {
        throw InvalidArgument("qubit " + std::to_string(q) + " out of range for " + std::to_string(n_qubits_) +
                              "-qubit coupling map");
    }
}

bool CouplingMap::has_directed_edge(unsigned a, unsigned b) const {
    check_qubit(a);
    check_qubit(b);
    return directed_[a][b];
}

bool CouplingMap::adjacent(unsigned a, unsigned b) const {
    check_qubit(a);
    check_qubit(b);
    return directed_[a][b] || directed_[b][a];
}

const std::vector<unsigned>& CouplingMap::neighbors(unsigned q) const {
    check_qubit(q);
    return adj_[q];
}

std::vector<int> CouplingMap::distances_from(unsigned q) const {
    check_qubit(q);
    std::vector<int> dist(n_qubits_, -1);
    std::deque<unsigned> frontier{q};
    dist[q] = 0;
    while (!frontier.empty()) {
        const unsigned u = frontier.front();
        frontier.pop_front();
        for (unsigned v : adj_[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                frontier.push_back(v);
            }
        }
    }
    return dist;
}

std::vector<unsigned> neighbors(const CouplingMap& map, unsigned q) { return map.neighbors(q); }

std::vector<unsigned> shortest_path(const CouplingMap& map, unsigned a, unsigned b) {
    if (a >= map.n_qubits() || b >= map.n_qubits()) throw InvalidArgument("shortest_path: qubit out of range");
    if (a == b) throw InvalidArgument("shortest_path: endpoints must differ");
    const std::vector<int> to_b = map.distances_from(b);
    if (to_b[a] < 0) {
        throw DomainError("qubits " + std::to_string(a) + " and " + std::to_string(b) + " are not connected");
    }
    // Walking downhill in distance-to-b, always taking the smallest index,
    // yields the lexicographically smallest shortest path.
    std::vector<unsigned> path{a};
    unsigned cur = a;
    while (cur != b) {
        for (unsigned v : map.neighbors(cur)) {
            if (to_b[v] == to_b[cur] - 1) {
                cur = v;
                break;
            }
        }
        path.push_back(cur);
    }
    return path;
}

// ---------------------------------------------------------------- DeviceSnapshot

namespace {

std::string qubit_path(std::size_t q, const char* field) {
    return "qubits[" + std::to_string(q) + "]." + field;
}

}  // namespace

DeviceSnapshot::DeviceSnapshot(DeviceSpec spec) : spec_(std::move(spec)) {
    const unsigned n = spec_.n_qubits;
    if (n == 0) throw ValidationError("n_qubits", "must be positive");
    if (!(spec_.dt_ns > 0.0) || !std::isfinite(spec_.dt_ns)) throw ValidationError("dt_ns", "must be positive");
    if (spec_.granularity_dt <= 0) throw ValidationError("granularity_dt", "must be positive");
    if (spec_.qubits.size() != n) {
        throw ValidationError("qubits", "expected " + std::to_string(n) + " entries, got " +
                                            std::to_string(spec_.qubits.size()));
    }
    for (std::size_t q = 0; q < n; ++q) {
        const QubitProperties& p = spec_.qubits[q];
        if (!(p.T1_us > 0.0)) throw ValidationError(qubit_path(q, "T1_us"), "must be positive");
        if (!(p.T2_us > 0.0)) throw ValidationError(qubit_path(q, "T2_us"), "must be positive");
        if (p.T2_us > 2.0 * p.T1_us) {
            throw ValidationError(qubit_path(q, "T2_us"),
                                  "qubit " + std::to_string(q) + " violates T2 <= 2*T1 (T1=" +
                                      std::to_string(p.T1_us) + ", T2=" + std::to_string(p.T2_us) + ")");
        }
        if (!(p.readout_p01 >= 0.0 && p.readout_p01 <= 1.0)) {
            throw ValidationError(qubit_path(q, "readout_p01"), "must be a probability");
        }
        if (!(p.readout_p10 >= 0.0 && p.readout_p10 <= 1.0)) {
            throw ValidationError(qubit_path(q, "readout_p10"), "must be a probability");
        }
    }
    for (std::size_t i = 0; i < spec_.coupling_edges.size(); ++i) {
        const auto& [a, b] = spec_.coupling_edges[i];
        if (a >= n || b >= n || a == b) {
            throw ValidationError("coupling_edges[" + std::to_string(i) + "]", "references an invalid qubit pair");
        }
    }
    coupling_ = CouplingMap(n, spec_.coupling_edges);
    for (std::size_t i = 0; i < spec_.durations.size(); ++i) {
        const GateDuration& d = spec_.durations[i];
        const std::string path = "durations[" + std::to_string(i) + "]";
        if (d.duration_dt < 0) throw ValidationError(path + ".duration_dt", "must be non-negative");
        for (unsigned q : d.qubits) {
            if (q >= n) throw ValidationError(path + ".qubits", "qubit out of range");
        }
        if (!durations_.emplace(std::make_pair(d.gate, d.qubits), d.duration_dt).second) {
            throw ValidationError(path, "duplicate duration entry for " + d.gate);
        }
    }
}

bool DeviceSnapshot::supports(std::string_view gate) const {
    return std::find(spec_.basis_gates.begin(), spec_.basis_gates.end(), gate) != spec_.basis_gates.end();
}

std::optional<std::int64_t> DeviceSnapshot::duration_dt(std::string_view gate,
                                                        std::span<const unsigned> qubits) const {
    auto it = durations_.find({std::string(gate), std::vector<unsigned>(qubits.begin(), qubits.end())});
    if (it == durations_.end()) return std::nullopt;
    return it->second;
}

std::int64_t DeviceSnapshot::ns_to_dt(double ns) const { return std::llround(ns / spec_.dt_ns); }

// ---------------------------------------------------------------- JSON

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ValidationError(path.empty() ? key : path + "." + key, "missing");
    return obj.at(key);
}

double number_or_inf(const json& v, const std::string& path) {
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ValidationError(path, "expected a number or null");
    return v.get<double>();
}

json inf_as_null(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

template <typename T>
T get_as(const json& v, const std::string& path) {
    try {
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(path, e.what());
    }
}

}  // namespace

DeviceSnapshot load_snapshot(const json& doc) {
    if (!doc.is_object()) throw ValidationError("", "snapshot document must be a JSON object");
    const auto schema = get_as<std::string>(require(doc, "schema", ""), "schema");
    if (schema != kDeviceSchema) throw ValidationError("schema", "unrecognised snapshot schema '" + schema + "'");

    DeviceSpec spec;
    spec.name = get_as<std::string>(require(doc, "name", ""), "name");
    spec.n_qubits = get_as<unsigned>(require(doc, "n_qubits", ""), "n_qubits");
    spec.dt_ns = get_as<double>(require(doc, "dt_ns", ""), "dt_ns");
    spec.granularity_dt = get_as<std::int64_t>(require(doc, "granularity_dt", ""), "granularity_dt");
    spec.basis_gates = get_as<std::vector<std::string>>(require(doc, "basis_gates", ""), "basis_gates");
    const json& edges = require(doc, "coupling_edges", "");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto pair = get_as<std::vector<unsigned>>(edges[i], "coupling_edges[" + std::to_string(i) + "]");
        if (pair.size() != 2) throw ValidationError("coupling_edges[" + std::to_string(i) + "]", "expected a pair");
        spec.coupling_edges.emplace_back(pair[0], pair[1]);
    }
    const json& qubits = require(doc, "qubits", "");
    for (std::size_t q = 0; q < qubits.size(); ++q) {
        const std::string path = "qubits[" + std::to_string(q) + "]";
        QubitProperties p;
        p.T1_us = number_or_inf(require(qubits[q], "T1_us", path), path + ".T1_us");
        p.T2_us = number_or_inf(require(qubits[q], "T2_us", path), path + ".T2_us");
        p.readout_p01 = get_as<double>(require(qubits[q], "readout_p01", path), path + ".readout_p01");
        p.readout_p10 = get_as<double>(require(qubits[q], "readout_p10", path), path + ".readout_p10");
        spec.qubits.push_back(p);
    }
    const json& durations = require(doc, "durations", "");
    for (std::size_t i = 0; i < durations.size(); ++i) {
        const std::string path = "durations[" + std::to_string(i) + "]";
        GateDuration d;
        d.gate = get_as<std::string>(require(durations[i], "gate", path), path + ".gate");
        d.qubits = get_as<std::vector<unsigned>>(require(durations[i], "qubits", path), path + ".qubits");
        d.duration_dt = get_as<std::int64_t>(require(durations[i], "duration_dt", path), path + ".duration_dt");
        spec.durations.push_back(std::move(d));
    }
    if (doc.contains("estimated")) spec.estimated = get_as<std::vector<std::string>>(doc.at("estimated"), "estimated");
    return DeviceSnapshot(std::move(spec));
}

DeviceSnapshot load_snapshot_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path.string(), "cannot open snapshot file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string(), std::string("parse error: ") + e.what());
    }
    return load_snapshot(doc);
}

json to_json(const DeviceSnapshot& device) {
    const DeviceSpec& s = device.spec();
    json doc;
    doc["schema"] = kDeviceSchema;
    doc["name"] = s.name;
    doc["n_qubits"] = s.n_qubits;
    doc["dt_ns"] = s.dt_ns;
    doc["granularity_dt"] = s.granularity_dt;
    doc["basis_gates"] = s.basis_gates;
    json edges = json::array();
    for (const auto& [a, b] : s.coupling_edges) edges.push_back({a, b});
    doc["coupling_edges"] = edges;
    json qubits = json::array();
    for (const auto& p : s.qubits) {
        qubits.push_back({{"T1_us", inf_as_null(p.T1_us)},
                          {"T2_us", inf_as_null(p.T2_us)},
                          {"readout_p01", p.readout_p01},
                          {"readout_p10", p.readout_p10}});
    }
    doc["qubits"] = qubits;
    json durations = json::array();
    for (const auto& d : s.durations) {
        durations.push_back({{"gate", d.gate}, {"qubits", d.qubits}, {"duration_dt", d.duration_dt}});
    }
    doc["durations"] = durations;
    doc["estimated"] = s.estimated;
    return doc;
}

DeviceSnapshot make_linear_snapshot(unsigned n_qubits, QubitProperties props, std::int64_t measure_dt) {
    DeviceSpec spec;
    spec.name = "linear-" + std::to_string(n_qubits);
    spec.n_qubits = n_qubits;
    spec.basis_gates = {"rz", "sx", "x", "cx"};
    spec.qubits.assign(n_qubits, props);
    const std::int64_t one_q = std::llround(kMeanSingleQubitGateNs / spec.dt_ns);
    const std::int64_t two_q = std::llround(kMeanCnotNs / spec.dt_ns);
    for (unsigned q = 0; q < n_qubits; ++q) {
        spec.durations.push_back({"rz", {q}, 0});
        spec.durations.push_back({"sx", {q}, one_q});
        spec.durations.push_back({"x", {q}, one_q});
        spec.durations.push_back({"measure", {q}, measure_dt});
    }
    for (unsigned q = 0; q + 1 < n_qubits; ++q) {
        spec.coupling_edges.emplace_back(q, q + 1);
        spec.coupling_edges.emplace_back(q + 1, q);
        spec.durations.push_back({"cx", {q, q + 1}, two_q});
        spec.durations.push_back({"cx", {q + 1, q}, two_q});
    }
    spec.estimated = {"durations", "qubits"};
    return DeviceSnapshot(std::move(spec));
}

}  // namespace qzeno
