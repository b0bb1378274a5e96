#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace qzeno {

struct QubitProperties {
    double T1_us = 0.0;  // may be +inf (no relaxation)
    double T2_us = 0.0;  // may be +inf (no dephasing)
    double readout_p01 = 0.0;  // P(read 1 | state 0)
    double readout_p10 = 0.0;  // P(read 0 | state 1)

    friend bool operator==(const QubitProperties&, const QubitProperties&) = default;
};

struct GateDuration {
    std::string gate;  // op name, e.g. "cx", "sx", "measure"
    std::vector<unsigned> qubits;
    std::int64_t duration_dt = 0;

    friend bool operator==(const GateDuration&, const GateDuration&) = default;
};

using Edge = std::pair<unsigned, unsigned>;

// Plain field bundle. DeviceSnapshot validates it.
struct DeviceSpec {
    std::string name;
    unsigned n_qubits = 0;
    std::vector<Edge> coupling_edges;  // directed: (control, target) for cx/ecr
    std::vector<std::string> basis_gates;
    double dt_ns = 2.0 / 9.0;
    std::int64_t granularity_dt = 16;
    std::vector<QubitProperties> qubits;
    std::vector<GateDuration> durations;
    std::vector<std::string> estimated;  // field names whose values are not measured data

    friend bool operator==(const DeviceSpec&, const DeviceSpec&) = default;
};

// Undirected adjacency over the snapshot's directed edges.
class CouplingMap {
public:
    CouplingMap() = default;
    CouplingMap(unsigned n_qubits, std::span<const Edge> directed_edges);

    unsigned n_qubits() const noexcept { return n_qubits_; }
    bool has_directed_edge(unsigned a, unsigned b) const;
    bool adjacent(unsigned a, unsigned b) const;
    const std::vector<unsigned>& neighbors(unsigned q) const;  // sorted
    // Breadth-first distances from q; -1 when unreachable.
    std::vector<int> distances_from(unsigned q) const;

private:
    void check_qubit(unsigned q) const;
    unsigned n_qubits_ = 0;
    std::vector<std::vector<unsigned>> adj_;
    std::vector<std::vector<bool>> directed_;
};

std::vector<unsigned> neighbors(const CouplingMap& map, unsigned q);

// Minimal-length path a -> b, ties broken by the lexicographically smallest
// sequence. Throws InvalidArgument for a == b or out-of-range qubits and
// DomainError when b is unreachable.
std::vector<unsigned> shortest_path(const CouplingMap& map, unsigned a, unsigned b);

class DeviceSnapshot {
public:
    // Throws ValidationError naming the offending field path.
    explicit DeviceSnapshot(DeviceSpec spec);

    const DeviceSpec& spec() const noexcept { return spec_; }
    const std::string& name() const noexcept { return spec_.name; }
    unsigned n_qubits() const noexcept { return spec_.n_qubits; }
    double dt_ns() const noexcept { return spec_.dt_ns; }
    std::int64_t granularity_dt() const noexcept { return spec_.granularity_dt; }
    const QubitProperties& qubit(unsigned q) const { return spec_.qubits.at(q); }
    const CouplingMap& coupling() const noexcept { return coupling_; }

    bool supports(std::string_view gate) const;
    std::optional<std::int64_t> duration_dt(std::string_view gate, std::span<const unsigned> qubits) const;
    // Nearest whole number of dt.
    std::int64_t ns_to_dt(double ns) const;
    double dt_to_us(std::int64_t dt) const { return static_cast<double>(dt) * spec_.dt_ns * 1e-3; }

private:
    DeviceSpec spec_;
    CouplingMap coupling_;
    std::map<std::pair<std::string, std::vector<unsigned>>, std::int64_t> durations_;
};

inline constexpr std::string_view kDeviceSchema = "qzeno.device/1";

DeviceSnapshot load_snapshot(const nlohmann::json& doc);
DeviceSnapshot load_snapshot_file(const std::filesystem::path& path);
nlohmann::json to_json(const DeviceSnapshot& device);

// Timing defaults used by the bundled snapshots.
inline constexpr double kMeanSingleQubitGateNs = 35.7;
inline constexpr double kMeanCnotNs = 300.0;

// Synthetic linear chain 0-1-...-(n-1) with uniform qubit properties and
// the mean gate durations above.
DeviceSnapshot make_linear_snapshot(unsigned n_qubits, QubitProperties props = {100.0, 100.0, 0.0, 0.0},
                                    std::int64_t measure_dt = 3200);

}  // namespace qzeno
