#pragma once

// Experiment sweeps behind the command-line front end. Each command takes a
// JSON config (schema "qzeno.config/1"), writes its files under an output
// directory and returns their paths.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qzeno/device.hpp"
#include "qzeno/mitigation.hpp"
#include "qzeno/simulator.hpp"
#include "qzeno/zeno.hpp"

namespace qzeno {

inline constexpr std::string_view kConfigSchema = "qzeno.config/1";
inline constexpr std::string_view kSnapshotDirEnv = "QZENO_SNAPSHOT_DIR";
inline constexpr std::string_view kThreadsEnv = "QZENO_THREADS";

// Bad or missing configuration; the CLI exits with status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Accepts a number or an expression such as "pi/2", "-2*pi/3", "0.25".
double parse_angle(const nlohmann::json& value);
double parse_angle(std::string_view text);

// Independent stream seed for item (a, b) of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// $QZENO_SNAPSHOT_DIR, else the directory compiled into the library.
std::filesystem::path snapshot_dir();
// A path to an existing file, or a bundled name such as "nairobi-like".
// Throws ConfigError naming what was looked up.
DeviceSnapshot resolve_snapshot(const std::string& name_or_path);

struct SweepRow {
    std::string experiment;  // "rabi" or "decay"
    double theta_or_t = 0.0;
    unsigned n = 0;
    std::uint64_t shots = 0;
    double p = 0.0;  // survival through every measurement
    double std_error = 0.0;
    double p_theory = 0.0;
    double p_marginal = 0.0;  // system qubit alone
};

inline constexpr std::string_view kSweepHeader = "experiment,theta_or_t,N,shots,p,stderr,p_theory,p_marginal";
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_csv(const std::string& text);

// Calibration matrix for `qubits` (clbit k reads qubits[k]) measured on the
// noisy backend.
CalibrationMatrix calibrate_device(const NoiseModel& noise, std::span<const unsigned> qubits, std::uint64_t shots,
                                   std::uint64_t seed, RunOptions options = {});

// Raw, inverse- and constrained-mitigated distributions with fidelities and
// survival probabilities against `ideal`.
nlohmann::json mitigation_report(const CalibrationMatrix& a, std::span<const double> ideal,
                                 const CountsHistogram& raw, unsigned system_bit, int target,
                                 std::span<const unsigned> record_bits);

struct CommandResult {
    std::vector<std::filesystem::path> files;
    std::string summary;  // human-readable, printed by the CLI
};

// `config` carries the command's fields (flags already merged). Throws
// ConfigError for invalid fields; other exceptions are runtime failures.
CommandResult run_rabi(const nlohmann::json& config, const std::filesystem::path& out_dir, RunOptions options);
CommandResult run_decay(const nlohmann::json& config, const std::filesystem::path& out_dir, RunOptions options);
CommandResult run_calibrate(const nlohmann::json& config, const std::filesystem::path& out_dir, RunOptions options);
CommandResult run_fit(const nlohmann::json& config, const std::filesystem::path& out_dir);
CommandResult run_transpile(const nlohmann::json& config, const std::filesystem::path& out_dir);

CommandResult run_command(const std::string& command, const nlohmann::json& config,
                          const std::filesystem::path& out_dir, RunOptions options);

}  // namespace qzeno
