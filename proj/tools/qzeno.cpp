// qzeno: Zeno-effect experiments from the command line.
//
//   qzeno rabi      --seed 7 --theta pi/2,pi/4 --n-max 4
//   qzeno decay     --seed 7 --T 15.8 --n 6 --t-max 10.25
//   qzeno calibrate --seed 7 --m 3 --snapshot nairobi-like
//   qzeno fit       --input out/decay_sweep.csv --n 6
//   qzeno transpile --circuit c.json --snapshot lima-like
//
// Exit status: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qzeno/error.hpp"
#include "qzeno/experiments.hpp"
#include "qzeno/io.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<unsigned> threads;
};

// Flag values that override config-file fields.
struct Overrides {
    json fields = json::object();

    template <typename T>
    void number(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<T>(flag, [this, key](const T& v) { fields[key] = v; }, help);
    }
    void text(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { fields[key] = v; }, help);
    }
    void boolean(CLI::App* app, const std::string& flag, const std::string& key, bool value, const std::string& help) {
        app->add_flag_callback(flag, [this, key, value] { fields[key] = value; }, help);
    }
    // Comma-separated numbers.
    void list(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(
            flag,
            [this, key](const std::string& v) {
                json arr = json::array();
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    try {
                        std::size_t used = 0;
                        const double x = std::stod(item, &used);
                        if (used != item.size()) throw std::invalid_argument(item);
                        if (x >= 0 && x == static_cast<double>(static_cast<std::uint64_t>(x)) &&
                            item.find_first_of(".eE") == std::string::npos) {
                            arr.push_back(static_cast<std::uint64_t>(x));
                        } else {
                            arr.push_back(x);
                        }
                    } catch (const std::exception&) {
                        throw CLI::ValidationError(key, "'" + item + "' is not a number");
                    }
                }
                fields[key] = arr;
            },
            help);
    }
};

void add_common(CLI::App* app, Common& common) {
    app->add_option("-c,--config", common.config_path, "JSON config file (schema qzeno.config/1)");
    app->add_option("-o,--out", common.out_dir, "output directory")->capture_default_str();
    app->add_option("--threads", common.threads, "worker threads (0 = all cores; default $QZENO_THREADS or 0)");
}

unsigned resolve_threads(const Common& common) {
    if (common.threads) return *common.threads;
    if (const char* env = std::getenv(std::string(qzeno::kThreadsEnv).c_str()); env && *env) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw qzeno::ConfigError(std::string(qzeno::kThreadsEnv) + ": not a number");
        }
    }
    return 0;
}

json load_config(const std::string& path, const std::string& command) {
    if (path.empty()) return json::object();
    json doc;
    try {
        doc = qzeno::read_json_file(path);
    } catch (const std::runtime_error& e) {
        throw qzeno::ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw qzeno::ConfigError("config '" + path + "': expected a JSON object");
    if (!doc.contains("schema") || doc["schema"] != qzeno::kConfigSchema) {
        throw qzeno::ConfigError("config '" + path + "': schema must be \"" + std::string(qzeno::kConfigSchema) + "\"");
    }
    if (doc.contains("command") && doc["command"] != command) {
        throw qzeno::ConfigError("config '" + path + "': written for command " + doc["command"].dump());
    }
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum Zeno effect experiments: sweeps, fits, mitigation and transpilation"};
    app.require_subcommand(1);

    Common common;
    Overrides ov;

    auto* rabi = app.add_subcommand("rabi", "Rabi survival vs number of measurements");
    add_common(rabi, common);
    ov.text(rabi, "--theta", "theta", "angles, e.g. pi/2,pi/3");
    ov.number<unsigned>(rabi, "--n-min", "n_min", "smallest N");
    ov.number<unsigned>(rabi, "--n-max", "n_max", "largest N");
    ov.number<std::uint64_t>(rabi, "--shots", "shots", "shots per circuit (default 20000)");
    ov.text(rabi, "--backend", "backend", "ideal | sampling | noisy");
    ov.text(rabi, "--snapshot", "snapshot", "device snapshot name or path (noisy backend)");
    ov.boolean(rabi, "--mitigation", "mitigation", true, "write mitigation reports (noisy backend)");
    ov.number<std::uint64_t>(rabi, "--seed", "seed", "random seed");
    ov.number<unsigned>(rabi, "--qubit", "qubit", "physical system qubit (noisy backend)");

    auto* decay = app.add_subcommand("decay", "free-decay survival vs time and Zeno-time fit");
    add_common(decay, common);
    ov.list(decay, "--t", "t_us", "observation times in us, comma-separated");
    ov.number<double>(decay, "--t-max", "t_max_us", "largest observation time in us");
    ov.number<unsigned>(decay, "--t-points", "t_points", "number of evenly spaced times up to --t-max");
    ov.number<unsigned>(decay, "--n", "n", "number of measurements N");
    ov.text(decay, "--model", "model", "pseudomode | snapshot");
    ov.number<double>(decay, "--g", "g", "pseudomode coupling in rad/us");
    ov.number<double>(decay, "--T", "T_us", "pseudomode Zeno time in us (g = 1/T)");
    ov.number<double>(decay, "--compare-T", "compare_T_us", "second Zeno time for the comparison curve");
    ov.text(decay, "--backend", "backend", "ideal | sampling (pseudomode)");
    ov.number<std::uint64_t>(decay, "--shots", "shots", "shots per circuit (default 20000)");
    ov.text(decay, "--snapshot", "snapshot", "device snapshot name or path (snapshot model)");
    ov.number<std::uint64_t>(decay, "--seed", "seed", "random seed");
    ov.number<unsigned>(decay, "--qubit", "qubit", "physical system qubit (snapshot model)");
    ov.boolean(decay, "--no-relaxation", "relaxation", false, "disable T1 relaxation");
    ov.boolean(decay, "--no-dephasing", "dephasing", false, "disable dephasing");
    ov.boolean(decay, "--no-readout", "readout", false, "disable readout error");

    auto* calibrate = app.add_subcommand("calibrate", "readout calibration and mitigation report");
    add_common(calibrate, common);
    ov.number<unsigned>(calibrate, "--m", "m", "measured qubits M (<= 7)");
    ov.text(calibrate, "--theta", "theta", "Rabi angle of the mitigated experiment (default pi/2)");
    ov.number<std::uint64_t>(calibrate, "--shots", "shots", "shots per circuit (default 20000)");
    ov.text(calibrate, "--snapshot", "snapshot", "device snapshot name or path");
    ov.number<std::uint64_t>(calibrate, "--seed", "seed", "random seed");
    ov.number<unsigned>(calibrate, "--qubit", "qubit", "physical system qubit");

    auto* fit = app.add_subcommand("fit", "fit the Zeno time to a decay sweep CSV");
    add_common(fit, common);
    ov.text(fit, "--input", "input", "sweep CSV");
    ov.number<unsigned>(fit, "--n", "n", "number of measurements N");
    ov.text(fit, "--device", "device", "device label for the report");
    ov.number<unsigned>(fit, "--qubit", "qubit", "qubit label for the report");
    ov.number<double>(fit, "--obs-time", "obs_time_us", "observation time label in us");

    auto* transpile = app.add_subcommand("transpile", "lower a circuit JSON onto a device snapshot");
    add_common(transpile, common);
    ov.text(transpile, "--circuit", "circuit", "circuit JSON (schema qzeno.circuit/1)");
    ov.text(transpile, "--snapshot", "snapshot", "device snapshot name or path");
    ov.list(transpile, "--layout", "layout", "initial physical qubit per circuit qubit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        json config = load_config(common.config_path, command);
        for (const auto& [key, value] : ov.fields.items()) config[key] = value;
        const qzeno::RunOptions options{resolve_threads(common)};
        const auto result = qzeno::run_command(command, config, common.out_dir, options);
        std::cout << result.summary << '\n';
        for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
        return 0;
    } catch (const qzeno::ConfigError& e) {
        std::cerr << "qzeno " << command << ": config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "qzeno " << command << ": " << e.what() << '\n';
        return kExitRuntime;
    }
}
