#include "qzeno/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <sstream>

#include "qzeno/error.hpp"
#include "qzeno/io.hpp"
#include "qzeno/transpiler.hpp"

namespace qzeno {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------- config fields

void check_keys(const json& c, std::initializer_list<std::string_view> allowed) {
    if (!c.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : c.items()) {
        if (key == "schema" || key == "command") continue;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(key + ": unknown field");
        }
    }
    if (c.contains("schema") && c["schema"] != kConfigSchema) {
        throw ConfigError("schema: expected \"" + std::string(kConfigSchema) + "\"");
    }
}

std::optional<std::uint64_t> opt_uint(const json& c, const char* key) {
    if (!c.contains(key) || c[key].is_null()) return std::nullopt;
    const json& v = c[key];
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(std::string(key) + ": expected a non-negative integer");
    }
    return c[key].get<std::uint64_t>();
}

std::optional<double> opt_real(const json& c, const char* key) {
    if (!c.contains(key) || c[key].is_null()) return std::nullopt;
    if (!c[key].is_number()) throw ConfigError(std::string(key) + ": expected a number");
    const double v = c[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError(std::string(key) + ": expected a finite number");
    return v;
}

std::optional<std::string> opt_string(const json& c, const char* key) {
    if (!c.contains(key) || c[key].is_null()) return std::nullopt;
    if (!c[key].is_string()) throw ConfigError(std::string(key) + ": expected a string");
    return c[key].get<std::string>();
}

bool get_bool(const json& c, const char* key, bool def) {
    if (!c.contains(key) || c[key].is_null()) return def;
    if (!c[key].is_boolean()) throw ConfigError(std::string(key) + ": expected true or false");
    return c[key].get<bool>();
}

unsigned get_count(const json& c, const char* key, unsigned def, unsigned lo, unsigned hi) {
    const std::uint64_t v = opt_uint(c, key).value_or(def);
    if (v < lo || v > hi) {
        throw ConfigError(std::string(key) + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    return static_cast<unsigned>(v);
}

std::uint64_t get_shots(const json& c) {
    const std::uint64_t shots = opt_uint(c, "shots").value_or(kDefaultShots);
    if (shots == 0) throw ConfigError("shots: must be >= 1");
    return shots;
}

std::uint64_t require_seed(const json& c) {
    const auto seed = opt_uint(c, "seed");
    if (!seed) throw ConfigError("seed: required for sampling runs");
    return *seed;
}

std::vector<double> get_angles(const json& c, const char* key, std::vector<double> def) {
    if (!c.contains(key) || c[key].is_null()) return def;
    const json& v = c[key];
    std::vector<double> out;
    try {
        if (v.is_array()) {
            for (const json& a : v) out.push_back(parse_angle(a));
        } else if (v.is_string() && v.get<std::string>().find(',') != std::string::npos) {
            std::stringstream ss(v.get<std::string>());
            std::string part;
            while (std::getline(ss, part, ',')) out.push_back(parse_angle(std::string_view(part)));
        } else {
            out.push_back(parse_angle(v));
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
    if (out.empty()) throw ConfigError(std::string(key) + ": empty list");
    return out;
}

// ---------------------------------------------------------------- helpers

std::vector<unsigned> measured_qubits(const Circuit& c) {
    std::vector<unsigned> q(c.n_clbits(), 0);
    for (const Instruction& i : c.instructions()) {
        if (i.kind == OpKind::Measure) q[static_cast<std::size_t>(i.clbit)] = i.qubits[0];
    }
    return q;
}

std::vector<unsigned> ancilla_bits(unsigned n) {
    std::vector<unsigned> bits;
    for (unsigned k = 1; k <= n; ++k) bits.push_back(k);
    return bits;
}

json distribution_json(std::span<const double> p) { return json(std::vector<double>(p.begin(), p.end())); }

std::string csv_cell(double x) { return std::isfinite(x) ? format_real(x) : ""; }

}  // namespace

// ---------------------------------------------------------------- public helpers

double parse_angle(std::string_view text) {
    std::string s;
    for (char ch : text) {
        if (!std::isspace(static_cast<unsigned char>(ch))) s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (s.empty()) throw InvalidArgument("empty angle");
    double sign = 1.0;
    std::size_t pos = 0;
    if (s[0] == '-' || s[0] == '+') {
        sign = s[0] == '-' ? -1.0 : 1.0;
        pos = 1;
    }
    auto number = [&](double& out) {
        const char* begin = s.data() + pos;
        const auto res = std::from_chars(begin, s.data() + s.size(), out);
        if (res.ec != std::errc{}) return false;
        pos += static_cast<std::size_t>(res.ptr - begin);
        return true;
    };
    double value = 1.0;
    bool have_number = number(value);
    bool have_pi = false;
    if (have_number && pos < s.size() && s[pos] == '*') ++pos;
    if (s.compare(pos, 2, "pi") == 0) {
        have_pi = true;
        pos += 2;
    }
    if (!have_number && !have_pi) throw InvalidArgument("cannot parse angle '" + std::string(text) + "'");
    if (have_pi) value *= kPi;
    if (pos < s.size() && s[pos] == '/') {
        ++pos;
        double den = 0.0;
        if (!number(den) || den == 0.0) throw InvalidArgument("bad denominator in angle '" + std::string(text) + "'");
        value /= den;
    }
    if (pos != s.size()) throw InvalidArgument("trailing characters in angle '" + std::string(text) + "'");
    return sign * value;
}

double parse_angle(const nlohmann::json& value) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) return parse_angle(std::string_view(value.get_ref<const std::string&>()));
    throw InvalidArgument("angle must be a number or a string such as \"pi/2\"");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

fs::path snapshot_dir() {
    if (const char* env = std::getenv(std::string(kSnapshotDirEnv).c_str()); env && *env) return fs::path(env);
    return fs::path(QZENO_DEFAULT_SNAPSHOT_DIR);
}

DeviceSnapshot resolve_snapshot(const std::string& name_or_path) {
    fs::path path(name_or_path);
    if (!fs::is_regular_file(path)) {
        const fs::path bundled = snapshot_dir() / (name_or_path + ".json");
        if (path.has_parent_path() || path.has_extension() || !fs::is_regular_file(bundled)) {
            throw ConfigError("snapshot: no such file '" + name_or_path + "' (also looked for '" + bundled.string() +
                              "')");
        }
        path = bundled;
    }
    try {
        return load_snapshot_file(path);
    } catch (const ValidationError& e) {
        throw ConfigError("snapshot '" + path.string() + "': " + e.what());
    }
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << kSweepHeader << '\n';
    for (const SweepRow& r : rows) {
        out << r.experiment << ',' << format_real(r.theta_or_t) << ',' << r.n << ',' << r.shots << ','
            << format_real(r.p) << ',' << format_real(r.std_error) << ',' << csv_cell(r.p_theory) << ','
            << format_real(r.p_marginal) << '\n';
    }
    return out.str();
}

std::vector<SweepRow> sweep_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) {
        throw ValidationError("header", "expected '" + std::string(kSweepHeader) + "'");
    }
    std::vector<SweepRow> rows;
    for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        const std::string where = "line " + std::to_string(lineno);
        if (cells.size() != 8) throw ValidationError(where, "expected 8 columns");
        try {
            SweepRow r;
            r.experiment = cells[0];
            r.theta_or_t = std::stod(cells[1]);
            r.n = static_cast<unsigned>(std::stoul(cells[2]));
            r.shots = std::stoull(cells[3]);
            r.p = std::stod(cells[4]);
            r.std_error = std::stod(cells[5]);
            r.p_theory = cells[6].empty() ? std::nan("") : std::stod(cells[6]);
            r.p_marginal = std::stod(cells[7]);
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw ValidationError(where, "malformed number");
        }
    }
    return rows;
}

CalibrationMatrix calibrate_device(const NoiseModel& noise, std::span<const unsigned> qubits, std::uint64_t shots,
                                   std::uint64_t seed, RunOptions options) {
    const auto circuits = build_calibration_circuits(qubits, noise.device.n_qubits());
    std::vector<CountsHistogram> hists;
    hists.reserve(circuits.size());
    for (std::size_t j = 0; j < circuits.size(); ++j) {
        const Circuit lowered = decompose_single_qubit(circuits[j], noise.device);
        hists.push_back(run_noisy(lowered, noise, shots, derive_seed(seed, j), options).counts);
    }
    return assemble_matrix(hists);
}

nlohmann::json mitigation_report(const CalibrationMatrix& a, std::span<const double> ideal,
                                 const CountsHistogram& raw, unsigned system_bit, int target,
                                 std::span<const unsigned> record_bits) {
    const auto raw_p = raw.frequencies();
    const InverseMitigation inv = mitigate_inverse(a, raw_p);
    const ProbabilityDistribution con = mitigate_constrained(a, raw_p);
    const FidelityResult f_raw = fidelity(raw_p, ideal);
    const FidelityResult f_inv = fidelity(inv.quasi, ideal);
    const FidelityResult f_con = fidelity(con, ideal);

    auto survival = [&](std::span<const double> p, std::span<const unsigned> record) {
        // Quasi-probabilities may push the sum outside [0, 1]; report it unclamped.
        const std::uint64_t mask = [&] {
            std::uint64_t m = std::uint64_t{1} << system_bit;
            for (unsigned b : record) m |= std::uint64_t{1} << b;
            return m;
        }();
        const std::uint64_t want = target ? mask : 0;
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if ((i & mask) == want) s += p[i];
        }
        return s;
    };
    json surv, surv_marginal;
    const std::pair<const char*, std::span<const double>> series[] = {
        {"ideal", ideal}, {"raw", raw_p}, {"inverse", inv.quasi}, {"constrained", con}};
    for (const auto& [name, p] : series) {
        surv[name] = survival(p, record_bits);
        surv_marginal[name] = survival(p, {});
    }
    return {{"schema", "qzeno.mitigation/1"},
            {"shots", raw.shots},
            {"condition_number", inv.condition_number},
            {"distributions",
             {{"ideal", distribution_json(ideal)},
              {"raw", distribution_json(raw_p)},
              {"inverse", distribution_json(inv.quasi)},
              {"constrained", distribution_json(con)}}},
            {"fidelity", {{"raw", f_raw.value}, {"inverse", f_inv.value}, {"constrained", f_con.value}}},
            {"inverse_clipped_for_fidelity", f_inv.clipped},
            {"survival", surv},
            {"survival_marginal", surv_marginal}};
}

// ---------------------------------------------------------------- rabi

CommandResult run_rabi(const json& c, const fs::path& out_dir, RunOptions options) {
    check_keys(c, {"theta", "n_min", "n_max", "shots", "backend", "snapshot", "mitigation", "seed", "qubit"});
    const auto thetas = get_angles(c, "theta", {kPi / 2, kPi / 3, kPi / 4, kPi / 5, kPi / 6});
    for (double th : thetas) {
        if (!(th >= 0.0 && th <= 2.0 * kPi)) throw ConfigError("theta: values must lie in [0, 2 pi]");
    }
    const unsigned n_min = get_count(c, "n_min", 0, 0, kMaxAncillas);
    const unsigned n_max = get_count(c, "n_max", kMaxAncillas, 0, kMaxAncillas);
    if (n_min > n_max) throw ConfigError("n_min: exceeds n_max");
    const std::uint64_t shots = get_shots(c);
    const std::string backend = opt_string(c, "backend").value_or("sampling");
    if (backend != "ideal" && backend != "sampling" && backend != "noisy") {
        throw ConfigError("backend: expected ideal, sampling or noisy");
    }
    const bool mitigation = get_bool(c, "mitigation", false);
    if (mitigation && backend != "noisy") throw ConfigError("mitigation: requires the noisy backend");
    const std::uint64_t seed = backend == "ideal" ? opt_uint(c, "seed").value_or(0) : require_seed(c);
    std::optional<NoiseModel> noise;
    if (backend == "noisy") noise.emplace(resolve_snapshot(opt_string(c, "snapshot").value_or("nairobi-like")));
    std::optional<unsigned> qubit;
    if (const auto q = opt_uint(c, "qubit")) qubit = static_cast<unsigned>(*q);

    CommandResult result;
    std::vector<SweepRow> rows;
    std::map<unsigned, CalibrationMatrix> calibrations;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        for (unsigned n = n_min; n <= n_max; ++n) {
            const Circuit circuit = build_rabi_circuit({thetas[i], n, shots});
            const auto record = ancilla_bits(n);
            const IdealResult ideal = run_ideal(circuit);
            SweepRow row{"rabi", thetas[i], n, shots};
            row.p_theory = n == 0 ? std::pow(std::cos(thetas[i] / 2), 2) : theory_rabi(thetas[i], n);
            if (backend == "ideal") {
                const auto s = survival_probability(ideal.distribution, 0, 0, record, shots);
                row.p = s.p;
                row.std_error = s.std_error;
                row.p_marginal = survival_probability(ideal.distribution, 0, 0, {}, shots).p;
            } else {
                CountsHistogram hist;
                if (backend == "sampling") {
                    hist = run_sampling(circuit, shots, derive_seed(seed, i, n), options);
                } else {
                    const auto layout = decay_layout(noise->device, n, qubit);
                    const LoweredCircuit lowered = lower(circuit, noise->device, layout);
                    hist = run_noisy(lowered.circuit, *noise, shots, derive_seed(seed, i, n), options).counts;
                    if (mitigation) {
                        const auto phys = measured_qubits(lowered.circuit);
                        auto it = calibrations.find(n);
                        if (it == calibrations.end()) {
                            it = calibrations
                                     .emplace(n, calibrate_device(*noise, phys, shots,
                                                                  derive_seed(seed, 0xCA1B, n), options))
                                     .first;
                        }
                        json report = mitigation_report(it->second, ideal.distribution, hist, 0, 0, record);
                        report["experiment"] = "rabi";
                        report["theta"] = thetas[i];
                        report["N"] = n;
                        report["qubits"] = phys;
                        report["device"] = noise->device.name();
                        const fs::path file =
                            out_dir / "mitigation" / ("rabi_theta" + std::to_string(i) + "_N" + std::to_string(n) + ".json");
                        write_json_file(file, report);
                        result.files.push_back(file);
                    }
                }
                const auto s = survival_probability(hist, 0, 0, record);
                row.p = s.p;
                row.std_error = s.std_error;
                row.p_marginal = survival_probability(hist, 0, 0).p;
            }
            rows.push_back(row);
        }
    }
    const fs::path csv = out_dir / "rabi_sweep.csv";
    write_text_file(csv, sweep_csv(rows));
    result.files.insert(result.files.begin(), csv);
    result.summary = "rabi: " + std::to_string(rows.size()) + " points, backend " + backend +
                     (backend == "ideal" ? "" : ", seed " + std::to_string(seed));
    return result;
}

// ---------------------------------------------------------------- decay

namespace {

std::vector<double> get_t_grid(const json& c) {
    if (c.contains("t_us") && !c["t_us"].is_null()) {
        if (!c["t_us"].is_array()) throw ConfigError("t_us: expected an array of times");
        std::vector<double> ts;
        for (const json& v : c["t_us"]) {
            if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("t_us: times must be positive numbers");
            ts.push_back(v.get<double>());
        }
        if (ts.empty()) throw ConfigError("t_us: zero-length t grid");
        return ts;
    }
    const auto t_max = opt_real(c, "t_max_us");
    if (!t_max) throw ConfigError("t_us: give either t_us or t_max_us");
    if (!(*t_max > 0.0)) throw ConfigError("t_max_us: must be positive");
    const unsigned points = get_count(c, "t_points", 5, 0, 1000);
    if (points == 0) throw ConfigError("t_points: zero-length t grid");
    std::vector<double> ts;
    for (unsigned k = 1; k <= points; ++k) ts.push_back(*t_max * k / points);
    return ts;
}

json fit_json(const std::string& device, unsigned qubit, double obs_time_us, unsigned n, const ZenoFit& fit) {
    return {{"schema", "qzeno.fit/1"}, {"device", device},         {"qubit", qubit},
            {"obs_time_us", obs_time_us}, {"T_us", fit.T_us},      {"sigma_us", fit.sigma_us},
            {"residual_norm", fit.residual_norm}, {"N", n},        {"iterations", fit.iterations}};
}

std::vector<SurvivalPoint> points_of(const std::vector<SweepRow>& rows) {
    std::vector<SurvivalPoint> pts;
    for (const SweepRow& r : rows) pts.push_back({r.theta_or_t, r.n, r.p, r.std_error});
    return pts;
}

}  // namespace

CommandResult run_decay(const json& c, const fs::path& out_dir, RunOptions options) {
    check_keys(c, {"t_us", "t_max_us", "t_points", "n", "model", "g", "T_us", "compare_T_us", "backend", "shots",
                   "snapshot", "seed", "qubit", "relaxation", "dephasing", "readout"});
    const auto ts = get_t_grid(c);
    const unsigned n = get_count(c, "n", 6, 1, kMaxAncillas);
    const std::string model = opt_string(c, "model").value_or("pseudomode");
    const std::uint64_t shots = get_shots(c);
    const auto compare_T = opt_real(c, "compare_T_us");
    if (compare_T && !(*compare_T > 0.0)) throw ConfigError("compare_T_us: must be positive");

    std::vector<SweepRow> rows;
    std::string device_name = "pseudomode";
    unsigned system_qubit = 0;
    std::optional<double> reference_T;
    std::uint64_t seed = 0;
    std::string backend;

    if (model == "pseudomode") {
        const auto g = opt_real(c, "g");
        const auto T = opt_real(c, "T_us");
        if (g.has_value() == T.has_value()) throw ConfigError("g: give exactly one of g or T_us for the pseudomode model");
        const double coupling = g ? *g : 1.0 / *T;
        if (!(coupling > 0.0)) throw ConfigError(g ? "g: must be positive" : "T_us: must be positive");
        backend = opt_string(c, "backend").value_or("sampling");
        if (backend != "ideal" && backend != "sampling") throw ConfigError("backend: expected ideal or sampling");
        seed = backend == "ideal" ? opt_uint(c, "seed").value_or(0) : require_seed(c);
        reference_T = 1.0 / coupling;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const DecayCircuit dc = build_decay_circuit({ts[i], n, PseudomodeModel{coupling}, shots});
            SweepRow row{"decay", ts[i], n, shots};
            row.p_theory = ts[i] < n * *reference_T ? theory_decay(ts[i], n, *reference_T) : 0.0;
            const IdealResult ideal = run_ideal(dc.circuit);
            if (backend == "ideal") {
                const auto s = survival_probability(ideal.distribution, 0, 1, dc.record_clbits, shots);
                row.p = s.p;
                row.std_error = s.std_error;
                row.p_marginal = survival_probability(ideal.distribution, 0, 1, {}, shots).p;
            } else {
                const auto hist = sample_counts(ideal.distribution, dc.circuit.n_clbits(), shots,
                                                derive_seed(seed, i, n), options);
                const auto s = survival_probability(hist, 0, 1, dc.record_clbits);
                row.p = s.p;
                row.std_error = s.std_error;
                row.p_marginal = survival_probability(hist, 0, 1).p;
            }
            rows.push_back(row);
        }
    } else if (model == "snapshot") {
        if (c.contains("g") || c.contains("T_us")) throw ConfigError("g: only meaningful for the pseudomode model");
        backend = "noisy";
        seed = require_seed(c);
        NoiseModel noise(resolve_snapshot(opt_string(c, "snapshot").value_or("nairobi-like")));
        noise.relaxation = get_bool(c, "relaxation", true);
        noise.dephasing = get_bool(c, "dephasing", true);
        noise.readout = get_bool(c, "readout", true);
        device_name = noise.device.name();
        SnapshotNoiseModel snap;
        if (const auto q = opt_uint(c, "qubit")) snap.system_qubit = static_cast<unsigned>(*q);
        system_qubit = decay_layout(noise.device, n, snap.system_qubit).front();
        const double T1 = noise.device.qubit(system_qubit).T1_us;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const DecayCircuit dc = build_decay_circuit({ts[i], n, snap, shots}, noise.device);
            SweepRow row{"decay", ts[i], n, shots};
            row.p_theory = noise.relaxation && std::isfinite(T1) ? std::exp(-ts[i] / T1) : 1.0;
            const auto hist = run_noisy(dc.circuit, noise, shots, derive_seed(seed, i, n), options).counts;
            const auto s = survival_probability(hist, 0, 1, dc.record_clbits);
            row.p = s.p;
            row.std_error = s.std_error;
            row.p_marginal = survival_probability(hist, 0, 1).p;
            rows.push_back(row);
        }
    } else {
        throw ConfigError("model: expected pseudomode or snapshot");
    }

    CommandResult result;
    const fs::path csv = out_dir / "decay_sweep.csv";
    write_text_file(csv, sweep_csv(rows));
    result.files.push_back(csv);

    const double t_max = *std::max_element(ts.begin(), ts.end());
    const auto pts = points_of(rows);
    const ZenoFit fit = fit_zeno_time(pts, n);
    const fs::path fit_file = out_dir / "zeno_fit.json";
    write_json_file(fit_file, fit_json(device_name, system_qubit, t_max, n, fit));
    result.files.push_back(fit_file);

    const double T_ref = compare_T ? *compare_T : reference_T ? *reference_T : fit.T_us + fit.sigma_us;
    std::ostringstream curves;
    curves << "t_us,N,T_fit_us,p_fit,T_ref_us,p_ref\n";
    constexpr unsigned kCurvePoints = 100;
    for (unsigned k = 0; k <= kCurvePoints; ++k) {
        const double t = t_max * k / kCurvePoints;
        auto eval = [&](double T) { return t < n * T ? format_real(theory_decay(t, n, T)) : std::string(); };
        curves << format_real(t) << ',' << n << ',' << format_real(fit.T_us) << ',' << eval(fit.T_us) << ','
               << format_real(T_ref) << ',' << eval(T_ref) << '\n';
    }
    const fs::path curve_file = out_dir / "decay_curves.csv";
    write_text_file(curve_file, curves.str());
    result.files.push_back(curve_file);

    std::ostringstream summary;
    summary << "decay: " << rows.size() << " points, model " << model << ", backend " << backend
            << "; T = " << format_real(fit.T_us) << " +/- " << format_real(fit.sigma_us) << " us";
    result.summary = summary.str();
    return result;
}

// ---------------------------------------------------------------- calibrate

CommandResult run_calibrate(const json& c, const fs::path& out_dir, RunOptions options) {
    check_keys(c, {"m", "theta", "shots", "snapshot", "seed", "qubit"});
    const std::uint64_t m = opt_uint(c, "m").value_or(3);
    if (m == 0) throw ConfigError("m: must be >= 1");
    if (m > kMaxCalibrationQubits) {
        throw ConfigError("m: " + std::to_string(m) + " exceeds the calibration size limit of " +
                          std::to_string(kMaxCalibrationQubits));
    }
    double theta = kPi / 2;
    if (c.contains("theta")) {
        try {
            theta = parse_angle(c["theta"]);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("theta: ") + e.what());
        }
    }
    const std::uint64_t shots = get_shots(c);
    const std::uint64_t seed = require_seed(c);
    const NoiseModel noise(resolve_snapshot(opt_string(c, "snapshot").value_or("nairobi-like")));
    std::optional<unsigned> qubit;
    if (const auto q = opt_uint(c, "qubit")) qubit = static_cast<unsigned>(*q);

    const auto n = static_cast<unsigned>(m - 1);
    const Circuit circuit = build_rabi_circuit({theta, n, shots});
    const LoweredCircuit lowered = lower(circuit, noise.device, decay_layout(noise.device, n, qubit));
    const auto phys = measured_qubits(lowered.circuit);
    const CalibrationMatrix a = calibrate_device(noise, phys, shots, derive_seed(seed, 0xCA1B, n), options);
    const CountsHistogram hist = run_noisy(lowered.circuit, noise, shots, derive_seed(seed, 0, n), options).counts;
    const IdealResult ideal = run_ideal(circuit);

    json report = mitigation_report(a, ideal.distribution, hist, 0, 0, ancilla_bits(n));
    report["experiment"] = "rabi";
    report["theta"] = theta;
    report["N"] = n;
    report["qubits"] = phys;
    report["device"] = noise.device.name();

    CommandResult result;
    const fs::path cal = out_dir / "calibration.csv";
    write_text_file(cal, calibration_csv(a));
    const fs::path rep = out_dir / "mitigation_report.json";
    write_json_file(rep, report);
    result.files = {cal, rep};
    std::ostringstream summary;
    summary << "calibrate: M=" << m << " on " << noise.device.name() << ", condition number "
            << format_real(report["condition_number"].get<double>()) << "; fidelity raw "
            << format_real(report["fidelity"]["raw"].get<double>()) << ", inverse "
            << format_real(report["fidelity"]["inverse"].get<double>()) << ", constrained "
            << format_real(report["fidelity"]["constrained"].get<double>());
    result.summary = summary.str();
    return result;
}

// ---------------------------------------------------------------- fit

CommandResult run_fit(const json& c, const fs::path& out_dir) {
    check_keys(c, {"input", "n", "device", "qubit", "obs_time_us"});
    const auto input = opt_string(c, "input");
    if (!input) throw ConfigError("input: sweep CSV path required");
    if (!fs::is_regular_file(*input)) throw ConfigError("input: no such file '" + *input + "'");
    const unsigned n = get_count(c, "n", 6, 1, 1000);
    std::vector<SweepRow> rows;
    try {
        rows = sweep_from_csv(read_text_file(*input));
    } catch (const ValidationError& e) {
        throw ConfigError("input '" + *input + "': " + e.what());
    }
    std::erase_if(rows, [&](const SweepRow& r) { return r.n != n; });
    if (rows.empty()) throw ConfigError("n: no rows with N=" + std::to_string(n) + " in '" + *input + "'");
    double t_max = 0.0;
    for (const SweepRow& r : rows) t_max = std::max(t_max, r.theta_or_t);

    const ZenoFit fit = fit_zeno_time(points_of(rows), n);
    const fs::path file = out_dir / "zeno_fit.json";
    write_json_file(file, fit_json(opt_string(c, "device").value_or("unknown"),
                                   static_cast<unsigned>(opt_uint(c, "qubit").value_or(0)),
                                   opt_real(c, "obs_time_us").value_or(t_max), n, fit));
    return {{file}, "fit: T = " + format_real(fit.T_us) + " +/- " + format_real(fit.sigma_us) + " us over " +
                        std::to_string(rows.size()) + " points"};
}

// ---------------------------------------------------------------- transpile

CommandResult run_transpile(const json& c, const fs::path& out_dir) {
    check_keys(c, {"circuit", "snapshot", "layout"});
    const auto path = opt_string(c, "circuit");
    if (!path) throw ConfigError("circuit: circuit JSON path required");
    if (!fs::is_regular_file(*path)) throw ConfigError("circuit: no such file '" + *path + "'");
    const DeviceSnapshot device = resolve_snapshot(opt_string(c, "snapshot").value_or("nairobi-like"));
    Circuit circuit;
    try {
        circuit = circuit_from_json(read_json_file(*path));
    } catch (const ValidationError& e) {
        throw ConfigError("circuit '" + *path + "': " + e.what());
    } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("circuit: ") + e.what());
    }
    std::optional<Layout> layout;
    if (c.contains("layout") && !c["layout"].is_null()) {
        if (!c["layout"].is_array()) throw ConfigError("layout: expected an array of physical qubits");
        layout.emplace();
        for (const json& v : c["layout"]) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0) throw ConfigError("layout: expected non-negative integers");
            layout->push_back(v.get<unsigned>());
        }
    }
    LoweredCircuit lowered;
    try {
        lowered = lower(circuit, device, layout);
    } catch (const InvalidArgument& e) {
        // Layout or size mismatch between the circuit and the chosen device.
        throw ConfigError(std::string("circuit on '") + device.name() + "': " + e.what());
    }
    const fs::path file = out_dir / "lowered.json";
    write_json_file(file, to_json(lowered));
    return {{file}, "transpile: " + std::to_string(lowered.circuit.size()) + " instructions, total " +
                        std::to_string(lowered.schedule.total_duration_dt) + " dt, delay rounding " +
                        std::to_string(lowered.delays.total_error_dt()) + " dt"};
}

CommandResult run_command(const std::string& command, const json& config, const fs::path& out_dir,
                          RunOptions options) {
    if (command == "rabi") return run_rabi(config, out_dir, options);
    if (command == "decay") return run_decay(config, out_dir, options);
    if (command == "calibrate") return run_calibrate(config, out_dir, options);
    if (command == "fit") return run_fit(config, out_dir);
    if (command == "transpile") return run_transpile(config, out_dir);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace qzeno
