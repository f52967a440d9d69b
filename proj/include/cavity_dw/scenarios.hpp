#pragma once

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cavity_dw/errors.hpp"
#include "cavity_dw/gpe.hpp"
#include "cavity_dw/grid.hpp"
#include "cavity_dw/two_mode.hpp"
#include "cavity_dw/units.hpp"
#include "cavity_dw/variational.hpp"

namespace cavity_dw {

inline constexpr const char* kArtifactVersion = "1.0.0";

enum class ScenarioKind { ground_sweep, dynamics, ramp_up, ramp_down, two_mode_cr };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::ground_sweep: return "ground_sweep";
        case ScenarioKind::dynamics: return "dynamics";
        case ScenarioKind::ramp_up: return "ramp_up";
        case ScenarioKind::ramp_down: return "ramp_down";
        case ScenarioKind::two_mode_cr: return "two_mode_cr";
    }
    return "?";
}

inline std::optional<ScenarioKind> scenario_from_string(const std::string& s) {
    for (auto k : {ScenarioKind::ground_sweep, ScenarioKind::dynamics, ScenarioKind::ramp_up, ScenarioKind::ramp_down,
                   ScenarioKind::two_mode_cr}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

inline std::vector<std::string> scenario_names() {
    return {"ground_sweep", "dynamics", "ramp_up", "ramp_down", "two_mode_cr"};
}

struct GridSettings {
    std::size_t n_points = 1024;
    double x_max = 12.0;
};

struct TimeSettings {
    std::optional<double> t_final;
    double dt = 5e-4;
    double snapshot_every = 0.0;
    std::size_t sample_every = 20;
};

struct InitialState {
    enum class Kind { ground, right_mode, gaussian } kind = Kind::ground;
    double center = 2.0;
    double width = 1.0;
};

struct SweepSettings {
    double eta_start = 0.0;
    double eta_end = 0.0;
    std::size_t n_points = 0;
    bool log_spacing = false;
    std::optional<double> duration;
};

struct TwoModeSettings {
    double n_bar = 0.0;
    std::optional<double> t_final;  // default: revival_span * T_r
    double revival_span = 2.5;
    std::size_t n_samples = 4001;
    std::optional<int> n_max;
    InitialWell well = InitialWell::right;
};

struct ScenarioConfig {
    ScenarioKind scenario = ScenarioKind::dynamics;
    ModelParams params;
    PhysicalScales scales;
    GridSettings grid;
    TimeSettings time;
    InitialState initial_state;
    SweepSettings sweep;
    TwoModeSettings two_mode;
    SeedGrid seed_grid = SeedGrid::coarse;
    std::string output_dir;
    nlohmann::json source;
};

struct ConfigValidation {
    std::optional<ScenarioConfig> config;
    std::vector<std::string> errors;
    bool ok() const { return config.has_value(); }
};

class ConfigError : public InvalidArgument {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : InvalidArgument(join(errors)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& e) {
        std::string s;
        for (const auto& x : e) s += (s.empty() ? "" : "; ") + x;
        return s;
    }
    std::vector<std::string> errors_;
};

namespace detail {

using nlohmann::json;

class ConfigReader {
public:
    std::vector<std::string> errors;
    PhysicalScales scales;

    void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key())) error(join(path, it.key()), "unknown key");
        }
    }

    const json* object(const json& parent, const std::string& key, const std::string& path, bool required) {
        const std::string p = join(path, key);
        if (!parent.contains(key)) {
            if (required) error(p, "missing required field");
            return nullptr;
        }
        const json& v = parent.at(key);
        if (!v.is_object()) {
            error(p, "expected an object");
            return nullptr;
        }
        return &v;
    }

    std::optional<double> number(const json& parent, const std::string& key, const std::string& path,
                                 bool required) {
        const std::string p = join(path, key);
        if (!parent.contains(key)) {
            if (required) error(p, "missing required field");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_number()) {
            error(p, "expected a number");
            return std::nullopt;
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            error(p, "must be finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<std::size_t> count(const json& parent, const std::string& key, const std::string& path,
                                     bool required) {
        const std::string p = join(path, key);
        if (!parent.contains(key)) {
            if (required) error(p, "missing required field");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            error(p, "expected a non-negative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(v.get<long long>());
    }

    std::optional<std::string> string(const json& parent, const std::string& key, const std::string& path,
                                      bool required) {
        const std::string p = join(path, key);
        if (!parent.contains(key)) {
            if (required) error(p, "missing required field");
            return std::nullopt;
        }
        if (!parent.at(key).is_string()) {
            error(p, "expected a string");
            return std::nullopt;
        }
        return parent.at(key).get<std::string>();
    }

    // Rate: plain number in units of omega, or {"value": v, "unit": "kappa" | "omega"}.
    std::optional<double> rate(const json& parent, const std::string& key, const std::string& path, bool required) {
        return quantity(parent, key, path, required, {{"omega", 1.0}, {"kappa", scales.omega_ratio}});
    }

    // Length: plain number in a_ho, or {"value": v, "unit": "a_ho" | "um"}.
    std::optional<double> length(const json& parent, const std::string& key, const std::string& path,
                                 bool required) {
        return quantity(parent, key, path, required, {{"a_ho", 1.0}, {"um", scales.meters_to_length(1e-6)}});
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    std::optional<double> quantity(const json& parent, const std::string& key, const std::string& path,
                                   bool required, const std::map<std::string, double>& units) {
        const std::string p = join(path, key);
        if (!parent.contains(key)) {
            if (required) error(p, "missing required field");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (v.is_number()) return number(parent, key, path, true);
        if (!v.is_object()) {
            error(p, "expected a number or {\"value\", \"unit\"}");
            return std::nullopt;
        }
        check_keys(v, p, {"value", "unit"});
        const auto value = number(v, "value", p, true);
        const auto unit = string(v, "unit", p, true);
        if (!value || !unit) return std::nullopt;
        const auto it = units.find(*unit);
        if (it == units.end()) {
            std::string allowed;
            for (const auto& [name, _] : units) allowed += (allowed.empty() ? "" : ", ") + name;
            error(join(p, "unit"), "unknown unit '" + *unit + "' (allowed: " + allowed + ")");
            return std::nullopt;
        }
        return *value * it->second;
    }
};

}  // namespace detail

// Structural and range validation. Unknown keys are errors; all problems are collected.
inline ConfigValidation validate_config(const nlohmann::json& doc) {
    detail::ConfigReader r;
    ConfigValidation out;
    if (!doc.is_object()) {
        out.errors.push_back("<root>: expected a JSON object");
        return out;
    }
    ScenarioConfig cfg;
    cfg.source = doc;
    r.check_keys(doc, "", {"scenario", "units", "params", "grid", "time", "initial_state", "sweep", "two_mode",
                           "seed_grid", "output_dir", "description"});

    std::optional<ScenarioKind> kind;
    if (const auto s = r.string(doc, "scenario", "", true)) {
        kind = scenario_from_string(*s);
        if (!kind) r.error("scenario", "unknown scenario '" + *s + "'");
    }

    if (const auto* u = r.object(doc, "units", "", false)) {
        r.check_keys(*u, "units", {"kappa_mhz", "omega_ratio", "mass_u"});
        if (auto v = r.number(*u, "kappa_mhz", "units", false)) {
            if (*v > 0.0) r.scales.kappa_rad_per_s = 2.0 * std::numbers::pi * *v * 1e6;
            else r.error("units.kappa_mhz", "must be > 0");
        }
        if (auto v = r.number(*u, "omega_ratio", "units", false)) {
            if (*v > 0.0) r.scales.omega_ratio = *v;
            else r.error("units.omega_ratio", "must be > 0");
        }
        if (auto v = r.number(*u, "mass_u", "units", false)) {
            if (*v > 0.0) r.scales.mass_kg = *v * kAtomicMassUnit;
            else r.error("units.mass_u", "must be > 0");
        }
    }
    cfg.scales = r.scales;

    const bool needs_eta = kind == ScenarioKind::dynamics || kind == ScenarioKind::two_mode_cr;
    ModelParams& p = cfg.params;
    p.kappa = r.scales.omega_ratio;
    if (const auto* o = r.object(doc, "params", "", true)) {
        r.check_keys(*o, "params",
                     {"kappa", "delta_c", "u0", "eta", "delta_x", "g_coll", "n_atoms", "barrier_offset"});
        if (auto v = r.rate(*o, "kappa", "params", false)) {
            if (*v > 0.0) p.kappa = *v;
            else r.error("params.kappa", "must be > 0");
        }
        if (auto v = r.rate(*o, "delta_c", "params", true)) p.delta_c = *v;
        if (auto v = r.rate(*o, "u0", "params", true)) p.u0 = *v;
        if (auto v = r.rate(*o, "eta", "params", needs_eta)) {
            if (*v >= 0.0) p.eta = *v;
            else r.error("params.eta", "must be >= 0");
        }
        if (auto v = r.length(*o, "delta_x", "params", true)) {
            if (*v > 0.0) p.delta_x = *v;
            else r.error("params.delta_x", "must be > 0");
        }
        if (auto v = r.number(*o, "g_coll", "params", false)) p.g_coll = *v;
        if (auto v = r.number(*o, "n_atoms", "params", kind != ScenarioKind::two_mode_cr)) {
            if (*v > 0.0) p.n_atoms = *v;
            else r.error("params.n_atoms", "must be > 0");
        }
        if (auto v = r.length(*o, "barrier_offset", "params", false)) p.barrier_offset = *v;
    }

    if (const auto* o = r.object(doc, "grid", "", false)) {
        r.check_keys(*o, "grid", {"n_points", "x_max"});
        if (auto v = r.count(*o, "n_points", "grid", false)) cfg.grid.n_points = *v;
        if (auto v = r.number(*o, "x_max", "grid", false)) cfg.grid.x_max = *v;
    }
    {
        const std::size_t n = cfg.grid.n_points;
        if (n < 256 || (n & (n - 1)) != 0) r.error("grid.n_points", "must be a power of two >= 256");
        if (!(cfg.grid.x_max >= 10.0)) r.error("grid.x_max", "must be >= 10");
        else if (n >= 256 && !(2.0 * cfg.grid.x_max / static_cast<double>(n) < 0.1))
            r.error("grid", "spacing 2*x_max/n_points must be < 0.1");
    }

    const bool needs_time = kind == ScenarioKind::dynamics;
    if (const auto* o = r.object(doc, "time", "", needs_time)) {
        r.check_keys(*o, "time", {"t_final", "dt", "snapshot_every", "sample_every"});
        if (auto v = r.number(*o, "t_final", "time", needs_time)) {
            if (*v > 0.0) cfg.time.t_final = *v;
            else r.error("time.t_final", "must be > 0");
        }
        if (auto v = r.number(*o, "dt", "time", false)) {
            if (*v > 0.0) cfg.time.dt = *v;
            else r.error("time.dt", "must be > 0");
        }
        if (auto v = r.number(*o, "snapshot_every", "time", false)) {
            if (*v >= 0.0) cfg.time.snapshot_every = *v;
            else r.error("time.snapshot_every", "must be >= 0");
        }
        if (auto v = r.count(*o, "sample_every", "time", false)) {
            if (*v > 0) cfg.time.sample_every = *v;
            else r.error("time.sample_every", "must be > 0");
        }
    }

    if (const auto* o = r.object(doc, "initial_state", "", false)) {
        r.check_keys(*o, "initial_state", {"type", "center", "width"});
        if (auto t = r.string(*o, "type", "initial_state", true)) {
            if (*t == "ground") cfg.initial_state.kind = InitialState::Kind::ground;
            else if (*t == "right_mode") cfg.initial_state.kind = InitialState::Kind::right_mode;
            else if (*t == "gaussian") cfg.initial_state.kind = InitialState::Kind::gaussian;
            else r.error("initial_state.type", "expected ground, right_mode or gaussian");
        }
        const bool gauss = cfg.initial_state.kind == InitialState::Kind::gaussian;
        if (auto v = r.length(*o, "center", "initial_state", gauss)) cfg.initial_state.center = *v;
        if (auto v = r.length(*o, "width", "initial_state", gauss)) {
            if (*v > 0.0) cfg.initial_state.width = *v;
            else r.error("initial_state.width", "must be > 0");
        }
    }

    const bool is_sweep = kind == ScenarioKind::ground_sweep;
    const bool is_ramp = kind == ScenarioKind::ramp_up || kind == ScenarioKind::ramp_down;
    if (const auto* o = r.object(doc, "sweep", "", is_sweep || is_ramp)) {
        r.check_keys(*o, "sweep", {"eta_start", "eta_end", "n_points", "spacing", "duration"});
        const auto a = r.rate(*o, "eta_start", "sweep", is_sweep || is_ramp);
        const auto b = r.rate(*o, "eta_end", "sweep", is_sweep || is_ramp);
        if (a) {
            if (*a >= 0.0) cfg.sweep.eta_start = *a;
            else r.error("sweep.eta_start", "must be >= 0");
        }
        if (b) {
            if (*b >= 0.0) cfg.sweep.eta_end = *b;
            else r.error("sweep.eta_end", "must be >= 0");
        }
        if (auto v = r.count(*o, "n_points", "sweep", is_sweep)) {
            if (*v >= 2) cfg.sweep.n_points = *v;
            else r.error("sweep.n_points", "must be >= 2");
        }
        if (auto s = r.string(*o, "spacing", "sweep", false)) {
            if (*s == "log") cfg.sweep.log_spacing = true;
            else if (*s != "linear") r.error("sweep.spacing", "expected linear or log");
        }
        if (auto v = r.number(*o, "duration", "sweep", false)) {
            if (*v > 0.0) cfg.sweep.duration = *v;
            else r.error("sweep.duration", "must be > 0");
        }
        if (a && b && is_sweep && !(*b > *a)) r.error("sweep.eta_end", "must exceed sweep.eta_start");
        if (a && b && kind == ScenarioKind::ramp_up && !(*b > *a))
            r.error("sweep.eta_end", "ramp_up needs eta_end > eta_start");
        if (a && b && kind == ScenarioKind::ramp_down && !(*b < *a))
            r.error("sweep.eta_end", "ramp_down needs eta_end < eta_start");
        if (cfg.sweep.log_spacing && a && !(*a > 0.0)) r.error("sweep.eta_start", "log spacing needs eta_start > 0");
        if (is_ramp && !cfg.sweep.duration && !cfg.time.t_final)
            r.error("sweep.duration", "missing ramp duration (sweep.duration or time.t_final)");
    }

    const bool is_cr = kind == ScenarioKind::two_mode_cr;
    if (const auto* o = r.object(doc, "two_mode", "", is_cr)) {
        r.check_keys(*o, "two_mode", {"n_bar", "t_final", "revival_span", "n_samples", "n_max", "initial_well"});
        if (auto v = r.number(*o, "n_bar", "two_mode", is_cr)) {
            if (*v >= 1.0) cfg.two_mode.n_bar = *v;
            else r.error("two_mode.n_bar", "must be >= 1");
        }
        if (auto v = r.number(*o, "t_final", "two_mode", false)) {
            if (*v > 0.0) cfg.two_mode.t_final = *v;
            else r.error("two_mode.t_final", "must be > 0");
        }
        if (auto v = r.number(*o, "revival_span", "two_mode", false)) {
            if (*v > 0.0) cfg.two_mode.revival_span = *v;
            else r.error("two_mode.revival_span", "must be > 0");
        }
        if (auto v = r.count(*o, "n_samples", "two_mode", false)) {
            if (*v >= 2) cfg.two_mode.n_samples = *v;
            else r.error("two_mode.n_samples", "must be >= 2");
        }
        if (auto v = r.count(*o, "n_max", "two_mode", false)) {
            cfg.two_mode.n_max = static_cast<int>(*v);
            if (cfg.two_mode.n_bar >= 1.0 &&
                *v < cfg.two_mode.n_bar + 10.0 * std::sqrt(cfg.two_mode.n_bar))
                r.error("two_mode.n_max", "must be >= n_bar + 10 sqrt(n_bar)");
        }
        if (auto s = r.string(*o, "initial_well", "two_mode", false)) {
            if (*s == "left") cfg.two_mode.well = InitialWell::left;
            else if (*s != "right") r.error("two_mode.initial_well", "expected left or right");
        }
    }
    if (is_cr) p.n_atoms = cfg.two_mode.n_bar >= 1.0 ? cfg.two_mode.n_bar : 1.0;

    if (auto s = r.string(doc, "seed_grid", "", false)) {
        if (*s == "fine") cfg.seed_grid = SeedGrid::fine;
        else if (*s != "coarse") r.error("seed_grid", "expected coarse or fine");
    }
    if (auto s = r.string(doc, "output_dir", "", false)) cfg.output_dir = *s;
    (void)r.string(doc, "description", "", false);

    out.errors = std::move(r.errors);
    if (out.errors.empty()) {
        cfg.scenario = *kind;
        out.config = std::move(cfg);
    }
    return out;
}

inline ConfigValidation validate_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        ConfigValidation out;
        out.errors.push_back(std::string("<root>: invalid JSON: ") + e.what());
        return out;
    }
    return validate_config(doc);
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({path.string() + ": cannot open"});
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto v = validate_config(text);
    if (!v.ok()) throw ConfigError(std::move(v.errors));
    return std::move(*v.config);
}

// ---------------------------------------------------------------------------------------------
// Output

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(const std::vector<double>& row) {
        detail::require(row.size() == header_.size(), "csv row width mismatch");
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += ',';
            line += format_double(row[i]);
        }
        lines_.push_back(std::move(line));
    }

    std::string str() const {
        std::string s;
        for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
        s += '\n';
        for (const auto& l : lines_) s += l + '\n';
        return s;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::string> lines_;
};

inline std::string sha256_hex(const std::string& data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct RunOutcome {
    std::filesystem::path output_dir;
    std::vector<std::string> files;  // relative to output_dir, manifest excluded
    std::optional<std::string> failure;
    double wall_time_s = 0.0;
    bool ok() const { return !failure; }
};

namespace detail {

class OutputSink {
public:
    explicit OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << content;
        files_.push_back(name);
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

inline std::vector<double> eta_grid(const SweepSettings& s) {
    std::vector<double> etas(s.n_points);
    for (std::size_t i = 0; i < s.n_points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(s.n_points - 1);
        etas[i] = s.log_spacing ? s.eta_start * std::pow(s.eta_end / s.eta_start, f)
                                : s.eta_start + f * (s.eta_end - s.eta_start);
    }
    return etas;
}

inline void write_propagation(OutputSink& sink, const PropagationResult& res, bool with_eta) {
    std::vector<std::string> header{"t", "Z", "n_ss", "E"};
    if (with_eta) header.push_back("eta");
    CsvTable t(header);
    for (std::size_t i = 0; i < res.times.size(); ++i) {
        std::vector<double> row{res.times[i], res.inversion[i], res.photon_number[i], res.energy[i]};
        if (with_eta) row.push_back(res.eta[i]);
        t.add(row);
    }
    sink.write("timeseries.csv", t.str());
    for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
        const auto& snap = res.snapshots[k];
        CsvTable s({"x", "abs_psi"});
        const auto amp = snap.psi.amplitude();
        for (std::size_t j = 0; j < amp.size(); ++j) s.add({snap.psi.grid().x()[j], amp[j]});
        char name[48];
        std::snprintf(name, sizeof name, "snapshot_%04zu.csv", k);
        sink.write(name, s.str());
    }
    nlohmann::json times = nlohmann::json::array();
    for (const auto& snap : res.snapshots) times.push_back(snap.time);
    if (!res.snapshots.empty()) sink.write("snapshots.json", nlohmann::json{{"times", times}}.dump(2) + "\n");
}

inline GroundStateResult initial_ground_state(const ModelParams& q, const Grid& grid, SeedGrid seeds) {
    BranchSearchOptions bo;
    bo.seeds = seeds;
    return global_ground_state(q, grid, find_branches(q, bo));
}

inline void run_ground_sweep(const ScenarioConfig& cfg, const Grid& grid, OutputSink& sink,
                             std::optional<std::string>& failure) {
    SweepOptions opt;
    opt.branches.seeds = cfg.seed_grid;
    const auto res = sweep_pump(cfg.params, eta_grid(cfg.sweep), grid, opt);
    CsvTable t({"eta", "branch_id", "sigma", "x0", "E", "n_ss_ansatz", "n_ss_gpe"});
    CsvTable g({"eta", "n_ss_gpe", "E_gpe", "center_amplitude", "peak_amplitude", "double_peak"});
    for (const auto& row : res.rows) {
        for (std::size_t b = 0; b < row.branches.size(); ++b) {
            const auto& v = row.branches[b];
            t.add({row.eta, static_cast<double>(b), v.sigma, v.x0, v.energy, v.n_ss, row.n_ss_gpe});
        }
        g.add({row.eta, row.n_ss_gpe, row.energy_gpe, row.gpe_center_amplitude, row.gpe_peak_amplitude,
               row.gpe_double_peak ? 1.0 : 0.0});
    }
    sink.write("sweep.csv", t.str());
    sink.write("gpe.csv", g.str());
    if (!res.failures.empty()) {
        std::string msg;
        for (const auto& f : res.failures) msg += (msg.empty() ? "" : "; ") + ("eta=" + format_double(f.eta) + ": " + f.message);
        failure = msg;
    }
}

inline void run_dynamics(const ScenarioConfig& cfg, const Grid& grid, OutputSink& sink, bool ramp,
                         std::optional<std::string>& failure) {
    ModelParams p = cfg.params;
    EvolveOptions opt;
    opt.dt = cfg.time.dt;
    opt.sample_every = cfg.time.sample_every;
    opt.snapshot_every = cfg.time.snapshot_every;
    double t_final = cfg.time.t_final.value_or(0.0);
    if (ramp) {
        const double duration = cfg.sweep.duration.value_or(t_final);
        if (!cfg.time.t_final) t_final = duration;
        opt.schedule = PumpSchedule::linear_ramp(0.0, cfg.sweep.eta_start, duration, cfg.sweep.eta_end);
        p.eta = cfg.sweep.eta_start;
    }

    OrderParameter psi0 = gaussian_state(grid, 0.0, 1.0);
    switch (cfg.initial_state.kind) {
        case InitialState::Kind::ground: psi0 = initial_ground_state(p, grid, cfg.seed_grid).psi; break;
        case InitialState::Kind::right_mode: psi0 = localized_modes(p, grid).right; break;
        case InitialState::Kind::gaussian:
            psi0 = gaussian_state(grid, cfg.initial_state.center, cfg.initial_state.width);
            break;
    }
    try {
        write_propagation(sink, evolve(psi0, t_final, p, opt), ramp);
    } catch (const PropagationError& e) {
        write_propagation(sink, e.partial(), ramp);
        failure = e.what();
    }
}

inline const TwoModeModel& lowest_energy_model(const std::vector<TwoModeModel>& models) {
    const auto* best = &models.front();
    for (const auto& m : models) {
        const auto e = two_mode_energy(m.coeffs().sigma, m.coeffs().x0, m.params());
        if (e < two_mode_energy(best->coeffs().sigma, best->coeffs().x0, best->params())) best = &m;
    }
    return *best;
}

inline void run_two_mode(const ScenarioConfig& cfg, OutputSink& sink, std::optional<std::string>& failure) {
    const auto& tm = cfg.two_mode;
    const auto report = self_consistent_model(cfg.params, default_n_ss_guesses(cfg.params));
    if (report.models.empty()) {
        std::string msg = "no self-consistent two-mode solution";
        for (const auto& s : report.skipped) msg += "; " + s;
        failure = msg;
        return;
    }
    const TwoModeModel& model = lowest_energy_model(report.models);
    const double tr = revival_time(tm.n_bar, model);
    double t_final = tm.t_final.value_or(tm.revival_span * tr);
    if (!std::isfinite(t_final)) {
        failure = "revival time is infinite; set two_mode.t_final";
        return;
    }
    std::vector<double> times(tm.n_samples);
    for (std::size_t i = 0; i < tm.n_samples; ++i)
        times[i] = t_final * static_cast<double>(i) / static_cast<double>(tm.n_samples - 1);
    const auto cr = collapse_revival_inversion(tm.n_bar, times, model, tm.n_max, tm.well);

    CsvTable t({"t", "Z_MB", "envelope"});
    for (std::size_t i = 0; i < times.size(); ++i) t.add({times[i], cr.inversion[i], cr.envelope[i]});
    sink.write("inversion.csv", t.str());

    const int n_max = tm.n_max.value_or(default_n_max(tm.n_bar));
    nlohmann::json table = nlohmann::json::array();
    for (int n = 0; n <= n_max; ++n) table.push_back({{"n", n}, {"t", model.t_of_n(n)}});
    const auto& c = model.coeffs();
    nlohmann::json fixed_points = nlohmann::json::array();
    for (const auto& m : report.models)
        fixed_points.push_back({{"sigma", m.coeffs().sigma}, {"x0", m.coeffs().x0}, {"n_ss", m.coeffs().n_ss}});
    const double tc = collapse_time(times, cr.envelope);
    const auto rev = first_revival(times, cr.envelope);
    nlohmann::json side = {
        {"n_bar", tm.n_bar},
        {"revival_time", std::isfinite(tr) ? nlohmann::json(tr) : nlohmann::json("inf")},
        {"collapse_time", std::isfinite(tc) ? nlohmann::json(tc) : nlohmann::json(nullptr)},
        {"first_revival", rev ? nlohmann::json{{"onset", rev->onset}, {"center", rev->center}, {"peak", rev->peak}}
                              : nlohmann::json(nullptr)},
        {"coefficients",
         {{"e0", c.e0}, {"e1", c.e1}, {"j0", c.j0}, {"j1", c.j1}, {"s0", c.s0}, {"s1", c.s1}, {"sigma", c.sigma},
          {"x0", c.x0}, {"n_ss", c.n_ss}}},
        {"fixed_points", fixed_points},
        {"skipped_guesses", report.skipped},
        {"n_max", n_max},
        {"tail_mass", cr.tail_mass},
        {"truncated", cr.truncated},
        {"initial_well", tm.well == InitialWell::right ? "right" : "left"},
        {"t_table", table}};
    sink.write("two_mode.json", side.dump(2) + "\n");
    if (cr.truncated) failure = "Poisson tail beyond n_max exceeds 1e-12";
}

}  // namespace detail

// Runs one scenario into output_dir and writes manifest.json there. Numerical failures are
// recorded in the manifest (with any partial outputs) rather than thrown.
inline RunOutcome run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& output_dir) {
    const auto start = std::chrono::steady_clock::now();
    detail::OutputSink sink(output_dir);
    std::optional<std::string> failure;
    try {
        cfg.params.validate();
        const Grid grid = make_grid(cfg.grid.n_points, cfg.grid.x_max);
        switch (cfg.scenario) {
            case ScenarioKind::ground_sweep: detail::run_ground_sweep(cfg, grid, sink, failure); break;
            case ScenarioKind::dynamics: detail::run_dynamics(cfg, grid, sink, false, failure); break;
            case ScenarioKind::ramp_up:
            case ScenarioKind::ramp_down: detail::run_dynamics(cfg, grid, sink, true, failure); break;
            case ScenarioKind::two_mode_cr: detail::run_two_mode(cfg, sink, failure); break;
        }
    } catch (const InvalidArgument&) {
        throw;
    } catch (const std::exception& e) {
        failure = e.what();
    }
    RunOutcome out;
    out.output_dir = output_dir;
    out.files = sink.files();
    out.failure = failure;
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json checksums = nlohmann::json::object();
    for (const auto& f : out.files) checksums[f] = sha256_hex(read_file(output_dir / f));
    nlohmann::json manifest = {{"artifact", "cavity-dw"},
                               {"version", kArtifactVersion},
                               {"scenario", to_string(cfg.scenario)},
                               {"config", cfg.source},
                               {"wall_time_s", out.wall_time_s},
                               {"checksums", checksums},
                               {"status", failure ? "failed" : "ok"}};
    if (failure) manifest["failure"] = {{"message", *failure}};
    std::ofstream(output_dir / "manifest.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << "\n";
    return out;
}

// Recomputes the checksums listed in a manifest; returns the files that do not match.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& output_dir) {
    const auto manifest = nlohmann::json::parse(read_file(output_dir / "manifest.json"));
    std::vector<std::string> bad;
    for (const auto& [name, sum] : manifest.at("checksums").items()) {
        if (!std::filesystem::exists(output_dir / name) || sha256_hex(read_file(output_dir / name)) != sum.get<std::string>())
            bad.push_back(name);
    }
    return bad;
}

}  // namespace cavity_dw
