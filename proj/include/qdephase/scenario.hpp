// scenario.hpp - JSON scenario configs, run dispatch, manifests and figure presets.

#pragma once

#include "qdephase/analytic.hpp"
#include "qdephase/classical.hpp"
#include "qdephase/estimator.hpp"
#include "qdephase/exact_sim.hpp"
#include "qdephase/io.hpp"
#include "qdephase/model.hpp"
#include "qdephase/open_system.hpp"
#include "qdephase/trace.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdephase {

using json = nlohmann::json;

inline constexpr int kManifestSchemaVersion = 1;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class RunKind { Free, Echo, AnalyticSuite, ClassicalSuite, RootsSweep, Estimate, Figure1, Figure2 };

inline std::string_view run_kind_name(RunKind k) noexcept {
    switch (k) {
        case RunKind::Free: return "free";
        case RunKind::Echo: return "echo";
        case RunKind::AnalyticSuite: return "analytic-suite";
        case RunKind::ClassicalSuite: return "classical-suite";
        case RunKind::RootsSweep: return "roots-sweep";
        case RunKind::Estimate: return "estimate";
        case RunKind::Figure1: return "figure1";
        case RunKind::Figure2: return "figure2";
    }
    return "unknown";
}

inline std::optional<RunKind> parse_run_kind(std::string_view s) noexcept {
    for (RunKind k : {RunKind::Free, RunKind::Echo, RunKind::AnalyticSuite, RunKind::ClassicalSuite,
                      RunKind::RootsSweep, RunKind::Estimate, RunKind::Figure1, RunKind::Figure2}) {
        if (run_kind_name(k) == s) return k;
    }
    return std::nullopt;
}

inline std::string_view coupling_name(Coupling c) noexcept {
    switch (c) {
        case Coupling::Linear: return "linear";
        case Coupling::Quadratic: return "quadratic";
        case Coupling::Both: return "both";
    }
    return "unknown";
}

struct TimeGrid {
    double t_start{0.0};
    double t_end{1.0};
    std::size_t n_points{2};
};

struct TruncSpec {
    std::optional<std::size_t> dim;  // explicit dimension; nullopt means auto
    double tol{1e-6};                // auto: drift tolerance for converge_truncation
};

struct McSpec {
    std::size_t n_samples{100000};
    std::uint64_t seed{20240611};
};

struct EstimateSpec {
    std::string input_path;         // CSV trace; empty means a beat-formula trace from params
    double min_height{0.5};
    std::optional<double> min_separation;  // default: half the expected beat period
};

struct RootsSweepSpec {
    double gamma_min{1e-6};
    double gamma_max{1e-1};
    std::size_t n_gamma{10};
    double t_min{0.1};
    double t_max{100.0};
    std::size_t n_t{10};
};

struct ScenarioConfig {
    SystemParams params{};
    std::optional<double> bath_gamma;  // bath lambda is always derived from gamma and temperature
    RunKind run_kind{RunKind::Free};
    std::optional<TimeGrid> time_grid;  // nullopt means auto
    TruncSpec trunc{};
    McSpec mc{};
    Coupling coupling{Coupling::Both};
    std::string panel{"a"};
    EstimateSpec estimate{};
    RootsSweepSpec roots{};
    std::string output_path{"qdephase_out"};
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline SystemParams figure1_params(const std::string& panel) {
    SystemParams p;
    p.temperature = 10.0;
    if (panel == "a") {
        p.g1 = 0.04, p.g2 = 0.002;
    } else if (panel == "b") {
        p.g1 = 0.04, p.g2 = 0.02;
    } else if (panel == "c") {
        p.g1 = 0.01, p.g2 = 0.1;
    } else if (panel == "d") {
        p.g1 = 0.01, p.g2 = 0.2;
    } else {
        throw ConfigError("config field 'panel': expected one of a, b, c, d, got '" + panel + "'");
    }
    return p;
}

inline SystemParams figure2_params() {
    SystemParams p;
    p.g1 = 0.04;
    p.g2 = 0.004;
    p.temperature = 10.0;
    return p;
}

// ---------------------------------------------------------------------------
// Auto grids
// ---------------------------------------------------------------------------

// Free evolution: [0, 2.5 T1] at 400 points per beat period; without g2,
// ten oscillator periods at 40 points each.
inline TimeGrid auto_free_grid(const SystemParams& p) {
    const double fast = 2.0 * std::numbers::pi / p.omega0;
    if (p.g2 == 0.0) {
        return {0.0, 10.0 * fast, static_cast<std::size_t>(std::ceil(10.0 * 40.0)) + 1};
    }
    const double t1 = 2.0 * std::numbers::pi / std::abs(derived_frequencies(p).beat);
    const double t_end = 2.5 * t1;
    return {0.0, t_end, static_cast<std::size_t>(std::ceil(2.5 * 400.0)) + 1};
}

// Echo: [0, 4 pi / g2] at 40 points per oscillator period.
inline TimeGrid auto_echo_grid(const SystemParams& p) {
    const double fast = 2.0 * std::numbers::pi / p.omega0;
    const double t_end = p.g2 == 0.0 ? 10.0 * fast : 4.0 * std::numbers::pi / std::abs(p.g2);
    return {0.0, t_end, static_cast<std::size_t>(std::ceil(t_end / fast * 40.0)) + 1};
}

inline std::vector<double> grid_times(const TimeGrid& g) { return uniform_grid(g.t_start, g.t_end, g.n_points); }

// ---------------------------------------------------------------------------
// JSON <-> config
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError("config field '" + where + key + "': unknown field");
        }
    }
}

inline double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("config field '" + where + key + "': expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("config field '" + where + key + "': must be finite");
    return d;
}

inline std::uint64_t get_unsigned(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) {
        throw ConfigError("config field '" + where + key + "': expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline std::string get_string(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError("config field '" + where + key + "': expected a string");
    return v.get<std::string>();
}

inline const json& get_object(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_object()) throw ConfigError("config field '" + where + key + "': expected an object");
    return v;
}

}  // namespace detail

// Parses and validates a scenario. A top-level "config" key (as found in run
// manifests) is unwrapped first, so a manifest can be fed back in directly.
inline ScenarioConfig config_from_json(const json& input) {
    using namespace detail;
    const json& j = input.is_object() && input.contains("config") ? input.at("config") : input;
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    check_keys(j, "", {"params", "bath", "run_kind", "time_grid", "trunc", "mc", "coupling", "panel", "estimate",
                       "roots", "output_path"});

    ScenarioConfig c;
    if (j.contains("run_kind")) {
        const auto s = get_string(j, "run_kind", "", "");
        const auto k = parse_run_kind(s);
        if (!k) {
            throw ConfigError("config field 'run_kind': unknown value '" + s +
                              "' (expected free, echo, analytic-suite, classical-suite, roots-sweep, estimate, "
                              "figure1, figure2)");
        }
        c.run_kind = *k;
    }
    c.panel = get_string(j, "panel", "", c.panel);
    if (c.run_kind == RunKind::Figure1) c.params = figure1_params(c.panel);
    if (c.run_kind == RunKind::Figure2) c.params = figure2_params();

    if (j.contains("params")) {
        const auto& pj = get_object(j, "params", "");
        check_keys(pj, "params.", {"omega0", "g1", "g2", "temperature", "omega_q"});
        c.params.omega0 = get_number(pj, "omega0", "params.", c.params.omega0);
        c.params.g1 = get_number(pj, "g1", "params.", c.params.g1);
        c.params.g2 = get_number(pj, "g2", "params.", c.params.g2);
        c.params.temperature = get_number(pj, "temperature", "params.", c.params.temperature);
        c.params.omega_q = get_number(pj, "omega_q", "params.", c.params.omega_q);
    }
    try {
        c.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'params': ") + e.what());
    }

    if (j.contains("bath") && !j.at("bath").is_null()) {
        const auto& bj = get_object(j, "bath", "");
        check_keys(bj, "bath.", {"gamma", "lambda", "temperature"});
        if (!bj.contains("gamma")) throw ConfigError("config field 'bath.gamma': required");
        const double g = get_number(bj, "gamma", "bath.", 0.0);
        if (g < 0.0) throw ConfigError("config field 'bath.gamma': must be >= 0");
        c.bath_gamma = g;
    }

    if (j.contains("time_grid")) {
        const auto& g = j.at("time_grid");
        if (g.is_string() && g.get<std::string>() == "auto") {
            c.time_grid.reset();
        } else if (g.is_object()) {
            check_keys(g, "time_grid.", {"t_start", "t_end", "n_points"});
            if (!g.contains("t_end")) throw ConfigError("config field 'time_grid.t_end': required");
            if (!g.contains("n_points")) throw ConfigError("config field 'time_grid.n_points': required");
            TimeGrid tg;
            tg.t_start = get_number(g, "t_start", "time_grid.", 0.0);
            tg.t_end = get_number(g, "t_end", "time_grid.", 0.0);
            tg.n_points = get_unsigned(g, "n_points", "time_grid.", 0);
            if (tg.n_points < 2) throw ConfigError("config field 'time_grid.n_points': must be >= 2");
            if (!(tg.t_end > tg.t_start)) throw ConfigError("config field 'time_grid.t_end': must exceed t_start");
            if (tg.t_start < 0.0) throw ConfigError("config field 'time_grid.t_start': must be >= 0");
            c.time_grid = tg;
        } else {
            throw ConfigError("config field 'time_grid': expected \"auto\" or {t_start, t_end, n_points}");
        }
    }

    if (j.contains("trunc")) {
        const auto& t = j.at("trunc");
        if (t.is_number_unsigned()) {
            const auto d = t.get<std::uint64_t>();
            if (d < 2) throw ConfigError("config field 'trunc': dimension must be >= 2");
            c.trunc.dim = static_cast<std::size_t>(d);
        } else if (t.is_string() && t.get<std::string>() == "auto") {
            c.trunc.dim.reset();
        } else if (t.is_object()) {
            check_keys(t, "trunc.", {"auto"});
            c.trunc.dim.reset();
            c.trunc.tol = get_number(t, "auto", "trunc.", c.trunc.tol);
            if (!(c.trunc.tol > 0.0)) throw ConfigError("config field 'trunc.auto': tolerance must be positive");
        } else {
            throw ConfigError("config field 'trunc': expected an integer dimension, \"auto\" or {\"auto\": tol}");
        }
    }

    if (j.contains("mc")) {
        const auto& mj = get_object(j, "mc", "");
        check_keys(mj, "mc.", {"n_samples", "seed"});
        c.mc.n_samples = get_unsigned(mj, "n_samples", "mc.", c.mc.n_samples);
        c.mc.seed = get_unsigned(mj, "seed", "mc.", c.mc.seed);
        if (c.mc.n_samples < 100) throw ConfigError("config field 'mc.n_samples': must be >= 100");
    }

    if (j.contains("coupling")) {
        const auto s = get_string(j, "coupling", "", "");
        if (s == "linear") c.coupling = Coupling::Linear;
        else if (s == "quadratic") c.coupling = Coupling::Quadratic;
        else if (s == "both") c.coupling = Coupling::Both;
        else throw ConfigError("config field 'coupling': expected linear, quadratic or both, got '" + s + "'");
    }

    if (j.contains("estimate")) {
        const auto& ej = get_object(j, "estimate", "");
        check_keys(ej, "estimate.", {"input_path", "min_height", "min_separation"});
        c.estimate.input_path = get_string(ej, "input_path", "estimate.", "");
        c.estimate.min_height = get_number(ej, "min_height", "estimate.", c.estimate.min_height);
        if (!(c.estimate.min_height > 0.0 && c.estimate.min_height < 1.0)) {
            throw ConfigError("config field 'estimate.min_height': must lie in (0, 1)");
        }
        if (ej.contains("min_separation") && !ej.at("min_separation").is_null()) {
            const double s = get_number(ej, "min_separation", "estimate.", 0.0);
            if (s < 0.0) throw ConfigError("config field 'estimate.min_separation': must be >= 0");
            c.estimate.min_separation = s;
        }
    }

    if (j.contains("roots")) {
        const auto& rj = get_object(j, "roots", "");
        check_keys(rj, "roots.", {"gamma_min", "gamma_max", "n_gamma", "t_min", "t_max", "n_t"});
        auto& r = c.roots;
        r.gamma_min = get_number(rj, "gamma_min", "roots.", r.gamma_min);
        r.gamma_max = get_number(rj, "gamma_max", "roots.", r.gamma_max);
        r.n_gamma = get_unsigned(rj, "n_gamma", "roots.", r.n_gamma);
        r.t_min = get_number(rj, "t_min", "roots.", r.t_min);
        r.t_max = get_number(rj, "t_max", "roots.", r.t_max);
        r.n_t = get_unsigned(rj, "n_t", "roots.", r.n_t);
        if (!(r.gamma_min > 0.0 && r.gamma_max >= r.gamma_min)) {
            throw ConfigError("config field 'roots.gamma_min': need 0 < gamma_min <= gamma_max");
        }
        if (!(r.t_min > 0.0 && r.t_max >= r.t_min)) {
            throw ConfigError("config field 'roots.t_min': need 0 < t_min <= t_max");
        }
        if (r.n_gamma < 1 || r.n_t < 1) throw ConfigError("config field 'roots.n_gamma': counts must be >= 1");
    }

    c.output_path = get_string(j, "output_path", "", c.output_path);
    if (c.output_path.empty()) throw ConfigError("config field 'output_path': must not be empty");
    return c;
}

inline json config_to_json(const ScenarioConfig& c) {
    json j;
    j["run_kind"] = std::string(run_kind_name(c.run_kind));
    j["params"] = {{"omega0", c.params.omega0},
                   {"g1", c.params.g1},
                   {"g2", c.params.g2},
                   {"temperature", c.params.temperature},
                   {"omega_q", c.params.omega_q}};
    if (c.bath_gamma) {
        j["bath"] = {{"gamma", *c.bath_gamma}};
    }
    if (c.time_grid) {
        j["time_grid"] = {{"t_start", c.time_grid->t_start},
                          {"t_end", c.time_grid->t_end},
                          {"n_points", c.time_grid->n_points}};
    } else {
        j["time_grid"] = "auto";
    }
    if (c.trunc.dim) {
        j["trunc"] = *c.trunc.dim;
    } else {
        j["trunc"] = {{"auto", c.trunc.tol}};
    }
    j["mc"] = {{"n_samples", c.mc.n_samples}, {"seed", c.mc.seed}};
    j["coupling"] = std::string(coupling_name(c.coupling));
    j["panel"] = c.panel;
    json e = {{"input_path", c.estimate.input_path}, {"min_height", c.estimate.min_height}};
    if (c.estimate.min_separation) e["min_separation"] = *c.estimate.min_separation;
    j["estimate"] = e;
    j["roots"] = {{"gamma_min", c.roots.gamma_min}, {"gamma_max", c.roots.gamma_max}, {"n_gamma", c.roots.n_gamma},
                  {"t_min", c.roots.t_min},         {"t_max", c.roots.t_max},         {"n_t", c.roots.n_t}};
    j["output_path"] = c.output_path;
    return j;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct ScenarioResult {
    ScenarioConfig resolved;   // grids and truncation made explicit
    std::vector<std::filesystem::path> files;
    json manifest;
};

namespace detail {

inline json trace_summary(const CoherenceTrace& tr, const std::string& file) {
    const auto m = tr.magnitudes();
    json s;
    s["file"] = file;
    s["method"] = std::string(method_name(tr.method));
    if (!tr.label.empty()) s["label"] = tr.label;
    s["n_points"] = tr.size();
    if (!tr.times.empty()) {
        s["t_start"] = tr.times.front();
        s["t_end"] = tr.times.back();
        double sum = 0.0;
        for (double v : m) sum += v;
        s["min_abs_L"] = *std::min_element(m.begin(), m.end());
        s["max_abs_L"] = *std::max_element(m.begin(), m.end());
        s["mean_abs_L"] = sum / static_cast<double>(m.size());
        s["final_abs_L"] = m.back();
    }
    s["trunc_dim"] = tr.trunc_dim;
    if (tr.truncation) {
        s["truncation"] = {{"weight_tail", tr.truncation->weight_tail},
                           {"drift", tr.truncation->drift},
                           {"converged", tr.truncation->converged}};
    }
    if (!tr.excluded_times.empty()) s["excluded_times"] = tr.excluded_times;
    if (!tr.notes.empty()) s["notes"] = tr.notes;
    return s;
}

inline std::string trace_file_name(const CoherenceTrace& tr) {
    std::string name(method_name(tr.method));
    if (!tr.label.empty()) {
        name += '-';
        for (char ch : tr.label) name += (ch == '/' ? '_' : ch);
    }
    return name + ".csv";
}

class Writer {
public:
    Writer(std::filesystem::path dir, ScenarioResult& res) : dir_(std::move(dir)), res_(res) {
        std::filesystem::create_directories(dir_);
        res_.manifest["outputs"] = json::array();
    }

    std::string trace(const CoherenceTrace& tr) {
        const auto name = trace_file_name(tr);
        write_trace_csv(dir_ / name, tr);
        res_.files.push_back(dir_ / name);
        res_.manifest["outputs"].push_back(trace_summary(tr, name));
        return name;
    }

    void text(const std::string& name, const std::string& content, json summary = json::object()) {
        write_file_atomic(dir_ / name, content);
        res_.files.push_back(dir_ / name);
        summary["file"] = name;
        res_.manifest["outputs"].push_back(summary);
    }

private:
    std::filesystem::path dir_;
    ScenarioResult& res_;
};

inline std::size_t resolve_trunc(ScenarioConfig& c, double t_max) {
    if (!c.trunc.dim) c.trunc.dim = converge_truncation(c.params, t_max, c.trunc.tol);
    return *c.trunc.dim;
}

inline std::string gnuplot_script(const std::string& title, const std::string& png,
                                  const std::vector<std::pair<std::string, std::string>>& series) {
    std::ostringstream s;
    s << "# usage: gnuplot <this file>\n"
      << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set terminal pngcairo size 900,540\n"
      << "set output '" << png << "'\n"
      << "set title '" << title << "'\n"
      << "set xlabel 't'\n"
      << "set ylabel '|L(t)|'\n"
      << "set yrange [0:1.05]\n"
      << "plot ";
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i) s << ", \\\n     ";
        s << "'" << series[i].first << "' using 1:4 with lines title '" << series[i].second << "'";
    }
    s << "\n";
    return s.str();
}

inline double default_separation(const SystemParams& p) {
    if (p.g2 == 0.0) return 0.0;
    return 0.5 * 2.0 * std::numbers::pi / std::abs(derived_frequencies(p).beat);
}

inline json peak_report_json(const PeakReport& r) {
    json j;
    j["status"] = r.status == PeakStatus::Ok ? "ok" : "no-peaks";
    j["peak_times"] = r.peak_times;
    j["peak_heights"] = r.peak_heights;
    json widths = json::array();
    for (double w : r.widths) widths.push_back(std::isfinite(w) ? json(w) : json(nullptr));
    j["widths"] = widths;
    j["time_resolution"] = r.time_resolution;
    if (r.n_peaks_used > 0) {
        j["period"] = r.period;
        j["period_std_error"] = r.period_std_error;
        j["beat_estimate"] = r.beat_estimate;
        j["g2_estimate"] = r.g2_estimate;
        j["g2_uncertainty"] = r.g2_uncertainty;
        j["n_peaks_used"] = r.n_peaks_used;
    }
    return j;
}

inline void run_roots(ScenarioConfig& c, Writer& w, json& results) {
    std::ostringstream csv;
    csv << "gamma,temperature,lambda,re_z1,im_z1,re_z2,im_z2,re_z3,im_z3,re_z4,im_z4,max_real,revival_ratio,"
           "gamma_ratio,lambda_ratio,max_residual,classification\n";
    std::size_t counts[3] = {0, 0, 0};
    double worst_residual = 0.0;
    auto emit = [&](double gamma, double temperature) {
        SystemParams p = c.params;
        p.temperature = temperature;
        const auto bath = make_bath(gamma, temperature, p.omega0);
        const auto r = p.g2 == 0.0 ? characteristic_roots(p, bath) : revival_condition(p, bath);
        worst_residual = std::max(worst_residual, r.max_residual);
        csv << format_double(gamma) << ',' << format_double(temperature) << ',' << format_double(bath.lambda);
        for (const auto& z : r.roots) csv << ',' << format_double(z.real()) << ',' << format_double(z.imag());
        csv << ',' << format_double(r.max_real) << ',' << format_double(r.revival_ratio) << ','
            << format_double(r.gamma_ratio) << ',' << format_double(r.lambda_ratio) << ','
            << format_double(r.max_residual) << ','
            << (p.g2 == 0.0 ? std::string("undefined") : std::string(revival_class_name(r.classification))) << '\n';
        if (p.g2 != 0.0) ++counts[static_cast<int>(r.classification)];
    };
    auto logspace = [](double a, double b, std::size_t n, std::size_t i) {
        if (n == 1) return a;
        return a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1));
    };
    if (c.bath_gamma) {
        emit(*c.bath_gamma, c.params.temperature);
    } else {
        for (std::size_t i = 0; i < c.roots.n_gamma; ++i) {
            for (std::size_t k = 0; k < c.roots.n_t; ++k) {
                emit(logspace(c.roots.gamma_min, c.roots.gamma_max, c.roots.n_gamma, i),
                     logspace(c.roots.t_min, c.roots.t_max, c.roots.n_t, k));
            }
        }
    }
    w.text("roots.csv", csv.str(), {{"kind", "roots-table"}});
    results["max_residual"] = worst_residual;
    results["revival-preserved"] = counts[0];
    results["revival-degraded"] = counts[1];
    results["revival-destroyed"] = counts[2];
}

}  // namespace detail

// Runs one scenario, writing CSVs, auxiliary files and manifest.json into
// config.output_path. `command` is recorded verbatim in the manifest.
inline ScenarioResult run_scenario(const ScenarioConfig& config, const std::string& command = "") {
    ScenarioResult res;
    res.resolved = config;
    ScenarioConfig& c = res.resolved;
    const std::filesystem::path dir(c.output_path);
    detail::Writer w(dir, res);
    json results = json::object();

    auto grid_or = [&](TimeGrid fallback) {
        if (!c.time_grid) c.time_grid = fallback;
        return grid_times(*c.time_grid);
    };

    switch (c.run_kind) {
        case RunKind::Free: {
            const auto t = grid_or(auto_free_grid(c.params));
            const auto dim = detail::resolve_trunc(c, t.back());
            w.trace(coherence_free(c.params, t, dim));
            break;
        }
        case RunKind::Echo: {
            const auto t = grid_or(auto_echo_grid(c.params));
            const auto dim = detail::resolve_trunc(c, t.back());
            w.trace(coherence_echo(c.params, t, dim));
            break;
        }
        case RunKind::AnalyticSuite: {
            const auto t = grid_or(auto_free_grid(c.params));
            w.trace(coherence_exact_formula(c.params, t));
            w.trace(coherence_beat(c.params, t));
            w.trace(coherence_short_time(c.params, t));
            w.trace(coherence_linear_quantum(c.params, t));
            const auto env = echo_envelope(c.params, t);
            w.trace(env.envelope);
            w.trace(env.lower_bound_half);
            w.trace(env.lower_bound_quarter);
            if (c.params.g2 != 0.0) {
                const auto pred = peak_predictions(c.params, 3);
                results["peak_predictions"] = {{"periods", pred.periods},
                                               {"width", pred.width},
                                               {"curvature", pred.curvature},
                                               {"relative_error", pred.relative_error},
                                               {"relative_error_high_t", pred.relative_error_high_t}};
            }
            break;
        }
        case RunKind::ClassicalSuite: {
            const auto t = grid_or(auto_free_grid(c.params));
            w.trace(classical_linear(c.params, t));
            const auto q = classical_quadratic(c.params, t);
            w.trace(q.exact);
            w.trace(q.approx);
            const auto est = classical_mc(c.params, t, c.mc.n_samples, c.mc.seed, c.coupling);
            auto mc = mc_trace(c.params, t, est);
            mc.label = std::string(coupling_name(c.coupling));
            w.trace(mc);
            double max_se = 0.0;
            for (const auto& e : est) max_se = std::max(max_se, e.std_error);
            results["mc"] = {{"n_samples", c.mc.n_samples},
                             {"seed", c.mc.seed},
                             {"coupling", std::string(coupling_name(c.coupling))},
                             {"max_std_error", max_se}};
            break;
        }
        case RunKind::RootsSweep:
            detail::run_roots(c, w, results);
            break;
        case RunKind::Estimate: {
            CoherenceTrace tr;
            if (!c.estimate.input_path.empty()) {
                tr = read_trace_csv(c.estimate.input_path);
            } else {
                if (c.params.g2 == 0.0) throw ConfigError("config field 'params.g2': estimate without input needs g2 != 0");
                tr = coherence_beat(c.params, grid_or(auto_free_grid(c.params)));
            }
            if (!c.estimate.min_separation) c.estimate.min_separation = detail::default_separation(c.params);
            auto rep = detect_peaks(tr, c.estimate.min_height, *c.estimate.min_separation);
            if (rep.status == PeakStatus::Ok) rep = estimate_g2(rep, c.params.omega0);
            const json rj = detail::peak_report_json(rep);
            w.text("estimate.json", rj.dump(2) + "\n", {{"kind", "peak-report"}});
            results["estimate"] = rj;
            break;
        }
        case RunKind::Figure1: {
            const auto t = grid_or(auto_free_grid(c.params));
            const auto dim = detail::resolve_trunc(c, t.back());
            const auto num = w.trace(coherence_free(c.params, t, dim));
            const auto beat = w.trace(coherence_beat(c.params, t));
            const auto exact = w.trace(coherence_exact_formula(c.params, t));
            w.text("figure1_" + c.panel + ".gp",
                   detail::gnuplot_script("figure 1(" + c.panel + ")", "figure1_" + c.panel + ".png",
                                          {{num, "numeric"}, {beat, "beat formula"}, {exact, "exact formula"}}),
                   {{"kind", "gnuplot-script"}});
            break;
        }
        case RunKind::Figure2: {
            const auto t = grid_or(auto_echo_grid(c.params));
            const auto dim = detail::resolve_trunc(c, t.back());
            const auto num = coherence_echo(c.params, t, dim);
            const auto env = echo_envelope(c.params, t);
            const auto f_num = w.trace(num);
            const auto f_env = w.trace(env.envelope);
            const auto f_half = w.trace(env.lower_bound_half);
            const auto f_quarter = w.trace(env.lower_bound_quarter);
            // Largest amount by which |L_num| dips below each bound variant.
            auto violation = [&](const CoherenceTrace& bound) {
                double v = 0.0;
                for (std::size_t k = 0; k < t.size(); ++k) {
                    v = std::max(v, std::abs(bound.values[k]) - std::abs(num.values[k]));
                }
                return v;
            };
            const double vh = violation(env.lower_bound_half);
            const double vq = violation(env.lower_bound_quarter);
            results["lower_bound_violation"] = {{"g2t/2", vh}, {"g2t/4", vq}};
            results["envelope_max_deviation"] = compare_traces(num, env.envelope, 1.0).max_abs_dev;
            results["valid_lower_bound"] = vh <= vq ? "g2t/2" : "g2t/4";
            w.text("figure2.gp",
                   detail::gnuplot_script("figure 2", "figure2.png",
                                          {{f_num, "numeric echo"}, {f_env, "envelope"},
                                           {f_half, "bound g2t/2"}, {f_quarter, "bound g2t/4"}}),
                   {{"kind", "gnuplot-script"}});
            break;
        }
    }

    res.manifest["schema_version"] = kManifestSchemaVersion;
    res.manifest["command"] = command;
    res.manifest["config"] = config_to_json(c);
    const auto f = derived_frequencies(c.params);
    res.manifest["derived"] = {{"omega1", f.omega1}, {"omega2", f.omega2}, {"beat", f.beat}};
    if (!results.empty()) res.manifest["results"] = results;
    write_file_atomic(dir / "manifest.json", res.manifest.dump(2) + "\n");
    res.files.push_back(dir / "manifest.json");
    return res;
}

}  // namespace qdephase
