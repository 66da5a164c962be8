// qdephase_cli.cpp - Command-line front end: scenarios, figure presets and trace comparison.

#include "qdephase.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

using qdephase::json;

struct Flags {
    std::optional<std::string> config;
    std::optional<double> g1, g2, temperature, omega0, omega_q, gamma;
    std::optional<double> t_start, t_end;
    std::optional<std::size_t> n_points;
    std::optional<std::string> trunc;
    std::optional<double> trunc_tol;
    std::optional<std::size_t> n_samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_path, input_path, coupling, run_kind, panel;
    std::optional<double> min_height, min_separation;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON scenario or run manifest");
    app->add_option("--g1", f.g1, "linear coupling (units of omega0)");
    app->add_option("--g2", f.g2, "quadratic coupling, |g2| < omega0");
    app->add_option("--temperature", f.temperature, "k_B T");
    app->add_option("--omega0", f.omega0, "oscillator frequency");
    app->add_option("--omega_q", f.omega_q, "qubit splitting (global phase only)");
    app->add_option("--t_start", f.t_start, "grid start time");
    app->add_option("--t_end", f.t_end, "grid end time");
    app->add_option("--n_points", f.n_points, "grid size");
    app->add_option("--trunc", f.trunc, "Fock dimension or 'auto'");
    app->add_option("--trunc_tol", f.trunc_tol, "drift tolerance for automatic truncation");
    app->add_option("--output_path", f.output_path, "output directory");
}

void add_mc(CLI::App* app, Flags& f) {
    app->add_option("--n_samples", f.n_samples, "Monte Carlo samples");
    app->add_option("--seed", f.seed, "Monte Carlo seed");
    app->add_option("--coupling", f.coupling, "linear | quadratic | both")
        ->check(CLI::IsMember({"linear", "quadratic", "both"}));
}

// Flags override the config file field by field.
json overlay(json base, const Flags& f) {
    if (base.is_object() && base.contains("config")) base = base.at("config");
    if (!base.is_object()) base = json::object();
    auto set_param = [&](const char* key, const std::optional<double>& v) {
        if (v) base["params"][key] = *v;
    };
    set_param("g1", f.g1);
    set_param("g2", f.g2);
    set_param("temperature", f.temperature);
    set_param("omega0", f.omega0);
    set_param("omega_q", f.omega_q);
    if (f.gamma) base["bath"] = {{"gamma", *f.gamma}};

    if (f.t_start || f.t_end || f.n_points) {
        json g = base.contains("time_grid") && base["time_grid"].is_object() ? base["time_grid"] : json::object();
        if (f.t_start) g["t_start"] = *f.t_start;
        if (f.t_end) g["t_end"] = *f.t_end;
        if (f.n_points) g["n_points"] = *f.n_points;
        base["time_grid"] = g;
    }
    if (f.trunc) {
        if (*f.trunc == "auto") {
            base["trunc"] = f.trunc_tol ? json{{"auto", *f.trunc_tol}} : json("auto");
        } else {
            try {
                std::size_t pos = 0;
                const auto d = std::stoull(*f.trunc, &pos);
                if (pos != f.trunc->size()) throw std::invalid_argument("trailing characters");
                base["trunc"] = d;
            } catch (const std::exception&) {
                throw qdephase::ConfigError("config field 'trunc': expected an integer or 'auto', got '" + *f.trunc +
                                            "'");
            }
        }
    } else if (f.trunc_tol) {
        base["trunc"] = {{"auto", *f.trunc_tol}};
    }
    if (f.n_samples) base["mc"]["n_samples"] = *f.n_samples;
    if (f.seed) base["mc"]["seed"] = *f.seed;
    if (f.coupling) base["coupling"] = *f.coupling;
    if (f.output_path) base["output_path"] = *f.output_path;
    if (f.input_path) base["estimate"]["input_path"] = *f.input_path;
    if (f.min_height) base["estimate"]["min_height"] = *f.min_height;
    if (f.min_separation) base["estimate"]["min_separation"] = *f.min_separation;
    if (f.panel) base["panel"] = *f.panel;
    if (f.run_kind) base["run_kind"] = *f.run_kind;
    return base;
}

int run(const Flags& f, std::optional<std::string> forced_kind, const std::string& command,
        bool numeric_only = false) {
    json j = f.config ? qdephase::read_json_file(*f.config) : json::object();
    j = overlay(std::move(j), f);
    if (forced_kind) j["run_kind"] = *forced_kind;
    const auto cfg = qdephase::config_from_json(j);
    if (numeric_only && cfg.run_kind != qdephase::RunKind::Free && cfg.run_kind != qdephase::RunKind::Echo) {
        throw qdephase::ConfigError("config field 'run_kind': simulate accepts free or echo only");
    }
    const auto res = qdephase::run_scenario(cfg, command);
    for (const auto& p : res.files) std::cout << p.string() << "\n";
    if (res.manifest.contains("results")) std::cout << res.manifest["results"].dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qdephase: qubit dephasing by a thermal oscillator"};
    app.require_subcommand(1);
    Flags f;

    std::string command;
    for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

    auto* sim = app.add_subcommand("simulate", "numeric free evolution or echo");
    add_common(sim, f);
    sim->add_option("--run_kind", f.run_kind, "free | echo")->check(CLI::IsMember({"free", "echo"}));

    auto* ana = app.add_subcommand("analytic", "closed-form traces on one grid");
    add_common(ana, f);

    auto* cls = app.add_subcommand("classical", "classical closed forms and Monte Carlo");
    add_common(cls, f);
    add_mc(cls, f);

    auto* roots = app.add_subcommand("roots", "characteristic roots and revival classification");
    add_common(roots, f);
    roots->add_option("--gamma", f.gamma, "bath friction (single point; omit for the default sweep)");

    auto* est = app.add_subcommand("estimate", "detect revival peaks and estimate g2");
    add_common(est, f);
    est->add_option("--input_path", f.input_path, "CSV trace to analyse");
    est->add_option("--min_height", f.min_height, "peak threshold on |L|, in (0, 1)");
    est->add_option("--min_separation", f.min_separation, "minimum peak spacing");

    auto* fig1 = app.add_subcommand("figure1", "free-evolution figure preset");
    add_common(fig1, f);
    fig1->add_option("--panel", f.panel, "a | b | c | d")->check(CLI::IsMember({"a", "b", "c", "d"}));

    auto* fig2 = app.add_subcommand("figure2", "echo figure preset");
    add_common(fig2, f);

    auto* rerun = app.add_subcommand("run", "run a scenario or manifest as given");
    add_common(rerun, f);
    add_mc(rerun, f);

    auto* cmp = app.add_subcommand("compare", "compare two CSV traces on a shared grid");
    std::string path_a, path_b;
    double tolerance = 0.02;
    cmp->add_option("a", path_a, "first trace")->required();
    cmp->add_option("b", path_b, "second trace")->required();
    cmp->add_option("--tolerance", tolerance, "pass when max ||L_a| - |L_b|| is below this");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sim) return run(f, std::nullopt, command, true);
        if (*ana) return run(f, "analytic-suite", command);
        if (*cls) return run(f, "classical-suite", command);
        if (*roots) return run(f, "roots-sweep", command);
        if (*est) return run(f, "estimate", command);
        if (*fig1) return run(f, "figure1", command);
        if (*fig2) return run(f, "figure2", command);
        if (*rerun) {
            if (!f.config) throw qdephase::ConfigError("run: --config is required");
            return run(f, std::nullopt, command);
        }
        if (*cmp) {
            const auto r = qdephase::compare_trace_files(path_a, path_b, tolerance);
            const json out = {{"max_abs_dev", r.max_abs_dev},   {"mean_abs_dev", r.mean_abs_dev},
                              {"max_cplx_dev", r.max_cplx_dev}, {"mean_cplx_dev", r.mean_cplx_dev},
                              {"tolerance", r.tolerance},       {"n_points", r.n_points},
                              {"pass", r.pass}};
            std::cout << out.dump(2) << "\n";
            return r.pass ? 0 : 1;
        }
    } catch (const qdephase::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << " [last dim " << e.last_dim() << "]\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
