// test_io.cpp - CSV traces, trace comparison, scenario configs and the CLI binary.

#include "qdephase/io.hpp"
#include "qdephase/scenario.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace qdephase;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("qdephase_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

CoherenceTrace sample_trace() {
    CoherenceTrace tr;
    tr.method = Method::AnalyticBeat;
    tr.times = {0.0, 0.1, 1.0 / 3.0, 2.5e3};
    tr.values = {{1.0, 0.0}, {0.1234567890123456789, -0.98765432109876543}, {1e-300, 2e-17}, {-0.5, 0.25}};
    return tr;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(QDEPHASE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
    const auto tr = sample_trace();
    const auto text = trace_to_csv(tr);
    EXPECT_EQ(text.rfind("t,re_L,im_L,abs_L,method\n", 0), 0u);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    const auto back = trace_from_csv(text);
    EXPECT_EQ(back.method, tr.method);
    ASSERT_EQ(back.size(), tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        EXPECT_EQ(back.times[k], tr.times[k]);
        EXPECT_EQ(back.values[k], tr.values[k]);
    }
}

TEST(Csv, AtomicWriteLeavesNoTempFile) {
    const auto d = scratch_dir("atomic");
    write_trace_csv(d / "a.csv", sample_trace());
    write_trace_csv(d / "a.csv", sample_trace());
    EXPECT_TRUE(fs::exists(d / "a.csv"));
    EXPECT_FALSE(fs::exists(d / "a.csv.tmp"));
    EXPECT_EQ(read_trace_csv(d / "a.csv").size(), 4u);
    fs::remove_all(d);
}

TEST(Csv, MalformedInputs) {
    EXPECT_THROW(trace_from_csv(""), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,L\n0,1\n"), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n"), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n0,1,0,1\n"), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n0,x,0,1,analytic-beat\n"), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n0,1,0,0.5,analytic-beat\n"), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n0,1,0,1,bogus\n"), TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n1,1,0,1,analytic-beat\n0,1,0,1,analytic-beat\n"),
                 TraceFormatError);
    EXPECT_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\n0,1,0,1,analytic-beat\n1,1,0,1,numeric-free\n"),
                 TraceFormatError);
    EXPECT_NO_THROW(trace_from_csv("t,re_L,im_L,abs_L,method\r\n0,1,0,1,analytic-beat\r\n"));
}

TEST(Compare, IdenticalAndDifferent) {
    const auto a = sample_trace();
    const auto same = compare_traces(a, a, 1e-15);
    EXPECT_EQ(same.max_abs_dev, 0.0);
    EXPECT_EQ(same.max_cplx_dev, 0.0);
    EXPECT_TRUE(same.pass);

    auto b = a;
    b.values[1] *= cplx(0.0, 1.0);  // same modulus, different phase
    const auto r = compare_traces(a, b, 1e-12);
    EXPECT_LT(r.max_abs_dev, 1e-15);
    EXPECT_GT(r.max_cplx_dev, 0.1);
    EXPECT_TRUE(r.pass);
    b.values[2] = 0.5;
    EXPECT_FALSE(compare_traces(a, b, 0.1).pass);
}

TEST(Compare, GridMismatch) {
    const auto a = sample_trace();
    auto b = a;
    b.times[2] += 1e-12;
    EXPECT_THROW(compare_traces(a, b, 1.0), GridMismatchError);
    b = a;
    b.times.pop_back();
    b.values.pop_back();
    EXPECT_THROW(compare_traces(a, b, 1.0), GridMismatchError);
}

TEST(Config, DefaultsAndRoundTrip) {
    const auto c = config_from_json(json::parse(R"({"run_kind":"free","params":{"g1":0.04,"g2":0.002,
        "temperature":10},"trunc":128,"time_grid":{"t_end":100,"n_points":11}})"));
    EXPECT_EQ(c.run_kind, RunKind::Free);
    EXPECT_EQ(c.params.g2, 0.002);
    ASSERT_TRUE(c.trunc.dim.has_value());
    EXPECT_EQ(*c.trunc.dim, 128u);
    ASSERT_TRUE(c.time_grid.has_value());
    EXPECT_EQ(c.time_grid->n_points, 11u);
    const auto again = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(again), config_to_json(c));
    // A manifest-style wrapper is accepted.
    EXPECT_EQ(config_to_json(config_from_json(json{{"config", config_to_json(c)}})), config_to_json(c));
}

TEST(Config, FieldLevelErrors) {
    auto expect_field = [](const char* text, const char* field) {
        try {
            config_from_json(json::parse(text));
            ADD_FAILURE() << "accepted: " << text;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    expect_field(R"({"run_kind":"nope"})", "run_kind");
    expect_field(R"({"params":{"g2":1.5}})", "params");
    expect_field(R"({"params":{"g3":1}})", "params.g3");
    expect_field(R"({"params":{"g1":"big"}})", "params.g1");
    expect_field(R"({"time_grid":{"t_end":1,"n_points":1}})", "time_grid.n_points");
    expect_field(R"({"time_grid":{"t_start":2,"t_end":1,"n_points":5}})", "time_grid.t_end");
    expect_field(R"({"time_grid":{"n_points":5}})", "time_grid.t_end");
    expect_field(R"({"trunc":-3})", "trunc");
    expect_field(R"({"trunc":{"auto":0}})", "trunc.auto");
    expect_field(R"({"mc":{"n_samples":10}})", "mc.n_samples");
    expect_field(R"({"coupling":"cubic"})", "coupling");
    expect_field(R"({"run_kind":"figure1","panel":"e"})", "panel");
    expect_field(R"({"bath":{"gamma":-1}})", "bath.gamma");
    expect_field(R"({"estimate":{"min_height":1.5}})", "estimate.min_height");
    expect_field(R"({"colour":1})", "colour");
}

TEST(Config, FigurePresets) {
    const auto c = config_from_json(json::parse(R"({"run_kind":"figure1","panel":"d"})"));
    EXPECT_EQ(c.params.g1, 0.01);
    EXPECT_EQ(c.params.g2, 0.2);
    EXPECT_EQ(c.params.temperature, 10.0);
    const auto f2 = config_from_json(json::parse(R"({"run_kind":"figure2"})"));
    EXPECT_EQ(f2.params.g2, 0.004);
}

TEST(Config, AutoGrids) {
    SystemParams p;
    p.g2 = 0.002;
    const auto g = auto_free_grid(p);
    const double t1 = 2.0 * std::numbers::pi / derived_frequencies(p).beat;
    EXPECT_NEAR(g.t_end, 2.5 * t1, 1e-9);
    EXPECT_GE((g.n_points - 1) / 2.5, 400.0);
    p.g2 = 0.004;
    const auto e = auto_echo_grid(p);
    EXPECT_NEAR(e.t_end, 4.0 * std::numbers::pi / 0.004, 1e-9);
    EXPECT_GE((e.n_points - 1) / (e.t_end / (2.0 * std::numbers::pi)), 40.0);
}

TEST(Scenario, FreeWithoutCouplingIsConstant) {
    const auto d = scratch_dir("free0");
    ScenarioConfig c;
    c.run_kind = RunKind::Free;
    c.params.temperature = 2.0;
    c.time_grid = TimeGrid{0.0, 50.0, 26};
    c.trunc.dim = 32;
    c.output_path = d.string();
    const auto res = run_scenario(c, "test");
    const auto tr = read_trace_csv(d / "numeric-free.csv");
    for (const auto& v : tr.values) EXPECT_LT(std::abs(v - 1.0), 1e-12);
    const auto m = json::parse(slurp(d / "manifest.json"));
    EXPECT_EQ(m["schema_version"], kManifestSchemaVersion);
    EXPECT_EQ(m["command"], "test");
    EXPECT_EQ(m["config"]["trunc"], 32);
    fs::remove_all(d);
}

TEST(Scenario, ManifestRerunReproduces) {
    const auto d1 = scratch_dir("rerun1");
    const auto d2 = scratch_dir("rerun2");
    ScenarioConfig c;
    c.run_kind = RunKind::ClassicalSuite;
    c.params.g1 = 0.04;
    c.params.g2 = 0.02;
    c.params.temperature = 10.0;
    c.time_grid = TimeGrid{0.0, 300.0, 31};
    c.mc.n_samples = 2000;
    c.output_path = d1.string();
    run_scenario(c);
    auto j = json::parse(slurp(d1 / "manifest.json"));
    j["config"]["output_path"] = d2.string();
    run_scenario(config_from_json(j));
    for (const auto& entry : fs::directory_iterator(d1)) {
        if (entry.path().extension() != ".csv") continue;
        const auto r = compare_trace_files(entry.path(), d2 / entry.path().filename(), 1e-12);
        EXPECT_LT(r.max_cplx_dev, 1e-12) << entry.path();
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST(Scenario, AutoTruncationIsRecorded) {
    const auto d = scratch_dir("autotrunc");
    ScenarioConfig c;
    c.run_kind = RunKind::Free;
    c.params.g1 = 0.04;
    c.params.g2 = 0.02;
    c.params.temperature = 1.0;
    c.time_grid = TimeGrid{0.0, 100.0, 11};
    c.output_path = d.string();
    const auto res = run_scenario(c);
    ASSERT_TRUE(res.resolved.trunc.dim.has_value());
    EXPECT_EQ(res.manifest["config"]["trunc"], *res.resolved.trunc.dim);
    fs::remove_all(d);
}

TEST(Scenario, RootsSweepTable) {
    const auto d = scratch_dir("roots");
    ScenarioConfig c;
    c.run_kind = RunKind::RootsSweep;
    c.params.g2 = 0.1;
    c.output_path = d.string();
    const auto res = run_scenario(c);
    const auto text = slurp(d / "roots.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 101);
    EXPECT_LT(res.manifest["results"]["max_residual"].get<double>(), 1e-10);
    fs::remove_all(d);
}

TEST(Cli, FigureOneAndCompare) {
    const auto d = scratch_dir("cli_fig1");
    const auto log = d / "log.txt";
    ASSERT_EQ(run_cli("figure1 --panel c --n_points 301 --t_end 100 --output_path " + (d / "out").string(), log), 0)
        << slurp(log);
    EXPECT_TRUE(fs::exists(d / "out" / "numeric-free.csv"));
    EXPECT_TRUE(fs::exists(d / "out" / "analytic-beat.csv"));
    EXPECT_TRUE(fs::exists(d / "out" / "figure1_c.gp"));
    const auto m = json::parse(slurp(d / "out" / "manifest.json"));
    EXPECT_EQ(m["config"]["params"]["g2"], 0.1);

    const auto num = (d / "out" / "numeric-free.csv").string();
    const auto ex = (d / "out" / "analytic-exact.csv").string();
    EXPECT_EQ(run_cli("compare " + num + " " + num + " --tolerance 1e-15", log), 0);
    EXPECT_EQ(run_cli("compare " + num + " " + ex + " --tolerance 1e-6", log), 0) << slurp(log);
    EXPECT_EQ(run_cli("compare " + num + " " + ex + " --tolerance 1e-14", log), 1);

    // Re-run from the manifest into a second directory.
    ASSERT_EQ(run_cli("run --config " + (d / "out" / "manifest.json").string() + " --output_path " +
                          (d / "again").string(),
                      log),
              0)
        << slurp(log);
    EXPECT_EQ(run_cli("compare " + num + " " + (d / "again" / "numeric-free.csv").string() + " --tolerance 1e-12", log),
              0);
    fs::remove_all(d);
}

TEST(Cli, ErrorsAreReported) {
    const auto d = scratch_dir("cli_err");
    const auto log = d / "log.txt";
    EXPECT_NE(run_cli("simulate --g2 1.5 --output_path " + (d / "x").string(), log), 0);
    EXPECT_NE(slurp(log).find("params"), std::string::npos);

    std::ofstream(d / "bad.json") << R"({"params":{"g1":0.1,"oops":2}})";
    EXPECT_NE(run_cli("simulate --config " + (d / "bad.json").string(), log), 0);
    EXPECT_NE(slurp(log).find("params.oops"), std::string::npos);

    write_trace_csv(d / "a.csv", sample_trace());
    auto other = sample_trace();
    other.times.back() += 1.0;
    write_trace_csv(d / "b.csv", other);
    EXPECT_EQ(run_cli("compare " + (d / "a.csv").string() + " " + (d / "b.csv").string(), log), 2);
    EXPECT_NE(slurp(log).find("grid"), std::string::npos);
    fs::remove_all(d);
}

TEST(Cli, EstimateFromCsv) {
    const auto d = scratch_dir("cli_est");
    const auto log = d / "log.txt";
    SystemParams p;
    p.g2 = 0.02;
    p.temperature = 10.0;
    const double t1 = 2.0 * std::numbers::pi / derived_frequencies(p).beat;
    write_trace_csv(d / "trace.csv", coherence_beat(p, density_grid(0.0, 3.5 * t1, t1, 400.0)));
    ASSERT_EQ(run_cli("estimate --input_path " + (d / "trace.csv").string() + " --min_separation " +
                          std::to_string(0.5 * t1) + " --output_path " + (d / "out").string(),
                      log),
              0)
        << slurp(log);
    const auto r = json::parse(slurp(d / "out" / "estimate.json"));
    EXPECT_EQ(r["n_peaks_used"], 3);
    EXPECT_LT(std::abs(r["g2_estimate"].get<double>() - 0.02) / 0.02, 1e-3);
    fs::remove_all(d);
}
