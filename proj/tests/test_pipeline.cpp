#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "quenchlab/config.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/exact.hpp"
#include "quenchlab/field_io.hpp"
#include "quenchlab/pipeline.hpp"
#include "quenchlab/report.hpp"

using namespace quenchlab;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::usage;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("quenchlab_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

const char* kOdeConfig = R"([model]
p = 3
n = 1

[grid]
origin = -2
extent = 4
cells = 64
time_start = -1
time_end = 0

[source]
kind = synthetic
profile = ode
time_samples = 201

[run]
seed = 5
output_dir = run

[analysis.1]
op = holder_seminorm
exponent = 0.5
budget = 2000

[analysis.2]
op = weighted_energy
point = 0, 0
s = 0.01

[analysis.3]
op = rupture_set
tau = 0.001

[analysis.4]
op = density_estimate
point = 0, -0.5
s_min = 0.02
s_max = 0.2
)";

SpaceTimeField small_field() {
    const ModelParams m(3.0, 2);
    return tabulate(m, GridSpec::box(2, -1, 1, 4, -1, 0), linspace(-1, 0, 3),
                    [](const SpatialPoint& x, double t) { return 1.0 + x[0] * x[1] - t; },
                    BoundaryKind::dirichlet_traced);
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(QUENCHLAB_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, ParsesSectionsAndAnalyses) {
    const RunConfig c = parse_config(kOdeConfig, "/base");
    EXPECT_EQ(c.model.p(), 3.0);
    ASSERT_TRUE(c.grid.has_value());
    EXPECT_EQ(c.grid->cells, std::vector<std::size_t>{64});
    EXPECT_EQ(c.source.kind, SourceSpec::Kind::synthetic);
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.output_dir, fs::path("/base/run"));
    ASSERT_EQ(c.analyses.size(), 4u);
    EXPECT_EQ(c.analyses[1].op, "weighted_energy");
    EXPECT_EQ(c.analyses[1].list("point"), (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(c.analyses[1].number("s", 1.0), 0.01);
    EXPECT_EQ(c.analyses[1].number("missing", 1.5), 1.5);
    EXPECT_EQ(c.digest, parse_config(kOdeConfig, "/base").digest);
    EXPECT_EQ(c.digest, fnv1a_hex(kOdeConfig));
}

TEST(Config, RejectsUnknownEntries) {
    EXPECT_EQ(kind_of([] { parse_config("[model]\np = 3\nn = 1\ncolour = red\n"); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([] { parse_config("[mesh]\ncells = 3\n"); }), ErrorKind::validation);
    EXPECT_EQ(kind_of([] { parse_config("[model]\np = 0.5\nn = 1\n"); }), ErrorKind::validation);
    try {
        parse_config(std::string(kOdeConfig) + "\n[analysis.9]\nop = fourier\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::validation);
        EXPECT_NE(std::string(e.what()).find("density_estimate"), std::string::npos);
    }
    try {
        parse_config("[model]\np = 3\n[grid\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_EQ(kind_of([] { load_config("/nonexistent/run.ini"); }), ErrorKind::usage);
    EXPECT_EQ(known_operations().size(), 14u);
}

TEST(FieldIo, RoundTripIsBitwise) {
    const SpaceTimeField f = small_field();
    const auto bytes = encode_field(f);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QLF1");
    const SpaceTimeField g = decode_field(bytes);
    EXPECT_TRUE(f == g);
    EXPECT_EQ(encode_field(g), bytes);

    const fs::path dir = scratch_dir("io");
    save_field(f, dir / "f.qlf");
    EXPECT_TRUE(load_field(dir / "f.qlf") == f);
    EXPECT_FALSE(fs::exists(dir / "f.qlf.tmp"));
}

TEST(FieldIo, DetectsCorruption) {
    auto bytes = encode_field(small_field());
    auto flipped = bytes;
    flipped[40] ^= 0x01;
    EXPECT_EQ(kind_of([&] { decode_field(flipped); }), ErrorKind::corrupt_file);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 9);
    EXPECT_EQ(kind_of([&] { decode_field(truncated); }), ErrorKind::corrupt_file);
    auto future = bytes;
    future[3] = '2';
    EXPECT_EQ(kind_of([&] { decode_field(future); }), ErrorKind::unsupported_version);
    auto alien = bytes;
    alien[0] = 'X';
    EXPECT_EQ(kind_of([&] { decode_field(alien); }), ErrorKind::corrupt_file);
}

TEST(Report, CanonicalJsonIsSortedAndExact) {
    nlohmann::json j = {{"b", 0.1}, {"a", {{"z", 1}, {"y", std::nan("")}}}, {"c", 2.0}};
    const std::string text = canonical_json(j);
    EXPECT_LT(text.find("\"a\""), text.find("\"b\""));
    EXPECT_LT(text.find("\"y\""), text.find("\"z\""));
    EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
    EXPECT_NE(text.find("null"), std::string::npos);
    EXPECT_NE(text.find("2.0"), std::string::npos);
    EXPECT_EQ(text.back(), '\n');
    EXPECT_EQ(kind_of([] { parse_report("{not json"); }), ErrorKind::corrupt_file);
    EXPECT_EQ(kind_of([] { parse_report_format("xml"); }), ErrorKind::usage);
}

TEST(Pipeline, ProfilesMatchClosedForms) {
    const ModelParams m(3.0, 2);
    SourceSpec s;
    s.profile = "dip";
    s.value = 1.0;
    s.amplitude = 0.5;
    s.width = 0.5;
    EXPECT_NEAR(profile_value(m, s, {0.5, 0.0, 0.0}, 0.0), 1.0 - 0.5 * std::exp(-1.0), 1e-15);
    s.profile = "abs_x1x2";
    EXPECT_EQ(profile_value(m, s, {-0.5, 0.4, 0.0}, 0.0), 0.2);
    s.profile = "ode";
    EXPECT_NEAR(profile_value(m, s, {}, -0.25), 1.0, 1e-15);
    s.profile = "unknown";
    EXPECT_EQ(kind_of([&] { profile_value(m, s, {}, 0.0); }), ErrorKind::validation);
    EXPECT_EQ(known_profiles().size(), 8u);
}

TEST(Pipeline, SyntheticRunWritesDeterministicArtifacts) {
    const fs::path dir = scratch_dir("synthetic");
    RunConfig c = parse_config(kOdeConfig, dir);
    const Report first = run_pipeline(c);
    EXPECT_FALSE(first.first_error.has_value()) << canonical_json(first.document);
    const std::string json1 = read_file(dir / "run" / "report.json");
    const std::string field1 = read_file(dir / "run" / "field.qlf");
    EXPECT_TRUE(fs::exists(dir / "run" / "analysis_2_rupture_set.csv"));
    EXPECT_TRUE(fs::exists(dir / "run" / "analysis_3_density_estimate.csv"));

    const auto& analyses = first.document["analyses"];
    ASSERT_EQ(analyses.size(), 4u);
    EXPECT_NEAR(analyses[0]["result"]["seminorm"].get<double>(), std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(analyses[1]["result"]["value"].get<double>(), -0.5, 1e-4);
    EXPECT_EQ(analyses[2]["result"]["points"].get<std::size_t>(), 65u);
    EXPECT_TRUE(analyses[3]["result"]["diverging"].get<bool>());

    ::setenv("QUENCHLAB_THREADS", "3", 1);
    run_pipeline(c);
    ::unsetenv("QUENCHLAB_THREADS");
    EXPECT_EQ(read_file(dir / "run" / "report.json"), json1);
    EXPECT_EQ(read_file(dir / "run" / "field.qlf"), field1);

    const Report back = parse_report(json1);
    EXPECT_EQ(back.document, first.document);
    const std::string text = emit_report(back, ReportFormat::text);
    EXPECT_NE(text.find("== analysis 0: holder_seminorm"), std::string::npos);
}

TEST(Pipeline, OracleConfigsReproduceClosedForms) {
    const fs::path dir = scratch_dir("oracles");
    const std::string ode = R"([model]
p = 3
n = 1
[grid]
origin = -2
extent = 4
cells = 256
time_start = -1
time_end = 0
[source]
kind = synthetic
profile = ode
time_samples = 400
time_grading = 4
[run]
output_dir = ode
[analysis.1]
op = density_estimate
point = 0, 0
s_min = 1e-4
s_max = 0.25
)";
    const Report a = run_pipeline(parse_config(ode, dir));
    EXPECT_NEAR(a.document["analyses"][0]["result"]["theta"].get<double>(), -0.5, 1e-3);

    const std::string abs = R"([model]
p = 3
n = 1
[grid]
origin = -10
extent = 20
cells = 160
time_start = -1.5
time_end = 0
[source]
kind = synthetic
profile = abs_x1
time_samples = 4
[run]
output_dir = abs
[analysis.1]
op = almgren_scan
point = 0, 0
k = 6
eta = false
gamma_half = 0.5
)";
    const Report b = run_pipeline(parse_config(abs, dir));
    const auto& res = b.document["analyses"][0]["result"];
    ASSERT_EQ(b.document["analyses"][0]["status"], "ok") << canonical_json(b.document);
    EXPECT_LE(res["max_gamma_deviation"].get<double>(), 1e-3);
    EXPECT_TRUE(res["violations"].empty());
}

TEST(Pipeline, AnalysisErrorsAreIsolated) {
    const fs::path dir = scratch_dir("isolated");
    std::string text = kOdeConfig;
    text += "\n[analysis.5]\nop = weighted_energy\npoint = 0, 0\ns = 5\n";
    const Report r = run_pipeline(parse_config(text, dir));
    ASSERT_TRUE(r.first_error.has_value());
    EXPECT_EQ(*r.first_error, ErrorKind::domain);
    EXPECT_EQ(r.document["analyses"][4]["status"], "error");
    EXPECT_EQ(r.document["analyses"][0]["status"], "ok");
    EXPECT_EQ(r.document["violations"]["failed_analyses"].get<int>(), 1);
}

TEST(Pipeline, BudgetExhaustionKeepsPartialField) {
    const fs::path dir = scratch_dir("budget");
    const std::string text = R"([model]
p = 3
n = 1
[grid]
origin = -1
extent = 2
cells = 32
time_start = 0
time_end = 10
[source]
kind = solve
profile = dip
[solver]
max_steps = 20
[run]
output_dir = out
[analysis.1]
op = comparison_guard
)";
    const Report r = run_pipeline(parse_config(text, dir));
    ASSERT_TRUE(r.first_error.has_value());
    EXPECT_EQ(*r.first_error, ErrorKind::budget);
    EXPECT_EQ(r.document["solve"]["status"], "error");
    EXPECT_EQ(load_field(dir / "out" / "field.qlf").slab_count(), 21u);
    EXPECT_TRUE(r.document["analyses"][0]["result"]["holds"].get<bool>());
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch_dir("cli");
    save_field(small_field(), dir / "f.qlf");
    auto bytes = encode_field(small_field());
    bytes[20] ^= 0xff;
    {
        std::ofstream out(dir / "bad.qlf", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    const std::string good = (dir / "f.qlf").string();
    EXPECT_EQ(run_cli("analyze --field " + good + " --op rupture_set --param tau=1.5"), 0);
    EXPECT_EQ(run_cli("analyze --field " + (dir / "bad.qlf").string() + " --op rupture_set"), 5);
    EXPECT_EQ(run_cli("analyze --field " + good + " --op fourier"), 2);
    EXPECT_EQ(run_cli("analyze --field " + good + " --op weighted_energy --point 0,0,-0.5 --param s=5"), 2);
    EXPECT_EQ(run_cli("simulate --config " + (dir / "missing.ini").string()), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("report --run " + dir.string()), 2);
}
