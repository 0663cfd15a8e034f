#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "quenchlab/config.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/field_io.hpp"
#include "quenchlab/pipeline.hpp"
#include "quenchlab/report.hpp"
#include "quenchlab/rupture.hpp"

namespace fs = std::filesystem;
using namespace quenchlab;

namespace {

int simulate(const std::string& config_path) {
    const RunConfig cfg = load_config(config_path);
    const Report report = run_pipeline(cfg);
    std::cout << emit_report(report, ReportFormat::text);
    std::cout << fmt::format("\noutputs written to {}\n", cfg.output_dir.string());
    return report.first_error ? exit_code(*report.first_error) : 0;
}

int analyze(const std::string& field_path, const std::string& op, const std::string& point,
            const std::string& config_path, const std::vector<std::string>& params) {
    AnalysisRequest req;
    req.op = op;
    AnalysisContext ctx;
    if (!config_path.empty()) {
        const RunConfig cfg = load_config(config_path);
        ctx.seed = cfg.seed;
        ctx.boundary = make_boundary(cfg.model, cfg.boundary);
        for (const auto& a : cfg.analyses) {
            if (a.op == op) {
                req.params = a.params;
                break;
            }
        }
    }
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::usage, fmt::format("--param expects key=value, got '{}'", kv));
        }
        req.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!point.empty()) req.params["point"] = point;
    const SpaceTimeField field = load_field(field_path);
    const AnalysisOutput out = run_analysis(field, req, ctx);
    nlohmann::json doc = {{"op", op}, {"params", req.params}, {"result", out.result}};
    std::cout << canonical_json(doc);
    if (!out.table.empty()) std::cout << "\n" << out.table.render();
    return 0;
}

int dimension(const std::string& field_path, const std::string& tau_text) {
    const SpaceTimeField field = load_field(field_path);
    AnalysisRequest req;
    req.params["tau"] = tau_text;
    nlohmann::json doc;
    req.op = "parabolic_dimension";
    doc["parabolic"] = run_analysis(field, req, {}).result;
    req.op = "slice_dimension";
    doc["slice"] = run_analysis(field, req, {}).result;
    std::cout << canonical_json(doc);
    return 0;
}

int report(const std::string& run_dir, const std::string& format) {
    const ReportFormat f = parse_report_format(format);
    const Report r = parse_report(read_file(fs::path(run_dir) / "report.json"));
    std::cout << emit_report(r, f);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quenchlab: numerical lab for the quenching equation u_t - Lap u = -u^{-p}"};
    app.require_subcommand(1);

    std::string config_path;
    auto* sim = app.add_subcommand("simulate", "run a configured pipeline");
    sim->add_option("--config", config_path, "INI run configuration")->required();

    std::string field_path, op, point, analyze_config;
    std::vector<std::string> params;
    auto* an = app.add_subcommand("analyze", "run one analysis on a stored field");
    an->add_option("--field", field_path, "QLF1 field file")->required();
    an->add_option("--op", op, "operation name")->required();
    an->add_option("--point", point, "base point x1,...,xn,t");
    an->add_option("--config", analyze_config, "config supplying seed, boundary and parameters");
    an->add_option("--param", params, "extra parameter key=value (repeatable)");

    std::string dim_field, tau = "auto";
    auto* dim = app.add_subcommand("dimension", "rupture-set dimension of a stored field");
    dim->add_option("--field", dim_field, "QLF1 field file")->required();
    dim->add_option("--tau", tau, "threshold, or auto (1.1 [u] h^alpha)");

    std::string run_dir, format = "json";
    auto* rep = app.add_subcommand("report", "print the report of a finished run");
    rep->add_option("--run", run_dir, "output directory of a run")->required();
    rep->add_option("--format", format, "json or text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return simulate(config_path);
        if (an->parsed()) return analyze(field_path, op, point, analyze_config, params);
        if (dim->parsed()) return dimension(dim_field, tau);
        if (rep->parsed()) return report(run_dir, format);
    } catch (const Error& e) {
        std::cerr << fmt::format("error [{}]: {}\n", to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << fmt::format("error: {}\n", e.what());
        return 1;
    }
    return 0;
}
