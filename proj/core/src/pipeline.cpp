#include "quenchlab/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "quenchlab/errors.hpp"
#include "quenchlab/exact.hpp"
#include "quenchlab/field_io.hpp"
#include "quenchlab/monotonicity.hpp"
#include "quenchlab/rupture.hpp"
#include "quenchlab/weak.hpp"

namespace quenchlab {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string double_text(double v) { return fmt::format("{:.17g}", v); }

json point_json(const ParabolicPoint& p) {
    json a = json::array();
    for (int d = 0; d < p.n; ++d) a.push_back(p.x[d]);
    a.push_back(p.t);
    return a;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

ParabolicPoint request_point(const SpaceTimeField& field, const AnalysisRequest& req,
                             const AnalysisContext& ctx) {
    const int n = field.dim();
    if (req.has("point")) {
        const auto v = req.list("point");
        require(v.size() == static_cast<std::size_t>(n + 1), ErrorKind::usage,
                fmt::format("point needs {} coordinates followed by a time", n));
        ParabolicPoint p;
        p.n = n;
        for (int d = 0; d < n; ++d) p.x[d] = v[d];
        p.t = v[n];
        return p;
    }
    if (ctx.quench && !ctx.quench->quench_points.empty()) {
        ParabolicPoint p = ctx.quench->quench_points.front();
        p.t = field.times().back();
        return p;
    }
    fail(ErrorKind::usage, fmt::format("analysis '{}' needs a 'point' parameter", req.op));
}

WeightSpec request_weight(const AnalysisRequest& req, bool eta_default) {
    WeightSpec w;
    w.truncation_multiple = req.number("k", 6.0);
    w.u_floor = req.number("u_floor", 0.0);
    if (req.flag("eta", eta_default)) {
        CutoffSpec eta;
        eta.inner_radius = req.number("inner", 0.5);
        eta.outer_radius = req.number("outer", 1.0);
        w.eta = eta;
    } else {
        w.eta.reset();
    }
    w.validate();
    return w;
}

double domain_scale(const GridSpec& g, std::span<const double> times) {
    double extent = std::sqrt(times.back() - times.front());
    for (double e : g.extent) extent = std::max(extent, e);
    return extent;
}

// tau = <value> | auto; otherwise kappa * h^alpha with kappa = 4 by default.
double request_threshold(const SpaceTimeField& field, const AnalysisRequest& req,
                         const AnalysisContext& ctx, std::optional<std::size_t> slab = {}) {
    if (req.text("tau", "") == "auto") return auto_threshold(field, ctx.seed, slab);
    if (auto tau = req.maybe_number("tau")) return *tau;
    return recommended_threshold(field, req.number("kappa", 4.0));
}

std::size_t nearest_slab(const SpaceTimeField& field, double t) {
    const auto times = field.times();
    std::size_t best = 0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
    }
    return best;
}

std::vector<double> request_radii(const SpaceTimeField& field, const AnalysisRequest& req) {
    const double h = field.spacing();
    double r_max = req.number("r_max", 0.0);
    if (r_max <= 0.0) {
        // Largest h * 2^k not exceeding a quarter of the domain scale.
        r_max = 4.0 * h;
        const double limit = domain_scale(field.grid(), field.times()) / 4.0;
        while (2.0 * r_max <= limit * (1.0 + 1e-12)) r_max *= 2.0;
    }
    return dyadic_radii(r_max, req.number("r_min", 4.0 * h));
}

json fit_json(const DimensionFit& f) {
    return json{{"fitted_dim", f.fitted_dim},
                {"residual", f.residual},
                {"degenerate", f.degenerate},
                {"fit_range", json::array({f.fit_range.first, f.fit_range.second})},
                {"radii", f.radii},
                {"counts", f.counts}};
}

CsvTable fit_table(const DimensionFit& f) {
    CsvTable t;
    t.header = {"r", "count"};
    for (std::size_t i = 0; i < f.radii.size(); ++i) {
        t.rows.push_back({f.radii[i], static_cast<double>(f.counts[i])});
    }
    return t;
}

json violations_json(const std::vector<Violation>& v) {
    json a = json::array();
    for (const auto& x : v) {
        a.push_back({{"s_lo", x.s_lo}, {"s_hi", x.s_hi}, {"magnitude", x.magnitude}});
    }
    return a;
}

using Handler = AnalysisOutput (*)(const SpaceTimeField&, const AnalysisRequest&,
                                   const AnalysisContext&);

AnalysisOutput op_holder(const SpaceTimeField& f, const AnalysisRequest& r,
                         const AnalysisContext& ctx) {
    const double e = r.number("exponent", f.params().alpha());
    const std::size_t budget = r.count("budget", 10000);
    const auto seed = static_cast<std::uint64_t>(r.count("seed", ctx.seed));
    const HolderEstimate h = holder_seminorm(f, e, budget, seed);
    AnalysisOutput out;
    out.result = {{"exponent", h.exponent},
                  {"seminorm", h.seminorm},
                  {"witness", json::array({point_json(h.witness.first), point_json(h.witness.second)})},
                  {"pairs_sampled", h.pairs_sampled},
                  {"seed", seed},
                  {"refinement_radius_nodes", 4}};
    return out;
}

AnalysisOutput op_rupture_set(const SpaceTimeField& f, const AnalysisRequest& r,
                              const AnalysisContext& ctx) {
    const RuptureSet s = rupture_set(f, request_threshold(f, r, ctx));
    AnalysisOutput out;
    out.result = {{"threshold", s.threshold}, {"points", s.points.size()}};
    for (int d = 0; d < f.dim(); ++d) out.table.header.push_back(fmt::format("x{}", d + 1));
    out.table.header.push_back("t");
    for (const auto& p : s.points) {
        std::vector<double> row(p.x.begin(), p.x.begin() + p.n);
        row.push_back(p.t);
        out.table.rows.push_back(std::move(row));
    }
    return out;
}

AnalysisOutput op_parabolic_dimension(const SpaceTimeField& f, const AnalysisRequest& r,
                                      const AnalysisContext& ctx) {
    const RuptureSet s = rupture_set(f, request_threshold(f, r, ctx));
    require(!s.points.empty(), ErrorKind::domain, "rupture set is empty at this threshold");
    const auto radii = request_radii(f, r);
    const DimensionFit fit = parabolic_box_dimension(s, radii);
    AnalysisOutput out;
    out.result = fit_json(fit);
    out.result["threshold"] = s.threshold;
    out.result["points"] = s.points.size();
    out.table = fit_table(fit);
    return out;
}

AnalysisOutput op_slice_dimension(const SpaceTimeField& f, const AnalysisRequest& r,
                                  const AnalysisContext& ctx) {
    const double t = r.number("t", f.times().back());
    const RuptureSet s = rupture_set(f, request_threshold(f, r, ctx, nearest_slab(f, t)));
    const auto radii = request_radii(f, r);
    const DimensionFit fit = slice_dimension(s, t, radii);
    AnalysisOutput out;
    out.result = fit_json(fit);
    out.result["threshold"] = s.threshold;
    out.result["t"] = t;
    out.table = fit_table(fit);
    return out;
}

AnalysisOutput op_apriori(const SpaceTimeField& f, const AnalysisRequest& r,
                          const AnalysisContext& ctx) {
    const ParabolicPoint x0 = request_point(f, r, ctx);
    const ScalingQuantity q = parse_scaling_quantity(r.text("quantity", "u_inv_p"));
    const double r_max = r.number("r_max", 0.25);
    const auto radii = dyadic_radii(r_max, r.number("r_min", r_max / 8.0));
    const ScalingFit fit = apriori_scaling_check(f, x0, q, radii);
    AnalysisOutput out;
    out.result = {{"quantity", to_string(q)},
                  {"exponent", fit.fit.fitted_dim},
                  {"expected_exponent", fit.expected_exponent},
                  {"residual", fit.fit.residual},
                  {"excluded_fraction", fit.excluded_fraction},
                  {"point", point_json(x0)}};
    out.table.header = {"r", "integral"};
    for (std::size_t i = 0; i < radii.size(); ++i) out.table.rows.push_back({radii[i], fit.integrals[i]});
    return out;
}

json weighted_json(const WeightedValue& v, const WeightSpec& w) {
    return {{"value", v.value},
            {"flagged", v.flagged},
            {"excluded_fraction", v.excluded_fraction},
            {"tail_bound", v.tail_bound},
            {"truncation_multiple", w.truncation_multiple},
            {"eta_weighted", w.eta.has_value()}};
}

AnalysisOutput op_weighted_energy(const SpaceTimeField& f, const AnalysisRequest& r,
                                  const AnalysisContext& ctx) {
    const WeightSpec w = request_weight(r, true);
    const WeightedValue v = weighted_energy(f, request_point(f, r, ctx), r.number("s", 0.01), w);
    return {weighted_json(v, w), {}};
}

AnalysisOutput op_averaged_energy(const SpaceTimeField& f, const AnalysisRequest& r,
                                  const AnalysisContext& ctx) {
    const WeightSpec w = request_weight(r, true);
    const WeightedValue v = averaged_energy(f, request_point(f, r, ctx), r.number("s", 0.01), w,
                                            r.count("samples", 9));
    return {weighted_json(v, w), {}};
}

AnalysisOutput op_density(const SpaceTimeField& f, const AnalysisRequest& r,
                          const AnalysisContext& ctx) {
    const WeightSpec w = request_weight(r, true);
    SlackModel slack;
    slack.tol_abs = r.number("tol_abs", slack.tol_abs);
    slack.tol_exp = r.number("tol_exp", slack.tol_exp);
    const double s_max = r.number("s_max", 0.25);
    const double s_min = r.number("s_min", s_max / 1024.0);
    const DensityResult d = density_estimate(f, request_point(f, r, ctx), w, s_min, s_max, slack);
    const MonotonicityTrace& tr = d.trace;
    AnalysisOutput out;
    out.result = {{"theta", optional_json(d.theta)},
                  {"diverging", d.diverging},
                  {"divergence_slope", tr.divergence_slope},
                  {"violations", violations_json(tr.violations)},
                  {"accuracy_flagged", tr.accuracy_flagged},
                  {"eta_weighted", tr.eta_weighted},
                  {"tail_bound", tr.tail_bound},
                  {"tol_abs", slack.tol_abs},
                  {"tol_exp", slack.tol_exp},
                  {"point", point_json(tr.base_point)}};
    out.table.header = {"s", "E", "Ebar"};
    for (std::size_t i = 0; i < tr.s_samples.size(); ++i) {
        out.table.rows.push_back({tr.s_samples[i], tr.E_values[i], tr.Ebar_values[i]});
    }
    return out;
}

AnalysisOutput op_frequency(const SpaceTimeField& f, const AnalysisRequest& r,
                            const AnalysisContext& ctx) {
    const WeightSpec w = request_weight(r, false);
    const FrequencyValue v = frequency(f, request_point(f, r, ctx), r.number("s", 0.5), w);
    AnalysisOutput out;
    out.result = {{"H", v.H}, {"D", v.D}, {"N", optional_json(v.N)}, {"tail_bound", v.tail_bound}};
    return out;
}

AnalysisOutput op_almgren(const SpaceTimeField& f, const AnalysisRequest& r,
                          const AnalysisContext& ctx) {
    const WeightSpec w = request_weight(r, false);
    const double s_min = r.number("s_min", 0.1);
    const double s_max = r.number("s_max", 1.0);
    const std::size_t count = r.count("count", 10);
    require(count >= 3 && s_min > 0.0 && s_max > s_min, ErrorKind::usage,
            "almgren_scan needs count >= 3 and 0 < s_min < s_max");
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = s_min * std::pow(s_max / s_min, static_cast<double>(i) / static_cast<double>(count - 1));
    }
    grid.back() = s_max;
    const double tol = r.number("tolerance", 1e-6);
    const FrequencyTrace tr = almgren_scan(f, request_point(f, r, ctx), w, grid,
                                           r.maybe_number("gamma_half"), r.flag("claim", true), tol);
    AnalysisOutput out;
    out.result = {{"max_gamma_deviation", optional_json(tr.max_gamma_deviation)},
                  {"gamma_half_reference", optional_json(tr.gamma_half_reference)},
                  {"monotonicity_claimed", tr.monotonicity_claimed},
                  {"violations", violations_json(tr.violations)},
                  {"underflow_count", tr.underflow_count},
                  {"log_h_identity_error", optional_json(tr.log_h_identity_error)},
                  {"tolerance", tol},
                  {"tail_bound", gaussian_tail_mass(f.dim(), w.truncation_multiple)},
                  {"point", point_json(tr.base_point)}};
    out.table.header = {"s", "H", "D", "N"};
    for (std::size_t i = 0; i < tr.s_samples.size(); ++i) {
        out.table.rows.push_back({tr.s_samples[i], tr.H_values[i], tr.D_values[i],
                                  tr.N_values[i].value_or(std::numeric_limits<double>::quiet_NaN())});
    }
    return out;
}

std::vector<double> request_lambdas(const AnalysisRequest& r) {
    return r.has("lambdas") ? r.list("lambdas") : std::vector<double>{0.5, 0.25, 0.125};
}

AnalysisOutput op_blowup(const SpaceTimeField& f, const AnalysisRequest& r,
                         const AnalysisContext& ctx) {
    const ParabolicPoint x0 = request_point(f, r, ctx);
    const double radius = r.number("target_radius", 1.0);
    const std::size_t cells = r.count("target_cells", 16);
    const double t_min = r.number("target_t_min", -1.0);
    const GridSpec target = GridSpec::box(f.dim(), -radius, radius, cells, t_min, 0.0);
    const auto times = linspace(t_min, 0.0, r.count("target_time_samples", 5));
    const auto lambdas = request_lambdas(r);
    const double tol = r.number("tolerance", 1e-3);
    const BlowupSequence seq = blowup_sequence(f, x0, lambdas, target, times, tol);
    AnalysisOutput out;
    out.result = {{"converged", seq.converged},
                  {"sup_norms", seq.sup_norms},
                  {"sup_differences", seq.sup_differences},
                  {"tolerance", tol},
                  {"point", point_json(x0)}};
    out.table.header = {"lambda", "sup_norm", "sup_difference"};
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        out.table.rows.push_back({lambdas[i], seq.sup_norms[i],
                                  i == 0 ? std::numeric_limits<double>::quiet_NaN()
                                         : seq.sup_differences[i - 1]});
    }
    return out;
}

AnalysisOutput op_self_similarity(const SpaceTimeField& f, const AnalysisRequest& r,
                                  const AnalysisContext& ctx) {
    ParabolicCylinder q;
    q.center = request_point(f, r, ctx);
    q.radius = r.number("radius", 1.0);
    const auto lambdas = request_lambdas(r);
    AnalysisOutput out;
    out.result = {{"residual", self_similarity_residual(f, lambdas, q)},
                  {"radius", q.radius},
                  {"lambdas", lambdas}};
    return out;
}

AnalysisOutput op_two_valued(const SpaceTimeField& f, const AnalysisRequest& r,
                             const AnalysisContext& ctx) {
    const int n = f.dim();
    CutoffSpec eta;
    if (r.has("center")) {
        const auto c = r.list("center");
        require(c.size() == static_cast<std::size_t>(n), ErrorKind::usage,
                fmt::format("center needs {} coordinates", n));
        for (int d = 0; d < n; ++d) eta.center[d] = c[d];
    } else if (r.has("point") || ctx.quench) {
        eta.center = request_point(f, r, ctx).x;
    }
    eta.inner_radius = r.number("inner", 0.5);
    eta.outer_radius = r.number("outer", 1.0);
    eta.validate();
    const auto times = f.times();
    SpaceTimeBump psi;
    psi.space = eta;
    psi.time_center = 0.5 * (times.front() + times.back());
    psi.time_inner = 0.25 * (times.back() - times.front());
    psi.time_outer = 0.45 * (times.back() - times.front());
    std::vector<TestVectorField> ys;
    for (int k = 0; k < n; ++k) ys.push_back(TestVectorField::coordinate(psi, k));
    ys.push_back(TestVectorField::radial(psi));
    const std::vector<CutoffSpec> etas{eta};
    const double tol = r.number("tolerance", 1e-3);
    const TwoValuedCheck check = two_valued_caloric_check(f, etas, ys, tol);
    static const char* names[] = {"gradients", "subcaloric", "contact", "stationary", "energy"};
    AnalysisOutput out;
    out.result = {{"all_passed", check.all_passed()},
                  {"tolerance", tol},
                  {"dictionary_size", check.dictionary_size}};
    out.table.header = {"condition", "value", "scale", "violation", "passed"};
    for (std::size_t i = 0; i < check.conditions.size(); ++i) {
        const auto& c = check.conditions[i];
        out.result["conditions"][names[i]] = {{"value", c.report.value},
                                              {"scale", c.report.scale},
                                              {"violation", c.violation},
                                              {"passed", c.passed},
                                              {"excluded_measure", c.report.excluded_measure}};
        out.table.rows.push_back({static_cast<double>(i + 1), c.report.value, c.report.scale,
                                  c.violation, c.passed ? 1.0 : 0.0});
    }
    return out;
}

AnalysisOutput op_comparison(const SpaceTimeField& f, const AnalysisRequest& r,
                             const AnalysisContext& ctx) {
    require(ctx.boundary.has_value(), ErrorKind::usage, "comparison_guard needs boundary data");
    SolverConfig sc;
    sc.epsilon_reg = r.number("epsilon_reg", sc.epsilon_reg);
    const double excess = comparison_guard(f, *ctx.boundary, sc);
    const double tol = r.number("tolerance", 1e-9);
    AnalysisOutput out;
    out.result = {{"max_excess", excess}, {"tolerance", tol}, {"holds", excess <= tol}};
    return out;
}

Handler find_handler(const std::string& op) {
    static const std::map<std::string, Handler> table = {
        {"almgren_scan", op_almgren},
        {"apriori_scaling", op_apriori},
        {"averaged_energy", op_averaged_energy},
        {"blowup_sequence", op_blowup},
        {"comparison_guard", op_comparison},
        {"density_estimate", op_density},
        {"frequency", op_frequency},
        {"holder_seminorm", op_holder},
        {"parabolic_dimension", op_parabolic_dimension},
        {"rupture_set", op_rupture_set},
        {"self_similarity", op_self_similarity},
        {"slice_dimension", op_slice_dimension},
        {"two_valued_check", op_two_valued},
        {"weighted_energy", op_weighted_energy},
    };
    auto it = table.find(op);
    if (it == table.end()) {
        fail(ErrorKind::validation, fmt::format("unknown operation '{}'", op));
    }
    return it->second;
}

json error_json(const Error& e) { return {{"kind", to_string(e.kind())}, {"message", e.what()}}; }

}  // namespace

std::string CsvTable::render() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + double_text(row[i]);
        out += "\n";
    }
    return out;
}

std::vector<std::string> known_profiles() {
    return {"abs_x1", "abs_x1_alpha", "abs_x1x2", "constant", "dip", "halfplane", "ode",
            "radial_steady"};
}

double profile_value(const ModelParams& params, const SourceSpec& s, const SpatialPoint& x,
                     double t) {
    const std::string& name = s.profile;
    if (name == "constant") return s.value;
    if (name == "abs_x1") return std::abs(x[0]);
    if (name == "abs_x1_alpha") return std::pow(std::abs(x[0]), params.alpha());
    if (name == "abs_x1x2") {
        require(params.n() >= 2, ErrorKind::validation, "profile abs_x1x2 needs n >= 2");
        return std::abs(x[0] * x[1]);
    }
    if (name == "halfplane") return std::max(x[0], 0.0);
    if (name == "ode") return t < 0.0 ? ode_solution(params, t) : 0.0;
    if (name == "radial_steady") return radial_steady(params, x);
    if (name == "dip") {
        double r2 = 0.0;
        for (int d = 0; d < params.n(); ++d) r2 += x[d] * x[d];
        return s.value - s.amplitude * std::exp(-r2 / (s.width * s.width));
    }
    std::string known;
    for (const auto& p : known_profiles()) known += (known.empty() ? "" : ", ") + p;
    fail(ErrorKind::validation, fmt::format("unknown profile '{}' (known: {})", name, known));
}

SpaceTimeField synthetic_field(const ModelParams& params, const GridSpec& grid,
                               const SourceSpec& source) {
    auto times = graded_times(grid.time_start, grid.time_end, source.time_samples,
                              source.time_grading);
    return tabulate(params, grid, std::move(times),
                    [&](const SpatialPoint& x, double t) { return profile_value(params, source, x, t); });
}

BoundaryData make_boundary(const ModelParams& params, const BoundarySpec& spec) {
    if (spec.kind == "constant") return BoundaryData::constant(spec.value);
    if (spec.kind == "periodic") return BoundaryData::periodic();
    if (spec.kind == "ode_trace") {
        return BoundaryData::analytic(
            [params](const SpatialPoint&, double t) { return ode_solution(params, t); });
    }
    if (spec.kind == "radial_trace") {
        return BoundaryData::analytic(
            [params](const SpatialPoint& x, double) { return radial_steady(params, x); });
    }
    fail(ErrorKind::validation, fmt::format("unknown boundary kind '{}'", spec.kind));
}

AnalysisOutput run_analysis(const SpaceTimeField& field, const AnalysisRequest& request,
                            const AnalysisContext& context) {
    return find_handler(request.op)(field, request, context);
}

std::size_t analysis_threads() {
    const char* env = std::getenv("QUENCHLAB_THREADS");
    if (!env) return 1;
    const long v = std::strtol(env, nullptr, 10);
    return v >= 1 ? static_cast<std::size_t>(v) : 1;
}

namespace {

json grid_json(const GridSpec& g) {
    return {{"origin", g.origin},
            {"extent", g.extent},
            {"cells", g.cells},
            {"time_start", g.time_start},
            {"time_end", g.time_end}};
}

const char* source_name(SourceSpec::Kind k) {
    switch (k) {
        case SourceSpec::Kind::solve: return "solve";
        case SourceSpec::Kind::synthetic: return "synthetic";
        case SourceSpec::Kind::file: return "file";
        case SourceSpec::Kind::restart: return "restart";
    }
    return "unknown";
}

json solve_json(const QuenchRun& run) {
    json pts = json::array();
    for (const auto& p : run.report.quench_points) pts.push_back(point_json(p));
    const double final_min = run.report.min_history.empty() ? 0.0
                                                            : run.report.min_history.back().second;
    return {{"status", "ok"},
            {"quench_time", optional_json(run.report.quench_time)},
            {"quench_points", pts},
            {"steps_taken", run.report.steps_taken},
            {"final_min", final_min},
            {"final_time", run.field.times().back()},
            {"slabs_stored", run.field.slab_count()}};
}

void note_error(Report& report, ErrorKind kind) {
    if (!report.first_error) report.first_error = kind;
}

}  // namespace

Report run_pipeline(const RunConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);

    Report report;
    json& doc = report.document;
    doc["metadata"] = {{"config_digest", config.digest},
                       {"version", kVersion},
                       {"seed", config.seed},
                       {"source", source_name(config.source.kind)},
                       {"profile", config.source.profile},
                       {"model", {{"p", config.model.p()}, {"n", config.model.n()}}}};
    if (config.grid) doc["metadata"]["grid"] = grid_json(*config.grid);

    AnalysisContext ctx;
    ctx.seed = config.seed;
    ctx.boundary = make_boundary(config.model, config.boundary);
    std::optional<SpaceTimeField> field;

    auto solve_from = [&](const SpaceTimeField& initial) {
        try {
            QuenchRun run = solve_until_quench(initial, *ctx.boundary, config.solver);
            doc["solve"] = solve_json(run);
            ctx.quench = run.report;
            field = std::move(run.field);
        } catch (const BudgetError& e) {
            doc["solve"] = solve_json(e.partial());
            doc["solve"]["status"] = "error";
            doc["solve"]["error"] = error_json(e);
            ctx.quench = e.partial().report;
            field = e.partial().field;
            note_error(report, e.kind());
        }
    };

    try {
        switch (config.source.kind) {
            case SourceSpec::Kind::synthetic:
                field = synthetic_field(config.model, *config.grid, config.source);
                break;
            case SourceSpec::Kind::file:
                field = load_field(config.source.path, config.boundary.kind == "periodic"
                                                           ? BoundaryKind::periodic
                                                           : BoundaryKind::dirichlet_traced);
                break;
            case SourceSpec::Kind::solve: {
                GridSpec g = *config.grid;
                const SpaceTimeField initial = tabulate(
                    config.model, g, {g.time_start},
                    [&](const SpatialPoint& x, double t) {
                        return profile_value(config.model, config.source, x, t);
                    },
                    BoundaryKind::dirichlet_traced);
                solve_from(initial);
                break;
            }
            case SourceSpec::Kind::restart: {
                const SpaceTimeField prev = load_field(config.source.path);
                GridSpec g = prev.grid();
                g.time_start = prev.times().back();
                g.time_end = *config.source.time_end;
                const auto last = prev.slab(prev.slab_count() - 1);
                const SpaceTimeField initial(prev.params(), g, {g.time_start},
                                             std::vector<double>(last.begin(), last.end()),
                                             BoundaryKind::dirichlet_traced);
                solve_from(initial);
                break;
            }
        }
    } catch (const Error& e) {
        doc["solve"] = {{"status", "error"}, {"error", error_json(e)}};
        note_error(report, e.kind());
    }

    if (field) save_field(*field, config.output_dir / "field.qlf");

    const std::size_t count = config.analyses.size();
    std::vector<json> blocks(count);
    std::vector<std::optional<ErrorKind>> kinds(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            const AnalysisRequest& req = config.analyses[i];
            json block = {{"index", i}, {"op", req.op}, {"params", req.params}};
            try {
                if (!field) fail(ErrorKind::usage, "no field available (source failed)");
                AnalysisOutput out = run_analysis(*field, req, ctx);
                block["status"] = "ok";
                block["result"] = std::move(out.result);
                if (!out.table.empty()) {
                    const std::string name = fmt::format("analysis_{}_{}.csv", i, req.op);
                    write_file_atomic(config.output_dir / name, out.table.render());
                    block["csv"] = name;
                }
            } catch (const Error& e) {
                block["status"] = "error";
                block["error"] = error_json(e);
                kinds[i] = e.kind();
            } catch (const std::exception& e) {
                block["status"] = "error";
                block["error"] = {{"kind", "numerical"}, {"message", e.what()}};
                kinds[i] = ErrorKind::numerical;
            }
            blocks[i] = std::move(block);
        }
    };
    const std::size_t threads = std::min(analysis_threads(), std::max<std::size_t>(count, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    doc["analyses"] = json::array();
    std::size_t monotonicity = 0, almgren = 0, weak = 0, failed = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (kinds[i]) {
            note_error(report, *kinds[i]);
            ++failed;
        }
        const json& b = blocks[i];
        if (b.contains("result")) {
            const json& res = b["result"];
            if (b["op"] == "density_estimate") monotonicity += res["violations"].size();
            if (b["op"] == "almgren_scan") almgren += res["violations"].size();
            if (b["op"] == "two_valued_check" && !res["all_passed"].get<bool>()) ++weak;
        }
        doc["analyses"].push_back(b);
    }
    doc["violations"] = {{"monotonicity", monotonicity},
                         {"almgren", almgren},
                         {"two_valued_failures", weak},
                         {"failed_analyses", failed}};
    write_file_atomic(config.output_dir / "report.json", emit_report(report, ReportFormat::json));
    return report;
}

}  // namespace quenchlab
