// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

#include <fmt/format.h>

#include "oracles.hpp"
#include "quenchlab/config.hpp"
#include "quenchlab/exact.hpp"
#include "quenchlab/field_io.hpp"
#include "quenchlab/monotonicity.hpp"
#include "quenchlab/pipeline.hpp"
#include "quenchlab/report.hpp"
#include "quenchlab/rupture.hpp"
#include "quenchlab/solver.hpp"
#include "quenchlab/weak.hpp"

using namespace quenchlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
        if (!ok) {
            pass = false;
            detail += " [x]";
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = fmt::format("exception: {}", e.what());
    }
    if (!o.pass) ++failures;
    fmt::print("{} criterion {}: {} ({:.2f}s) {}\n", o.pass ? "PASS" : "FAIL", id, title, seconds_since(t0),
               o.detail);
    std::fflush(stdout);
}

Outcome ode_quench() {
    Outcome o;
    const auto t0 = Clock::now();
    const ModelParams m(3.0, 1);
    const GridSpec g = GridSpec::box(1, -1, 1, 200, -1, 0.5);
    const SpaceTimeField init = tabulate(m, g, {-1.0}, [](const SpatialPoint&, double t) { return oracle::ode(3.0, t); },
                                         BoundaryKind::dirichlet_traced);
    const auto trace = BoundaryData::analytic(
        [](const SpatialPoint&, double t) { return t < 0.0 ? oracle::ode(3.0, t) : 1e-300; });
    const QuenchRun run = solve_until_quench(init, trace, SolverConfig{});
    const double elapsed = seconds_since(t0);
    const double tq = run.report.quench_time.value_or(std::nan(""));
    // Exact quench time is 0; measure the error relative to the run length.
    o.check(std::abs(tq) <= 0.01 * 1.0, fmt::format("Tq = {:.3e}", tq));
    double err = 0.0;
    const auto ts = run.field.times();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (ts[k] > -0.05) continue;
        for (double v : run.field.slab(k)) err = std::max(err, std::abs(v - oracle::ode(3.0, ts[k])));
    }
    o.check(err <= 1e-3, fmt::format("sup error {:.2e}", err));
    o.check(elapsed <= 10.0, fmt::format("solve {:.2f}s", elapsed));
    return o;
}

Outcome steady_state() {
    Outcome o;
    const auto t0 = Clock::now();
    const ModelParams m(3.0, 2);
    const auto trace = BoundaryData::analytic([&](const SpatialPoint& x, double) { return radial_steady(m, x); });
    std::vector<double> errors;
    double ut_max = 0.0;
    for (std::size_t cells : {16, 32, 64}) {
        const GridSpec g = GridSpec::box(2, 0.5, 1.5, cells, 0, 4);
        const SpaceTimeField init = tabulate(
            m, g, {0.0},
            [&](const SpatialPoint& x, double) {
                return radial_steady(m, x) + 0.1 * std::sin(M_PI * (x[0] - 0.5)) * std::sin(M_PI * (x[1] - 0.5));
            },
            BoundaryKind::dirichlet_traced);
        SolverConfig c;
        c.dt_initial = 0.02;
        c.safety = 0.9;
        c.store_stride = 1'000'000;
        const QuenchRun run = solve_until_quench(init, trace, c);
        const std::size_t k = run.field.slab_count() - 1;
        const auto last = run.field.slab(k);
        QuenchSolver solver(m, g, trace, c);
        const SolverState next = solver.step({std::vector<double>(last.begin(), last.end()), run.field.times()[k]}, 0.02);
        const Lattice& lat = run.field.lattice();
        double err = 0.0;
        for (std::size_t f = 0; f < lat.size(); ++f) {
            err = std::max(err, std::abs(last[f] - radial_steady(m, lat.position(lat.unflat(f)))));
            ut_max = std::max(ut_max, std::abs(next.values[f] - last[f]) / 0.02);
        }
        errors.push_back(err);
    }
    const double o1 = std::log2(errors[0] / errors[1]);
    const double o2 = std::log2(errors[1] / errors[2]);
    o.check(ut_max <= 1e-6, fmt::format("max |u_t| {:.1e}", ut_max));
    o.check(o1 >= 1.8 && o2 >= 1.8, fmt::format("orders {:.2f}, {:.2f}", o1, o2));
    o.check(seconds_since(t0) <= 30.0, "runtime");
    return o;
}

QuenchRun interior_quench(std::size_t cells) {
    const ModelParams m(3.0, 1);
    const GridSpec g = GridSpec::box(1, -2, 2, cells, 0, 10);
    const SpaceTimeField init = tabulate(
        m, g, {0.0}, [](const SpatialPoint& x, double) { return 1.0 - 0.5 * std::exp(-x[0] * x[0] / 0.25); },
        BoundaryKind::dirichlet_traced);
    return solve_until_quench(init, BoundaryData::constant(1.0), SolverConfig{});
}

Outcome holder() {
    Outcome o;
    const ModelParams m(3.0, 1);
    const SpaceTimeField ode = ode_field(m, GridSpec::box(1, -2, 2, 64, -1, 0), linspace(-1, 0, 201));
    const double a = holder_seminorm(ode, 0.5, 10000, 1).seminorm;
    o.check(std::abs(a - std::sqrt(2.0)) <= 1e-2, fmt::format("ODE {:.6f}", a));
    const SpaceTimeField root = tabulate(m, GridSpec::box(1, -1, 1, 128, -1, 0), linspace(-1, 0, 5),
                                         [](const SpatialPoint& x, double) { return std::sqrt(std::abs(x[0])); });
    const double b = holder_seminorm(root, 0.5, 10000, 1).seminorm;
    o.check(std::abs(b - 1.0) <= 1e-2, fmt::format("|x1|^1/2 {:.6f}", b));
    double lo = INFINITY, hi = 0.0;
    std::string list;
    for (std::size_t cells : {100, 200, 400}) {
        const double v = holder_seminorm(interior_quench(cells).field, 0.5, 10000, 1).seminorm;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        list += fmt::format("{}{:.3f}", list.empty() ? "" : "/", v);
    }
    o.check((hi - lo) / lo < 0.2, fmt::format("quench run {} (spread {:.1f}%)", list, 100 * (hi - lo) / lo));
    return o;
}

Outcome density() {
    Outcome o;
    const auto t0 = Clock::now();
    const ModelParams m(3.0, 1);
    const SpaceTimeField f = ode_field(m, GridSpec::box(1, -2, 2, 256, -1, 0), graded_times(-1, 0, 400, 4));
    const DensityResult d = density_estimate(f, make_point({0.0}, 0.0), WeightSpec{}, 1e-4, 0.25);
    o.check(d.theta && std::abs(*d.theta + 0.5) <= 0.05, fmt::format("theta {:.6f}", d.theta.value_or(NAN)));
    o.check(d.trace.violations.empty(), fmt::format("{} violations", d.trace.violations.size()));
    const SpaceTimeField g = ode_field(m, GridSpec::box(1, -2, 2, 64, -1, 0), linspace(-1, 0, 2001));
    const auto x1 = make_point({0.0}, -0.5);
    const DensityResult e = density_estimate(g, x1, WeightSpec{}, 2e-3, 0.2);
    o.check(sample(g, x1) >= 0.5 && e.diverging,
            fmt::format("u = {:.3f} diverging slope {:.3f}", sample(g, x1), e.trace.divergence_slope));
    o.check(seconds_since(t0) <= 20.0, "runtime");
    return o;
}

Outcome almgren() {
    Outcome o;
    std::vector<double> s;
    for (int i = 0; i < 10; ++i) s.push_back(0.1 * std::pow(10.0, i / 9.0));
    const ModelParams m1(3.0, 1), m2(3.0, 2);
    const SpaceTimeField a = tabulate(m1, GridSpec::box(1, -10, 10, 160, -1.5, 0), linspace(-1.5, 0, 4),
                                      [](const SpatialPoint& x, double) { return std::abs(x[0]); });
    const SpaceTimeField b = tabulate(m2, GridSpec::box(2, -10, 10, 160, -1.5, 0), linspace(-1.5, 0, 4),
                                      [](const SpatialPoint& x, double) { return std::abs(x[0] * x[1]); });
    const FrequencyTrace ta = almgren_scan(a, make_point({0.0}, 0.0), WeightSpec::full_space(), s, 0.5);
    const FrequencyTrace tb = almgren_scan(b, make_point({0.0, 0.0}, 0.0), WeightSpec::full_space(), s, 1.0);
    o.check(ta.max_gamma_deviation.value_or(1.0) <= 1e-3, fmt::format("|x1| dev {:.1e}", ta.max_gamma_deviation.value_or(NAN)));
    o.check(tb.max_gamma_deviation.value_or(1.0) <= 5e-3, fmt::format("|x1x2| dev {:.1e}", tb.max_gamma_deviation.value_or(NAN)));
    o.check(ta.violations.empty() && tb.violations.empty(), "no violations");
    const double la = ta.log_h_identity_error.value_or(1.0), lb = tb.log_h_identity_error.value_or(1.0);
    o.check(la <= 0.05 && lb <= 0.05, fmt::format("log-H error {:.1e}, {:.1e}", la, lb));
    return o;
}

Outcome apriori() {
    Outcome o;
    const auto radii = dyadic_radii(0.5, 0.0625);
    const ModelParams m2(3.0, 2), m1(3.0, 1);
    const SpaceTimeField radial = radial_steady_field(m2, GridSpec::box(2, -1, 1, 256, -1, 0), linspace(-1, 0, 5));
    const SpaceTimeField ode = ode_field(m1, GridSpec::box(1, -1, 1, 256, -1, 0), graded_times(-1, 0, 400, 4));
    for (auto q : {ScalingQuantity::u_inv_p, ScalingQuantity::energy, ScalingQuantity::mass}) {
        const double r = apriori_scaling_check(radial, make_point({0.0, 0.0}, 0.0), q, radii).fit.fitted_dim;
        const double e = apriori_scaling_check(ode, make_point({0.0}, 0.0), q, radii).fit.fitted_dim;
        const double xr = expected_scaling_exponent(m2, q), xe = expected_scaling_exponent(m1, q);
        o.check(std::abs(r - xr) <= 0.1 && std::abs(e - xe) <= 0.1,
                fmt::format("{} {:.3f}/{:.2f} {:.3f}/{:.2f}", to_string(q), r, xr, e, xe));
    }
    return o;
}

Outcome dimension() {
    Outcome o;
    const GridSpec unit = GridSpec::box(1, -1, 1, 256, -1, 0);
    const auto radii = dyadic_radii(0.5, 8.0 / 256);
    const RuptureSet point{0.1, {make_point({0.0}, -0.5)}, unit};
    RuptureSet spatial{0.1, {}, unit}, temporal{0.1, {}, unit};
    for (int i = 0; i <= 128; ++i) spatial.points.push_back(make_point({i / 128.0}, -0.5));
    for (int i = 0; i <= 4000; ++i) temporal.points.push_back(make_point({0.0}, -1.0 + i / 4000.0));
    const double d0 = parabolic_box_dimension(point, radii).fitted_dim;
    const double d1 = parabolic_box_dimension(spatial, radii).fitted_dim;
    const double d2 = parabolic_box_dimension(temporal, radii).fitted_dim;
    o.check(std::abs(d0) <= 0.1, fmt::format("point {:.3f}", d0));
    o.check(std::abs(d1 - 1.0) <= 0.1, fmt::format("segment {:.3f}", d1));
    o.check(std::abs(d2 - 2.0) <= 0.15, fmt::format("time line {:.3f}", d2));

    const QuenchRun run = interior_quench(400);
    const SpaceTimeField& f = run.field;
    const double h = f.spacing();
    double r_max = 4.0 * h;
    const double limit = std::max(4.0, std::sqrt(f.times().back() - f.times().front())) / 4.0;
    while (2.0 * r_max <= limit) r_max *= 2.0;
    const auto run_radii = dyadic_radii(r_max, 4.0 * h);
    const RuptureSet all = rupture_set(f, auto_threshold(f, 0));
    const double dp = parabolic_box_dimension(all, run_radii).fitted_dim;
    const std::size_t last = f.slab_count() - 1;
    const RuptureSet slice_set = rupture_set(f, auto_threshold(f, 0, last));
    const double ds = slice_dimension(slice_set, f.times()[last], run_radii).fitted_dim;
    o.check(dp <= 1.2, fmt::format("quench run dim_P {:.3f}", dp));
    o.check(ds <= 0.2, fmt::format("slice {:.3f}", ds));
    return o;
}

Outcome two_valued() {
    Outcome o;
    const ModelParams m(3.0, 2);
    const CutoffSpec eta;
    const std::vector<CutoffSpec> etas{eta};
    const SpaceTimeBump psi{eta, -0.5, 0.25, 0.45};
    const std::vector<TestVectorField> ys{TestVectorField::coordinate(psi, 0), TestVectorField::coordinate(psi, 1),
                                          TestVectorField::radial(psi)};
    auto field = [&](std::size_t per_unit, const FieldFunction& fn) {
        return tabulate(m, GridSpec::box(2, -1.25, 1.25, per_unit * 5 / 2, -1, 0), linspace(-1, 0, 33), fn);
    };
    const FieldFunction abs_x1 = [](const SpatialPoint& x, double) { return std::abs(x[0]); };
    const FieldFunction abs_x1x2 = [](const SpatialPoint& x, double) { return std::abs(x[0] * x[1]); };
    const FieldFunction half = [](const SpatialPoint& x, double) { return std::max(x[0], 0.0); };
    for (const auto& [name, fn] : {std::pair{"|x1|", abs_x1}, std::pair{"|x1x2|", abs_x1x2}}) {
        const TwoValuedCheck c = two_valued_caloric_check(field(128, fn), etas, ys);
        double worst = 0.0;
        for (const auto& cond : c.conditions) worst = std::max(worst, cond.violation);
        o.check(c.all_passed(), fmt::format("{} worst {:.1e}", name, worst));
    }
    for (std::size_t per_unit : {64, 128}) {
        const TwoValuedCheck c = two_valued_caloric_check(field(per_unit, half), etas, ys);
        const double v = c.conditions[3].violation;
        o.check(!c.conditions[3].passed && v >= 0.1, fmt::format("halfplane h=1/{} (iv) {:.3f}", per_unit, v));
    }
    return o;
}

Outcome determinism() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / fmt::format("quenchlab_acceptance_{}", ::getpid());
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string config = R"([model]
p = 3
n = 1
[grid]
origin = -2
extent = 4
cells = 100
time_start = 0
time_end = 10
[source]
kind = solve
profile = dip
amplitude = 0.5
width = 0.5
[run]
seed = 42
output_dir = run
[analysis.1]
op = holder_seminorm
[analysis.2]
op = density_estimate
s_min = 0.001
s_max = 0.05
[analysis.3]
op = parabolic_dimension
tau = auto
)";
    RunConfig c = parse_config(config, dir);
    run_pipeline(c);
    const std::string first = read_file(dir / "run" / "report.json");
    c.output_dir = dir / "again";
    run_pipeline(c);
    o.check(first == read_file(dir / "again" / "report.json"), "report bytes");

    const SpaceTimeField full = load_field(dir / "run" / "field.qlf");
    const auto bytes = encode_field(full);
    o.check(encode_field(decode_field(bytes)) == bytes && decode_field(bytes) == full, "QLF1 round trip");

    // Checkpoint at a stored slab, restart from the file and compare the continuation.
    const std::size_t k = full.slab_count() / 2;
    GridSpec g = full.grid();
    g.time_end = full.times()[k];
    SpaceTimeField head(full.params(), g, {full.times()[0]},
                        std::vector<double>(full.slab(0).begin(), full.slab(0).end()), BoundaryKind::dirichlet_traced);
    for (std::size_t i = 1; i <= k; ++i) head.append_slab(full.times()[i], full.slab(i));
    save_field(head, dir / "checkpoint.qlf");
    const std::string restart = fmt::format(R"([model]
p = 3
n = 1
[source]
kind = restart
path = checkpoint.qlf
time_end = 10
[run]
output_dir = resumed
)");
    run_pipeline(parse_config(restart, dir));
    const SpaceTimeField tail = load_field(dir / "resumed" / "field.qlf");
    bool same = tail.slab_count() == full.slab_count() - k;
    for (std::size_t i = 0; same && i < tail.slab_count(); ++i) {
        same = tail.times()[i] == full.times()[k + i];
        const auto a = tail.slab(i), b = full.slab(k + i);
        same = same && std::equal(a.begin(), a.end(), b.begin(), b.end());
    }
    o.check(same, fmt::format("restart at slab {} of {} bitwise", k, full.slab_count()));
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main() {
    report(1, "ODE quench reproduction", ode_quench);
    report(2, "steady-state residual", steady_state);
    report(3, "Hoelder seminorm oracle", holder);
    report(4, "density oracle", density);
    report(5, "Almgren frequency oracle", almgren);
    report(6, "a priori power laws", apriori);
    report(7, "parabolic dimension", dimension);
    report(8, "weak-residual discrimination", two_valued);
    report(9, "determinism and persistence", determinism);
    fmt::print("{} of 9 criteria passed\n", 9 - failures);
    return failures == 0 ? 0 : 1;
}
