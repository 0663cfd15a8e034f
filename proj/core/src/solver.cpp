#include "quenchlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/format.h>

namespace quenchlab {

BoundaryData BoundaryData::constant(double value) {
    require(value > 0.0, ErrorKind::validation, "boundary value must be positive");
    BoundaryData b;
    b.kind = Kind::constant;
    b.constant_value = value;
    return b;
}

BoundaryData BoundaryData::analytic(std::function<double(const SpatialPoint&, double)> fn) {
    require(static_cast<bool>(fn), ErrorKind::validation, "analytic boundary needs a function");
    BoundaryData b;
    b.kind = Kind::analytic_trace;
    b.value_fn = std::move(fn);
    return b;
}

BoundaryData BoundaryData::periodic() {
    BoundaryData b;
    b.kind = Kind::periodic;
    return b;
}

double BoundaryData::value(const SpatialPoint& x, double t) const {
    double v = 0.0;
    switch (kind) {
        case Kind::constant: v = constant_value; break;
        case Kind::analytic_trace: v = value_fn(x, t); break;
        case Kind::periodic: fail(ErrorKind::usage, "periodic boundary has no trace values");
    }
    require(std::isfinite(v) && v > 0.0, ErrorKind::validation,
            fmt::format("boundary value {} at t = {} is not positive", v, t));
    return v;
}

void SolverConfig::validate() const {
    require(epsilon_reg > 0.0, ErrorKind::validation, "epsilon_reg must be positive");
    require(dt_initial > 0.0, ErrorKind::validation, "dt_initial must be positive");
    require(dt_min > 0.0 && dt_min <= dt_initial, ErrorKind::validation,
            "dt_min must be positive and not exceed dt_initial");
    require(safety > 0.0 && safety < 1.0, ErrorKind::validation, "safety must lie in (0, 1)");
    require(quench_threshold >= 2.0 * epsilon_reg, ErrorKind::validation,
            "quench_threshold >= 2 * epsilon_reg required");
    require(max_steps >= 1, ErrorKind::validation, "max_steps must be positive");
    require(store_stride >= 1, ErrorKind::validation, "store_stride must be positive");
}

double regularized_nonlinearity(const ModelParams& params, double eps, double u) noexcept {
    if (u > eps) {
        return std::pow(u, -params.p());
    }
    return std::pow(eps, -params.p() - 1.0) * u;
}

// Unknown numbering and the pattern of the discrete Laplacian.
struct QuenchSolver::System {
    std::vector<std::ptrdiff_t> unknown_of;  // -1 for pinned / duplicate nodes
    std::vector<std::size_t> node_of;        // inverse map
    std::vector<std::size_t> image_of;       // periodic duplicate -> representative node
    // Per unknown: neighbouring unknowns and neighbouring pinned nodes.
    std::vector<std::vector<std::size_t>> inner_neighbours;
    std::vector<std::vector<std::size_t>> pinned_neighbours;
    std::vector<std::size_t> pinned_nodes;
};

struct QuenchSolver::Factorization {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

QuenchSolver::QuenchSolver(ModelParams params, GridSpec grid, BoundaryData boundary,
                           SolverConfig config)
    : params_(params),
      grid_(std::move(grid)),
      lattice_((grid_.validate(), grid_)),
      boundary_(std::move(boundary)),
      config_(config),
      system_(std::make_unique<System>()) {
    config_.validate();
    require(grid_.dim() == params_.n(), ErrorKind::validation, "grid/model dimension mismatch");
    const Lattice& lat = lattice_;
    const bool periodic = boundary_.is_periodic();
    if (periodic) {
        for (int a = 0; a < lat.dim; ++a) {
            require(lat.cells[a] >= 3, ErrorKind::validation,
                    "periodic grids need at least three cells per axis");
        }
    }
    System& sys = *system_;
    sys.unknown_of.assign(lat.size(), -1);
    sys.image_of.resize(lat.size());
    for (std::size_t f = 0; f < lat.size(); ++f) {
        MultiIndex i = lat.unflat(f);
        if (periodic) {
            MultiIndex rep = i;
            bool duplicate = false;
            for (int a = 0; a < lat.dim; ++a) {
                if (i[a] == lat.cells[a]) {
                    rep[a] = 0;
                    duplicate = true;
                }
            }
            sys.image_of[f] = lat.flat(rep);
            if (!duplicate) {
                sys.unknown_of[f] = static_cast<std::ptrdiff_t>(sys.node_of.size());
                sys.node_of.push_back(f);
            }
        } else {
            sys.image_of[f] = f;
            if (lat.on_boundary(i)) {
                sys.pinned_nodes.push_back(f);
            } else {
                sys.unknown_of[f] = static_cast<std::ptrdiff_t>(sys.node_of.size());
                sys.node_of.push_back(f);
            }
        }
    }
    require(!sys.node_of.empty(), ErrorKind::validation, "grid has no interior nodes");
    sys.inner_neighbours.resize(sys.node_of.size());
    sys.pinned_neighbours.resize(sys.node_of.size());
    for (std::size_t u = 0; u < sys.node_of.size(); ++u) {
        const MultiIndex i = lat.unflat(sys.node_of[u]);
        for (int a = 0; a < lat.dim; ++a) {
            for (int dir : {-1, 1}) {
                MultiIndex j = i;
                if (periodic) {
                    const auto c = lat.cells[a];
                    j[a] = dir > 0 ? (i[a] + 1) % c : (i[a] + c - 1) % c;
                } else {
                    j[a] = static_cast<std::size_t>(static_cast<long long>(i[a]) + dir);
                }
                const std::size_t nf = lat.flat(j);
                if (sys.unknown_of[nf] >= 0) {
                    sys.inner_neighbours[u].push_back(static_cast<std::size_t>(sys.unknown_of[nf]));
                } else {
                    sys.pinned_neighbours[u].push_back(nf);
                }
            }
        }
    }
}

QuenchSolver::~QuenchSolver() = default;
QuenchSolver::QuenchSolver(QuenchSolver&&) noexcept = default;
QuenchSolver& QuenchSolver::operator=(QuenchSolver&&) noexcept = default;

const QuenchSolver::Factorization& QuenchSolver::factor(double dt) {
    for (auto& [key, fac] : cache_) {
        if (key == dt) {
            return *fac;
        }
    }
    const System& sys = *system_;
    const auto m = static_cast<Eigen::Index>(sys.node_of.size());
    const double c = dt / (lattice_.h * lattice_.h);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(sys.node_of.size() * (2 * lattice_.dim + 1));
    for (std::size_t u = 0; u < sys.node_of.size(); ++u) {
        const auto row = static_cast<Eigen::Index>(u);
        trips.emplace_back(row, row, 1.0 + 2.0 * lattice_.dim * c);
        for (std::size_t v : sys.inner_neighbours[u]) {
            trips.emplace_back(row, static_cast<Eigen::Index>(v), -c);
        }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(trips.begin(), trips.end());
    auto fac = std::make_unique<Factorization>();
    fac->ldlt.compute(a);
    require(fac->ldlt.info() == Eigen::Success, ErrorKind::numerical,
            fmt::format("implicit diffusion factorization failed (dt = {})", dt));
    if (cache_.size() >= 4) {
        cache_.erase(cache_.begin());
    }
    cache_.emplace_back(dt, std::move(fac));
    return *cache_.back().second;
}

// Solves (I - dt L) v = base with Dirichlet nodes pinned at t_new. `base` is
// a full slab; the returned slab has pinned and duplicate nodes filled.
std::vector<double> QuenchSolver::solve_stage(const std::vector<double>& base, double dt,
                                              double t_new) {
    const System& sys = *system_;
    const Lattice& lat = lattice_;
    std::vector<double> out(lat.size());
    for (std::size_t f : sys.pinned_nodes) {
        out[f] = boundary_.value(lat.position(lat.unflat(f)), t_new);
    }
    const double c = dt / (lat.h * lat.h);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(sys.node_of.size()));
    for (std::size_t u = 0; u < sys.node_of.size(); ++u) {
        double r = base[sys.node_of[u]];
        for (std::size_t nf : sys.pinned_neighbours[u]) {
            r += c * out[nf];
        }
        rhs[static_cast<Eigen::Index>(u)] = r;
    }
    const Factorization& fac = factor(dt);
    Eigen::VectorXd sol = fac.ldlt.solve(rhs);
    require(fac.ldlt.info() == Eigen::Success, ErrorKind::numerical,
            fmt::format("implicit diffusion solve failed at t = {}", t_new));
    for (std::size_t u = 0; u < sys.node_of.size(); ++u) {
        out[sys.node_of[u]] = sol[static_cast<Eigen::Index>(u)];
    }
    if (boundary_.is_periodic()) {
        for (std::size_t f = 0; f < lat.size(); ++f) {
            out[f] = out[sys.image_of[f]];
        }
    }
    for (std::size_t f = 0; f < lat.size(); ++f) {
        if (!std::isfinite(out[f])) {
            fail(ErrorKind::numerical,
                 fmt::format("non-finite value at node {} after step to t = {}", f, t_new));
        }
    }
    return out;
}

SolverState QuenchSolver::step(const SolverState& state, double dt) {
    require(dt >= config_.dt_min, ErrorKind::usage,
            fmt::format("step size {} below dt_min {}", dt, config_.dt_min));
    require(state.values.size() == lattice_.size(), ErrorKind::usage, "state size mismatch");
    const double eps = config_.epsilon_reg;
    const auto f = [&](double u) { return regularized_nonlinearity(params_, eps, u); };
    const auto& u_old = state.values;

    std::vector<double> base(u_old.size());
    if (config_.reaction) {
        for (std::size_t i = 0; i < u_old.size(); ++i) {
            base[i] = u_old[i] - 0.5 * dt * f(u_old[i]);
        }
        const std::vector<double> u_half = solve_stage(base, 0.5 * dt, state.t + 0.5 * dt);
        for (std::size_t i = 0; i < u_old.size(); ++i) {
            base[i] = u_old[i] - dt * f(u_half[i]);
        }
    } else {
        base = u_old;
    }
    SolverState next;
    next.t = state.t + dt;
    next.values = solve_stage(base, dt, next.t);
    return next;
}

double QuenchSolver::proposed_dt(const SolverState& state) const {
    if (!config_.reaction) {
        return config_.safety * config_.dt_initial;
    }
    const double umin = *std::min_element(state.values.begin(), state.values.end());
    return config_.safety * std::min(config_.dt_initial, std::pow(umin, params_.p() + 1.0));
}

namespace {

double slab_min(const std::vector<double>& v) {
    return *std::min_element(v.begin(), v.end());
}

double extrapolate_quench(const std::vector<std::pair<double, double>>& history, double p) {
    const auto& [tb, mb] = history.back();
    if (history.size() < 2) {
        return tb;
    }
    const auto& [ta, ma] = history[history.size() - 2];
    // (min u)^{p+1} decays linearly in time for the ODE collapse.
    const double wa = std::pow(std::max(ma, 0.0), p + 1.0);
    const double wb = std::pow(std::max(mb, 0.0), p + 1.0);
    if (!(wa > wb)) {
        return tb;
    }
    return tb + wb * (tb - ta) / (wa - wb);
}

}  // namespace

QuenchRun solve_until_quench(const SpaceTimeField& initial, const BoundaryData& boundary,
                             const SolverConfig& config) {
    config.validate();
    require(initial.slab_count() == 1, ErrorKind::usage, "initial field must hold a single slab");
    const GridSpec& grid = initial.grid();
    const ModelParams& params = initial.params();
    QuenchSolver solver(params, grid, boundary, config);

    SolverState state;
    state.values.assign(initial.slab(0).begin(), initial.slab(0).end());
    state.t = initial.times()[0];
    const double t_end = grid.time_end;
    const double threshold = config.quench_threshold;
    require(slab_min(state.values) >= threshold, ErrorKind::usage,
            "initial data must be >= quench_threshold everywhere");

    const BoundaryKind kind =
        boundary.is_periodic() ? BoundaryKind::periodic : BoundaryKind::dirichlet_traced;
    SpaceTimeField field(params, grid, {state.t}, state.values, kind);
    QuenchReport report;
    report.min_history.emplace_back(state.t, slab_min(state.values));

    bool quenched = false;
    while (state.t < t_end) {
        if (report.steps_taken >= config.max_steps) {
            if (field.times().back() < state.t) {
                field.append_slab(state.t, state.values);
            }
            throw BudgetError(fmt::format("max_steps = {} exhausted at t = {}", config.max_steps,
                                          state.t),
                              QuenchRun{field, report});
        }
        double dt = solver.proposed_dt(state);
        bool clipped = false;
        if (state.t + dt > t_end) {
            dt = t_end - state.t;
            clipped = true;
        }
        SolverState next;
        for (;;) {
            if (dt < config.dt_min) {
                fail(ErrorKind::stiffness,
                     fmt::format("step size fell below dt_min = {} at t = {}", config.dt_min,
                                 state.t));
            }
            next = solver.step(state, dt);
            if (slab_min(next.values) > 0.0) {
                break;
            }
            dt *= 0.5;
            clipped = false;
        }
        if (clipped) {
            next.t = t_end;
        }
        for (double v : next.values) {
            require(v > 0.0, ErrorKind::numerical, "positivity lost in accepted slab");
        }
        state = std::move(next);
        ++report.steps_taken;
        const double m = slab_min(state.values);
        report.min_history.emplace_back(state.t, m);
        quenched = m <= threshold;
        if (report.steps_taken % config.store_stride == 0 || quenched || state.t >= t_end) {
            field.append_slab(state.t, state.values);
        }
        if (quenched) {
            break;
        }
    }

    if (quenched) {
        double tq = extrapolate_quench(report.min_history, params.p());
        report.quench_time = std::min(std::max(tq, state.t), std::max(t_end, state.t));
        const double m = slab_min(state.values);
        const Lattice& lat = field.lattice();
        for (std::size_t f = 0; f < state.values.size(); ++f) {
            if (state.values[f] <= m * (1.0 + 1e-9)) {
                ParabolicPoint x;
                x.n = lat.dim;
                x.x = lat.position(lat.unflat(f));
                x.t = state.t;
                report.quench_points.push_back(x);
            }
        }
    }
    field.set_time_window(grid.time_start, std::max(grid.time_end, field.times().back()));
    return QuenchRun{std::move(field), std::move(report)};
}

double comparison_guard(const SpaceTimeField& field, const BoundaryData& boundary,
                        const SolverConfig& config) {
    const bool periodic = field.boundary_kind() == BoundaryKind::periodic;
    require(field.boundary_kind() != BoundaryKind::analytic, ErrorKind::usage,
            "comparison_guard needs a field produced by the solver");
    require(periodic == boundary.is_periodic(), ErrorKind::usage,
            "boundary data kind does not match the field");
    SolverConfig heat = config;
    heat.reaction = false;
    heat.dt_min = std::numeric_limits<double>::min();
    heat.quench_threshold = std::max(heat.quench_threshold, 2.0 * heat.epsilon_reg);
    QuenchSolver solver(field.params(), field.grid(), boundary, heat);

    SolverState phi;
    phi.values.assign(field.slab(0).begin(), field.slab(0).end());
    phi.t = field.times()[0];
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < field.slab_count(); ++k) {
        if (k > 0) {
            const double t_next = field.times()[k];
            phi = solver.step(phi, t_next - phi.t);
            phi.t = t_next;
        }
        const auto slab = field.slab(k);
        for (std::size_t i = 0; i < slab.size(); ++i) {
            worst = std::max(worst, slab[i] - phi.values[i]);
        }
    }
    return worst;
}

}  // namespace quenchlab
