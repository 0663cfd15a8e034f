#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "quenchlab/grid.hpp"

namespace quenchlab {

/// Boundary data phi on the parabolic boundary. Values must be positive.
struct BoundaryData {
    enum class Kind { constant, analytic_trace, periodic };

    Kind kind = Kind::constant;
    double constant_value = 1.0;
    std::function<double(const SpatialPoint&, double)> value_fn;

    static BoundaryData constant(double value);
    static BoundaryData analytic(std::function<double(const SpatialPoint&, double)> fn);
    static BoundaryData periodic();

    bool is_periodic() const noexcept { return kind == Kind::periodic; }
    double value(const SpatialPoint& x, double t) const;
};

struct SolverConfig {
    double epsilon_reg = 1e-4;
    double dt_initial = 1e-3;
    double dt_min = 1e-18;
    double safety = 0.5;
    double quench_threshold = 1e-3;
    std::size_t max_steps = 1'000'000;
    /// Store every `store_stride`-th accepted slab (the last slab is always kept).
    std::size_t store_stride = 1;
    /// Diagnostic switch: false evolves the plain heat equation.
    bool reaction = true;

    void validate() const;
};

struct QuenchReport {
    std::optional<double> quench_time;
    std::vector<ParabolicPoint> quench_points;
    std::vector<std::pair<double, double>> min_history;
    std::size_t steps_taken = 0;
};

struct QuenchRun {
    SpaceTimeField field;
    QuenchReport report;
};

/// Raised when max_steps runs out before quenching or time_end.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, QuenchRun partial)
        : Error(ErrorKind::budget, what), partial_(std::make_shared<QuenchRun>(std::move(partial))) {}

    const QuenchRun& partial() const noexcept { return *partial_; }

private:
    std::shared_ptr<QuenchRun> partial_;
};

/// f_eps(u) = u^{-p} for u > eps, eps^{-p-1} u otherwise.
double regularized_nonlinearity(const ModelParams& params, double eps, double u) noexcept;

struct SolverState {
    std::vector<double> values;
    double t = 0.0;
};

/// Semi-implicit stepper: implicit diffusion, midpoint-predicted reaction.
///   (I - dt/2 L) u_half = u_old - dt/2 f(u_old)
///   (I - dt L)   u_new  = u_old - dt f(u_half)
/// Dirichlet nodes are pinned to the boundary trace at the stage time.
class QuenchSolver {
public:
    QuenchSolver(ModelParams params, GridSpec grid, BoundaryData boundary, SolverConfig config);
    ~QuenchSolver();
    QuenchSolver(QuenchSolver&&) noexcept;
    QuenchSolver& operator=(QuenchSolver&&) noexcept;

    SolverState step(const SolverState& state, double dt);

    /// dt = safety * min(dt_initial, (min u)^{p+1}).
    double proposed_dt(const SolverState& state) const;

    const ModelParams& params() const noexcept { return params_; }
    const GridSpec& grid() const noexcept { return grid_; }
    const SolverConfig& config() const noexcept { return config_; }

private:
    struct Factorization;
    struct System;

    const Factorization& factor(double dt);
    std::vector<double> solve_stage(const std::vector<double>& base, double dt, double t_new);

    ModelParams params_;
    GridSpec grid_;
    Lattice lattice_;
    BoundaryData boundary_;
    SolverConfig config_;
    std::unique_ptr<System> system_;
    std::vector<std::pair<double, std::unique_ptr<Factorization>>> cache_;
};

/// Time-marches from a single-slab initial field until min u <= quench_threshold,
/// time_end of the initial grid, or the step budget.
QuenchRun solve_until_quench(const SpaceTimeField& initial, const BoundaryData& boundary,
                             const SolverConfig& config);

/// max over stored nodes of u - Phi, where Phi is the heat-equation run with
/// identical data and time stamps.
double comparison_guard(const SpaceTimeField& field, const BoundaryData& boundary,
                        const SolverConfig& config = {});

}  // namespace quenchlab
