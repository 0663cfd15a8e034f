#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "quenchlab/cutoff.hpp"
#include "quenchlab/grid.hpp"

namespace quenchlab {

/// Heat-kernel weight: integration over |y| <= k * sqrt(2 s) (k standard
/// deviations of G(., s)), optionally multiplied by the cutoff eta evaluated
/// at the offset y = x - x0.
struct WeightSpec {
    double truncation_multiple = 6.0;
    std::optional<CutoffSpec> eta = CutoffSpec{};
    /// Cells with u <= u_floor are dropped from the u^{1-p} term.
    double u_floor = 0.0;

    static WeightSpec full_space(double k = 6.0);
    void validate() const;
};

/// G(y, s) = (4 pi s)^{-n/2} exp(-|y|^2 / (4 s)).
double heat_kernel(int n, double r2, double s) noexcept;

/// Heat-kernel mass outside the ball of radius k standard deviations.
double gaussian_tail_mass(int n, double k) noexcept;

struct WeightedValue {
    double value = 0.0;
    /// More than 1% of the weighted mass sat on excluded (singular) cells.
    bool flagged = false;
    double tail_bound = 0.0;
    double excluded_fraction = 0.0;
};

/// E(s; x0, t0, u) = s^{(p-1)/(p+1)} int [|grad u|^2/2 - u^{1-p}/(p-1)] G eta
///                 - s^{-2/(p+1)} / (2(p+1)) int u^2 G eta, at time t0 - s.
WeightedValue weighted_energy(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                              const WeightSpec& w);

/// (1/s) int_s^{2s} f(tau) dtau by the trapezoid rule on `samples` points.
double doubling_average(const std::function<double(double)>& f, double s,
                        std::size_t samples = 9);

WeightedValue averaged_energy(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                              const WeightSpec& w, std::size_t samples = 9);

/// Allowed decrease of E between neighbouring samples: tol_abs + tol_exp e^{-1/(8 s)}.
struct SlackModel {
    double tol_abs = 1e-6;
    double tol_exp = 1e-3;

    double allowance(double s) const noexcept;
};

struct Violation {
    double s_lo = 0.0;
    double s_hi = 0.0;
    double magnitude = 0.0;
};

struct MonotonicityTrace {
    ParabolicPoint base_point;
    std::vector<double> s_samples;
    std::vector<double> E_values;
    std::vector<double> Ebar_values;
    std::optional<double> theta_estimate;
    bool diverging = false;
    /// Slope of log(-Ebar) against log s over the ladder (NaN when undefined).
    double divergence_slope = 0.0;
    std::vector<Violation> violations;
    bool eta_weighted = true;
    bool accuracy_flagged = false;
    double tail_bound = 0.0;
};

struct DensityResult {
    std::optional<double> theta;
    bool diverging = false;
    MonotonicityTrace trace;
};

/// Evaluates Ebar on the ladder s_max, s_max/2, ... >= s_min, extrapolates
/// the density from the three smallest s (linear fit in s^alpha) and scans
/// E for decreases beyond the slack model.
DensityResult density_estimate(const SpaceTimeField& field, const ParabolicPoint& x0,
                               const WeightSpec& w, double s_min, double s_max,
                               const SlackModel& slack = {});

struct FrequencyValue {
    double H = 0.0;
    double D = 0.0;
    std::optional<double> N;
    double tail_bound = 0.0;
};

/// H = int u^2 G, D = s int |grad u|^2 G, N = D / H at time t0 - s.
FrequencyValue frequency(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                         const WeightSpec& w);

struct FrequencyTrace {
    ParabolicPoint base_point;
    std::vector<double> s_samples;
    std::vector<double> H_values;
    std::vector<double> D_values;
    std::vector<std::optional<double>> N_values;
    std::optional<double> gamma_half_reference;
    std::optional<double> max_gamma_deviation;
    /// Whether the monotonicity claim applies (two-valued caloric fields only).
    bool monotonicity_claimed = true;
    std::vector<Violation> violations;
    std::size_t underflow_count = 0;
    /// max over interior samples of |s d/ds log H - 2N| / (2N), centred differences.
    std::optional<double> log_h_identity_error;
};

FrequencyTrace almgren_scan(const SpaceTimeField& field, const ParabolicPoint& x0,
                            const WeightSpec& w, std::span<const double> s_grid,
                            std::optional<double> gamma_half_reference = std::nullopt,
                            bool claim_monotone = true, double tolerance = 1e-6);

}  // namespace quenchlab
