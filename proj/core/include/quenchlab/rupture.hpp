#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quenchlab/grid.hpp"

namespace quenchlab {

struct HolderEstimate {
    double exponent = 0.5;
    double seminorm = 0.0;
    std::pair<ParabolicPoint, ParabolicPoint> witness;
    std::size_t pairs_sampled = 0;
};

/// Sup of |u(X) - u(Y)| / delta(X, Y)^exponent over space-time nodes:
/// `budget` random pairs, and a hill climb (each endpoint moved within four
/// spacings and four slabs) from every new record.
HolderEstimate holder_seminorm(const SpaceTimeField& field, double exponent,
                               std::size_t budget = 10000, std::uint64_t seed = 0);

struct RuptureSet {
    double threshold = 0.0;
    std::vector<ParabolicPoint> points;
    GridSpec source_grid;
};

/// kappa * h^alpha.
double recommended_threshold(const SpaceTimeField& field, double kappa = 4.0);

/// kappa * h^alpha with kappa = margin * [u], the seminorm estimated from the
/// field itself (from one slab when `slab` is given, for time slices).
double auto_threshold(const SpaceTimeField& field, std::uint64_t seed,
                      std::optional<std::size_t> slab = std::nullopt, double margin = 1.1);

RuptureSet rupture_set(const SpaceTimeField& field, double tau);

struct DimensionFit {
    std::vector<double> radii;
    std::vector<std::size_t> counts;
    double fitted_dim = 0.0;
    std::pair<std::size_t, std::size_t> fit_range{0, 0};
    double residual = 0.0;
    /// Counts were constant over the fit range; fitted_dim is reported as 0.
    bool degenerate = false;
};

/// Box counting with cells of side r in space and r^2 in time, anchored at
/// the set's lower corner. Radii must be decreasing and lie in
/// [4h, extent/4] of the source grid.
DimensionFit parabolic_box_dimension(const RuptureSet& s, std::span<const double> radii);

/// Euclidean box counting of the points with |time - t| <= h^2.
DimensionFit slice_dimension(const RuptureSet& s, double t, std::span<const double> radii);

/// Dyadic radii r_max, r_max/2, ... down to r_min.
std::vector<double> dyadic_radii(double r_max, double r_min);

enum class ScalingQuantity { u_inv_p, energy, mass };

ScalingQuantity parse_scaling_quantity(const std::string& name);
const char* to_string(ScalingQuantity q) noexcept;

/// Expected exponent of the integral over Q_r^-: n + 2/(p+1), n + 4/(p+1)
/// or n + 2 + 2/(p+1).
double expected_scaling_exponent(const ModelParams& params, ScalingQuantity q) noexcept;

struct ScalingFit {
    DimensionFit fit;
    std::vector<double> integrals;
    double expected_exponent = 0.0;
    double excluded_fraction = 0.0;
};

/// Log-log slope of int_{Q_r^-(X0)} q against r. The fitted exponent is
/// reported in fit.fitted_dim.
ScalingFit apriori_scaling_check(const SpaceTimeField& field, const ParabolicPoint& x0,
                                 ScalingQuantity q, std::span<const double> radii);

struct BlowupSequence {
    std::vector<double> lambdas;
    std::vector<SpaceTimeField> fields;
    std::vector<double> sup_norms;
    /// sup |v_{i+1} - v_i| on the target grid.
    std::vector<double> sup_differences;
    bool converged = false;
};

BlowupSequence blowup_sequence(const SpaceTimeField& field, const ParabolicPoint& x0,
                               std::span<const double> lambdas, const GridSpec& target,
                               const std::vector<double>& target_times,
                               double tolerance = 1e-3);

}  // namespace quenchlab
