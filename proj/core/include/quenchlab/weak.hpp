#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "quenchlab/cutoff.hpp"
#include "quenchlab/grid.hpp"

namespace quenchlab {

struct ResidualReport {
    double value = 0.0;
    /// Integral of the absolute values of the combined terms.
    double scale = 0.0;
    std::size_t quadrature_cells = 0;
    /// Space-time measure of cells excluded from the u^{1-p}, u^{-p} terms.
    double excluded_measure = 0.0;

    double relative() const noexcept { return scale > 0.0 ? std::abs(value) / scale : std::abs(value); }
};

struct QuadratureOptions {
    /// Cells with u below the floor are dropped from the singular terms.
    /// Defaults to h^alpha.
    std::optional<double> u_floor;
    /// Drop every term carrying p (diagnostic pure-caloric mode).
    bool pure_caloric = false;
};

/// int u(-psi_t - Lap psi) + u^{-p} psi over the support of psi.
ResidualReport distributional_residual(const SpaceTimeField& field, const SpaceTimeBump& psi,
                                       const QuadratureOptions& options = {});

/// int (|grad u|^2/2 - u^{1-p}/(p-1)) div Y - DY(grad u, grad u) - u_t (grad u . Y).
ResidualReport stationary_residual(const SpaceTimeField& field, const TestVectorField& y,
                                   const QuadratureOptions& options = {});

/// LHS - RHS of the localized energy inequality integrated over [t1, t2]
/// with a time-independent spatial cutoff eta. t1, t2 snap to stored slabs.
ResidualReport energy_inequality_defect(const SpaceTimeField& field, const CutoffSpec& eta,
                                        double t1, double t2,
                                        const QuadratureOptions& options = {});

struct ConditionResult {
    ResidualReport report;
    /// Normalised violation: 0 when the condition holds exactly.
    double violation = 0.0;
    bool passed = false;
};

struct TwoValuedCheck {
    /// Conditions (i)..(v): L2 gradients, subcaloric, contact identity,
    /// stationarity, energy inequality.
    std::array<ConditionResult, 5> conditions;
    double tolerance = 1e-3;
    std::size_t dictionary_size = 0;

    bool all_passed() const noexcept {
        for (const auto& c : conditions) {
            if (!c.passed) return false;
        }
        return true;
    }
};

/// Nonnegative space-time bumps used for the one-sided subcaloric test:
/// centres on a coarse lattice inside each cutoff's inner ball, up to three radii
/// (those with transition layers narrower than 8h are skipped).
std::vector<SpaceTimeBump> subcaloric_dictionary(const SpaceTimeField& field,
                                                 std::span<const CutoffSpec> etas);

TwoValuedCheck two_valued_caloric_check(const SpaceTimeField& field,
                                        std::span<const CutoffSpec> etas,
                                        std::span<const TestVectorField> ys,
                                        double tolerance = 1e-3);

}  // namespace quenchlab
