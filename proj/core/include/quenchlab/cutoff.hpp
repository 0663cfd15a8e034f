#pragma once

#include <array>
#include <functional>

#include "quenchlab/grid.hpp"

namespace quenchlab {

/// Smooth step q: 1 on (-inf, 0], 0 on [1, inf), and
/// q(s) = e^{-1/(1-s)} / (e^{-1/(1-s)} + e^{-1/s}) in between.
struct SmoothStep {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

SmoothStep smooth_step(double s) noexcept;

/// Radial cutoff eta(x) = q((|x - c| - r_in) / (r_out - r_in)).
struct CutoffSpec {
    SpatialPoint center{};
    double inner_radius = 0.5;
    double outer_radius = 1.0;

    void validate() const;
};

/// Value, gradient and Laplacian of a scalar test function at a point.
struct ScalarJet {
    double value = 0.0;
    std::array<double, kMaxDim> grad{};
    double laplacian = 0.0;
    double dt = 0.0;
};

ScalarJet cutoff_jet(const CutoffSpec& eta, int n, const SpatialPoint& x) noexcept;

/// Space-time bump psi(x, t) = eta(x) * q((|t - t_c| - t_in) / (t_out - t_in)).
/// A time factor with t_out <= 0 is treated as identically one.
struct SpaceTimeBump {
    CutoffSpec space;
    double time_center = 0.0;
    double time_inner = 0.0;
    double time_outer = 0.0;

    bool time_dependent() const noexcept { return time_outer > 0.0; }
    double time_lower() const noexcept { return time_center - time_outer; }
    double time_upper() const noexcept { return time_center + time_outer; }
};

ScalarJet bump_jet(const SpaceTimeBump& psi, int n, const SpatialPoint& x, double t) noexcept;

/// Vector field value and spatial Jacobian (jac[i][j] = dY_i / dx_j).
struct VectorJet {
    std::array<double, kMaxDim> value{};
    std::array<std::array<double, kMaxDim>, kMaxDim> jac{};
    double divergence(int n) const noexcept {
        double d = 0.0;
        for (int i = 0; i < n; ++i) d += jac[i][i];
        return d;
    }
};

/// Compactly supported vector fields Y used by the stationarity identities.
struct TestVectorField {
    enum class Kind { coordinate_bump, radial_bump, custom_table };

    Kind kind = Kind::coordinate_bump;
    SpaceTimeBump support;
    /// Direction index for coordinate_bump: Y = psi e_k.
    int component = 0;
    /// custom_table: caller supplied jet, must vanish outside `support`.
    std::function<VectorJet(const SpatialPoint&, double)> custom;

    static TestVectorField coordinate(const SpaceTimeBump& psi, int k);
    static TestVectorField radial(const SpaceTimeBump& psi);

    VectorJet jet(int n, const SpatialPoint& x, double t) const;
};

}  // namespace quenchlab
