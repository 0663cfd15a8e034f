#pragma once

#include <span>
#include <vector>

#include "quenchlab/grid.hpp"

namespace quenchlab {

/// u0(t) = (p+1)^{1/(p+1)} (-t)^{1/(p+1)} for t < 0; solves u' = -u^{-p}
/// and quenches at t = 0.
double ode_solution(const ModelParams& params, double t);

/// c_{n,p} |x|^{2/(p+1)} with c_{n,p} = [(2/(p+1))(n - 2 + 2/(p+1))]^{-1/(p+1)}.
/// Solves Delta u = u^{-p} away from the origin.
double radial_steady(const ModelParams& params, const SpatialPoint& x);
double radial_steady_coefficient(const ModelParams& params);

/// The ODE solution extended constantly in space; the slab at t = 0 (if any)
/// holds the quenched value 0.
SpaceTimeField ode_field(const ModelParams& params, const GridSpec& grid,
                         std::vector<double> times);

SpaceTimeField radial_steady_field(const ModelParams& params, const GridSpec& grid,
                                   std::vector<double> times);

/// Graded time stamps on [t0, t1] clustering towards t1 like (1 - s)^power.
std::vector<double> graded_times(double t0, double t1, std::size_t count, double power);

/// Parameters of v(x, t) = L^{-1} lambda^{-alpha} u(x0 + lambda x, t0 + lambda^2 t).
struct BlowupSpec {
    ParabolicPoint base_point;
    double lambda = 1.0;
    double normalization = 1.0;

    void validate() const;
};

/// Resamples the rescaled field onto `target` at `target_times`.
SpaceTimeField rescale(const SpaceTimeField& field, const BlowupSpec& spec,
                       const GridSpec& target, std::vector<double> target_times);

/// max over lambda and over sampled window nodes X of
/// |u(X) - lambda^{-alpha} u(D_lambda X)|, with D_lambda the parabolic
/// dilation about the window centre.
double self_similarity_residual(const SpaceTimeField& field, std::span<const double> lambdas,
                                const ParabolicCylinder& window);

}  // namespace quenchlab
