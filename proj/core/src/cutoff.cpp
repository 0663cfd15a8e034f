#include "quenchlab/cutoff.hpp"

#include <cmath>

namespace quenchlab {

SmoothStep smooth_step(double s) noexcept {
    if (s <= 0.0) {
        return {1.0, 0.0, 0.0};
    }
    if (s >= 1.0) {
        return {0.0, 0.0, 0.0};
    }
    // q = 1 / (1 + e^g) with g = 1/(1-s) - 1/s.
    const double g = 1.0 / (1.0 - s) - 1.0 / s;
    if (g < -700.0) {
        return {1.0, 0.0, 0.0};
    }
    if (g > 700.0) {
        return {0.0, 0.0, 0.0};
    }
    const double g1 = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
    const double g2 = -2.0 / (s * s * s) + 2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s));
    double q, q_one_minus_q;
    if (g > 0.0) {
        const double e = std::exp(-g);
        q = e / (1.0 + e);
        q_one_minus_q = e / ((1.0 + e) * (1.0 + e));
    } else {
        const double e = std::exp(g);
        q = 1.0 / (1.0 + e);
        q_one_minus_q = e / ((1.0 + e) * (1.0 + e));
    }
    SmoothStep out;
    out.value = q;
    out.d1 = -q_one_minus_q * g1;
    out.d2 = -(out.d1 * (1.0 - 2.0 * q) * g1 + q_one_minus_q * g2);
    return out;
}

void CutoffSpec::validate() const {
    require(inner_radius >= 0.0 && outer_radius > inner_radius, ErrorKind::validation,
            "cutoff requires 0 <= inner_radius < outer_radius");
}

ScalarJet cutoff_jet(const CutoffSpec& eta, int n, const SpatialPoint& x) noexcept {
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) {
        const double d = x[a] - eta.center[a];
        r2 += d * d;
    }
    const double r = std::sqrt(r2);
    const double width = eta.outer_radius - eta.inner_radius;
    const SmoothStep q = smooth_step((r - eta.inner_radius) / width);
    ScalarJet jet;
    jet.value = q.value;
    if (q.d1 == 0.0 && q.d2 == 0.0) {
        return jet;
    }
    const double dq = q.d1 / width;
    const double ddq = q.d2 / (width * width);
    if (r > 0.0) {
        for (int a = 0; a < n; ++a) {
            jet.grad[a] = dq * (x[a] - eta.center[a]) / r;
        }
        jet.laplacian = ddq + dq * static_cast<double>(n - 1) / r;
    } else {
        jet.laplacian = ddq;
    }
    return jet;
}

ScalarJet bump_jet(const SpaceTimeBump& psi, int n, const SpatialPoint& x, double t) noexcept {
    ScalarJet s = cutoff_jet(psi.space, n, x);
    if (!psi.time_dependent()) {
        return s;
    }
    const double width = psi.time_outer - psi.time_inner;
    const double dt = t - psi.time_center;
    const double adt = std::abs(dt);
    const SmoothStep q = smooth_step((adt - psi.time_inner) / width);
    const double dq = adt > 0.0 ? q.d1 / width * (dt > 0.0 ? 1.0 : -1.0) : 0.0;
    ScalarJet out;
    out.value = s.value * q.value;
    for (int a = 0; a < n; ++a) {
        out.grad[a] = s.grad[a] * q.value;
    }
    out.laplacian = s.laplacian * q.value;
    out.dt = s.value * dq;
    return out;
}

TestVectorField TestVectorField::coordinate(const SpaceTimeBump& psi, int k) {
    TestVectorField y;
    y.kind = Kind::coordinate_bump;
    y.support = psi;
    y.component = k;
    return y;
}

TestVectorField TestVectorField::radial(const SpaceTimeBump& psi) {
    TestVectorField y;
    y.kind = Kind::radial_bump;
    y.support = psi;
    return y;
}

VectorJet TestVectorField::jet(int n, const SpatialPoint& x, double t) const {
    VectorJet out;
    switch (kind) {
        case Kind::coordinate_bump: {
            require(component >= 0 && component < n, ErrorKind::usage,
                    "coordinate test field component out of range");
            const ScalarJet s = bump_jet(support, n, x, t);
            out.value[component] = s.value;
            for (int j = 0; j < n; ++j) {
                out.jac[component][j] = s.grad[j];
            }
            break;
        }
        case Kind::radial_bump: {
            const ScalarJet s = bump_jet(support, n, x, t);
            for (int i = 0; i < n; ++i) {
                const double xi = x[i] - support.space.center[i];
                out.value[i] = s.value * xi;
                for (int j = 0; j < n; ++j) {
                    out.jac[i][j] = s.grad[j] * xi + (i == j ? s.value : 0.0);
                }
            }
            break;
        }
        case Kind::custom_table:
            require(static_cast<bool>(custom), ErrorKind::usage, "custom test field has no table");
            out = custom(x, t);
            break;
    }
    return out;
}

}  // namespace quenchlab
