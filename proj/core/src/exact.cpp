#include "quenchlab/exact.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace quenchlab {

double ode_solution(const ModelParams& params, double t) {
    require(t < 0.0, ErrorKind::domain, "ode_solution: t >= 0 lies at or past the quench time");
    const double e = 1.0 / (params.p() + 1.0);
    return std::pow(params.p() + 1.0, e) * std::pow(-t, e);
}

double radial_steady_coefficient(const ModelParams& params) {
    const double a = params.alpha();
    const double bracket = a * (static_cast<double>(params.n()) - 2.0 + a);
    require(params.n() >= 2 && bracket > 0.0, ErrorKind::domain,
            "radial_steady: coefficient (2/(p+1))(n-2+2/(p+1)) must be positive");
    return std::pow(bracket, -1.0 / (params.p() + 1.0));
}

double radial_steady(const ModelParams& params, const SpatialPoint& x) {
    const double c = radial_steady_coefficient(params);
    double r2 = 0.0;
    for (int a = 0; a < params.n(); ++a) {
        r2 += x[a] * x[a];
    }
    if (r2 == 0.0) {
        return 0.0;
    }
    return c * std::pow(r2, 0.5 * params.alpha());
}

SpaceTimeField ode_field(const ModelParams& params, const GridSpec& grid,
                         std::vector<double> times) {
    return tabulate(params, grid, std::move(times), [&](const SpatialPoint&, double t) {
        return t < 0.0 ? ode_solution(params, t) : 0.0;
    });
}

SpaceTimeField radial_steady_field(const ModelParams& params, const GridSpec& grid,
                                   std::vector<double> times) {
    const double c = radial_steady_coefficient(params);
    return tabulate(params, grid, std::move(times), [&, c](const SpatialPoint& x, double) {
        double r2 = 0.0;
        for (int a = 0; a < params.n(); ++a) r2 += x[a] * x[a];
        return r2 == 0.0 ? 0.0 : c * std::pow(r2, 0.5 * params.alpha());
    });
}

std::vector<double> graded_times(double t0, double t1, std::size_t count, double power) {
    require(count >= 2 && t1 > t0 && power >= 1.0, ErrorKind::usage, "graded_times: bad arguments");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(count - 1);
        out[i] = t1 - (t1 - t0) * std::pow(1.0 - s, power);
    }
    out.front() = t0;
    out.back() = t1;
    return out;
}

void BlowupSpec::validate() const {
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::usage, "lambda must be positive");
    require(normalization > 0.0 && std::isfinite(normalization), ErrorKind::usage,
            "normalization must be positive");
}

SpaceTimeField rescale(const SpaceTimeField& field, const BlowupSpec& spec,
                       const GridSpec& target, std::vector<double> target_times) {
    spec.validate();
    require(spec.base_point.n == field.dim() && target.dim() == field.dim(), ErrorKind::usage,
            "rescale: dimension mismatch");
    const double factor =
        1.0 / (spec.normalization * std::pow(spec.lambda, field.params().alpha()));
    const double l = spec.lambda;
    const double l2 = l * l;
    const auto& x0 = spec.base_point;
    return tabulate(
        field.params(), target, std::move(target_times),
        [&](const SpatialPoint& x, double t) {
            ParabolicPoint y;
            y.n = field.dim();
            for (int a = 0; a < y.n; ++a) {
                y.x[a] = x0.x[a] + l * x[a];
            }
            y.t = x0.t + l2 * t;
            try {
                return factor * sample(field, y);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::domain) {
                    fail(ErrorKind::domain, fmt::format("rescaled domain leaves the source field "
                                                        "(lambda = {}): {}",
                                                        l, e.what()));
                }
                throw;
            }
        },
        field.boundary_kind());
}

namespace {

/// Smallest m such that lambda * m is an integer for every lambda, so that a
/// lattice of step m*h around a node maps onto nodes.
std::size_t commensurate_step(std::span<const double> lambdas) {
    for (std::size_t m = 1; m <= 64; ++m) {
        bool ok = true;
        for (double l : lambdas) {
            const double v = l * static_cast<double>(m);
            if (std::abs(v - std::round(v)) > 1e-9) {
                ok = false;
                break;
            }
        }
        if (ok) return m;
    }
    return 1;
}

}  // namespace

double self_similarity_residual(const SpaceTimeField& field, std::span<const double> lambdas,
                                const ParabolicCylinder& window) {
    require(!lambdas.empty(), ErrorKind::usage, "self_similarity_residual: no lambdas");
    require(window.center.n == field.dim(), ErrorKind::usage, "window dimension mismatch");
    for (double l : lambdas) {
        require(l > 0.0, ErrorKind::usage, "lambdas must be positive");
    }
    const Lattice& lat = field.lattice();
    const auto& x0 = window.center;
    const double alpha = field.params().alpha();

    // Anchor the sampling lattice at x0 when x0 is a grid node.
    MultiIndex anchor{0, 0, 0};
    bool anchored = true;
    for (int a = 0; a < lat.dim; ++a) {
        const double s = (x0.x[a] - lat.origin[a]) / lat.h;
        if (std::abs(s - std::round(s)) > 1e-9 || s < 0.0) {
            anchored = false;
            break;
        }
        anchor[a] = static_cast<std::size_t>(std::llround(s));
    }
    const std::size_t step = anchored ? commensurate_step(lambdas) : 1;

    const auto times = field.times();
    double worst = 0.0;
    std::size_t sampled = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        if (!(t > window.time_lower() && t <= window.time_upper())) {
            continue;
        }
        require(t <= x0.t, ErrorKind::usage, "window must lie in t <= t0 of the base point");
        for (std::size_t f = 0; f < lat.size(); ++f) {
            const MultiIndex idx = lat.unflat(f);
            if (anchored) {
                bool on = true;
                for (int a = 0; a < lat.dim; ++a) {
                    const auto off = static_cast<long long>(idx[a]) - static_cast<long long>(anchor[a]);
                    if (off % static_cast<long long>(step) != 0) on = false;
                }
                if (!on) continue;
            }
            ParabolicPoint y;
            y.n = lat.dim;
            y.x = lat.position(idx);
            y.t = t;
            if (!window.contains(y)) continue;
            const double u = field.at(k, f);
            for (double l : lambdas) {
                ParabolicPoint z;
                z.n = lat.dim;
                for (int a = 0; a < lat.dim; ++a) {
                    z.x[a] = x0.x[a] + l * (y.x[a] - x0.x[a]);
                }
                z.t = x0.t + l * l * (t - x0.t);
                double v;
                try {
                    v = sample(field, z);
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::domain) {
                        fail(ErrorKind::domain,
                             fmt::format("rescaled window escapes the domain for lambda = {}", l));
                    }
                    throw;
                }
                worst = std::max(worst, std::abs(u - std::pow(l, -alpha) * v));
            }
            ++sampled;
        }
    }
    require(sampled > 0, ErrorKind::domain, "window contains no grid samples");
    return worst;
}

}  // namespace quenchlab
