#include "quenchlab/weak.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "quenchlab/quadrature.hpp"

namespace quenchlab {

namespace {

struct Window {
    CellBox box;
    double t_lo = 0.0;
    double t_hi = 0.0;
};

Window support_window(const SpaceTimeField& field, const SpaceTimeBump& psi, bool need_time) {
    psi.space.validate();
    Window w;
    w.box = cells_covering(field.lattice(), psi.space.center, psi.space.outer_radius);
    require(!w.box.clipped, ErrorKind::usage, "test function support leaves the spatial domain");
    const auto times = field.times();
    require(times.size() >= 2, ErrorKind::domain, "space-time quadrature needs two or more slabs");
    if (psi.time_dependent()) {
        require(psi.time_inner >= 0.0 && psi.time_outer > psi.time_inner, ErrorKind::usage,
                "time cutoff requires 0 <= time_inner < time_outer");
        require(psi.time_lower() >= times.front() && psi.time_upper() <= times.back(),
                ErrorKind::usage, "test function time support leaves the stored history");
        w.t_lo = psi.time_lower();
        w.t_hi = psi.time_upper();
    } else {
        require(!need_time, ErrorKind::usage,
                "distributional test functions must be compactly supported in time");
        w.t_lo = times.front();
        w.t_hi = times.back();
    }
    return w;
}

double resolve_floor(const SpaceTimeField& field, const QuadratureOptions& opt) {
    return opt.u_floor.value_or(std::pow(field.spacing(), field.params().alpha()));
}

void require_nonnegative(const SpaceTimeField& field) {
    for (double v : field.values()) {
        require(v >= 0.0, ErrorKind::usage, "field must be nonnegative");
    }
}

/// Decides whether the u^{1-p}, u^{-p} terms are evaluated on a cell.
struct SingularGate {
    double floor;
    bool enabled;

    bool admits(double u) const {
        if (!enabled) return false;
        if (u > 0.0 && u >= floor) return true;
        if (floor <= 0.0) {
            fail(ErrorKind::singular_integrand,
                 "u vanishes on a quadrature cell (no floor configured)");
        }
        return false;
    }
};

void require_finite(const ResidualReport& r) {
    require(std::isfinite(r.value) && std::isfinite(r.scale), ErrorKind::singular_integrand,
            "non-finite quadrature");
}

}  // namespace

ResidualReport distributional_residual(const SpaceTimeField& field, const SpaceTimeBump& psi,
                                       const QuadratureOptions& options) {
    const Window w = support_window(field, psi, true);
    require_nonnegative(field);
    const int n = field.dim();
    const double p = field.params().p();
    const SingularGate singular{resolve_floor(field, options), !options.pure_caloric};
    ResidualReport r;
    for_each_spacetime_cell(field, w.box, w.t_lo, w.t_hi, [&](const CellSample& c) {
        const ScalarJet j = bump_jet(psi, n, c.x, c.t);
        if (j.value == 0.0 && j.dt == 0.0 && j.laplacian == 0.0) {
            return;
        }
        ++r.quadrature_cells;
        const double lin = c.u * (-j.dt - j.laplacian);
        double sing = 0.0;
        if (singular.admits(c.u)) {
            sing = std::pow(c.u, -p) * j.value;
        } else if (singular.enabled) {
            r.excluded_measure += c.weight;
        }
        r.value += c.weight * (lin + sing);
        r.scale += c.weight * (std::abs(lin) + std::abs(sing));
    });
    require_finite(r);
    return r;
}

ResidualReport stationary_residual(const SpaceTimeField& field, const TestVectorField& y,
                                   const QuadratureOptions& options) {
    const Window w = support_window(field, y.support, false);
    const int n = field.dim();
    const double p = field.params().p();
    const SingularGate singular{resolve_floor(field, options), !options.pure_caloric};
    ResidualReport r;
    for_each_spacetime_cell(field, w.box, w.t_lo, w.t_hi, [&](const CellSample& c) {
        const VectorJet yj = y.jet(n, c.x, c.t);
        const double div = yj.divergence(n);
        double dy = 0.0;
        bool any = div != 0.0;
        for (int i = 0; i < n; ++i) {
            any = any || yj.value[i] != 0.0;
            for (int j = 0; j < n; ++j) {
                dy += yj.jac[i][j] * c.grad[i] * c.grad[j];
            }
        }
        if (!any && dy == 0.0) {
            return;
        }
        ++r.quadrature_cells;
        double energy = 0.5 * dot(c.grad, c.grad, n);
        if (singular.admits(c.u)) {
            energy -= std::pow(c.u, 1.0 - p) / (p - 1.0);
        } else if (singular.enabled) {
            r.excluded_measure += c.weight;
        }
        const double t1 = energy * div;
        const double t2 = -dy;
        const double t3 = -c.ut * dot(c.grad, yj.value, n);
        r.value += c.weight * (t1 + t2 + t3);
        r.scale += c.weight * (std::abs(t1) + std::abs(t2) + std::abs(t3));
    });
    require_finite(r);
    return r;
}

namespace {

std::pair<std::size_t, std::size_t> snap_interval(std::span<const double> times, double t1,
                                                  double t2) {
    require(t1 < t2, ErrorKind::usage, "energy inequality needs t1 < t2");
    const double tol = 1e-12 * std::max(1.0, times.back() - times.front());
    std::size_t k1 = times.size(), k2 = times.size();
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k1 == times.size() && times[k] >= t1 - tol) k1 = k;
        if (times[k] <= t2 + tol) k2 = k;
    }
    require(k1 < times.size() && k2 < times.size() && k1 < k2, ErrorKind::domain,
            "energy inequality interval does not span two stored slabs");
    return {k1, k2};
}

ResidualReport energy_defect_impl(const SpaceTimeField& field, const CutoffSpec& eta,
                                  double t1, double t2, const QuadratureOptions& options) {
    eta.validate();
    const Lattice& lat = field.lattice();
    const CellBox box = cells_covering(lat, eta.center, eta.outer_radius);
    require(!box.clipped, ErrorKind::usage, "cutoff support leaves the spatial domain");
    const auto [k1, k2] = snap_interval(field.times(), t1, t2);
    const int n = field.dim();
    const double p = field.params().p();
    const SingularGate singular{resolve_floor(field, options), !options.pure_caloric};
    ResidualReport r;

    auto slab_energy = [&](std::size_t k) {
        double e = 0.0;
        for_each_cell_at(field, box, field.times()[k], [&](const CellSample& c) {
            const ScalarJet j = cutoff_jet(eta, n, c.x);
            if (j.value == 0.0) return;
            double density = 0.5 * dot(c.grad, c.grad, n);
            if (singular.admits(c.u)) {
                density -= std::pow(c.u, 1.0 - p) / (p - 1.0);
            }
            e += c.weight * density * j.value * j.value;
        });
        return e;
    };
    const double e1 = slab_energy(k1);
    const double e2 = slab_energy(k2);
    double flux = 0.0, flux_abs = 0.0;
    for_each_spacetime_cell(field, box, field.times()[k1], field.times()[k2],
                            [&](const CellSample& c) {
                                const ScalarJet j = cutoff_jet(eta, n, c.x);
                                if (j.value == 0.0) return;
                                ++r.quadrature_cells;
                                if (singular.enabled && !singular.admits(c.u)) {
                                    r.excluded_measure += c.weight;
                                }
                                const double a = c.ut * c.ut * j.value * j.value;
                                const double b = 2.0 * c.ut * dot(c.grad, j.grad, n) * j.value;
                                flux += c.weight * (a + b);
                                flux_abs += c.weight * (std::abs(a) + std::abs(b));
                            });
    r.value = e2 - e1 + flux;
    r.scale = std::abs(e1) + std::abs(e2) + flux_abs;
    require_finite(r);
    return r;
}

}  // namespace

ResidualReport energy_inequality_defect(const SpaceTimeField& field, const CutoffSpec& eta,
                                        double t1, double t2, const QuadratureOptions& options) {
    return energy_defect_impl(field, eta, t1, t2, options);
}

std::vector<SpaceTimeBump> subcaloric_dictionary(const SpaceTimeField& field,
                                                 std::span<const CutoffSpec> etas) {
    const auto times = field.times();
    const double t_mid = 0.5 * (times.front() + times.back());
    const double t_half = 0.45 * (times.back() - times.front());
    const int n = field.dim();
    std::vector<SpaceTimeBump> out;
    for (const CutoffSpec& eta : etas) {
        const double spread = eta.outer_radius - eta.inner_radius;
        const double step = std::max(eta.inner_radius / 2.0, field.spacing());
        const int reach = eta.inner_radius > 0.0
                              ? static_cast<int>(std::floor(eta.inner_radius / step + 1e-9))
                              : 0;
        std::array<int, kMaxDim> off{};
        const int span = 2 * reach + 1;
        int total = 1;
        for (int a = 0; a < n; ++a) total *= span;
        for (int m = 0; m < total; ++m) {
            int rem = m;
            double d2 = 0.0;
            for (int a = 0; a < n; ++a) {
                off[a] = rem % span - reach;
                rem /= span;
                d2 += (off[a] * step) * (off[a] * step);
            }
            if (d2 > eta.inner_radius * eta.inner_radius + 1e-12) continue;
            for (double frac : {0.25, 0.5, 1.0}) {
                // Transition layers thinner than 8 cells are not resolved by the midpoint rule.
                if (0.5 * frac * spread < 8.0 * field.spacing()) continue;
                SpaceTimeBump b;
                for (int a = 0; a < n; ++a) b.space.center[a] = eta.center[a] + off[a] * step;
                b.space.outer_radius = frac * spread;
                b.space.inner_radius = 0.5 * b.space.outer_radius;
                b.time_center = t_mid;
                b.time_inner = 0.0;
                b.time_outer = t_half;
                out.push_back(b);
            }
        }
    }
    require(!out.empty(), ErrorKind::usage,
            "cutoffs are too narrow for the grid: no resolved subcaloric test functions");
    return out;
}

TwoValuedCheck two_valued_caloric_check(const SpaceTimeField& field,
                                        std::span<const CutoffSpec> etas,
                                        std::span<const TestVectorField> ys, double tolerance) {
    require(!etas.empty() && !ys.empty(), ErrorKind::usage,
            "two_valued_caloric_check needs at least one cutoff and one vector field");
    require_nonnegative(field);
    const int n = field.dim();
    const auto times = field.times();
    require(times.size() >= 2, ErrorKind::domain, "two_valued_caloric_check needs two slabs");
    const double t0 = times.front(), t1 = times.back();
    QuadratureOptions caloric;
    caloric.pure_caloric = true;

    TwoValuedCheck out;
    out.tolerance = tolerance;

    // (i) finite Dirichlet energy and time derivative.
    {
        ResidualReport acc;
        for (const CutoffSpec& eta : etas) {
            const CellBox box = cells_covering(field.lattice(), eta.center, eta.outer_radius);
            require(!box.clipped, ErrorKind::usage, "cutoff support leaves the spatial domain");
            for_each_spacetime_cell(field, box, t0, t1, [&](const CellSample& c) {
                if (cutoff_jet(eta, n, c.x).value == 0.0) return;
                ++acc.quadrature_cells;
                acc.value += c.weight * (dot(c.grad, c.grad, n) + c.ut * c.ut);
            });
        }
        acc.scale = std::abs(acc.value);
        auto& cond = out.conditions[0];
        cond.report = acc;
        cond.violation = std::isfinite(acc.value) ? 0.0 : std::numeric_limits<double>::infinity();
        cond.passed = std::isfinite(acc.value);
    }

    // (ii) Delta u - u_t >= 0 against a dictionary of nonnegative bumps.
    {
        const auto dict = subcaloric_dictionary(field, etas);
        out.dictionary_size = dict.size();
        auto& cond = out.conditions[1];
        cond.violation = 0.0;
        bool first = true;
        for (const SpaceTimeBump& psi : dict) {
            const Window w = support_window(field, psi, true);
            ResidualReport r;
            for_each_spacetime_cell(field, w.box, w.t_lo, w.t_hi, [&](const CellSample& c) {
                const ScalarJet j = bump_jet(psi, n, c.x, c.t);
                if (j.value == 0.0 && j.dt == 0.0 && j.laplacian == 0.0) return;
                ++r.quadrature_cells;
                const double v = c.u * (j.dt + j.laplacian);
                r.value += c.weight * v;
                r.scale += c.weight * std::abs(v);
            });
            require_finite(r);
            const double viol = r.scale > 0.0 ? std::max(0.0, -r.value / r.scale) : 0.0;
            if (first || viol > cond.violation ||
                (viol == cond.violation && r.value < cond.report.value)) {
                cond.report = r;
                cond.violation = viol;
                first = false;
            }
        }
        cond.passed = cond.violation <= tolerance;
    }

    // (iii) u (u_t - Delta u) = 0 in the weak form with eta^2 weights.
    {
        auto& cond = out.conditions[2];
        bool first = true;
        for (const CutoffSpec& eta : etas) {
            const CellBox box = cells_covering(field.lattice(), eta.center, eta.outer_radius);
            ResidualReport r;
            for_each_spacetime_cell(field, box, t0, t1, [&](const CellSample& c) {
                const ScalarJet j = cutoff_jet(eta, n, c.x);
                if (j.value == 0.0) return;
                ++r.quadrature_cells;
                const double e2 = j.value * j.value;
                const double a = c.ut * c.u * e2;
                const double b = dot(c.grad, c.grad, n) * e2;
                const double d = 2.0 * j.value * c.u * dot(c.grad, j.grad, n);
                r.value += c.weight * (a + b + d);
                r.scale += c.weight * (std::abs(a) + std::abs(b) + std::abs(d));
            });
            require_finite(r);
            if (first || r.relative() > cond.report.relative()) {
                cond.report = r;
                first = false;
            }
        }
        cond.violation = cond.report.relative();
        cond.passed = cond.violation <= tolerance;
    }

    // (iv) stationarity of the Dirichlet energy; twice the p-free identity.
    {
        auto& cond = out.conditions[3];
        bool first = true;
        for (const TestVectorField& y : ys) {
            ResidualReport r = stationary_residual(field, y, caloric);
            r.value *= 2.0;
            r.scale *= 2.0;
            if (first || r.relative() > cond.report.relative()) {
                cond.report = r;
                first = false;
            }
        }
        cond.violation = cond.report.relative();
        cond.passed = cond.violation <= tolerance;
    }

    // (v) localized energy inequality (one-sided).
    {
        auto& cond = out.conditions[4];
        bool first = true;
        for (const CutoffSpec& eta : etas) {
            ResidualReport r = energy_defect_impl(field, eta, t0, t1, caloric);
            r.value *= 2.0;
            r.scale *= 2.0;
            const double viol = r.scale > 0.0 ? std::max(0.0, r.value / r.scale) : 0.0;
            if (first || viol > cond.violation) {
                cond.report = r;
                cond.violation = viol;
                first = false;
            }
        }
        cond.passed = cond.violation <= tolerance;
    }
    return out;
}

}  // namespace quenchlab
