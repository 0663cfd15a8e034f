#include "quenchlab/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "quenchlab/errors.hpp"
#include "quenchlab/quadrature.hpp"

namespace quenchlab {

WeightSpec WeightSpec::full_space(double k) {
    WeightSpec w;
    w.truncation_multiple = k;
    w.eta.reset();
    return w;
}

void WeightSpec::validate() const {
    require(truncation_multiple >= 4.0, ErrorKind::validation,
            "truncation_multiple must be >= 4");
    require(u_floor >= 0.0, ErrorKind::validation, "u_floor must be nonnegative");
    if (eta) eta->validate();
}

double heat_kernel(int n, double r2, double s) noexcept {
    return std::pow(4.0 * std::numbers::pi * s, -0.5 * n) * std::exp(-r2 / (4.0 * s));
}

double gaussian_tail_mass(int n, double k) noexcept {
    const double e = std::exp(-0.5 * k * k);
    switch (n) {
        case 1: return std::erfc(k / std::numbers::sqrt2);
        case 2: return e;
        default: return std::erfc(k / std::numbers::sqrt2) + std::sqrt(2.0 / std::numbers::pi) * k * e;
    }
}

namespace {

struct GaussianCell {
    const CellSample& cell;
    double weight;  // G * eta * h^n
    SpatialPoint y;
};

// Visits the cells whose centre lies in the integration region at time t0 - s.
template <class Fn>
double integrate_gaussian(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                          const WeightSpec& w, Fn&& fn) {
    w.validate();
    require(s > 0.0, ErrorKind::usage, "s must be positive");
    require(x0.n == field.dim(), ErrorKind::usage, "base point dimension mismatch");
    const auto times = field.times();
    const double t = x0.t - s;
    if (t < times.front() - 1e-14 * std::max(1.0, std::abs(t)) ||
        t > times.back() + 1e-14 * std::max(1.0, std::abs(t))) {
        fail(ErrorKind::domain, fmt::format("time t0 - s = {} outside stored history [{}, {}]", t,
                                            times.front(), times.back()));
    }
    const int n = field.dim();
    const double radius = w.truncation_multiple * std::sqrt(2.0 * s);
    SpatialPoint center = x0.x;
    double box_radius = radius;
    if (w.eta) {
        const CutoffSpec& eta = *w.eta;
        if (eta.outer_radius < radius) {
            for (int a = 0; a < n; ++a) center[a] = x0.x[a] + eta.center[a];
            box_radius = eta.outer_radius;
        }
    }
    const Lattice& lat = field.lattice();
    const CellBox box = cells_covering(lat, center, box_radius);
    if (box.clipped) {
        fail(ErrorKind::domain,
             fmt::format("integration region of radius {} around the base point leaves the domain",
                         box_radius));
    }
    double mass = 0.0;
    for_each_cell_at(field, box, t, [&](const CellSample& c) {
        SpatialPoint y{};
        double r2 = 0.0;
        for (int a = 0; a < n; ++a) {
            y[a] = c.x[a] - x0.x[a];
            r2 += y[a] * y[a];
        }
        if (r2 > radius * radius) return;
        double weight = heat_kernel(n, r2, s) * c.weight;
        if (w.eta) {
            weight *= cutoff_jet(*w.eta, n, y).value;
            if (weight == 0.0) return;
        }
        mass += weight;
        fn(GaussianCell{c, weight, y});
    });
    return mass;
}

}  // namespace

WeightedValue weighted_energy(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                              const WeightSpec& w) {
    const double p = field.params().p();
    const int n = field.dim();
    double grad_term = 0.0;
    double sing_term = 0.0;
    double height_term = 0.0;
    double excluded = 0.0;
    const double mass = integrate_gaussian(field, x0, s, w, [&](const GaussianCell& g) {
        const double u = g.cell.u;
        grad_term += 0.5 * dot(g.cell.grad, g.cell.grad, n) * g.weight;
        height_term += u * u * g.weight;
        if (u > w.u_floor && u > 0.0) {
            sing_term += std::pow(u, 1.0 - p) / (p - 1.0) * g.weight;
        } else {
            excluded += g.weight;
        }
    });
    WeightedValue out;
    out.value = std::pow(s, (p - 1.0) / (p + 1.0)) * (grad_term - sing_term) -
                std::pow(s, -2.0 / (p + 1.0)) / (2.0 * (p + 1.0)) * height_term;
    out.excluded_fraction = mass > 0.0 ? excluded / mass : 0.0;
    out.flagged = out.excluded_fraction > 0.01;
    out.tail_bound = gaussian_tail_mass(n, w.truncation_multiple);
    return out;
}

double doubling_average(const std::function<double(double)>& f, double s, std::size_t samples) {
    require(samples >= 8, ErrorKind::usage, "doubling average needs at least 8 samples");
    const double step = s / static_cast<double>(samples - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double tau = s + step * static_cast<double>(i);
        const double fw = (i == 0 || i + 1 == samples) ? 0.5 : 1.0;
        sum += fw * f(tau);
    }
    return sum * step / s;
}

WeightedValue averaged_energy(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                              const WeightSpec& w, std::size_t samples) {
    WeightedValue out;
    out.value = doubling_average(
        [&](double tau) {
            const WeightedValue e = weighted_energy(field, x0, tau, w);
            out.flagged = out.flagged || e.flagged;
            out.excluded_fraction = std::max(out.excluded_fraction, e.excluded_fraction);
            out.tail_bound = e.tail_bound;
            return e.value;
        },
        s, samples);
    return out;
}

double SlackModel::allowance(double s) const noexcept {
    return tol_abs + tol_exp * std::exp(-1.0 / (8.0 * s));
}

namespace {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const auto m = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = m * sxx - sx * sx;
    require(det > 0.0, ErrorKind::degenerate_fit, "least-squares abscissae coincide");
    LineFit f;
    f.slope = (m * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / m;
    return f;
}

}  // namespace

DensityResult density_estimate(const SpaceTimeField& field, const ParabolicPoint& x0,
                               const WeightSpec& w, double s_min, double s_max,
                               const SlackModel& slack) {
    require(s_min > 0.0 && s_min < s_max, ErrorKind::usage, "need 0 < s_min < s_max");
    std::vector<double> ladder;
    for (double s = s_max; s >= s_min * (1.0 - 1e-12); s *= 0.5) ladder.push_back(s);
    require(ladder.size() >= 3, ErrorKind::usage, "ladder needs s_max >= 4 s_min");
    std::reverse(ladder.begin(), ladder.end());

    const auto times = field.times();
    if (x0.t - 2.0 * s_max < times.front() || x0.t - ladder.front() > times.back()) {
        fail(ErrorKind::domain, "density ladder leaves the stored history");
    }
    const TimeLocation tl = locate_time(times, x0.t - ladder.front());
    const std::size_t k = std::min(tl.k, times.size() - 2);
    const double dt_local = times[k + 1] - times[k];
    if (ladder.front() < 4.0 * dt_local) {
        fail(ErrorKind::usage, fmt::format("s_min = {} is below 4 dt = {} near t0", ladder.front(),
                                           4.0 * dt_local));
    }

    const double h = field.spacing();
    if (ladder.front() < 0.25 * h * h) {
        fail(ErrorKind::usage, fmt::format("s_min = {} is below h^2/4 = {}: the heat kernel is not "
                                           "resolved by the grid",
                                           ladder.front(), 0.25 * h * h));
    }

    const double p = field.params().p();
    DensityResult out;
    MonotonicityTrace& tr = out.trace;
    tr.base_point = x0;
    tr.eta_weighted = w.eta.has_value();
    tr.s_samples = ladder;
    for (double s : ladder) {
        const WeightedValue e = weighted_energy(field, x0, s, w);
        const WeightedValue eb = averaged_energy(field, x0, s, w);
        tr.E_values.push_back(e.value);
        tr.Ebar_values.push_back(eb.value);
        tr.accuracy_flagged = tr.accuracy_flagged || e.flagged || eb.flagged;
        tr.tail_bound = e.tail_bound;
    }
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
        const double drop = tr.E_values[i] - tr.E_values[i + 1];
        if (drop > slack.allowance(ladder[i + 1])) {
            tr.violations.push_back({ladder[i], ladder[i + 1], drop});
        }
    }

    const bool all_negative = std::all_of(tr.Ebar_values.begin(), tr.Ebar_values.end(),
                                          [](double v) { return v < 0.0; });
    if (all_negative) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            lx.push_back(std::log(ladder[i]));
            ly.push_back(std::log(-tr.Ebar_values[i]));
        }
        tr.divergence_slope = least_squares(lx, ly).slope;
        tr.diverging = tr.divergence_slope <= -1.0 / (p + 1.0);
    } else {
        tr.divergence_slope = std::numeric_limits<double>::quiet_NaN();
    }

    if (!tr.diverging) {
        const double a = field.params().alpha();
        std::array<double, 3> x{}, y{};
        for (std::size_t i = 0; i < 3; ++i) {
            x[i] = std::pow(ladder[i], a);
            y[i] = tr.Ebar_values[i];
        }
        tr.theta_estimate = least_squares(x, y).intercept;
    }
    out.theta = tr.theta_estimate;
    out.diverging = tr.diverging;
    return out;
}

FrequencyValue frequency(const SpaceTimeField& field, const ParabolicPoint& x0, double s,
                         const WeightSpec& w) {
    const int n = field.dim();
    FrequencyValue out;
    double grad = 0.0;
    integrate_gaussian(field, x0, s, w, [&](const GaussianCell& g) {
        out.H += g.cell.u * g.cell.u * g.weight;
        grad += dot(g.cell.grad, g.cell.grad, n) * g.weight;
    });
    out.D = s * grad;
    double sup = 0.0;
    for (double v : field.values()) sup = std::max(sup, std::abs(v));
    if (out.H > 1e-12 * sup * sup && out.H > 0.0) out.N = out.D / out.H;
    out.tail_bound = gaussian_tail_mass(n, w.truncation_multiple);
    return out;
}

FrequencyTrace almgren_scan(const SpaceTimeField& field, const ParabolicPoint& x0,
                            const WeightSpec& w, std::span<const double> s_grid,
                            std::optional<double> gamma_half_reference, bool claim_monotone,
                            double tolerance) {
    require(!s_grid.empty(), ErrorKind::usage, "empty s grid");
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
        require(s_grid[i] > 0.0 && (i == 0 || s_grid[i] > s_grid[i - 1]), ErrorKind::usage,
                "s grid must be positive and strictly increasing");
    }
    FrequencyTrace tr;
    tr.base_point = x0;
    tr.gamma_half_reference = gamma_half_reference;
    tr.monotonicity_claimed = claim_monotone;
    for (double s : s_grid) {
        const FrequencyValue f = frequency(field, x0, s, w);
        tr.s_samples.push_back(s);
        tr.H_values.push_back(f.H);
        tr.D_values.push_back(f.D);
        tr.N_values.push_back(f.N);
        if (!f.N) ++tr.underflow_count;
    }
    const std::size_t m = s_grid.size();
    if (gamma_half_reference) {
        double dev = 0.0;
        for (const auto& nv : tr.N_values) {
            if (nv) dev = std::max(dev, std::abs(*nv - *gamma_half_reference));
        }
        tr.max_gamma_deviation = dev;
    }
    if (claim_monotone) {
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const auto& a = tr.N_values[i];
            const auto& b = tr.N_values[i + 1];
            if (a && b && *a - *b > tolerance) {
                tr.violations.push_back({s_grid[i], s_grid[i + 1], *a - *b});
            }
        }
    }
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const auto& nv = tr.N_values[i];
        if (!nv || *nv <= 0.0 || !(tr.H_values[i - 1] > 0.0) || !(tr.H_values[i + 1] > 0.0)) {
            continue;
        }
        const double slope = (std::log(tr.H_values[i + 1]) - std::log(tr.H_values[i - 1])) /
                             (std::log(s_grid[i + 1]) - std::log(s_grid[i - 1]));
        const double err = std::abs(slope - 2.0 * *nv) / (2.0 * *nv);
        tr.log_h_identity_error = std::max(tr.log_h_identity_error.value_or(0.0), err);
    }
    return tr;
}

}  // namespace quenchlab
