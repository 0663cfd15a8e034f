#include "quenchlab/rupture.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "quenchlab/errors.hpp"
#include "quenchlab/exact.hpp"
#include "quenchlab/quadrature.hpp"
#include "quenchlab/rng.hpp"

namespace quenchlab {

namespace {

struct NodeRef {
    std::size_t k = 0;
    MultiIndex i{0, 0, 0};
};

class QuotientProbe {
public:
    QuotientProbe(const SpaceTimeField& f, double exponent) : f_(f), lat_(f.lattice()), e_(exponent) {}

    NodeRef node(std::uint64_t id) const {
        const std::size_t m = f_.slab_size();
        return {static_cast<std::size_t>(id / m), lat_.unflat(static_cast<std::size_t>(id % m))};
    }

    double value(const NodeRef& a) const { return f_.at(a.k, lat_.flat(a.i)); }

    ParabolicPoint point(const NodeRef& a) const {
        ParabolicPoint p;
        p.n = lat_.dim;
        p.x = lat_.position(a.i);
        p.t = f_.times()[a.k];
        return p;
    }

    double quotient(const NodeRef& a, const NodeRef& b) const {
        double d2 = 0.0;
        for (int d = 0; d < lat_.dim; ++d) {
            const double dx = (static_cast<double>(a.i[d]) - static_cast<double>(b.i[d])) * lat_.h;
            d2 += dx * dx;
        }
        const double delta =
            std::max(std::sqrt(d2), std::sqrt(std::abs(f_.times()[a.k] - f_.times()[b.k])));
        if (delta == 0.0) return 0.0;
        return std::abs(value(a) - value(b)) / std::pow(delta, e_);
    }

    // Best position for `moving` within four spacings and four slabs, `fixed` held.
    bool improve(NodeRef& moving, const NodeRef& fixed, double& best) const {
        const NodeRef start = moving;
        NodeRef cand = start;
        bool improved = false;
        const auto lo = [](std::size_t c) { return c >= 4 ? c - 4 : std::size_t{0}; };
        const std::size_t k_hi = std::min(start.k + 4, f_.slab_count() - 1);
        std::array<std::size_t, kMaxDim> ilo{}, ihi{};
        for (int d = 0; d < kMaxDim; ++d) {
            ilo[d] = d < lat_.dim ? lo(start.i[d]) : 0;
            ihi[d] = d < lat_.dim ? std::min(start.i[d] + 4, lat_.nodes[d] - 1) : 0;
        }
        for (cand.k = lo(start.k); cand.k <= k_hi; ++cand.k) {
            for (cand.i[0] = ilo[0]; cand.i[0] <= ihi[0]; ++cand.i[0]) {
                for (cand.i[1] = ilo[1]; cand.i[1] <= ihi[1]; ++cand.i[1]) {
                    for (cand.i[2] = ilo[2]; cand.i[2] <= ihi[2]; ++cand.i[2]) {
                        const double q = quotient(cand, fixed);
                        if (q > best) {
                            best = q;
                            moving = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        return improved;
    }

private:
    const SpaceTimeField& f_;
    const Lattice& lat_;
    double e_;
};

}  // namespace

HolderEstimate holder_seminorm(const SpaceTimeField& field, double exponent, std::size_t budget,
                               std::uint64_t seed) {
    require(exponent > 0.0 && exponent <= 1.0, ErrorKind::usage, "exponent must lie in (0, 1]");
    require(budget >= 1000, ErrorKind::usage, "budget must be at least 1000");
    const std::uint64_t total = static_cast<std::uint64_t>(field.slab_count()) * field.slab_size();
    require(total >= 2, ErrorKind::usage, "field has fewer than two nodes");

    const QuotientProbe probe(field, exponent);
    SplitMix64 rng(seed);
    HolderEstimate out;
    out.exponent = exponent;
    NodeRef best_a = probe.node(0), best_b = probe.node(1);
    double best = probe.quotient(best_a, best_b);
    for (std::size_t s = 0; s < budget; ++s) {
        NodeRef a = probe.node(rng.below(total));
        NodeRef b = probe.node(rng.below(total));
        double q = probe.quotient(a, b);
        if (!(q > best)) continue;
        best = q;
        bool moved = true;
        while (moved) {
            moved = probe.improve(a, b, best);
            moved = probe.improve(b, a, best) || moved;
        }
        best_a = a;
        best_b = b;
    }
    out.seminorm = best;
    out.witness = {probe.point(best_a), probe.point(best_b)};
    out.pairs_sampled = budget;
    return out;
}

double recommended_threshold(const SpaceTimeField& field, double kappa) {
    require(kappa > 0.0, ErrorKind::usage, "kappa must be positive");
    return kappa * std::pow(field.spacing(), field.params().alpha());
}

double auto_threshold(const SpaceTimeField& field, std::uint64_t seed,
                      std::optional<std::size_t> slab, double margin) {
    require(margin > 1.0, ErrorKind::usage, "margin must exceed 1");
    const double a = field.params().alpha();
    double seminorm = 0.0;
    if (slab) {
        const auto values = field.slab(*slab);
        const double t = field.times()[*slab];
        GridSpec g = field.grid();
        g.time_start = t - 1.0;
        g.time_end = t;
        const SpaceTimeField one(field.params(), g, {t}, std::vector<double>(values.begin(), values.end()),
                                 field.boundary_kind());
        seminorm = holder_seminorm(one, a, 10000, seed).seminorm;
    } else {
        seminorm = holder_seminorm(field, a, 10000, seed).seminorm;
    }
    return margin * seminorm * std::pow(field.spacing(), a);
}

RuptureSet rupture_set(const SpaceTimeField& field, double tau) {
    require(tau > 0.0, ErrorKind::usage, "tau must be positive");
    RuptureSet s;
    s.threshold = tau;
    s.source_grid = field.grid();
    const Lattice& lat = field.lattice();
    const auto times = field.times();
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t f = 0; f < field.slab_size(); ++f) {
            if (field.at(k, f) <= tau) {
                ParabolicPoint p;
                p.n = lat.dim;
                p.x = lat.position(lat.unflat(f));
                p.t = times[k];
                s.points.push_back(p);
            }
        }
    }
    return s;
}

std::vector<double> dyadic_radii(double r_max, double r_min) {
    require(r_min > 0.0 && r_min <= r_max, ErrorKind::usage, "need 0 < r_min <= r_max");
    std::vector<double> r;
    for (double v = r_max; v >= r_min * (1.0 - 1e-12); v *= 0.5) r.push_back(v);
    return r;
}

namespace {

void check_radii(std::span<const double> radii, const GridSpec& grid) {
    require(radii.size() >= 2, ErrorKind::usage, "need at least two radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        require(radii[i] > 0.0 && (i == 0 || radii[i] < radii[i - 1]), ErrorKind::usage,
                "radii must be positive and decreasing");
    }
    const double h = grid.spacing();
    double extent = std::sqrt(grid.time_end - grid.time_start);
    for (double e : grid.extent) extent = std::max(extent, e);
    require(radii.back() >= 4.0 * h * (1.0 - 1e-12) && radii.front() <= extent / 4.0 * (1.0 + 1e-12),
            ErrorKind::usage,
            fmt::format("radii must lie in [4h, extent/4] = [{}, {}]", 4.0 * h, extent / 4.0));
}

// Right-closed box index anchored at `lo`: a closed interval of length m*r
// needs exactly m boxes.
long box_index(double v, double lo, double r) {
    const double q = (v - lo) / r;
    return std::max(0L, static_cast<long>(std::ceil(q - 1e-9)) - 1);
}

DimensionFit fit_counts(std::span<const double> radii, std::vector<std::size_t> counts) {
    DimensionFit out;
    out.radii.assign(radii.begin(), radii.end());
    out.counts = std::move(counts);
    const std::size_t m = radii.size();
    out.fit_range = m >= 5 ? std::pair<std::size_t, std::size_t>{1, m - 1}
                           : std::pair<std::size_t, std::size_t>{0, m};
    const auto [b, e] = out.fit_range;
    if (e - b < 2) fail(ErrorKind::degenerate_fit, "fewer than two radii in the fit range");
    const bool constant = std::all_of(out.counts.begin() + static_cast<long>(b),
                                      out.counts.begin() + static_cast<long>(e),
                                      [&](std::size_t c) { return c == out.counts[b]; });
    if (constant) {
        out.degenerate = true;
        out.fitted_dim = 0.0;
        return out;
    }
    const auto w = static_cast<double>(e - b);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = b; i < e; ++i) {
        const double x = std::log(radii[i]);
        const double y = std::log(static_cast<double>(out.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (w * sxy - sx * sy) / (w * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / w;
    for (std::size_t i = b; i < e; ++i) {
        const double r = std::log(static_cast<double>(out.counts[i])) -
                         (icpt + slope * std::log(radii[i]));
        out.residual += r * r;
    }
    out.fitted_dim = std::max(0.0, -slope);
    return out;
}

template <class Key>
DimensionFit count_boxes(const std::vector<ParabolicPoint>& pts, std::span<const double> radii,
                         Key&& key) {
    std::vector<std::size_t> counts;
    for (double r : radii) {
        std::set<std::array<long, kMaxDim + 1>> boxes;
        for (const auto& p : pts) boxes.insert(key(p, r));
        counts.push_back(boxes.size());
    }
    return fit_counts(radii, std::move(counts));
}

std::array<double, kMaxDim + 1> lower_corner(const std::vector<ParabolicPoint>& pts) {
    std::array<double, kMaxDim + 1> lo;
    lo.fill(std::numeric_limits<double>::infinity());
    for (const auto& p : pts) {
        for (int d = 0; d < p.n; ++d) lo[d] = std::min(lo[d], p.x[d]);
        lo[kMaxDim] = std::min(lo[kMaxDim], p.t);
    }
    return lo;
}

}  // namespace

DimensionFit parabolic_box_dimension(const RuptureSet& s, std::span<const double> radii) {
    require(!s.points.empty(), ErrorKind::usage, "rupture set is empty");
    check_radii(radii, s.source_grid);
    const auto lo = lower_corner(s.points);
    return count_boxes(s.points, radii, [&](const ParabolicPoint& p, double r) {
        std::array<long, kMaxDim + 1> key{};
        for (int d = 0; d < p.n; ++d) key[d] = box_index(p.x[d], lo[d], r);
        key[kMaxDim] = box_index(p.t, lo[kMaxDim], r * r);
        return key;
    });
}

DimensionFit slice_dimension(const RuptureSet& s, double t, std::span<const double> radii) {
    const double h = s.source_grid.spacing();
    std::vector<ParabolicPoint> slice;
    for (const auto& p : s.points) {
        if (std::abs(p.t - t) <= h * h) slice.push_back(p);
    }
    if (slice.empty()) fail(ErrorKind::domain, fmt::format("no rupture points near t = {}", t));
    check_radii(radii, s.source_grid);
    const auto lo = lower_corner(slice);
    return count_boxes(slice, radii, [&](const ParabolicPoint& p, double r) {
        std::array<long, kMaxDim + 1> key{};
        for (int d = 0; d < p.n; ++d) key[d] = box_index(p.x[d], lo[d], r);
        return key;
    });
}

ScalingQuantity parse_scaling_quantity(const std::string& name) {
    if (name == "u_inv_p") return ScalingQuantity::u_inv_p;
    if (name == "energy") return ScalingQuantity::energy;
    if (name == "mass") return ScalingQuantity::mass;
    fail(ErrorKind::validation,
         fmt::format("unknown quantity '{}' (known: u_inv_p, energy, mass)", name));
}

const char* to_string(ScalingQuantity q) noexcept {
    switch (q) {
        case ScalingQuantity::u_inv_p: return "u_inv_p";
        case ScalingQuantity::energy: return "energy";
        case ScalingQuantity::mass: return "mass";
    }
    return "unknown";
}

double expected_scaling_exponent(const ModelParams& params, ScalingQuantity q) noexcept {
    const double n = params.n();
    const double p = params.p();
    switch (q) {
        case ScalingQuantity::u_inv_p: return n + 2.0 / (p + 1.0);
        case ScalingQuantity::energy: return n + 4.0 / (p + 1.0);
        case ScalingQuantity::mass: return n + 2.0 + 2.0 / (p + 1.0);
    }
    return 0.0;
}

ScalingFit apriori_scaling_check(const SpaceTimeField& field, const ParabolicPoint& x0,
                                 ScalingQuantity q, std::span<const double> radii) {
    require(x0.n == field.dim(), ErrorKind::usage, "base point dimension mismatch");
    require(radii.size() >= 2, ErrorKind::usage, "need at least two radii");
    const double u0 = sample(field, x0);
    require(u0 <= recommended_threshold(field), ErrorKind::usage,
            fmt::format("base point is not near the rupture set (u = {})", u0));
    const double p = field.params().p();
    const int n = field.dim();
    const Lattice& lat = field.lattice();
    ScalingFit out;
    out.expected_exponent = expected_scaling_exponent(field.params(), q);
    std::vector<double> logs_r, logs_i;
    for (double r : radii) {
        require(r > 0.0, ErrorKind::usage, "radii must be positive");
        const CellBox box = cells_covering(lat, x0.x, r);
        if (box.clipped || x0.t - r * r < field.times().front()) {
            fail(ErrorKind::domain, fmt::format("cylinder of radius {} leaves the field domain", r));
        }
        double integral = 0.0, measure = 0.0, excluded = 0.0;
        for_each_spacetime_cell(field, box, x0.t - r * r, x0.t, [&](const CellSample& c) {
            double d2 = 0.0;
            for (int a = 0; a < n; ++a) d2 += (c.x[a] - x0.x[a]) * (c.x[a] - x0.x[a]);
            if (d2 > r * r) return;
            measure += c.weight;
            switch (q) {
                case ScalingQuantity::mass:
                    integral += c.u * c.weight;
                    return;
                case ScalingQuantity::energy:
                    integral += dot(c.grad, c.grad, n) * c.weight;
                    break;
                case ScalingQuantity::u_inv_p:
                    break;
            }
            if (c.u <= 0.0) {
                excluded += c.weight;
                return;
            }
            integral += (q == ScalingQuantity::energy ? std::pow(c.u, 1.0 - p) : std::pow(c.u, -p)) *
                        c.weight;
        });
        const double frac = measure > 0.0 ? excluded / measure : 0.0;
        out.excluded_fraction = std::max(out.excluded_fraction, frac);
        if (frac > 0.01) {
            fail(ErrorKind::accuracy,
                 fmt::format("singular cells carry {:.3g} of the cylinder measure at r = {}", frac, r));
        }
        require(integral > 0.0, ErrorKind::degenerate_fit,
                fmt::format("integral vanishes at r = {}", r));
        out.integrals.push_back(integral);
        logs_r.push_back(std::log(r));
        logs_i.push_back(std::log(integral));
    }
    const auto m = static_cast<double>(radii.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        sx += logs_r[i];
        sy += logs_i[i];
        sxx += logs_r[i] * logs_r[i];
        sxy += logs_r[i] * logs_i[i];
    }
    const double det = m * sxx - sx * sx;
    require(det > 0.0, ErrorKind::degenerate_fit, "radii coincide");
    const double slope = (m * sxy - sx * sy) / det;
    const double icpt = (sy - slope * sx) / m;
    DimensionFit& fit = out.fit;
    fit.radii.assign(radii.begin(), radii.end());
    fit.fit_range = {0, radii.size()};
    fit.fitted_dim = slope;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        const double e = logs_i[i] - (icpt + slope * logs_r[i]);
        fit.residual += e * e;
    }
    return out;
}

BlowupSequence blowup_sequence(const SpaceTimeField& field, const ParabolicPoint& x0,
                               std::span<const double> lambdas, const GridSpec& target,
                               const std::vector<double>& target_times, double tolerance) {
    require(!lambdas.empty(), ErrorKind::usage, "no lambdas");
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        require(lambdas[i] < lambdas[i - 1], ErrorKind::usage, "lambdas must be decreasing");
    }
    BlowupSequence out;
    out.lambdas.assign(lambdas.begin(), lambdas.end());
    for (double l : lambdas) {
        BlowupSpec spec;
        spec.base_point = x0;
        spec.lambda = l;
        out.fields.push_back(rescale(field, spec, target, target_times));
        double sup = 0.0;
        for (double v : out.fields.back().values()) sup = std::max(sup, std::abs(v));
        out.sup_norms.push_back(sup);
    }
    for (std::size_t i = 0; i + 1 < out.fields.size(); ++i) {
        const auto a = out.fields[i].values();
        const auto b = out.fields[i + 1].values();
        double d = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
        out.sup_differences.push_back(d);
    }
    const double scale = std::max(1.0, out.sup_norms.back());
    out.converged = out.sup_differences.empty() || out.sup_differences.back() <= tolerance * scale;
    return out;
}

}  // namespace quenchlab
