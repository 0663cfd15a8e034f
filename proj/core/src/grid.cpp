#include "quenchlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

namespace quenchlab {

namespace {

constexpr double kSnap = 1e-9;

double snap(double s) {
    const double r = std::round(s);
    return std::abs(s - r) < kSnap ? r : s;
}

}  // namespace

ModelParams::ModelParams(double p, int n) : p_(p), n_(n) {
    require(std::isfinite(p) && p > 1.0, ErrorKind::validation, "p > 1 required");
    require(n >= 1 && n <= kMaxDim, ErrorKind::validation, "n must be 1, 2 or 3");
}

GridSpec GridSpec::box(int n, double lo, double hi, std::size_t cells_per_axis,
                       double time_start, double time_end) {
    GridSpec g;
    g.origin.assign(n, lo);
    g.extent.assign(n, hi - lo);
    g.cells.assign(n, cells_per_axis);
    g.time_start = time_start;
    g.time_end = time_end;
    g.validate();
    return g;
}

void GridSpec::validate() const {
    const auto n = origin.size();
    require(n >= 1 && n <= kMaxDim, ErrorKind::validation, "grid dimension must be 1, 2 or 3");
    require(extent.size() == n && cells.size() == n, ErrorKind::validation,
            "grid origin, extent and cells must have the same length");
    for (std::size_t a = 0; a < n; ++a) {
        require(std::isfinite(origin[a]) && std::isfinite(extent[a]) && extent[a] > 0.0,
                ErrorKind::validation, "grid extent must be positive");
        require(cells[a] >= 1, ErrorKind::validation, "cells_per_axis must be positive");
    }
    const double h0 = extent[0] / static_cast<double>(cells[0]);
    for (std::size_t a = 1; a < n; ++a) {
        const double ha = extent[a] / static_cast<double>(cells[a]);
        require(std::abs(ha - h0) <= 1e-12 * h0, ErrorKind::validation,
                "grid must be isotropic (common spacing on all axes)");
    }
    require(std::isfinite(time_start) && std::isfinite(time_end) && time_start < time_end,
            ErrorKind::validation, "time_start < time_end required");
}

std::size_t GridSpec::nodes_per_slab() const {
    std::size_t total = 1;
    for (auto c : cells) {
        total *= c + 1;
    }
    return total;
}

Lattice::Lattice(const GridSpec& grid) {
    dim = grid.dim();
    h = grid.spacing();
    for (int a = 0; a < dim; ++a) {
        origin[a] = grid.origin[a];
        nodes[a] = grid.cells[a] + 1;
        cells[a] = grid.cells[a];
    }
    stride[2] = 1;
    stride[1] = nodes[2];
    stride[0] = nodes[1] * nodes[2];
}

MultiIndex Lattice::unflat(std::size_t f) const noexcept {
    MultiIndex i{};
    i[0] = f / stride[0];
    f -= i[0] * stride[0];
    i[1] = f / stride[1];
    i[2] = f - i[1] * stride[1];
    return i;
}

SpatialPoint Lattice::position(const MultiIndex& i) const noexcept {
    SpatialPoint x{};
    for (int a = 0; a < dim; ++a) {
        x[a] = origin[a] + static_cast<double>(i[a]) * h;
    }
    return x;
}

bool Lattice::on_boundary(const MultiIndex& i) const noexcept {
    for (int a = 0; a < dim; ++a) {
        if (i[a] == 0 || i[a] + 1 == nodes[a]) {
            return true;
        }
    }
    return false;
}

ParabolicPoint make_point(std::initializer_list<double> x, double t) {
    require(x.size() >= 1 && x.size() <= kMaxDim, ErrorKind::usage, "point dimension must be 1..3");
    ParabolicPoint p;
    p.n = static_cast<int>(x.size());
    std::copy(x.begin(), x.end(), p.x.begin());
    p.t = t;
    return p;
}

bool ParabolicCylinder::contains(const ParabolicPoint& y) const noexcept {
    double d2 = 0.0;
    for (int a = 0; a < center.n; ++a) {
        const double d = y.x[a] - center.x[a];
        d2 += d * d;
    }
    if (d2 > radius * radius) {
        return false;
    }
    if (kind == CylinderKind::backward) {
        return y.t > time_lower() && y.t <= center.t;
    }
    return y.t > time_lower() && y.t < time_upper();
}

SpaceTimeField::SpaceTimeField(ModelParams params, GridSpec grid, std::vector<double> times,
                               std::vector<double> values, BoundaryKind kind)
    : params_(params),
      grid_(std::move(grid)),
      lattice_((grid_.validate(), grid_)),
      times_(std::move(times)),
      values_(std::move(values)),
      kind_(kind) {
    require(grid_.dim() == params_.n(), ErrorKind::validation,
            "grid dimension does not match model dimension");
    require(!times_.empty(), ErrorKind::validation, "field needs at least one time slab");
    require(values_.size() == times_.size() * lattice_.size(), ErrorKind::validation,
            "field values must hold one slab per time stamp");
    for (std::size_t k = 0; k < times_.size(); ++k) {
        require(std::isfinite(times_[k]), ErrorKind::validation, "times must be finite");
        if (k > 0) {
            require(times_[k] > times_[k - 1], ErrorKind::validation,
                    "times must be strictly increasing");
        }
    }
    const double span = grid_.time_end - grid_.time_start;
    require(times_.front() >= grid_.time_start - 1e-12 * span &&
                times_.back() <= grid_.time_end + 1e-12 * span,
            ErrorKind::validation, "times must lie within [time_start, time_end]");
    for (double v : values_) {
        require(std::isfinite(v), ErrorKind::validation, "field values must be finite");
    }
}

std::span<const double> SpaceTimeField::slab(std::size_t k) const {
    require(k < times_.size(), ErrorKind::usage, "slab index out of range");
    return std::span<const double>(values_).subspan(k * slab_size(), slab_size());
}

void SpaceTimeField::append_slab(double t, std::span<const double> slab) {
    require(slab.size() == slab_size(), ErrorKind::usage, "slab size mismatch");
    require(t > times_.back(), ErrorKind::usage, "appended slab must be later than stored slabs");
    for (double v : slab) {
        require(std::isfinite(v), ErrorKind::numerical, "non-finite value in appended slab");
    }
    times_.push_back(t);
    values_.insert(values_.end(), slab.begin(), slab.end());
    if (t > grid_.time_end) {
        grid_.time_end = t;
    }
}

void SpaceTimeField::set_time_window(double time_start, double time_end) {
    require(time_start < time_end && times_.front() >= time_start && times_.back() <= time_end,
            ErrorKind::usage, "time window must contain every stored time");
    grid_.time_start = time_start;
    grid_.time_end = time_end;
}

bool SpaceTimeField::operator==(const SpaceTimeField& other) const {
    return params_ == other.params_ && grid_ == other.grid_ && kind_ == other.kind_ &&
           times_ == other.times_ && values_ == other.values_;
}

SpaceTimeField tabulate(const ModelParams& params, const GridSpec& grid,
                        std::vector<double> times, const FieldFunction& fn, BoundaryKind kind) {
    grid.validate();
    const Lattice lat(grid);
    std::vector<double> values;
    values.reserve(times.size() * lat.size());
    for (double t : times) {
        for (std::size_t f = 0; f < lat.size(); ++f) {
            values.push_back(fn(lat.position(lat.unflat(f)), t));
        }
    }
    return SpaceTimeField(params, grid, std::move(times), std::move(values), kind);
}

std::vector<double> linspace(double a, double b, std::size_t count) {
    require(count >= 2, ErrorKind::usage, "linspace needs at least two points");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    out.back() = b;
    return out;
}

SpatialLocation locate(const Lattice& lattice, const SpatialPoint& x) {
    SpatialLocation loc;
    for (int a = 0; a < lattice.dim; ++a) {
        double s = snap((x[a] - lattice.origin[a]) / lattice.h);
        const auto cells = static_cast<double>(lattice.cells[a]);
        if (!(s >= 0.0 && s <= cells)) {
            fail(ErrorKind::domain,
                 fmt::format("point coordinate {} on axis {} lies outside the grid", x[a], a));
        }
        auto i = static_cast<std::size_t>(std::floor(s));
        if (i >= lattice.cells[a]) {
            i = lattice.cells[a] - 1;
        }
        loc.base[a] = i;
        loc.weight[a] = s - static_cast<double>(i);
    }
    return loc;
}

TimeLocation locate_time(std::span<const double> times, double t) {
    const double span = times.size() > 1 ? times.back() - times.front() : 1.0;
    const double tol = 1e-14 * std::max(span, std::abs(t));
    if (!(t >= times.front() - tol && t <= times.back() + tol)) {
        fail(ErrorKind::domain, fmt::format("time {} lies outside the stored history", t));
    }
    if (times.size() == 1) {
        return {0, 0.0};
    }
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    if (k >= times.size() - 1) {
        return {times.size() - 1, 0.0};
    }
    const double dt = times[k + 1] - times[k];
    double w = (t - times[k]) / dt;
    if (std::abs(t - times[k]) <= tol) {
        w = 0.0;
    } else if (std::abs(times[k + 1] - t) <= tol) {
        return {k + 1, 0.0};
    }
    return {k, std::clamp(w, 0.0, 1.0)};
}

double parabolic_distance(const ParabolicPoint& a, const ParabolicPoint& b) {
    require(a.n == b.n, ErrorKind::usage, "parabolic_distance: dimension mismatch");
    double d2 = 0.0;
    for (int i = 0; i < a.n; ++i) {
        const double d = a.x[i] - b.x[i];
        d2 += d * d;
    }
    return std::max(std::sqrt(d2), std::sqrt(std::abs(a.t - b.t)));
}

namespace {

void check_dim(const SpaceTimeField& field, const ParabolicPoint& x) {
    require(x.n == field.dim(), ErrorKind::usage, "point dimension does not match field");
}

template <class SlabFn>
double in_time(const SpaceTimeField& field, double t, SlabFn&& at_slab) {
    const TimeLocation tl = locate_time(field.times(), t);
    const double v0 = at_slab(tl.k);
    if (tl.weight == 0.0) {
        return v0;
    }
    return (1.0 - tl.weight) * v0 + tl.weight * at_slab(tl.k + 1);
}

void require_interior_stencil(const Lattice& lat, const SpatialLocation& loc) {
    for (int a = 0; a < lat.dim; ++a) {
        const std::size_t hi = loc.base[a] + (loc.weight[a] > 0.0 ? 1 : 0);
        if (loc.base[a] < 1 || hi + 1 >= lat.nodes[a]) {
            fail(ErrorKind::domain, "point is closer than one spacing to the spatial boundary");
        }
    }
}

}  // namespace

double sample(const SpaceTimeField& field, const ParabolicPoint& x) {
    check_dim(field, x);
    const Lattice& lat = field.lattice();
    const SpatialLocation loc = locate(lat, x.x);
    return in_time(field, x.t, [&](std::size_t k) {
        return interpolate(lat, loc, [&](const MultiIndex& i) { return field.at(k, lat.flat(i)); });
    });
}

std::vector<double> gradient(const SpaceTimeField& field, const ParabolicPoint& x) {
    check_dim(field, x);
    const Lattice& lat = field.lattice();
    const SpatialLocation loc = locate(lat, x.x);
    require_interior_stencil(lat, loc);
    std::vector<double> g(field.dim());
    for (int a = 0; a < lat.dim; ++a) {
        g[a] = in_time(field, x.t, [&](std::size_t k) {
            return interpolate(lat, loc, [&](const MultiIndex& i) {
                const std::size_t f = lat.flat(i);
                return (field.at(k, f + lat.stride[a]) - field.at(k, f - lat.stride[a])) /
                       (2.0 * lat.h);
            });
        });
    }
    return g;
}

double laplacian(const SpaceTimeField& field, const ParabolicPoint& x) {
    check_dim(field, x);
    const Lattice& lat = field.lattice();
    const SpatialLocation loc = locate(lat, x.x);
    require_interior_stencil(lat, loc);
    const double inv_h2 = 1.0 / (lat.h * lat.h);
    return in_time(field, x.t, [&](std::size_t k) {
        return interpolate(lat, loc, [&](const MultiIndex& i) {
            const std::size_t f = lat.flat(i);
            double acc = 0.0;
            for (int a = 0; a < lat.dim; ++a) {
                acc += field.at(k, f + lat.stride[a]) + field.at(k, f - lat.stride[a]);
            }
            acc -= 2.0 * lat.dim * field.at(k, f);
            return acc * inv_h2;
        });
    });
}

double time_derivative(const SpaceTimeField& field, const ParabolicPoint& x) {
    check_dim(field, x);
    const auto times = field.times();
    const std::size_t m = times.size();
    require(m >= 3, ErrorKind::domain, "time derivative needs at least three stored slabs");
    if (!(x.t > times.front() && x.t < times.back())) {
        fail(ErrorKind::domain, "time derivative requested at a temporal endpoint");
    }
    const Lattice& lat = field.lattice();
    const SpatialLocation loc = locate(lat, x.x);
    auto at_slab = [&](std::size_t k) {
        return interpolate(lat, loc, [&](const MultiIndex& i) { return field.at(k, lat.flat(i)); });
    };

    const TimeLocation tl = locate_time(times, x.t);
    std::size_t k = tl.k;
    // Three-slab window: the containing interval plus its nearer neighbour.
    std::size_t first;
    if (k == 0) {
        first = 0;
    } else if (k + 1 >= m - 1) {
        first = m - 3;
    } else if (tl.weight == 0.0) {
        first = k - 1;
    } else {
        first = (x.t - times[k] <= times[k + 1] - x.t) ? k - 1 : k;
    }
    const double t0 = times[first], t1 = times[first + 1], t2 = times[first + 2];
    const double u0 = at_slab(first), u1 = at_slab(first + 1), u2 = at_slab(first + 2);
    const double t = x.t;
    // Derivative of the Lagrange quadratic through the three slabs.
    const double l0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    const double l1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    const double l2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    return l0 * u0 + l1 * u1 + l2 * u2;
}

Restriction restrict_to(const SpaceTimeField& field, const ParabolicCylinder& q) {
    require(q.center.n == field.dim(), ErrorKind::usage, "cylinder dimension does not match field");
    require(q.radius > 0.0, ErrorKind::usage, "cylinder radius must be positive");
    const Lattice& lat = field.lattice();
    const GridSpec& grid = field.grid();

    MultiIndex lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < lat.dim; ++a) {
        const double s_lo = snap((q.center.x[a] - q.radius - lat.origin[a]) / lat.h);
        const double s_hi = snap((q.center.x[a] + q.radius - lat.origin[a]) / lat.h);
        const auto cells = static_cast<double>(lat.cells[a]);
        if (s_hi < 0.0 || s_lo > cells) {
            fail(ErrorKind::domain, "cylinder does not intersect the spatial domain");
        }
        lo[a] = static_cast<std::size_t>(std::max(0.0, std::floor(s_lo)));
        hi[a] = static_cast<std::size_t>(std::min(cells, std::ceil(s_hi)));
        if (hi[a] == lo[a]) {
            if (hi[a] < lat.cells[a]) {
                ++hi[a];
            } else {
                --lo[a];
            }
        }
    }

    const auto times = field.times();
    const double tl = q.time_lower();
    const double tu = q.time_upper();
    if (tu < times.front() || tl >= times.back()) {
        fail(ErrorKind::domain, "cylinder does not intersect the stored time range");
    }
    std::size_t k_lo = static_cast<std::size_t>(
        std::upper_bound(times.begin(), times.end(), tl) - times.begin());
    if (k_lo > 0) {
        --k_lo;
    }
    std::size_t k_hi = static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), tu) - times.begin());
    if (k_hi >= times.size()) {
        k_hi = times.size() - 1;
    }

    GridSpec sub;
    for (int a = 0; a < lat.dim; ++a) {
        sub.origin.push_back(grid.coord(a, lo[a]));
        sub.extent.push_back(static_cast<double>(hi[a] - lo[a]) * lat.h);
        sub.cells.push_back(hi[a] - lo[a]);
    }
    if (lo == MultiIndex{0, 0, 0} && [&] {
            for (int a = 0; a < lat.dim; ++a) {
                if (hi[a] != lat.cells[a]) return false;
            }
            return true;
        }()) {
        // Whole-box restriction keeps the original geometry bit for bit.
        sub.origin = grid.origin;
        sub.extent = grid.extent;
    }
    std::vector<double> sub_times(times.begin() + static_cast<std::ptrdiff_t>(k_lo),
                                  times.begin() + static_cast<std::ptrdiff_t>(k_hi) + 1);
    if (k_lo == 0 && k_hi + 1 == times.size()) {
        sub.time_start = grid.time_start;
        sub.time_end = grid.time_end;
    } else {
        sub.time_start = sub_times.front();
        sub.time_end = sub_times.size() > 1 ? sub_times.back()
                                            : sub_times.front() + (grid.time_end - grid.time_start);
    }

    const Lattice sub_lat(sub);
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    values.reserve(sub_times.size() * sub_lat.size());
    mask.reserve(values.capacity());
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        for (std::size_t f = 0; f < sub_lat.size(); ++f) {
            MultiIndex si = sub_lat.unflat(f);
            MultiIndex gi = si;
            for (int a = 0; a < lat.dim; ++a) {
                gi[a] += lo[a];
            }
            values.push_back(field.at(k, lat.flat(gi)));
            ParabolicPoint y;
            y.n = lat.dim;
            y.x = lat.position(gi);
            y.t = times[k];
            mask.push_back(q.contains(y) ? 1 : 0);
        }
    }
    return Restriction{SpaceTimeField(field.params(), std::move(sub), std::move(sub_times),
                                      std::move(values), field.boundary_kind()),
                       std::move(mask)};
}

double mask_measure(const Restriction& r) {
    const auto& f = r.field;
    const auto times = f.times();
    const std::size_t m = times.size();
    const double cell = std::pow(f.spacing(), f.dim());
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        double wt = 0.0;
        if (m > 1) {
            if (k > 0) wt += 0.5 * (times[k] - times[k - 1]);
            if (k + 1 < m) wt += 0.5 * (times[k + 1] - times[k]);
        }
        std::size_t count = 0;
        for (std::size_t i = 0; i < f.slab_size(); ++i) {
            count += r.mask[k * f.slab_size() + i];
        }
        total += wt * cell * static_cast<double>(count);
    }
    return total;
}

}  // namespace quenchlab
