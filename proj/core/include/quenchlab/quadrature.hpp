#pragma once

#include <algorithm>
#include <cmath>

#include "quenchlab/grid.hpp"

namespace quenchlab {

/// Midpoint data of one spatial cell (or space-time cell): the multilinear
/// interpolant and its gradient at the cell centre, the difference quotient
/// in time, and the quadrature weight.
struct CellSample {
    SpatialPoint x{};
    double t = 0.0;
    double u = 0.0;
    std::array<double, kMaxDim> grad{};
    double ut = 0.0;
    double weight = 0.0;
};

/// Inclusive-exclusive range of cell indices per axis.
struct CellBox {
    MultiIndex lo{0, 0, 0};
    MultiIndex hi{1, 1, 1};
    bool clipped = false;
};

/// Cells meeting the ball B_radius(center), clipped to the grid. `clipped`
/// reports whether the ball leaves the grid box.
CellBox cells_covering(const Lattice& lat, const SpatialPoint& center, double radius);

namespace detail {

struct CellCorners {
    double u = 0.0;
    std::array<double, kMaxDim> grad{};
};

inline CellCorners cell_values(const SpaceTimeField& field, std::size_t k, const MultiIndex& c) {
    const Lattice& lat = field.lattice();
    const int corners = 1 << lat.dim;
    CellCorners out;
    const double inv = 1.0 / static_cast<double>(corners);
    const double half = 2.0 / static_cast<double>(corners);
    for (int m = 0; m < corners; ++m) {
        MultiIndex idx = c;
        for (int a = 0; a < lat.dim; ++a) {
            idx[a] += (m >> a) & 1;
        }
        const double v = field.at(k, lat.flat(idx));
        out.u += v * inv;
        for (int a = 0; a < lat.dim; ++a) {
            out.grad[a] += ((m >> a) & 1 ? v : -v) * half / lat.h;
        }
    }
    return out;
}

}  // namespace detail

/// Visits every spatial cell of `box` at time t (linear interpolation between
/// slabs). Weight is h^n.
template <class Fn>
void for_each_cell_at(const SpaceTimeField& field, const CellBox& box, double t, Fn&& fn) {
    const Lattice& lat = field.lattice();
    const TimeLocation tl = locate_time(field.times(), t);
    const double w = tl.weight;
    const double vol = std::pow(lat.h, lat.dim);
    MultiIndex c{};
    for (c[0] = box.lo[0]; c[0] < box.hi[0]; ++c[0]) {
        for (c[1] = box.lo[1]; c[1] < box.hi[1]; ++c[1]) {
            for (c[2] = box.lo[2]; c[2] < box.hi[2]; ++c[2]) {
                CellSample s;
                detail::CellCorners a = detail::cell_values(field, tl.k, c);
                if (w > 0.0) {
                    const detail::CellCorners b = detail::cell_values(field, tl.k + 1, c);
                    a.u = (1.0 - w) * a.u + w * b.u;
                    for (int d = 0; d < lat.dim; ++d) {
                        a.grad[d] = (1.0 - w) * a.grad[d] + w * b.grad[d];
                    }
                }
                for (int d = 0; d < lat.dim; ++d) {
                    s.x[d] = lat.origin[d] + (static_cast<double>(c[d]) + 0.5) * lat.h;
                }
                s.t = t;
                s.u = a.u;
                s.grad = a.grad;
                s.weight = vol;
                fn(s);
            }
        }
    }
}

/// Visits every space-time cell of `box` x [t_lo, t_hi]; time intervals are
/// clipped to the window and sampled at the clipped midpoint.
template <class Fn>
void for_each_spacetime_cell(const SpaceTimeField& field, const CellBox& box, double t_lo,
                             double t_hi, Fn&& fn) {
    const Lattice& lat = field.lattice();
    const auto times = field.times();
    const double vol = std::pow(lat.h, lat.dim);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double a = std::max(times[k], t_lo);
        const double b = std::min(times[k + 1], t_hi);
        if (!(b > a)) {
            continue;
        }
        const double dt = times[k + 1] - times[k];
        const double tm = 0.5 * (a + b);
        const double w = (tm - times[k]) / dt;
        MultiIndex c{};
        for (c[0] = box.lo[0]; c[0] < box.hi[0]; ++c[0]) {
            for (c[1] = box.lo[1]; c[1] < box.hi[1]; ++c[1]) {
                for (c[2] = box.lo[2]; c[2] < box.hi[2]; ++c[2]) {
                    const detail::CellCorners c0 = detail::cell_values(field, k, c);
                    const detail::CellCorners c1 = detail::cell_values(field, k + 1, c);
                    CellSample s;
                    for (int d = 0; d < lat.dim; ++d) {
                        s.x[d] = lat.origin[d] + (static_cast<double>(c[d]) + 0.5) * lat.h;
                        s.grad[d] = (1.0 - w) * c0.grad[d] + w * c1.grad[d];
                    }
                    s.t = tm;
                    s.u = (1.0 - w) * c0.u + w * c1.u;
                    s.ut = (c1.u - c0.u) / dt;
                    s.weight = vol * (b - a);
                    fn(s);
                }
            }
        }
    }
}

inline double dot(const std::array<double, kMaxDim>& a, const std::array<double, kMaxDim>& b,
                  int n) noexcept {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace quenchlab
