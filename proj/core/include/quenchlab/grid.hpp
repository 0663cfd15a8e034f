#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "quenchlab/errors.hpp"

namespace quenchlab {

inline constexpr int kMaxDim = 3;

using SpatialPoint = std::array<double, kMaxDim>;
using MultiIndex = std::array<std::size_t, kMaxDim>;

/// Exponent p of the nonlinearity u^{-p} and the spatial dimension n.
/// The Hölder exponent alpha = 2/(p+1) is always recomputed from p.
class ModelParams {
public:
    ModelParams(double p, int n);

    double p() const noexcept { return p_; }
    int n() const noexcept { return n_; }
    double alpha() const noexcept { return 2.0 / (p_ + 1.0); }

    bool operator==(const ModelParams&) const = default;

private:
    double p_;
    int n_;
};

/// Isotropic uniform box grid plus the time window it lives on.
struct GridSpec {
    std::vector<double> origin;
    std::vector<double> extent;
    std::vector<std::size_t> cells;
    double time_start = 0.0;
    double time_end = 1.0;

    static GridSpec box(int n, double lo, double hi, std::size_t cells_per_axis,
                        double time_start, double time_end);

    void validate() const;

    int dim() const noexcept { return static_cast<int>(origin.size()); }
    double spacing() const { return extent.at(0) / static_cast<double>(cells.at(0)); }
    std::size_t nodes(int axis) const { return cells.at(axis) + 1; }
    std::size_t nodes_per_slab() const;
    double coord(int axis, std::size_t i) const {
        return origin[axis] + static_cast<double>(i) * spacing();
    }
    double upper(int axis) const { return origin[axis] + extent[axis]; }

    bool operator==(const GridSpec&) const = default;
};

/// Flat index arithmetic for the node lattice of a GridSpec. Unused axes
/// (beyond n) have a single node so loops can always run over three axes.
struct Lattice {
    explicit Lattice(const GridSpec& grid);

    int dim = 1;
    double h = 1.0;
    SpatialPoint origin{};
    MultiIndex nodes{1, 1, 1};
    MultiIndex cells{0, 0, 0};
    MultiIndex stride{1, 1, 1};

    std::size_t size() const noexcept { return nodes[0] * nodes[1] * nodes[2]; }
    std::size_t flat(const MultiIndex& i) const noexcept {
        return i[0] * stride[0] + i[1] * stride[1] + i[2] * stride[2];
    }
    MultiIndex unflat(std::size_t f) const noexcept;
    SpatialPoint position(const MultiIndex& i) const noexcept;
    bool on_boundary(const MultiIndex& i) const noexcept;
};

struct ParabolicPoint {
    int n = 1;
    SpatialPoint x{};
    double t = 0.0;
};

ParabolicPoint make_point(std::initializer_list<double> x, double t);

enum class CylinderKind { backward, two_sided };

/// Q_r^-(X) = B_r(x) x (t - r^2, t] for the backward kind;
/// B_r(x) x (t - r^2, t + r^2) for the two-sided kind.
struct ParabolicCylinder {
    ParabolicPoint center;
    double radius = 1.0;
    CylinderKind kind = CylinderKind::backward;

    bool contains(const ParabolicPoint& y) const noexcept;
    double time_lower() const noexcept { return center.t - radius * radius; }
    double time_upper() const noexcept {
        return kind == CylinderKind::backward ? center.t : center.t + radius * radius;
    }
};

enum class BoundaryKind { dirichlet_traced, periodic, analytic };

/// Scalar field on a uniform spatial grid sampled at strictly increasing
/// time stamps. Values are stored time-major, then row-major over space
/// (last axis fastest).
class SpaceTimeField {
public:
    SpaceTimeField(ModelParams params, GridSpec grid, std::vector<double> times,
                   std::vector<double> values, BoundaryKind kind);

    const ModelParams& params() const noexcept { return params_; }
    const GridSpec& grid() const noexcept { return grid_; }
    const Lattice& lattice() const noexcept { return lattice_; }
    BoundaryKind boundary_kind() const noexcept { return kind_; }
    int dim() const noexcept { return params_.n(); }
    double spacing() const noexcept { return lattice_.h; }

    std::span<const double> times() const noexcept { return times_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t slab_count() const noexcept { return times_.size(); }
    std::size_t slab_size() const noexcept { return lattice_.size(); }
    std::span<const double> slab(std::size_t k) const;
    double at(std::size_t k, std::size_t flat) const { return values_[k * slab_size() + flat]; }

    /// Appends a slab at a time later than every stored time.
    void append_slab(double t, std::span<const double> slab);

    /// Replaces the time window recorded in the grid metadata.
    void set_time_window(double time_start, double time_end);

    bool operator==(const SpaceTimeField& other) const;

private:
    ModelParams params_;
    GridSpec grid_;
    Lattice lattice_;
    std::vector<double> times_;
    std::vector<double> values_;
    BoundaryKind kind_;
};

using FieldFunction = std::function<double(const SpatialPoint&, double)>;

SpaceTimeField tabulate(const ModelParams& params, const GridSpec& grid,
                        std::vector<double> times, const FieldFunction& fn,
                        BoundaryKind kind = BoundaryKind::analytic);

std::vector<double> linspace(double a, double b, std::size_t count);

// --- Location helpers shared by the analysis modules -----------------------

struct SpatialLocation {
    MultiIndex base{0, 0, 0};
    std::array<double, kMaxDim> weight{0.0, 0.0, 0.0};
};

struct TimeLocation {
    std::size_t k = 0;
    double weight = 0.0;
};

/// Locates x in the grid; throws a domain error outside the box.
SpatialLocation locate(const Lattice& lattice, const SpatialPoint& x);
TimeLocation locate_time(std::span<const double> times, double t);

/// Multilinear combination of nodal quantities around a location. Corners
/// with zero weight are never evaluated.
template <class NodeFn>
double interpolate(const Lattice& lattice, const SpatialLocation& loc, NodeFn&& node) {
    double acc = 0.0;
    const int corners = 1 << lattice.dim;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        MultiIndex idx = loc.base;
        for (int a = 0; a < lattice.dim; ++a) {
            const bool upper = (c >> a) & 1;
            w *= upper ? loc.weight[a] : 1.0 - loc.weight[a];
            idx[a] += upper ? 1 : 0;
        }
        if (w == 0.0) {
            continue;
        }
        acc += w * node(idx);
    }
    return acc;
}

// --- Operations ---------------------------------------------------------------

double parabolic_distance(const ParabolicPoint& a, const ParabolicPoint& b);

double sample(const SpaceTimeField& field, const ParabolicPoint& x);

std::vector<double> gradient(const SpaceTimeField& field, const ParabolicPoint& x);

double time_derivative(const SpaceTimeField& field, const ParabolicPoint& x);

double laplacian(const SpaceTimeField& field, const ParabolicPoint& x);

struct Restriction {
    SpaceTimeField field;
    /// One flag per stored value of `field`: 1 when the node lies in the cylinder.
    std::vector<std::uint8_t> mask;
};

Restriction restrict_to(const SpaceTimeField& field, const ParabolicCylinder& q);

/// Node-weighted measure of the mask: h^n per node times the trapezoid
/// weight of its slab.
double mask_measure(const Restriction& r);

}  // namespace quenchlab
