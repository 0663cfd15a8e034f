#include "quenchlab/quadrature.hpp"

namespace quenchlab {

CellBox cells_covering(const Lattice& lat, const SpatialPoint& center, double radius) {
    CellBox box;
    for (int a = 0; a < lat.dim; ++a) {
        const double lo = (center[a] - radius - lat.origin[a]) / lat.h;
        const double hi = (center[a] + radius - lat.origin[a]) / lat.h;
        const auto cells = static_cast<double>(lat.cells[a]);
        if (lo < -1e-9 || hi > cells + 1e-9) {
            box.clipped = true;
        }
        const double l = std::clamp(std::floor(lo), 0.0, cells);
        const double u = std::clamp(std::ceil(hi), 0.0, cells);
        box.lo[a] = static_cast<std::size_t>(l);
        box.hi[a] = std::max(box.lo[a], static_cast<std::size_t>(u));
    }
    return box;
}

}  // namespace quenchlab
