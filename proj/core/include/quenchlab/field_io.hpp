#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quenchlab/grid.hpp"

namespace quenchlab {

/// QLF1 layout (little-endian): "QLF1", u16 n, f64 p, u32 cells[n],
/// (f64 origin, f64 extent)[n], u64 time count, f64 times, f64 values,
/// u32 CRC-32 of everything after the magic.
std::vector<std::uint8_t> encode_field(const SpaceTimeField& field);
SpaceTimeField decode_field(std::span<const std::uint8_t> bytes,
                            BoundaryKind kind = BoundaryKind::dirichlet_traced);

void save_field(const SpaceTimeField& field, const std::filesystem::path& path);
SpaceTimeField load_field(const std::filesystem::path& path,
                          BoundaryKind kind = BoundaryKind::dirichlet_traced);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace quenchlab
