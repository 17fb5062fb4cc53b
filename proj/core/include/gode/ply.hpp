#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "gode/model.hpp"

namespace gode {

/// Reads a binary little-endian 3DGS PLY (x,y,z, nx,ny,nz, f_dc_0..2, f_rest_0..44,
/// opacity, scale_0..2, rot_0..3; all float). Normals are optional and discarded.
/// Throws PlyParseError naming the offending property.
GaussianModel load_ply(const std::filesystem::path& path);
GaussianModel read_ply(std::istream& in);

/// Writes the canonical 62-property layout; normals are zero-filled.
void save_ply(const GaussianModel& model, const std::filesystem::path& path);
void write_ply(const GaussianModel& model, std::ostream& out);

/// Canonical header text produced by write_ply for `vertex_count` vertices.
std::string ply_header(std::size_t vertex_count);

inline constexpr std::size_t kPlyFloatsPerVertex = 62;

}  // namespace gode
