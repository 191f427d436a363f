#pragma once

#include "placekit/types.hpp"

#include <iosfwd>
#include <string>

namespace placekit {

/// `pcd-rgb v1` text format:
///   line 1: "pcd-rgb v1 <n_points> <has_color:0|1>"
///   then n_points lines: "x y z" or "x y z r g b" (meters, colors in [0,1]).
/// Readers reject NaN/Inf and malformed headers.
PointCloud read_pcd(std::istream& in);
PointCloud read_pcd_file(const std::string& path);

/// Writes with 17 significant digits so a read-back is value-exact.
void write_pcd(std::ostream& out, const PointCloud& cloud);
void write_pcd_file(const std::string& path, const PointCloud& cloud);

}  // namespace placekit
