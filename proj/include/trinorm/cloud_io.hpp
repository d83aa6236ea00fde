#pragma once

// Point cloud file I/O.
//   xyz      one "x y z" line per point
//   xyzn     "x y z nx ny nz"
//   ply-ascii: ASCII PLY, vertex element only
// '#' starts a comment line in xyz/xyzn. Values are written with 17
// significant digits so save/load round trips are bit-exact.

#include <string>

#include "trinorm/geometry.hpp"

namespace trinorm {

enum class CloudFormat { xyz, xyzn, ply_ascii };

CloudFormat cloud_format_from_string(const std::string& s);
std::string to_string(CloudFormat f);

// Guess from the file extension (.xyz, .xyzn, .ply); throws DataError otherwise.
CloudFormat cloud_format_from_path(const std::string& path);

PointCloud load_cloud(const std::string& path, CloudFormat format);
void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format);

}  // namespace trinorm
