#include "placekit/cloud_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace placekit {

namespace {

double parse_finite(std::istringstream& line, int lineno) {
  double v;
  if (!(line >> v)) {
    throw Error("BadCloudFile", "missing value at line " + std::to_string(lineno));
  }
  if (!std::isfinite(v)) {
    throw Error("BadCloudFile", "non-finite value at line " + std::to_string(lineno));
  }
  return v;
}

}  // namespace

PointCloud read_pcd(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw Error("BadCloudFile", "empty stream");
  }
  std::istringstream hs(header);
  std::string magic, version;
  long long n = -1;
  int has_color = -1;
  hs >> magic >> version >> n >> has_color;
  if (magic != "pcd-rgb" || version != "v1" || n < 0 || (has_color != 0 && has_color != 1)) {
    throw Error("BadCloudFile", "bad header: " + header);
  }
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n));
  if (has_color) cloud.colors.reserve(static_cast<std::size_t>(n));
  std::string line;
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw Error("BadCloudFile", "expected " + std::to_string(n) + " points, got " +
                                      std::to_string(i));
    }
    std::istringstream ls(line);
    const int lineno = static_cast<int>(i) + 2;
    const double x = parse_finite(ls, lineno);
    const double y = parse_finite(ls, lineno);
    const double z = parse_finite(ls, lineno);
    cloud.points.emplace_back(x, y, z);
    if (has_color) {
      const double r = parse_finite(ls, lineno);
      const double g = parse_finite(ls, lineno);
      const double b = parse_finite(ls, lineno);
      cloud.colors.emplace_back(r, g, b);
    }
  }
  return cloud;
}

PointCloud read_pcd_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw Error("BadCloudFile", "cannot open " + path);
  }
  return read_pcd(f);
}

void write_pcd(std::ostream& out, const PointCloud& cloud) {
  out << "pcd-rgb v1 " << cloud.size() << ' ' << (cloud.has_colors() ? 1 : 0) << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.has_colors()) {
      const Vec3& c = cloud.colors[i];
      out << ' ' << c.x() << ' ' << c.y() << ' ' << c.z();
    }
    out << '\n';
  }
}

void write_pcd_file(const std::string& path, const PointCloud& cloud) {
  std::ofstream f(path);
  if (!f) {
    throw Error("BadCloudFile", "cannot open " + path + " for writing");
  }
  write_pcd(f, cloud);
}

}  // namespace placekit
