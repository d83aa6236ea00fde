#include "trinorm/cloud_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace trinorm {
namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool parse_fields(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::istringstream ss(line);
  double v;
  while (ss >> v) out.push_back(v);
  std::string trailing;
  if (ss.fail() && !ss.eof()) return false;  // non-numeric token
  return true;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_normal(Vec3& n, const std::string& path, std::size_t line_no) {
  const double len = norm(n);
  if (len < 1e-12) {
    throw IoError(path + ":" + std::to_string(line_no) + ": normal with zero norm");
  }
  if (std::abs(len - 1.0) > 1e-6) n = n / len;
}

PointCloud load_xyz_like(const std::string& path, bool with_normals) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> f;
  const std::size_t want = with_normals ? 6 : 3;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    if (!parse_fields(line, f) || f.size() != want) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed line, expected " +
                    std::to_string(want) + " numeric fields");
    }
    cloud.points.push_back({f[0], f[1], f[2]});
    if (with_normals) {
      Vec3 n{f[3], f[4], f[5]};
      check_normal(n, path, line_no);
      cloud.normals.push_back(n);
    }
  }
  if (in.bad()) throw IoError("I/O failure reading '" + path + "'");
  return cloud;
}

PointCloud load_ply_ascii(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw IoError(path + ": truncated PLY header");
    ++line_no;
  };
  next_line();
  if (line != "ply" && line != "ply\r") throw IoError(path + ": missing 'ply' magic line");

  std::size_t vertex_count = 0;
  bool have_vertex_element = false;
  std::vector<std::string> props;
  bool in_vertex_element = false;
  for (;;) {
    next_line();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii") throw IoError(path + ": only ascii PLY is supported");
      continue;
    }
    if (tok == "element") {
      std::string name;
      ss >> name >> vertex_count;
      if (name != "vertex") throw IoError(path + ":" + std::to_string(line_no) +
                                          ": only vertex elements are supported, found '" + name + "'");
      have_vertex_element = true;
      in_vertex_element = true;
      continue;
    }
    if (tok == "property") {
      if (!in_vertex_element) throw IoError(path + ": property outside vertex element");
      std::string type, name;
      ss >> type >> name;
      if (type == "list") throw IoError(path + ": list properties are not supported");
      props.push_back(name);
      continue;
    }
    if (tok == "end_header") break;
    throw IoError(path + ":" + std::to_string(line_no) + ": unexpected header token '" + tok + "'");
  }
  if (!have_vertex_element) throw IoError(path + ": no vertex element");

  auto column = [&](const char* name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int cx = column("x"), cy = column("y"), cz = column("z");
  if (cx < 0 || cy < 0 || cz < 0) throw IoError(path + ": vertex element lacks x/y/z properties");
  const int cnx = column("nx"), cny = column("ny"), cnz = column("nz");
  const bool with_normals = cnx >= 0 && cny >= 0 && cnz >= 0;

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::vector<double> f;
  for (std::size_t i = 0; i < vertex_count; ++i) {
    next_line();
    if (!parse_fields(line, f) || f.size() != props.size()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed vertex line");
    }
    cloud.points.push_back({f[cx], f[cy], f[cz]});
    if (with_normals) {
      Vec3 n{f[cnx], f[cny], f[cnz]};
      check_normal(n, path, line_no);
      cloud.normals.push_back(n);
    }
  }
  if (in.bad()) throw IoError("I/O failure reading '" + path + "'");
  return cloud;
}

}  // namespace

CloudFormat cloud_format_from_string(const std::string& s) {
  const std::string t = lower(s);
  if (t == "xyz") return CloudFormat::xyz;
  if (t == "xyzn") return CloudFormat::xyzn;
  if (t == "ply" || t == "ply-ascii") return CloudFormat::ply_ascii;
  throw DataError("unknown cloud format '" + s + "'");
}

std::string to_string(CloudFormat f) {
  switch (f) {
    case CloudFormat::xyz: return "xyz";
    case CloudFormat::xyzn: return "xyzn";
    case CloudFormat::ply_ascii: return "ply-ascii";
  }
  return "?";
}

CloudFormat cloud_format_from_path(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) throw DataError("cannot infer format from '" + path + "'");
  return cloud_format_from_string(path.substr(dot + 1));
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  PointCloud cloud;
  switch (format) {
    case CloudFormat::xyz: cloud = load_xyz_like(path, false); break;
    case CloudFormat::xyzn: cloud = load_xyz_like(path, true); break;
    case CloudFormat::ply_ascii: cloud = load_ply_ascii(path); break;
  }
  const std::size_t slash = path.find_last_of("/\\");
  cloud.name = slash == std::string::npos ? path : path.substr(slash + 1);
  return cloud;
}

void save_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
  const bool wants_normals = format == CloudFormat::xyzn ||
                             (format == CloudFormat::ply_ascii && cloud.has_normals());
  if (format == CloudFormat::xyzn && !cloud.has_normals()) {
    throw DataError("xyzn output requested but cloud '" + cloud.name + "' has no normals");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");

  if (format == CloudFormat::ply_ascii) {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (wants_normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "end_header\n";
  }
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << fmt17(p.x) << ' ' << fmt17(p.y) << ' ' << fmt17(p.z);
    if (wants_normals) {
      const Vec3& n = cloud.normals[i];
      out << ' ' << fmt17(n.x) << ' ' << fmt17(n.y) << ' ' << fmt17(n.z);
    }
    out << '\n';
  }
  if (!out) throw IoError("I/O failure writing '" + path + "'");
}

}  // namespace trinorm
