#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mush/errors.hpp"
#include "mush/pointcloud.hpp"

namespace mush {

/// ASCII PLY with float vertex properties x y z and, when the cloud carries
/// normals, nx ny nz.
inline void write_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw IoError("write_ply: cannot open " + path);
  const bool normals = cloud.has_normals();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  out << "end_header\n";
  char buf[160];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (normals) {
      const Vec3& n = cloud.normals[i];
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g\n", p.x(), p.y(), p.z(),
                    n.x(), n.y(), n.z());
    } else {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    }
    out << buf;
  }
  if (!out) throw IoError("write_ply: failed writing " + path);
}

/// Reads ASCII PLY vertices. Vertex properties other than the coordinates and
/// normals are skipped; elements after the vertex list are ignored.
inline PointCloud read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_ply: cannot open " + path);

  auto fail = [&](int line_no, const std::string& why) -> void {
    throw IoError("read_ply: " + path + ":" + std::to_string(line_no) + ": " + why);
  };

  std::string line;
  int line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") fail(line_no ? line_no : 1, "missing ply magic");

  long vertex_count = -1;
  std::vector<std::string> vertex_props;
  bool ascii = false;
  bool in_vertex = false;
  while (true) {
    if (!next_line()) fail(line_no, "unexpected end of header");
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = fmt == "ascii";
      if (!ascii) fail(line_no, "only ascii format is supported");
    } else if (tok == "element") {
      std::string name;
      long count = 0;
      ss >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) vertex_count = count;
    } else if (tok == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ss >> type >> name;
      if (type == "list") fail(line_no, "list property on vertex element");
      vertex_props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!ascii) fail(line_no, "missing format line");
  if (vertex_count < 0) fail(line_no, "missing vertex element");

  auto prop_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < vertex_props.size(); ++i)
      if (vertex_props[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = prop_index("x"), iy = prop_index("y"), iz = prop_index("z");
  if (ix < 0 || iy < 0 || iz < 0) fail(line_no, "vertex element lacks x/y/z properties");
  const int inx = prop_index("nx"), iny = prop_index("ny"), inz = prop_index("nz");
  const bool normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  if (normals) cloud.normals.reserve(vertex_count);
  std::vector<double> vals(vertex_props.size());
  for (long v = 0; v < vertex_count; ++v) {
    if (!next_line()) fail(line_no, "unexpected end of vertex data");
    std::istringstream ss(line);
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (!(ss >> vals[i])) fail(line_no, "malformed vertex row");
    cloud.points.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (normals) cloud.normals.emplace_back(vals[inx], vals[iny], vals[inz]);
  }
  return cloud;
}

}  // namespace mush
