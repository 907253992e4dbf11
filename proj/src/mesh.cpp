// Copyright 2026 The simready Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "simready/mesh.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Geometry>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace simready {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> SplitWs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void ParseFail(std::size_t line, const std::string& msg) {
  throw MeshError(MeshErrorKind::kParse,
                  fmt::format("line {}: {}", line, msg));
}

double ParseDouble(std::string_view tok, std::size_t line) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    ParseFail(line, fmt::format("invalid number '{}'", tok));
  }
  return value;
}

long ParseIndex(std::string_view tok, std::size_t line) {
  const auto slash = tok.find('/');
  if (slash != std::string_view::npos) tok = tok.substr(0, slash);
  long value = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end || tok.empty() || value == 0) {
    ParseFail(line, fmt::format("invalid face index '{}'", tok));
  }
  return value;
}

}  // namespace

void TriMesh::Validate() const {
  const auto n = static_cast<std::int64_t>(vertices.size());
  std::vector<std::size_t> degenerate;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    for (auto idx : face) {
      if (idx < 0 || idx >= n) {
        throw MeshError(MeshErrorKind::kIndexOutOfRange,
                        fmt::format("face {} references vertex {} but mesh "
                                    "has {} vertices",
                                    f, idx, n));
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      degenerate.push_back(f);
    }
  }
  if (!degenerate.empty()) {
    throw MeshError(MeshErrorKind::kDegenerateFace,
                    fmt::format("degenerate faces: {}",
                                fmt::join(degenerate, ",")));
  }
  if (face_labels && face_labels->size() != faces.size()) {
    throw MeshError(MeshErrorKind::kParse,
                    "face label count does not match face count");
  }
}

BoundingBox ComputeBounds(std::span<const Vec3> points) {
  BoundingBox box;
  if (points.empty()) return box;
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  box.origin = lo;
  box.extents = hi - lo;
  return box;
}

TriMesh ParseObj(std::string_view text) {
  TriMesh mesh;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = Trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto tokens = SplitWs(line);
    const auto tag = tokens.front();
    if (tag == "v") {
      if (tokens.size() < 4 || tokens.size() > 5) {
        ParseFail(line_no, "vertex record needs 3 coordinates");
      }
      mesh.vertices.emplace_back(ParseDouble(tokens[1], line_no),
                                 ParseDouble(tokens[2], line_no),
                                 ParseDouble(tokens[3], line_no));
    } else if (tag == "f") {
      if (tokens.size() < 4) {
        ParseFail(line_no, "face record needs at least 3 indices");
      }
      std::vector<std::int32_t> poly;
      const auto count = static_cast<long>(mesh.vertices.size());
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        long idx = ParseIndex(tokens[i], line_no);
        idx = idx > 0 ? idx - 1 : count + idx;
        if (idx < 0 || idx > std::numeric_limits<std::int32_t>::max()) {
          throw MeshError(MeshErrorKind::kIndexOutOfRange,
                          fmt::format("line {}: vertex index {} out of range",
                                      line_no, tokens[i]));
        }
        poly.push_back(static_cast<std::int32_t>(idx));
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
      }
    } else if (tag == "vt" || tag == "vn" || tag == "g" || tag == "o" ||
               tag == "s" || tag == "usemtl" || tag == "mtllib") {
      continue;
    } else {
      ParseFail(line_no, fmt::format("unsupported record '{}'", tag));
    }
  }
  if (mesh.faces.empty()) {
    throw MeshError(MeshErrorKind::kNoGeometry, "no geometry");
  }
  mesh.Validate();
  return mesh;
}

TriMesh LoadMesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MeshError(MeshErrorKind::kIo,
                    fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseObj(ss.str());
}

std::string FormatObj(const TriMesh& mesh) {
  fmt::memory_buffer buf;
  for (const auto& v : mesh.vertices) {
    fmt::format_to(std::back_inserter(buf), "v {:.6f} {:.6f} {:.6f}\n", v.x(),
                   v.y(), v.z());
  }
  for (const auto& f : mesh.faces) {
    fmt::format_to(std::back_inserter(buf), "f {} {} {}\n", f[0] + 1, f[1] + 1,
                   f[2] + 1);
  }
  return fmt::to_string(buf);
}

void SaveMesh(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw MeshError(MeshErrorKind::kIo,
                    fmt::format("cannot write '{}'", path.string()));
  }
  out << FormatObj(mesh);
  out.flush();
  if (!out) {
    throw MeshError(MeshErrorKind::kIo,
                    fmt::format("write failed for '{}'", path.string()));
  }
}

TriMesh NormalizeInFrame(const TriMesh& mesh, const BoundingBox& frame) {
  const double longest = frame.LongestEdge();
  if (!(longest > 0.0)) {
    throw MeshError(MeshErrorKind::kDegenerateGeometry,
                    "zero-extent mesh: all vertices coincide");
  }
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = (v - frame.origin) / longest;
  return out;
}

NormalizedMesh Normalize(const TriMesh& mesh) {
  if (mesh.vertices.empty()) {
    throw MeshError(MeshErrorKind::kNoGeometry, "no geometry");
  }
  const BoundingBox box = ComputeBounds(mesh.vertices);
  return {NormalizeInFrame(mesh, box), box};
}

TriMesh Concatenate(std::span<const TriMesh> meshes) {
  TriMesh out;
  bool labeled = !meshes.empty();
  for (const auto& m : meshes) labeled = labeled && m.face_labels.has_value();
  if (labeled) out.face_labels.emplace();
  for (const auto& m : meshes) {
    const auto offset = static_cast<std::int32_t>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), m.vertices.begin(),
                        m.vertices.end());
    for (const auto& f : m.faces) {
      out.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    }
    if (labeled) {
      out.face_labels->insert(out.face_labels->end(), m.face_labels->begin(),
                              m.face_labels->end());
    }
  }
  return out;
}

double FaceArea(const TriMesh& mesh, std::size_t face) {
  const auto& f = mesh.faces[face];
  const Vec3& a = mesh.vertices[f[0]];
  const Vec3& b = mesh.vertices[f[1]];
  const Vec3& c = mesh.vertices[f[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 FaceCentroid(const TriMesh& mesh, std::size_t face) {
  const auto& f = mesh.faces[face];
  return (mesh.vertices[f[0]] + mesh.vertices[f[1]] + mesh.vertices[f[2]]) /
         3.0;
}

}  // namespace simready
