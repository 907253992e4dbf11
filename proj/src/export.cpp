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

#include "simready/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "simready/kinematics.hpp"
#include "simready/segmentation.hpp"

namespace simready {
namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

constexpr double kLimitEffort = 100.0;
constexpr double kLimitVelocity = 1.0;
constexpr double kAgreementTolerance = 1e-6;
constexpr int kSweepSamples = 5;

std::string Num(double v) {
  std::string s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

// Inertia can be many orders below a millimetre-scale mass, so it keeps
// significant digits rather than decimals.
std::string Sci(double v) { return fmt::format("{:.6e}", v); }

std::string Triple(const Vec3& v) {
  return fmt::format("{} {} {}", Num(v.x()), Num(v.y()), Num(v.z()));
}

std::string XmlEscape(std::string_view in) {
  std::string out;
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

bool IsContinuous(const WorldJoint& w) {
  return w.type == JointType::kRevolute && w.range &&
         w.range->lo <= -kTwoPi + kRangeSlack &&
         w.range->hi >= kTwoPi - kRangeSlack;
}

struct LinkData {
  int id = 0;
  Vec3 origin = Vec3::Zero();  // world
  double mass = 0.0;
  Vec3 com_local = Vec3::Zero();
  Vec3 inertia = Vec3::Zero();
  std::optional<WorldJoint> joint;
  TriMesh world_mesh;
};

void AddBox(TriMesh& mesh, const Vec3& lo, const Vec3& hi) {
  const int base = static_cast<int>(mesh.vertices.size());
  for (int k = 0; k < 8; ++k) {
    mesh.vertices.emplace_back(k & 1 ? hi.x() : lo.x(), k & 2 ? hi.y() : lo.y(),
                               k & 4 ? hi.z() : lo.z());
  }
  // Outward winding; corner k has bits (x, y, z).
  static constexpr int kQuads[6][4] = {
      {0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
      {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5},
  };
  for (const auto& q : kQuads) {
    mesh.faces.push_back({base + q[0], base + q[1], base + q[2]});
    mesh.faces.push_back({base + q[0], base + q[2], base + q[3]});
  }
}

std::vector<LinkData> BuildLinks(const PhysicalAssetSpec& spec,
                                 const TriMesh* fine_mesh) {
  std::vector<PartMesh> fine_parts;
  if (fine_mesh != nullptr) {
    if (!fine_mesh->face_labels) {
      throw ExportError(ExportErrorKind::kInvalidMesh,
                        "fine mesh carries no face labels");
    }
    try {
      fine_parts = SplitParts(*fine_mesh, static_cast<int>(spec.parts.size()));
    } catch (const SegmentationError& e) {
      throw ExportError(ExportErrorKind::kInvalidMesh, e.what());
    }
  }
  std::vector<LinkData> links;
  for (const auto& part : spec.parts) {
    LinkData link;
    link.id = part.id;
    const VoxelGrid voxels = PartVoxels(spec, part.id);
    if (voxels.Empty()) {
      throw ExportError(ExportErrorKind::kEmptyGeometry,
                        fmt::format("part {} has empty geometry", part.id));
    }
    if (part.joint) {
      link.joint = ToWorldJoint(spec, part.id);
      link.origin = link.joint->axis_origin;
    }
    Cell lo{spec.resolution, spec.resolution, spec.resolution};
    Cell hi{0, 0, 0};
    for (const Cell& c : voxels.Cells()) {
      lo = {std::min(lo.x, c.x), std::min(lo.y, c.y), std::min(lo.z, c.z)};
      hi = {std::max(hi.x, c.x + 1), std::max(hi.y, c.y + 1),
            std::max(hi.z, c.z + 1)};
    }
    const Vec3 wlo = VoxelToWorld(spec, Vec3(lo.x, lo.y, lo.z));
    const Vec3 whi = VoxelToWorld(spec, Vec3(hi.x, hi.y, hi.z));
    const Vec3 d = whi - wlo;
    link.mass = PartMass(spec, part.id);
    link.com_local = 0.5 * (wlo + whi) - link.origin;
    link.inertia = Vec3(d.y() * d.y() + d.z() * d.z(),
                        d.x() * d.x() + d.z() * d.z(),
                        d.x() * d.x() + d.y() * d.y()) *
                   (link.mass / 12.0);
    if (!fine_parts.empty() && !fine_parts[part.id].empty_warning) {
      link.world_mesh = fine_parts[part.id].mesh;
      for (auto& v : link.world_mesh.vertices) {
        v = v.cwiseProduct(spec.absolute_scale);
      }
    } else {
      link.world_mesh = Cuboidify(voxels);
      for (auto& v : link.world_mesh.vertices) v = VoxelToWorld(spec, v);
    }
    links.push_back(std::move(link));
  }
  return links;
}

std::string BuildUrdf(const PhysicalAssetSpec& spec,
                      const std::vector<LinkData>& links) {
  std::string out = "<?xml version=\"1.0\"?>\n";
  out += fmt::format("<robot name=\"{}\">\n", XmlEscape(spec.name));
  for (const auto& link : links) {
    const std::string mesh = PartMeshPath(link.id);
    out += fmt::format("  <link name=\"{}\">\n", LinkName(link.id));
    out += "    <inertial>\n";
    out += fmt::format("      <origin xyz=\"{}\" rpy=\"0 0 0\"/>\n",
                       Triple(link.com_local));
    out += fmt::format("      <mass value=\"{}\"/>\n", Num(link.mass));
    out += fmt::format(
        "      <inertia ixx=\"{}\" ixy=\"0\" ixz=\"0\" iyy=\"{}\" iyz=\"0\" "
        "izz=\"{}\"/>\n",
        Sci(link.inertia.x()), Sci(link.inertia.y()), Sci(link.inertia.z()));
    out += "    </inertial>\n";
    for (const char* tag : {"visual", "collision"}) {
      out += fmt::format("    <{}>\n", tag);
      out += fmt::format(
          "      <geometry><mesh filename=\"{}\"/></geometry>\n", mesh);
      out += fmt::format("    </{}>\n", tag);
    }
    out += "  </link>\n";
  }
  for (const auto& link : links) {
    if (!link.joint) continue;
    const WorldJoint& w = *link.joint;
    const char* type = IsContinuous(w)                     ? "continuous"
                       : w.type == JointType::kRevolute    ? "revolute"
                       : w.type == JointType::kPrismatic   ? "prismatic"
                                                           : "fixed";
    const Vec3 rel = link.origin - links[w.parent].origin;
    out += fmt::format("  <joint name=\"{}\" type=\"{}\">\n", JointName(link.id),
                       type);
    out += fmt::format("    <parent link=\"{}\"/>\n", LinkName(w.parent));
    out += fmt::format("    <child link=\"{}\"/>\n", LinkName(link.id));
    out += fmt::format("    <origin xyz=\"{}\" rpy=\"0 0 0\"/>\n", Triple(rel));
    out += fmt::format("    <axis xyz=\"{}\"/>\n", Triple(w.axis_direction));
    if (w.type != JointType::kFixed) {
      if (IsContinuous(w)) {
        out += fmt::format("    <limit effort=\"{}\" velocity=\"{}\"/>\n",
                           Num(kLimitEffort), Num(kLimitVelocity));
      } else {
        out += fmt::format(
            "    <limit lower=\"{}\" upper=\"{}\" effort=\"{}\" "
            "velocity=\"{}\"/>\n",
            Num(w.range->lo), Num(w.range->hi), Num(kLimitEffort),
            Num(kLimitVelocity));
      }
    }
    out += "  </joint>\n";
  }
  out += "</robot>\n";
  return out;
}

void EmitBody(const PhysicalAssetSpec& spec, const std::vector<LinkData>& links,
              int id, int depth, std::string& out) {
  const LinkData& link = links[id];
  const std::string pad(2 * depth, ' ');
  const Vec3 rel =
      link.joint ? Vec3(link.origin - links[link.joint->parent].origin)
                 : link.origin;
  out += fmt::format("{}<body name=\"{}\" pos=\"{}\">\n", pad, LinkName(id),
                     Triple(rel));
  out += fmt::format(
      "{}  <inertial pos=\"{}\" mass=\"{}\" diaginertia=\"{} {} {}\"/>\n", pad,
      Triple(link.com_local), Num(link.mass), Sci(link.inertia.x()),
      Sci(link.inertia.y()), Sci(link.inertia.z()));
  if (link.joint && link.joint->type != JointType::kFixed) {
    const WorldJoint& w = *link.joint;
    const char* type = w.type == JointType::kRevolute ? "hinge" : "slide";
    if (IsContinuous(w)) {
      out += fmt::format(
          "{}  <joint name=\"{}\" type=\"{}\" pos=\"0 0 0\" axis=\"{}\" "
          "limited=\"false\"/>\n",
          pad, JointName(id), type, Triple(w.axis_direction));
    } else {
      out += fmt::format(
          "{}  <joint name=\"{}\" type=\"{}\" pos=\"0 0 0\" axis=\"{}\" "
          "limited=\"true\" range=\"{} {}\"/>\n",
          pad, JointName(id), type, Triple(w.axis_direction), Num(w.range->lo),
          Num(w.range->hi));
    }
  }
  out += fmt::format("{}  <geom type=\"mesh\" mesh=\"{}\"/>\n", pad,
                     LinkName(id));
  for (int child : Children(spec, id)) {
    EmitBody(spec, links, child, depth + 1, out);
  }
  out += fmt::format("{}</body>\n", pad);
}

std::string BuildMjcf(const PhysicalAssetSpec& spec,
                      const std::vector<LinkData>& links) {
  std::string out;
  out += fmt::format("<mujoco model=\"{}\">\n", XmlEscape(spec.name));
  out += "  <compiler angle=\"radian\" inertiafromgeom=\"false\"/>\n";
  out += "  <asset>\n";
  for (const auto& link : links) {
    out += fmt::format("    <mesh name=\"{}\" file=\"{}\"/>\n",
                       LinkName(link.id), PartMeshPath(link.id));
  }
  out += "  </asset>\n";
  out += "  <worldbody>\n";
  EmitBody(spec, links, spec.root_part, 2, out);
  out += "  </worldbody>\n";
  out += "</mujoco>\n";
  return out;
}

// ---- XML subset readers ----------------------------------------------------

pt::ptree ReadXml(std::string_view xml) {
  pt::ptree tree;
  std::istringstream in{std::string(xml)};
  try {
    pt::read_xml(in, tree, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw ExportError(ExportErrorKind::kMalformedXml, e.what());
  }
  return tree;
}

[[noreturn]] void Unsupported(const std::string& what) {
  throw ExportError(ExportErrorKind::kUnsupportedFeature,
                    fmt::format("unsupported feature: {}", what));
}

[[noreturn]] void Missing(const std::string& what) {
  throw ExportError(ExportErrorKind::kMissingElement,
                    fmt::format("missing {}", what));
}

std::optional<std::string> Attr(const pt::ptree& node, const char* name) {
  if (auto v = node.get_optional<std::string>(fmt::format("<xmlattr>.{}", name))) {
    return *v;
  }
  return std::nullopt;
}

std::string RequireAttr(const pt::ptree& node, const char* name,
                        const std::string& where) {
  auto v = Attr(node, name);
  if (!v) Missing(fmt::format("attribute '{}' on {}", name, where));
  return *v;
}

std::vector<double> Numbers(const std::string& text, std::size_t count,
                            const std::string& where) {
  std::istringstream in(text);
  std::vector<double> out;
  double v = 0.0;
  while (in >> v) out.push_back(v);
  in.clear();
  std::string rest;
  in >> rest;
  if (out.size() != count || !rest.empty()) {
    throw ExportError(ExportErrorKind::kMalformedXml,
                      fmt::format("{}: expected {} numbers in '{}'", where,
                                  count, text));
  }
  return out;
}

double Number(const std::string& text, const std::string& where) {
  return Numbers(text, 1, where)[0];
}

Vec3 Vec(const std::string& text, const std::string& where) {
  const auto v = Numbers(text, 3, where);
  return Vec3(v[0], v[1], v[2]);
}

void RequireKeys(const pt::ptree& node, std::initializer_list<const char*> allowed,
                 const std::string& where) {
  for (const auto& [key, child] : node) {
    if (key == "<xmlattr>") continue;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      Unsupported(fmt::format("element <{}> in {}", key, where));
    }
  }
}

// Origin with an identity rotation, or nothing.
Vec3 UrdfOrigin(const pt::ptree& parent, const std::string& where) {
  const auto node = parent.get_child_optional("origin");
  if (!node) return Vec3::Zero();
  if (auto rpy = Attr(*node, "rpy")) {
    if (!Vec(*rpy, where + " rpy").isZero(0.0)) {
      Unsupported(fmt::format("rotated origin on {}", where));
    }
  }
  const auto xyz = Attr(*node, "xyz");
  return xyz ? Vec(*xyz, where + " xyz") : Vec3::Zero();
}

void ReadUrdfGeometry(const pt::ptree& node, const std::string& where,
                      ReparsedLink& link) {
  RequireKeys(node, {"origin", "geometry"}, where);
  if (!UrdfOrigin(node, where).isZero(0.0)) {
    Unsupported(fmt::format("offset geometry on {}", where));
  }
  const auto geom = node.get_child_optional("geometry");
  if (!geom) Missing(fmt::format("<geometry> in {}", where));
  RequireKeys(*geom, {"mesh"}, where + " geometry");
  const auto mesh = geom->get_child_optional("mesh");
  if (!mesh) Missing(fmt::format("<mesh> in {}", where));
  if (auto scale = Attr(*mesh, "scale")) {
    if (!Vec(*scale, where).isApprox(Vec3::Ones())) {
      Unsupported(fmt::format("scaled mesh on {}", where));
    }
  }
  const std::string file = RequireAttr(*mesh, "filename", where + " mesh");
  if (std::find(link.meshes.begin(), link.meshes.end(), file) ==
      link.meshes.end()) {
    link.meshes.push_back(file);
  }
}

// Resolves world origins of links by walking parent joints from the root.
// Joint origins come in relative to the child body frame.
void ResolveWorld(KinematicSummary& summary,
                  const std::map<std::string, Vec3>& relative_body,
                  const std::map<std::string, Vec3>& com_local) {
  std::map<std::string, const ReparsedJoint*> by_child;
  for (const auto& j : summary.joints) {
    if (!by_child.emplace(j.child, &j).second) {
      Unsupported(fmt::format("link '{}' has two parent joints", j.child));
    }
  }
  std::map<std::string, Vec3> world;
  const std::size_t n = summary.links.size();
  std::function<Vec3(const std::string&, std::size_t)> origin_of =
      [&](const std::string& name, std::size_t depth) -> Vec3 {
    if (depth > n) {
      throw ExportError(ExportErrorKind::kMalformedXml, "joint cycle");
    }
    if (auto it = world.find(name); it != world.end()) return it->second;
    Vec3 o = relative_body.at(name);
    if (auto j = by_child.find(name); j != by_child.end()) {
      if (!relative_body.count(j->second->parent)) {
        Missing(fmt::format("parent link '{}'", j->second->parent));
      }
      o += origin_of(j->second->parent, depth + 1);
    }
    world[name] = o;
    return o;
  };
  for (auto& link : summary.links) {
    link.center_of_mass = origin_of(link.name, 0) + com_local.at(link.name);
  }
  for (auto& j : summary.joints) {
    if (!relative_body.count(j.child)) {
      Missing(fmt::format("child link '{}'", j.child));
    }
    j.origin += world.at(j.child);
  }
}

void CheckNames(const KinematicSummary& summary) {
  std::set<std::string> seen;
  for (const auto& l : summary.links) {
    if (!seen.insert(l.name).second) {
      throw ExportError(ExportErrorKind::kMalformedXml,
                        fmt::format("duplicate link '{}'", l.name));
    }
  }
}

void ReadMjcfBody(const pt::ptree& body, const std::string& parent,
                  const std::map<std::string, std::string>& mesh_files,
                  KinematicSummary& summary,
                  std::map<std::string, Vec3>& relative,
                  std::map<std::string, Vec3>& com_local) {
  const std::string name = RequireAttr(body, "name", "<body>");
  const std::string where = fmt::format("body '{}'", name);
  RequireKeys(body, {"inertial", "joint", "geom", "body"}, where);
  if (Attr(body, "quat") || Attr(body, "euler") || Attr(body, "axisangle")) {
    Unsupported(fmt::format("rotated {}", where));
  }
  ReparsedLink link;
  link.name = name;
  relative[name] = Vec(Attr(body, "pos").value_or("0 0 0"), where + " pos");
  com_local[name] = Vec3::Zero();
  if (const auto inertial = body.get_child_optional("inertial")) {
    com_local[name] = Vec(Attr(*inertial, "pos").value_or("0 0 0"), where);
    link.mass = Number(RequireAttr(*inertial, "mass", where), where + " mass");
    link.inertia = Vec(RequireAttr(*inertial, "diaginertia", where),
                       where + " diaginertia");
  }
  int joints = 0;
  for (const auto& [key, child] : body) {
    if (key == "geom") {
      if (Attr(child, "type").value_or("") != "mesh") {
        Unsupported(fmt::format("non-mesh geom in {}", where));
      }
      const std::string mesh = RequireAttr(child, "mesh", where + " geom");
      const auto it = mesh_files.find(mesh);
      if (it == mesh_files.end()) Missing(fmt::format("mesh asset '{}'", mesh));
      link.meshes.push_back(it->second);
    } else if (key == "joint") {
      if (++joints > 1) Unsupported(fmt::format("multiple joints in {}", where));
      ReparsedJoint j;
      j.name = RequireAttr(child, "name", where + " joint");
      const std::string type = Attr(child, "type").value_or("hinge");
      if (type == "hinge") {
        j.type = JointType::kRevolute;
      } else if (type == "slide") {
        j.type = JointType::kPrismatic;
      } else {
        Unsupported(fmt::format("joint type '{}'", type));
      }
      j.parent = parent;
      j.child = name;
      j.origin = Vec(Attr(child, "pos").value_or("0 0 0"), where + " joint pos");
      j.axis = Vec(Attr(child, "axis").value_or("0 0 1"), where + " joint axis");
      const bool limited = Attr(child, "limited").value_or("false") == "true";
      if (limited) {
        const auto r = Numbers(RequireAttr(child, "range", where), 2,
                               where + " range");
        j.range = Range{r[0], r[1]};
      } else if (j.type == JointType::kRevolute) {
        j.continuous = true;
        j.range = Range{-kTwoPi, kTwoPi};
      } else {
        Unsupported(fmt::format("unlimited slide joint in {}", where));
      }
      summary.joints.push_back(std::move(j));
    }
  }
  if (joints == 0 && !parent.empty()) {
    ReparsedJoint j;
    j.name = fmt::format("weld_{}", name);
    j.type = JointType::kFixed;
    j.parent = parent;
    j.child = name;
    summary.joints.push_back(std::move(j));
  } else if (joints > 0 && parent.empty()) {
    Unsupported(fmt::format("jointed root {}", where));
  }
  summary.links.push_back(std::move(link));
  for (const auto& [key, child] : body) {
    if (key == "body") {
      ReadMjcfBody(child, name, mesh_files, summary, relative, com_local);
    }
  }
}

// ---- validation helpers ----------------------------------------------------

std::optional<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw ExportError(ExportErrorKind::kIo,
                      fmt::format("cannot write '{}'", path.string()));
  }
}

bool AllFinite(const RigidTransform& t) { return t.matrix().allFinite(); }

}  // namespace

std::string LinkName(int part_id) { return fmt::format("part_{}", part_id); }
std::string JointName(int part_id) { return fmt::format("joint_{}", part_id); }
std::string PartMeshPath(int part_id) {
  return fmt::format("meshes/part_{}.obj", part_id);
}

std::vector<CellBox> MergeBoxes(const VoxelGrid& grid) {
  const int r = grid.resolution();
  std::vector<std::uint8_t> taken(grid.bits().size(), 0);
  const auto free = [&](int x, int y, int z) {
    const auto i = LinearIndex({x, y, z}, r);
    return grid.ContainsIndex(i) && !taken[i];
  };
  std::vector<CellBox> boxes;
  for (int z = 0; z < r; ++z) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        if (!free(x, y, z)) continue;
        int x1 = x + 1;
        while (x1 < r && free(x1, y, z)) ++x1;
        int y1 = y + 1;
        const auto row_free = [&](int yy, int zz) {
          for (int xx = x; xx < x1; ++xx) {
            if (!free(xx, yy, zz)) return false;
          }
          return true;
        };
        while (y1 < r && row_free(y1, z)) ++y1;
        int z1 = z + 1;
        const auto slab_free = [&](int zz) {
          for (int yy = y; yy < y1; ++yy) {
            if (!row_free(yy, zz)) return false;
          }
          return true;
        };
        while (z1 < r && slab_free(z1)) ++z1;
        for (int zz = z; zz < z1; ++zz) {
          for (int yy = y; yy < y1; ++yy) {
            for (int xx = x; xx < x1; ++xx) taken[LinearIndex({xx, yy, zz}, r)] = 1;
          }
        }
        boxes.push_back({{x, y, z}, {x1, y1, z1}});
      }
    }
  }
  return boxes;
}

TriMesh Cuboidify(const VoxelGrid& grid) {
  TriMesh mesh;
  for (const auto& b : MergeBoxes(grid)) {
    AddBox(mesh, Vec3(b.lo.x, b.lo.y, b.lo.z), Vec3(b.hi.x, b.hi.y, b.hi.z));
  }
  return mesh;
}

ExportBundle Export(const PhysicalAssetSpec& spec, const TriMesh* fine_mesh) {
  ValidateSpec(spec);
  std::vector<LinkData> links = BuildLinks(spec, fine_mesh);
  ExportBundle bundle;
  bundle.urdf = BuildUrdf(spec, links);
  bundle.mjcf = BuildMjcf(spec, links);
  bundle.files[kUrdfFile] = bundle.urdf;
  bundle.files[kMjcfFile] = bundle.mjcf;
  bundle.files[kSpecFile] = EmitSpec(spec);
  std::vector<TriMesh> world;
  for (const auto& link : links) {
    TriMesh local = link.world_mesh;
    for (auto& v : local.vertices) v -= link.origin;
    local.face_labels.reset();
    const std::string path = PartMeshPath(link.id);
    bundle.files[path] = FormatObj(local);
    bundle.part_meshes.emplace_back(link.id, path);
    world.push_back(link.world_mesh);
    world.back().face_labels.reset();
  }
  bundle.files[kMergedMeshFile] = FormatObj(Concatenate(world));

  nlohmann::ordered_json m;
  m["schema_version"] = kBundleSchemaVersion;
  m["asset"] = spec.name;
  m["part_meshes"] = nlohmann::ordered_json::array();
  for (const auto& [id, path] : bundle.part_meshes) {
    m["part_meshes"].push_back({{"part", id}, {"path", path}});
  }
  m["files"] = nlohmann::ordered_json::array();
  for (const auto& [path, data] : bundle.files) {
    m["files"].push_back(
        {{"path", path}, {"bytes", data.size()}, {"sha256", Sha256Hex(data)}});
  }
  bundle.manifest = m.dump(2) + "\n";
  return bundle;
}

void WriteBundle(const ExportBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "meshes", ec);
  if (ec) {
    throw ExportError(ExportErrorKind::kIo,
                      fmt::format("cannot create '{}': {}", dir.string(),
                                  ec.message()));
  }
  for (const auto& [path, data] : bundle.files) WriteFile(dir / path, data);
  WriteFile(dir / kManifestFile, bundle.manifest);
}

const ReparsedLink* KinematicSummary::FindLink(std::string_view n) const {
  for (const auto& l : links) {
    if (l.name == n) return &l;
  }
  return nullptr;
}

const ReparsedJoint* KinematicSummary::FindJointForChild(
    std::string_view child) const {
  for (const auto& j : joints) {
    if (j.child == child) return &j;
  }
  return nullptr;
}

KinematicSummary ReparseUrdf(std::string_view xml) {
  const pt::ptree tree = ReadXml(xml);
  RequireKeys(tree, {"robot"}, "document");
  const auto robot = tree.get_child_optional("robot");
  if (!robot) Missing("<robot>");
  RequireKeys(*robot, {"link", "joint"}, "<robot>");
  KinematicSummary summary;
  summary.name = Attr(*robot, "name").value_or("");
  std::map<std::string, Vec3> relative;
  std::map<std::string, Vec3> com_local;
  for (const auto& [key, node] : *robot) {
    if (key == "link") {
      ReparsedLink link;
      link.name = RequireAttr(node, "name", "<link>");
      const std::string where = fmt::format("link '{}'", link.name);
      RequireKeys(node, {"inertial", "visual", "collision"}, where);
      relative[link.name] = Vec3::Zero();
      com_local[link.name] = Vec3::Zero();
      if (const auto inertial = node.get_child_optional("inertial")) {
        RequireKeys(*inertial, {"origin", "mass", "inertia"}, where);
        com_local[link.name] = UrdfOrigin(*inertial, where + " inertial");
        const auto mass = inertial->get_child_optional("mass");
        if (!mass) Missing(fmt::format("<mass> in {}", where));
        link.mass = Number(RequireAttr(*mass, "value", where), where + " mass");
        if (const auto in = inertial->get_child_optional("inertia")) {
          for (const char* off : {"ixy", "ixz", "iyz"}) {
            if (Number(Attr(*in, off).value_or("0"), where) != 0.0) {
              Unsupported(fmt::format("off-diagonal inertia on {}", where));
            }
          }
          link.inertia = Vec3(Number(RequireAttr(*in, "ixx", where), where),
                              Number(RequireAttr(*in, "iyy", where), where),
                              Number(RequireAttr(*in, "izz", where), where));
        }
      }
      for (const auto& [k2, child] : node) {
        if (k2 == "visual" || k2 == "collision") {
          ReadUrdfGeometry(child, fmt::format("{} {}", where, k2), link);
        }
      }
      summary.links.push_back(std::move(link));
    } else if (key == "joint") {
      ReparsedJoint j;
      j.name = RequireAttr(node, "name", "<joint>");
      const std::string where = fmt::format("joint '{}'", j.name);
      RequireKeys(node, {"parent", "child", "origin", "axis", "limit"}, where);
      const std::string type = RequireAttr(node, "type", where);
      if (type == "revolute") {
        j.type = JointType::kRevolute;
      } else if (type == "continuous") {
        j.type = JointType::kRevolute;
        j.continuous = true;
      } else if (type == "prismatic") {
        j.type = JointType::kPrismatic;
      } else if (type == "fixed") {
        j.type = JointType::kFixed;
      } else {
        Unsupported(fmt::format("joint type '{}'", type));
      }
      const auto parent = node.get_child_optional("parent");
      const auto child = node.get_child_optional("child");
      if (!parent || !child) Missing(fmt::format("parent/child in {}", where));
      j.parent = RequireAttr(*parent, "link", where);
      j.child = RequireAttr(*child, "link", where);
      j.origin = UrdfOrigin(node, where);
      if (const auto axis = node.get_child_optional("axis")) {
        j.axis = Vec(RequireAttr(*axis, "xyz", where), where + " axis");
      }
      const auto limit = node.get_child_optional("limit");
      if (j.continuous) {
        j.range = Range{-kTwoPi, kTwoPi};
      } else if (j.type != JointType::kFixed) {
        if (!limit) Missing(fmt::format("<limit> in {}", where));
        j.range = Range{Number(RequireAttr(*limit, "lower", where), where),
                        Number(RequireAttr(*limit, "upper", where), where)};
      }
      summary.joints.push_back(std::move(j));
    }
  }
  CheckNames(summary);
  // A URDF joint origin places the child frame inside the parent frame.
  for (const auto& j : summary.joints) {
    if (!relative.count(j.child)) Missing(fmt::format("child link '{}'", j.child));
    relative[j.child] = j.origin;
  }
  for (auto& j : summary.joints) j.origin = Vec3::Zero();
  ResolveWorld(summary, relative, com_local);
  return summary;
}

KinematicSummary ReparseMjcf(std::string_view xml) {
  const pt::ptree tree = ReadXml(xml);
  RequireKeys(tree, {"mujoco"}, "document");
  const auto root = tree.get_child_optional("mujoco");
  if (!root) Missing("<mujoco>");
  RequireKeys(*root, {"compiler", "asset", "worldbody"}, "<mujoco>");
  KinematicSummary summary;
  summary.name = Attr(*root, "model").value_or("");
  if (const auto compiler = root->get_child_optional("compiler")) {
    if (Attr(*compiler, "angle").value_or("degree") != "radian") {
      Unsupported("angles in degrees");
    }
  } else {
    Unsupported("angles in degrees");
  }
  std::map<std::string, std::string> mesh_files;
  if (const auto asset = root->get_child_optional("asset")) {
    RequireKeys(*asset, {"mesh"}, "<asset>");
    for (const auto& [key, mesh] : *asset) {
      if (key != "mesh") continue;
      mesh_files[RequireAttr(mesh, "name", "<mesh>")] =
          RequireAttr(mesh, "file", "<mesh>");
    }
  }
  const auto world = root->get_child_optional("worldbody");
  if (!world) Missing("<worldbody>");
  RequireKeys(*world, {"body"}, "<worldbody>");
  if (world->count("body") != 1) Unsupported("more than one root body");
  std::map<std::string, Vec3> relative;
  std::map<std::string, Vec3> com_local;
  ReadMjcfBody(world->get_child("body"), "", mesh_files, summary, relative,
               com_local);
  CheckNames(summary);
  ResolveWorld(summary, relative, com_local);
  return summary;
}

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const BundleCheck& c) { return c.passed; });
}

const BundleCheck* ValidationReport::Find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string ValidationReport::ToText() const {
  std::string out;
  for (const auto& c : checks) {
    out += fmt::format("{} {}", c.passed ? "PASS" : "FAIL", c.name);
    if (!c.detail.empty()) out += ": " + c.detail;
    out += "\n";
  }
  return out;
}

ValidationReport ValidateBundle(const fs::path& dir) {
  ValidationReport report;
  const auto add = [&report](std::string name, std::vector<std::string> errors) {
    BundleCheck c;
    c.name = std::move(name);
    c.passed = errors.empty();
    for (std::size_t i = 0; i < errors.size(); ++i) {
      c.detail += (i ? "; " : "") + errors[i];
    }
    report.checks.push_back(std::move(c));
  };

  // manifest
  std::vector<std::string> errors;
  nlohmann::json manifest;
  std::vector<std::pair<std::string, std::string>> listed;  // path, sha
  if (auto text = ReadFile(dir / kManifestFile)) {
    try {
      manifest = nlohmann::json::parse(*text);
      if (manifest.value("schema_version", -1) != kBundleSchemaVersion) {
        errors.push_back("unsupported schema_version");
      }
      for (const auto& f : manifest.at("files")) {
        listed.emplace_back(f.at("path").get<std::string>(),
                            f.at("sha256").get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      errors.push_back(fmt::format("malformed manifest: {}", e.what()));
    }
  } else {
    errors.push_back(fmt::format("MissingFile: {}", kManifestFile));
  }
  add("manifest", std::move(errors));

  // xml_well_formed
  errors.clear();
  std::optional<KinematicSummary> urdf;
  std::optional<KinematicSummary> mjcf;
  for (const char* file : {kUrdfFile, kMjcfFile}) {
    const auto text = ReadFile(dir / file);
    if (!text) {
      errors.push_back(fmt::format("MissingFile: {}", file));
      continue;
    }
    try {
      if (file == std::string_view(kUrdfFile)) {
        urdf = ReparseUrdf(*text);
      } else {
        mjcf = ReparseMjcf(*text);
      }
    } catch (const ExportError& e) {
      errors.push_back(fmt::format("{}: {}", file, e.what()));
    }
  }
  add("xml_well_formed", std::move(errors));

  // file_existence
  errors.clear();
  std::set<std::string> needed;
  for (const auto& [path, sha] : listed) needed.insert(path);
  for (const auto* s : {&urdf, &mjcf}) {
    if (!*s) continue;
    for (const auto& l : (*s)->links) needed.insert(l.meshes.begin(), l.meshes.end());
  }
  for (const auto& path : needed) {
    if (!fs::is_regular_file(dir / path)) {
      errors.push_back(fmt::format("MissingFile: {}", path));
    }
  }
  add("file_existence", std::move(errors));

  // checksums
  errors.clear();
  for (const auto& [path, sha] : listed) {
    const auto data = ReadFile(dir / path);
    if (data && Sha256Hex(*data) != sha) {
      errors.push_back(fmt::format("ChecksumMismatch: {}", path));
    }
  }
  add("checksums", std::move(errors));

  // joint_limits
  errors.clear();
  if (urdf) {
    for (const auto& j : urdf->joints) {
      if (!j.range) continue;
      if (!std::isfinite(j.range->lo) || !std::isfinite(j.range->hi) ||
          !(j.range->lo < j.range->hi)) {
        errors.push_back(fmt::format("{}: invalid limits [{}, {}]", j.name,
                                     j.range->lo, j.range->hi));
      }
    }
  } else {
    errors.push_back("URDF unavailable");
  }
  add("joint_limits", std::move(errors));

  // structure
  errors.clear();
  std::optional<PhysicalAssetSpec> spec;
  if (auto text = ReadFile(dir / kSpecFile)) {
    try {
      spec = ParseSpec(*text);
    } catch (const SchemaError& e) {
      errors.push_back(fmt::format("{}: {}", kSpecFile, e.what()));
    }
  } else {
    errors.push_back(fmt::format("MissingFile: {}", kSpecFile));
  }
  if (spec) {
    const std::size_t parts = spec->parts.size();
    const std::pair<const char*, const std::optional<KinematicSummary>*>
        docs[] = {{"URDF", &urdf}, {"MJCF", &mjcf}};
    for (const auto& [label, s] : docs) {
      if (!*s) continue;
      if ((*s)->links.size() != parts || (*s)->joints.size() + 1 != parts) {
        errors.push_back(fmt::format("{}: {} links, {} joints for {} parts",
                                     label, (*s)->links.size(),
                                     (*s)->joints.size(), parts));
      }
    }
    if (manifest.contains("part_meshes") &&
        manifest["part_meshes"].size() != parts) {
      errors.push_back("manifest part mesh count differs from part count");
    }
  }
  add("structure", std::move(errors));

  // fk_sweep
  errors.clear();
  if (spec) {
    try {
      std::map<int, std::vector<double>> samples;
      JointValues rest;
      for (const auto& part : spec->parts) {
        if (part.joint && part.joint->type != JointType::kFixed) {
          samples[part.id] = SampleRange(*spec, part.id, kSweepSamples);
          rest[part.id] = std::clamp(0.0, part.joint->range->lo,
                                     part.joint->range->hi);
        }
      }
      const auto check = [&](const JointValues& q, const std::string& what) {
        for (const auto& [id, pose] : ForwardKinematics(*spec, q)) {
          if (!AllFinite(pose)) {
            errors.push_back(fmt::format("non-finite pose for part {} at {}",
                                         id, what));
          }
        }
      };
      for (int k = 0; k < kSweepSamples; ++k) {
        JointValues all;
        for (const auto& [id, values] : samples) {
          all[id] = values[k];
          JointValues single = rest;
          single[id] = values[k];
          check(single, fmt::format("joint {} sample {}", id, k));
        }
        check(all, fmt::format("sample {}", k));
      }
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  } else {
    errors.push_back("spec unavailable");
  }
  add("fk_sweep", std::move(errors));

  // mjcf_urdf_agreement
  errors.clear();
  if (urdf && mjcf) {
    for (const auto& j : urdf->joints) {
      const ReparsedJoint* m = mjcf->FindJointForChild(j.child);
      if (m == nullptr) {
        errors.push_back(fmt::format("{}: no MJCF counterpart", j.name));
        continue;
      }
      if (m->type != j.type) {
        errors.push_back(fmt::format("{}: type differs", j.name));
        continue;
      }
      if (!(m->origin - j.origin).isZero(kAgreementTolerance)) {
        errors.push_back(fmt::format("{}: origin differs", j.name));
      }
      if (j.type == JointType::kFixed) continue;
      if (!(m->axis - j.axis).isZero(kAgreementTolerance)) {
        errors.push_back(fmt::format("{}: axis differs", j.name));
      }
      if (std::abs(m->range->lo - j.range->lo) > kAgreementTolerance ||
          std::abs(m->range->hi - j.range->hi) > kAgreementTolerance) {
        errors.push_back(fmt::format("{}: range differs", j.name));
      }
    }
  } else {
    errors.push_back("XML unavailable");
  }
  add("mjcf_urdf_agreement", std::move(errors));
  return report;
}

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw ExportError(ExportErrorKind::kIo, "SHA-256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace simready
