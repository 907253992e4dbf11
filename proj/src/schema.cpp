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

#include "simready/schema.hpp"

#include <cmath>
#include <deque>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

namespace simready {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

[[noreturn]] void Fail(SchemaErrorKind kind, const std::string& msg) {
  throw SchemaError(kind, msg);
}

const Json& Require(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    Fail(SchemaErrorKind::kMissingField,
         fmt::format("{}.{}: missing field", path, key));
  }
  return *it;
}

std::string GetString(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Require(obj, key, path);
  if (!v.is_string()) {
    Fail(SchemaErrorKind::kWrongType,
         fmt::format("{}.{}: expected string", path, key));
  }
  return v.get<std::string>();
}

double AsDouble(const Json& v, const std::string& path) {
  if (!v.is_number()) {
    Fail(SchemaErrorKind::kWrongType, fmt::format("{}: expected number", path));
  }
  return v.get<double>();
}

double GetDouble(const Json& obj, const char* key, const std::string& path) {
  return AsDouble(Require(obj, key, path), fmt::format("{}.{}", path, key));
}

int GetInt(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Require(obj, key, path);
  if (!v.is_number_integer()) {
    Fail(SchemaErrorKind::kWrongType,
         fmt::format("{}.{}: expected integer", path, key));
  }
  return v.get<int>();
}

Vec3 GetVec3(const Json& obj, const char* key, const std::string& path) {
  const Json& v = Require(obj, key, path);
  const auto where = fmt::format("{}.{}", path, key);
  if (!v.is_array() || v.size() != 3) {
    Fail(SchemaErrorKind::kWrongType,
         fmt::format("{}: expected array of 3 numbers", where));
  }
  return {AsDouble(v[0], where + "[0]"), AsDouble(v[1], where + "[1]"),
          AsDouble(v[2], where + "[2]")};
}

JointType ParseJointType(const std::string& s, const std::string& path) {
  if (s == "revolute") return JointType::kRevolute;
  if (s == "prismatic") return JointType::kPrismatic;
  if (s == "fixed") return JointType::kFixed;
  Fail(SchemaErrorKind::kInvalidValue,
       fmt::format("{}.type: unknown joint type '{}'", path, s));
}

JointSpec ParseJoint(const Json& j, const std::string& path) {
  if (!j.is_object()) {
    Fail(SchemaErrorKind::kWrongType, fmt::format("{}: expected object", path));
  }
  JointSpec joint;
  joint.type = ParseJointType(GetString(j, "type", path), path);
  joint.parent = GetInt(j, "parent", path);
  joint.axis_direction = GetVec3(j, "axis_direction", path);
  joint.axis_origin = GetVec3(j, "axis_origin", path);
  bool degrees = false;
  if (auto it = j.find("degrees"); it != j.end()) {
    if (!it->is_boolean()) {
      Fail(SchemaErrorKind::kWrongType,
           fmt::format("{}.degrees: expected boolean", path));
    }
    degrees = it->get<bool>();
  }
  if (joint.type != JointType::kFixed) {
    const Json& r = Require(j, "range", path);
    const auto where = path + ".range";
    if (!r.is_array() || r.size() != 2) {
      Fail(SchemaErrorKind::kWrongType,
           fmt::format("{}: expected [lo, hi]", where));
    }
    Range range{AsDouble(r[0], where + "[0]"), AsDouble(r[1], where + "[1]")};
    if (degrees) {
      if (joint.type != JointType::kRevolute) {
        Fail(SchemaErrorKind::kInvalidValue,
             fmt::format("{}.degrees: only valid for revolute joints", path));
      }
      range.lo *= std::numbers::pi / 180.0;
      range.hi *= std::numbers::pi / 180.0;
    }
    joint.range = range;
  } else if (j.contains("range") && !j["range"].is_null()) {
    Fail(SchemaErrorKind::kInvalidRange,
         fmt::format("{}.range: fixed joints carry no range", path));
  }
  return joint;
}

void ValidateTree(const PhysicalAssetSpec& spec) {
  const int n = static_cast<int>(spec.parts.size());
  for (const auto& part : spec.parts) {
    if (part.joint && (part.joint->parent < 0 || part.joint->parent >= n)) {
      Fail(SchemaErrorKind::kOrphanPart,
           fmt::format("part {}: parent {} does not exist", part.id,
                       part.joint->parent));
    }
    if (part.joint && part.joint->parent == part.id) {
      Fail(SchemaErrorKind::kCycleDetected,
           fmt::format("part {} is its own parent", part.id));
    }
  }
  // Walk parent links from every part; a walk longer than n revisits a part.
  for (const auto& part : spec.parts) {
    int cur = part.id;
    for (int steps = 0; spec.parts[cur].joint; ++steps) {
      if (steps > n) {
        Fail(SchemaErrorKind::kCycleDetected,
             fmt::format("cycle through part {}", part.id));
      }
      cur = spec.parts[cur].joint->parent;
    }
  }
  std::vector<int> roots;
  for (const auto& part : spec.parts) {
    if (!part.joint) roots.push_back(part.id);
  }
  if (roots.empty()) Fail(SchemaErrorKind::kNoRoot, "no root part");
  if (roots.size() > 1) {
    Fail(SchemaErrorKind::kMultipleRoots,
         fmt::format("multiple root parts: {} and {}", roots[0], roots[1]));
  }
  if (roots.front() != spec.root_part) {
    Fail(SchemaErrorKind::kRootMismatch,
         fmt::format("root_part is {} but part {} has no joint",
                     spec.root_part, roots.front()));
  }
}

void ValidateJoint(const PhysicalAssetSpec& spec, const PartSpec& part) {
  const JointSpec& j = *part.joint;
  const double norm = j.axis_direction.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-6) {
    Fail(SchemaErrorKind::kInvalidAxis,
         fmt::format("part {}: axis_direction norm {} is not 1", part.id,
                     norm));
  }
  const double r = spec.resolution;
  for (int k = 0; k < 3; ++k) {
    const double o = j.axis_origin[k];
    if (!std::isfinite(o) || o < 0.0 || o > r) {
      Fail(SchemaErrorKind::kInvalidOrigin,
           fmt::format("part {}: axis_origin outside [0,{}]^3", part.id, r));
    }
  }
  if (j.type == JointType::kFixed) {
    if (j.range) {
      Fail(SchemaErrorKind::kInvalidRange,
           fmt::format("part {}: fixed joint carries a range", part.id));
    }
    return;
  }
  if (!j.range) {
    Fail(SchemaErrorKind::kInvalidRange,
         fmt::format("part {}: missing joint range", part.id));
  }
  const Range& range = *j.range;
  if (!std::isfinite(range.lo) || !std::isfinite(range.hi) ||
      !(range.lo < range.hi)) {
    Fail(SchemaErrorKind::kInvalidRange,
         fmt::format("part {}: invalid range [{}, {}]", part.id, range.lo,
                     range.hi));
  }
  if (j.type == JointType::kRevolute &&
      (range.lo < -kTwoPi - kRangeSlack || range.hi > kTwoPi + kRangeSlack)) {
    Fail(SchemaErrorKind::kInvalidRange,
         fmt::format("part {}: revolute range [{}, {}] exceeds [-2pi, 2pi]",
                     part.id, range.lo, range.hi));
  }
}

OrderedJson Vec3Json(const Vec3& v) {
  return OrderedJson::array({v.x(), v.y(), v.z()});
}

}  // namespace

std::string_view JointTypeName(JointType type) {
  switch (type) {
    case JointType::kRevolute: return "revolute";
    case JointType::kPrismatic: return "prismatic";
    case JointType::kFixed: return "fixed";
  }
  return "fixed";
}

void ValidateSpec(const PhysicalAssetSpec& spec) {
  if (spec.resolution < 1 || spec.resolution > kMaxResolution) {
    Fail(SchemaErrorKind::kInvalidValue,
         fmt::format("resolution {} outside [1, {}]", spec.resolution,
                     kMaxResolution));
  }
  for (int k = 0; k < 3; ++k) {
    const double s = spec.absolute_scale[k];
    if (!std::isfinite(s) || !(s > 0.0)) {
      Fail(SchemaErrorKind::kInvalidScale,
           fmt::format("absolute_scale[{}] = {} must be > 0", k, s));
    }
  }
  if (spec.parts.empty()) Fail(SchemaErrorKind::kInvalidValue, "no parts");
  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    if (spec.parts[i].id != static_cast<int>(i)) {
      Fail(SchemaErrorKind::kInvalidPartId,
           fmt::format("parts[{}] has id {}; ids must equal list position", i,
                       spec.parts[i].id));
    }
  }
  for (const auto& part : spec.parts) {
    if (!std::isfinite(part.density) || !(part.density > 0.0)) {
      Fail(SchemaErrorKind::kInvalidDensity,
           fmt::format("part {}: density {} must be > 0", part.id,
                       part.density));
    }
  }
  ValidateTree(spec);
  for (const auto& part : spec.parts) {
    if (part.joint) ValidateJoint(spec, part);
    if (part.geometry.resolution != spec.resolution) {
      Fail(SchemaErrorKind::kGeometry,
           fmt::format("part {}: geometry resolution {} != {}", part.id,
                       part.geometry.resolution, spec.resolution));
    }
    try {
      if (Decode(part.geometry).Empty()) {
        Fail(SchemaErrorKind::kGeometry,
             fmt::format("part {}: geometry is empty", part.id));
      }
    } catch (const TokenError& e) {
      Fail(SchemaErrorKind::kGeometry,
           fmt::format("part {}: {}", part.id, e.what()));
    }
  }
}

PhysicalAssetSpec ParseSpec(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    Fail(SchemaErrorKind::kMalformedJson, e.what());
  }
  const std::string root = "$";
  if (!doc.is_object()) {
    Fail(SchemaErrorKind::kWrongType, "$: expected object");
  }
  PhysicalAssetSpec spec;
  spec.name = GetString(doc, "name", root);
  spec.description = GetString(doc, "description", root);
  spec.absolute_scale = GetVec3(doc, "absolute_scale", root);
  spec.resolution = GetInt(doc, "resolution", root);
  spec.root_part = GetInt(doc, "root_part", root);
  const Json& parts = Require(doc, "parts", root);
  if (!parts.is_array()) {
    Fail(SchemaErrorKind::kWrongType, "$.parts: expected array");
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto path = fmt::format("$.parts[{}]", i);
    const Json& p = parts[i];
    if (!p.is_object()) {
      Fail(SchemaErrorKind::kWrongType, fmt::format("{}: expected object", path));
    }
    PartSpec part;
    part.id = GetInt(p, "id", path);
    part.description = GetString(p, "description", path);
    part.material = GetString(p, "material", path);
    part.density = GetDouble(p, "density", path);
    const Json& aff = Require(p, "affordance", path);
    if (!aff.is_array()) {
      Fail(SchemaErrorKind::kWrongType,
           fmt::format("{}.affordance: expected array", path));
    }
    for (std::size_t k = 0; k < aff.size(); ++k) {
      if (!aff[k].is_string()) {
        Fail(SchemaErrorKind::kWrongType,
             fmt::format("{}.affordance[{}]: expected string", path, k));
      }
      part.affordance.push_back(aff[k].get<std::string>());
    }
    part.geometry = {GetString(p, "geometry", path), spec.resolution};
    const Json& joint = Require(p, "joint", path);
    if (!joint.is_null()) part.joint = ParseJoint(joint, path + ".joint");
    spec.parts.push_back(std::move(part));
  }
  ValidateSpec(spec);
  return spec;
}

std::string EmitSpec(const PhysicalAssetSpec& spec) {
  ValidateSpec(spec);
  OrderedJson doc;
  doc["name"] = spec.name;
  doc["description"] = spec.description;
  doc["absolute_scale"] = Vec3Json(spec.absolute_scale);
  doc["resolution"] = spec.resolution;
  doc["root_part"] = spec.root_part;
  OrderedJson parts = OrderedJson::array();
  for (const auto& part : spec.parts) {
    OrderedJson p;
    p["id"] = part.id;
    p["description"] = part.description;
    p["material"] = part.material;
    p["density"] = part.density;
    p["affordance"] = part.affordance;
    p["geometry"] = part.geometry.text;
    if (part.joint) {
      OrderedJson j;
      j["type"] = JointTypeName(part.joint->type);
      j["parent"] = part.joint->parent;
      j["axis_direction"] = Vec3Json(part.joint->axis_direction);
      j["axis_origin"] = Vec3Json(part.joint->axis_origin);
      if (part.joint->range) {
        j["range"] = OrderedJson::array({part.joint->range->lo,
                                         part.joint->range->hi});
      }
      p["joint"] = std::move(j);
    } else {
      p["joint"] = nullptr;
    }
    parts.push_back(std::move(p));
  }
  doc["parts"] = std::move(parts);
  return doc.dump(2) + "\n";
}

const PartSpec& FindPart(const PhysicalAssetSpec& spec, int part_id) {
  if (part_id < 0 || part_id >= static_cast<int>(spec.parts.size())) {
    Fail(SchemaErrorKind::kUnknownPart,
         fmt::format("unknown part id {}", part_id));
  }
  return spec.parts[part_id];
}

VoxelGrid PartVoxels(const PhysicalAssetSpec& spec, int part_id) {
  return Decode(FindPart(spec, part_id).geometry);
}

double PartMass(const PhysicalAssetSpec& spec, int part_id) {
  const PartSpec& part = FindPart(spec, part_id);
  const double r = spec.resolution;
  const Vec3& s = spec.absolute_scale;
  const double voxel_volume = (s.x() / r) * (s.y() / r) * (s.z() / r);
  const auto count = static_cast<double>(Decode(part.geometry).Count());
  return part.density * count * voxel_volume;
}

std::vector<int> Children(const PhysicalAssetSpec& spec, int part_id) {
  std::vector<int> out;
  for (const auto& part : spec.parts) {
    if (part.joint && part.joint->parent == part_id) out.push_back(part.id);
  }
  return out;
}

std::vector<int> TopologicalOrder(const PhysicalAssetSpec& spec) {
  std::vector<int> order;
  std::deque<int> queue = {spec.root_part};
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    order.push_back(cur);
    for (int c : Children(spec, cur)) queue.push_back(c);
  }
  return order;
}

}  // namespace simready
