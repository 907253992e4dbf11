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

// simready: single entry point for the asset pipeline.
//
// Option values resolve as: command-line flag, then SIMREADY_<FLAG>
// environment variable, then the JSON object given by --config (keys are
// flag names with '_' for '-'), then the built-in default.
//
// Exit status: 0 success, 1 validation or processing failure, 2 usage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "simready/export.hpp"
#include "simready/flow.hpp"
#include "simready/kinematics.hpp"
#include "simready/mesh.hpp"
#include "simready/metrics.hpp"
#include "simready/schema.hpp"
#include "simready/segmentation.hpp"
#include "simready/token_codec.hpp"
#include "simready/voxel.hpp"

namespace {

namespace fs = std::filesystem;
using simready::Error;
using simready::TriMesh;
using simready::Vec3;
using simready::VoxelGrid;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
}

// Writes to `path`, or stdout when empty.
void Emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    WriteText(path, text);
  }
}

simready::TokenString ReadTokens(const fs::path& path, int resolution) {
  std::string text = ReadText(path);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.pop_back();
  }
  return {text, resolution};
}

void WriteTokens(const fs::path& path, const simready::TokenString& t) {
  WriteText(path, t.text + "\n");
}

simready::VoxelizeMode ParseMode(const std::string& mode) {
  if (mode == "surface") return simready::VoxelizeMode::kSurface;
  if (mode == "solid") return simready::VoxelizeMode::kSolid;
  throw UsageError(fmt::format("--mode must be surface or solid, got '{}'", mode));
}

std::string GridJson(const VoxelGrid& grid) {
  nlohmann::ordered_json j;
  j["resolution"] = grid.resolution();
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : grid.Cells()) j["cells"].push_back({c.x, c.y, c.z});
  return j.dump() + "\n";
}

VoxelGrid ParseGridJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    VoxelGrid grid(j.at("resolution").get<int>());
    for (const auto& c : j.at("cells")) {
      const simready::Cell cell{c.at(0).get<int>(), c.at(1).get<int>(),
                                c.at(2).get<int>()};
      const int r = grid.resolution();
      if (cell.x < 0 || cell.y < 0 || cell.z < 0 || cell.x >= r ||
          cell.y >= r || cell.z >= r) {
        throw Error(fmt::format("grid cell ({},{},{}) outside resolution {}",
                                cell.x, cell.y, cell.z, r));
      }
      grid.Set(cell);
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("malformed grid JSON: {}", e.what()));
  }
}

// Meshes normalized into the frame of their union bounding box.
std::vector<TriMesh> LoadInUnionFrame(const std::vector<std::string>& paths) {
  std::vector<TriMesh> meshes;
  for (const auto& p : paths) meshes.push_back(simready::LoadMesh(p));
  const auto frame = simready::Normalize(simready::Concatenate(meshes)).original;
  for (auto& m : meshes) m = simready::NormalizeInFrame(m, frame);
  return meshes;
}

TriMesh LoadUnion(const std::vector<std::string>& paths) {
  return simready::Concatenate(LoadInUnionFrame(paths));
}

simready::PartLabeledGrid SpecLabels(const simready::PhysicalAssetSpec& spec) {
  std::vector<VoxelGrid> grids;
  for (const auto& part : spec.parts) {
    grids.push_back(simready::PartVoxels(spec, part.id));
  }
  return simready::LabelParts(grids);
}

Vec3 ParseTriple(const std::string& text, const char* flag) {
  std::istringstream in(text);
  Vec3 v;
  char sep = 0;
  if (!(in >> v.x() >> sep >> v.y() >> sep >> v.z())) {
    throw UsageError(fmt::format("{} expects x,y,z", flag));
  }
  return v;
}

// ---- config / environment plumbing -----------------------------------------

std::string FlagName(const CLI::Option* opt) { return opt->get_single_name(); }

std::string EnvName(const std::string& flag) {
  std::string env = "SIMREADY_";
  for (char c : flag) {
    env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return env;
}

void AttachEnv(CLI::App* sub) {
  for (CLI::Option* opt : sub->get_options()) {
    const std::string flag = FlagName(opt);
    if (flag == "help" || flag == "config" || opt->get_expected_max() == 0) continue;
    opt->envname(EnvName(flag));
  }
}

void ApplyConfig(CLI::App* sub, const std::string& config_path) {
  if (config_path.empty()) return;
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(ReadText(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("--config: {}", e.what()));
  }
  if (!cfg.is_object()) throw UsageError("--config must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt = nullptr;
    for (CLI::Option* o : sub->get_options()) {
      if (FlagName(o) == flag) opt = o;
    }
    if (opt == nullptr || flag == "config" || flag == "help") {
      throw UsageError(fmt::format("--config: unknown key '{}'", key));
    }
    if (opt->count() > 0) continue;
    const auto add = [&](const nlohmann::json& v) {
      opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
    };
    if (value.is_array()) {
      for (const auto& v : value) add(v);
    } else {
      add(value);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(fmt::format("--config key '{}': {}", key, e.what()));
    }
  }
}

void Require(bool present, const char* flag) {
  if (!present) throw UsageError(fmt::format("{} is required", flag));
}

// ---- subcommands -----------------------------------------------------------

struct EncodeCmd {
  std::vector<std::string> meshes;
  std::string grid;
  int select = -1;
  int res = simready::kDefaultResolution;
  std::string mode = "surface";
  std::string out;
  std::string templ;
  std::string spec_out;

  void Register(CLI::App* sub) {
    sub->add_option("--mesh", meshes,
                    "OBJ mesh; repeat for parts sharing one normalization frame");
    sub->add_option("--grid", grid, "grid JSON to encode instead of a mesh");
    sub->add_option("--select", select,
                    "voxelize only the k-th --mesh (default: all)");
    sub->add_option("--res", res, "voxel resolution")->capture_default_str();
    sub->add_option("--mode", mode, "surface or solid voxelization")
        ->capture_default_str();
    sub->add_option("--out", out, "token file to write");
    sub->add_option("--template", templ,
                    "spec template without geometry; one --mesh per part");
    sub->add_option("--spec-out", spec_out,
                    "spec JSON written from --template and the part meshes");
  }

  int Run() const {
    const auto vmode = ParseMode(mode);
    if (!templ.empty()) return RunTemplate(vmode);
    Require(!out.empty(), "--out");
    VoxelGrid g(res);
    if (!grid.empty()) {
      if (!meshes.empty()) throw UsageError("give either --grid or --mesh");
      g = ParseGridJson(ReadText(grid));
    } else {
      Require(!meshes.empty(), "--mesh or --grid");
      auto parts = LoadInUnionFrame(meshes);
      if (select >= static_cast<int>(parts.size())) {
        throw UsageError(fmt::format("--select {} but only {} meshes", select,
                                     parts.size()));
      }
      const TriMesh m =
          select >= 0 ? parts[select] : simready::Concatenate(parts);
      g = simready::Voxelize(m, res, vmode);
    }
    WriteTokens(out, simready::Encode(g));
    return kExitOk;
  }

  int RunTemplate(simready::VoxelizeMode vmode) const {
    Require(!spec_out.empty(), "--spec-out");
    nlohmann::ordered_json doc;
    try {
      doc = nlohmann::ordered_json::parse(ReadText(templ));
    } catch (const nlohmann::json::exception& e) {
      throw Error(fmt::format("malformed template: {}", e.what()));
    }
    if (!doc.contains("parts") || !doc["parts"].is_array()) {
      throw Error("template has no parts array");
    }
    auto& parts = doc["parts"];
    if (parts.size() != meshes.size()) {
      throw UsageError(fmt::format("template has {} parts but {} meshes given",
                                   parts.size(), meshes.size()));
    }
    const double scale =
        static_cast<double>(res) / doc.value("resolution", res);
    const auto normalized = LoadInUnionFrame(meshes);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const VoxelGrid g = simready::Voxelize(normalized[k], res, vmode);
      parts[k]["geometry"] = simready::Encode(g).text;
      auto& joint = parts[k]["joint"];
      if (scale != 1.0 && joint.is_object()) {
        for (auto& o : joint["axis_origin"]) o = o.get<double>() * scale;
        if (joint.value("type", "") == "prismatic") {
          for (auto& r : joint["range"]) r = r.get<double>() * scale;
        }
      }
    }
    doc["resolution"] = res;
    const auto spec = simready::ParseSpec(doc.dump());
    WriteText(spec_out, simready::EmitSpec(spec));
    if (!out.empty()) {
      WriteTokens(out, simready::Encode(simready::Voxelize(
                           simready::Concatenate(normalized), res, vmode)));
    }
    return kExitOk;
  }
};

struct DecodeCmd {
  std::string tokens;
  int res = simready::kDefaultResolution;
  std::string out;

  void Register(CLI::App* sub) {
    sub->add_option("--tokens", tokens, "token file");
    sub->add_option("--res", res, "grid resolution")->capture_default_str();
    sub->add_option("--out", out, "grid JSON to write (stdout if omitted)");
  }

  int Run() const {
    Require(!tokens.empty(), "--tokens");
    Emit(out, GridJson(simready::Decode(ReadTokens(tokens, res))));
    return kExitOk;
  }
};

struct CompareCmd {
  std::vector<std::string> meshes;
  int res = simready::kDefaultResolution;
  std::string out;

  void Register(CLI::App* sub) {
    sub->add_option("--mesh", meshes, "OBJ mesh; repeated meshes are merged");
    sub->add_option("--res", res, "voxel resolution")->capture_default_str();
    sub->add_option("--out", out, "CSV to write (stdout if omitted)");
  }

  int Run() const {
    Require(!meshes.empty(), "--mesh");
    const TriMesh m = LoadUnion(meshes);
    Emit(out, simready::ReportCsv(simready::CompareRepresentations(m, res)));
    return kExitOk;
  }
};

struct TrainCmd {
  std::vector<std::string> fine;
  std::vector<std::string> conditions;
  simready::FlowConfig config;
  std::string out;
  std::string loss_out;

  void Register(CLI::App* sub) {
    sub->add_option("--fine", fine, "fine-resolution token file (repeatable)");
    sub->add_option("--condition", conditions,
                    "comma-separated condition vector per --fine (optional)");
    sub->add_option("--fine-resolution", config.fine_resolution)
        ->capture_default_str();
    sub->add_option("--coarse-resolution", config.coarse_resolution)
        ->capture_default_str();
    sub->add_option("--hidden", config.hidden, "hidden units")
        ->capture_default_str();
    sub->add_option("--coarse-radius", config.coarse_radius,
                    "coarse cells seen on each side of a voxel's parent")
        ->capture_default_str();
    sub->add_option("--time-frequencies", config.time_frequencies)
        ->capture_default_str();
    sub->add_option("--condition-dim", config.condition_dim)
        ->capture_default_str();
    sub->add_option("--steps", config.steps, "optimizer steps")
        ->capture_default_str();
    sub->add_option("--samples-per-pair", config.samples_per_pair)
        ->capture_default_str();
    sub->add_option("--learning-rate", config.learning_rate)
        ->capture_default_str();
    sub->add_option("--t-min", config.t_min, "lower clamp on t for the velocity")
        ->capture_default_str();
    sub->add_option("--consistency-tolerance", config.consistency_tolerance)
        ->capture_default_str();
    sub->add_option("--seed", config.seed)->capture_default_str();
    sub->add_option("--out", out, "checkpoint to write");
    sub->add_option("--loss-out", loss_out, "loss curve CSV");
  }

  int Run() const {
    Require(!fine.empty(), "--fine");
    Require(!out.empty(), "--out");
    config.Validate();
    if (!conditions.empty() && conditions.size() != fine.size()) {
      throw UsageError("give one --condition per --fine");
    }
    std::vector<simready::TrainingPair> pairs;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      simready::TrainingPair p;
      p.fine = simready::Decode(ReadTokens(fine[i], config.fine_resolution));
      p.coarse = simready::Downsample(p.fine, config.factor());
      if (!conditions.empty()) {
        std::vector<double> c;
        std::stringstream ss(conditions[i]);
        std::string item;
        while (std::getline(ss, item, ',')) c.push_back(std::stod(item));
        p.image_condition = Eigen::Map<Eigen::VectorXd>(c.data(), c.size());
      }
      pairs.push_back(std::move(p));
    }
    const auto model = simready::Train(pairs, config);
    model.Save(out);
    if (!loss_out.empty()) WriteText(loss_out, simready::LossCurveCsv(model.loss_curve));
    if (!model.loss_curve.empty()) {
      std::cerr << fmt::format("loss {:.6f} -> {:.6f}\n", model.loss_curve.front(),
                               model.loss_curve.back());
    }
    return kExitOk;
  }
};

struct RefineCmd {
  std::string model;
  std::string coarse;
  int steps = 50;
  std::uint64_t seed = 0;
  std::string out;

  void Register(CLI::App* sub) {
    sub->add_option("--model", model, "checkpoint from train-refiner");
    sub->add_option("--coarse", coarse, "coarse token file");
    sub->add_option("--steps", steps, "Euler steps")->capture_default_str();
    sub->add_option("--seed", seed, "noise seed")->capture_default_str();
    sub->add_option("--out", out, "fine token file to write");
  }

  int Run() const {
    Require(!model.empty(), "--model");
    Require(!coarse.empty(), "--coarse");
    Require(!out.empty(), "--out");
    const auto m = simready::RefinerModel::Load(model);
    const VoxelGrid c =
        simready::Decode(ReadTokens(coarse, m.config().coarse_resolution));
    WriteTokens(out, simready::Encode(simready::SampleFine(m, c, steps, seed)));
    return kExitOk;
  }
};

struct SegmentCmd {
  std::vector<std::string> meshes;
  std::string spec;
  std::string out;

  void Register(CLI::App* sub) {
    sub->add_option("--mesh", meshes, "OBJ mesh; repeated meshes are merged");
    sub->add_option("--spec", spec, "asset spec JSON");
    sub->add_option("--out", out, "output directory");
  }

  int Run() const {
    Require(!meshes.empty(), "--mesh");
    Require(!spec.empty(), "--spec");
    Require(!out.empty(), "--out");
    const auto s = simready::ParseSpec(ReadText(spec));
    const auto seg = simready::SegmentMesh(LoadUnion(meshes), SpecLabels(s));
    fs::create_directories(out);
    std::string labels;
    for (int l : *seg.mesh.face_labels) labels += fmt::format("{}\n", l);
    WriteText(fs::path(out) / "face_labels.txt", labels);
    for (const auto& part :
         simready::SplitParts(seg.mesh, static_cast<int>(s.parts.size()))) {
      if (part.empty_warning) {
        std::cerr << fmt::format("warning: part {} received no faces\n", part.part);
      }
      WriteText(fs::path(out) / fmt::format("part_{}.obj", part.part),
                simready::FormatObj(part.mesh));
    }
    return kExitOk;
  }
};

struct ExportCmd {
  std::string spec;
  std::vector<std::string> meshes;
  std::string out;

  void Register(CLI::App* sub) {
    sub->add_option("--spec", spec, "asset spec JSON");
    sub->add_option("--mesh", meshes,
                    "fine OBJ mesh, segmented by the spec (optional, repeatable)");
    sub->add_option("--out", out, "bundle directory");
  }

  int Run() const {
    Require(!spec.empty(), "--spec");
    Require(!out.empty(), "--out");
    const auto s = simready::ParseSpec(ReadText(spec));
    simready::ExportBundle bundle;
    if (meshes.empty()) {
      bundle = simready::Export(s);
    } else {
      const auto seg = simready::SegmentMesh(LoadUnion(meshes), SpecLabels(s));
      for (int p : seg.empty_parts) {
        std::cerr << fmt::format("warning: part {} received no faces; using cuboids\n", p);
      }
      bundle = simready::Export(s, &seg.mesh);
    }
    simready::WriteBundle(bundle, out);
    return kExitOk;
  }
};

struct ValidateCmd {
  std::string bundle;

  void Register(CLI::App* sub) {
    sub->add_option("--bundle", bundle, "bundle directory");
  }

  int Run() const {
    Require(!bundle.empty(), "--bundle");
    const auto report = simready::ValidateBundle(bundle);
    std::cout << report.ToText();
    return report.ok() ? kExitOk : kExitFailure;
  }
};

struct MetricsCmd {
  std::string pred;
  std::string gt;
  std::string pred_tokens;
  std::string gt_tokens;
  int res = simready::kDefaultResolution;
  std::size_t samples = simready::kDefaultSurfaceSamples;
  std::uint64_t seed = 0;
  double fscore_fraction = simready::kDefaultFScoreFraction;
  std::string pred_extents;
  std::string gt_extents;
  std::string json_out;
  std::string csv_out;

  void Register(CLI::App* sub) {
    sub->add_option("--pred", pred, "predicted OBJ mesh");
    sub->add_option("--gt", gt, "ground-truth OBJ mesh");
    sub->add_option("--pred-tokens", pred_tokens, "predicted token file");
    sub->add_option("--gt-tokens", gt_tokens, "ground-truth token file");
    sub->add_option("--res", res, "resolution of token files and IoU grids")
        ->capture_default_str();
    sub->add_option("--samples", samples, "surface samples per mesh")
        ->capture_default_str();
    sub->add_option("--seed", seed, "surface sampling seed")->capture_default_str();
    sub->add_option("--fscore-fraction", fscore_fraction,
                    "F-score threshold as a fraction of the gt bbox diagonal")
        ->capture_default_str();
    sub->add_option("--pred-extents", pred_extents, "predicted size x,y,z in metres");
    sub->add_option("--gt-extents", gt_extents, "ground-truth size x,y,z in metres");
    sub->add_option("--json-out", json_out, "JSON report (stdout if no output given)");
    sub->add_option("--csv-out", csv_out, "CSV report");
  }

  int Run() const {
    simready::MetricReport report;
    if (!pred.empty() || !gt.empty()) {
      Require(!pred.empty() && !gt.empty(), "--pred and --gt");
      simready::MeshMetricOptions opt;
      opt.samples = samples;
      opt.seed = seed;
      opt.resolution = res;
      opt.fscore_fraction = fscore_fraction;
      report = simready::CompareMeshes(simready::Normalize(simready::LoadMesh(pred)).mesh,
                                       simready::Normalize(simready::LoadMesh(gt)).mesh,
                                       opt);
    } else if (!pred_tokens.empty() || !gt_tokens.empty()) {
      Require(!pred_tokens.empty() && !gt_tokens.empty(),
              "--pred-tokens and --gt-tokens");
      const VoxelGrid p = simready::Decode(ReadTokens(pred_tokens, res));
      const VoxelGrid g = simready::Decode(ReadTokens(gt_tokens, res));
      report.psnr = simready::ProjectionPsnr(p, g);
      report.iou = simready::VoxelIou(p, g);
    }
    if (!pred_extents.empty() || !gt_extents.empty()) {
      Require(!pred_extents.empty() && !gt_extents.empty(),
              "--pred-extents and --gt-extents");
      report.scale_error =
          simready::ScaleError(ParseTriple(pred_extents, "--pred-extents"),
                               ParseTriple(gt_extents, "--gt-extents"));
    }
    if (!report.psnr && !report.scale_error) {
      throw UsageError("nothing to compare: give meshes, token files or extents");
    }
    if (!json_out.empty() || csv_out.empty()) {
      Emit(json_out, simready::MetricReportJson(report));
    }
    if (!csv_out.empty()) WriteText(csv_out, simready::MetricReportCsv(report));
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-ready articulated asset toolchain."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand help for all subcommands");

  EncodeCmd encode;
  DecodeCmd decode;
  CompareCmd compare;
  TrainCmd train;
  RefineCmd refine;
  SegmentCmd segment;
  ExportCmd exporter;
  ValidateCmd validate;
  MetricsCmd metrics;

  struct Entry {
    CLI::App* app;
    std::function<int()> run;
    std::string config;
  };
  std::vector<Entry> entries;
  const auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.Register(sub);
    entries.push_back({sub, [&cmd] { return cmd.Run(); }, {}});
  };
  add("encode", "Voxelize meshes (or a grid) and write merged-run tokens.", encode);
  add("decode", "Expand a token file into a grid JSON.", decode);
  add("compare-tokens", "Token counts of five mesh representations as CSV.", compare);
  add("train-refiner", "Fit the coarse-to-fine flow refiner.", train);
  add("refine", "Sample a fine grid from a coarse one.", refine);
  add("segment", "Label mesh faces with spec parts and split them.", segment);
  add("export", "Write a URDF/MJCF bundle for a spec.", exporter);
  add("validate", "Check a bundle on disk.", validate);
  add("metrics", "Geometry and scale metrics as JSON/CSV.", metrics);
  for (auto& e : entries) {
    e.app->add_option("--config", e.config, "JSON object of flag defaults");
    AttachEnv(e.app);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  for (auto& e : entries) {
    if (!e.app->parsed()) continue;
    try {
      ApplyConfig(e.app, e.config);
      return e.run();
    } catch (const UsageError& err) {
      std::cerr << "usage error: " << err.what() << "\n" << e.app->help();
      return kExitUsage;
    } catch (const CLI::Error& err) {
      std::cerr << "usage error: " << err.what() << "\n" << e.app->help();
      return kExitUsage;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << "\n";
      return kExitFailure;
    }
  }
  return kExitUsage;
}
