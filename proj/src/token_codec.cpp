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

#include "simready/token_codec.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace simready {
namespace {

bool IsDigit(char c) { return c >= '0' && c <= '9'; }

std::int64_t ParseInt(std::string_view s, std::string_view run) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), IsDigit) ||
      (s.size() > 1 && s.front() == '0')) {
    throw TokenError(TokenErrorKind::kMalformedSyntax, std::string(run),
                     fmt::format("malformed run '{}'", run));
  }
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc()) {
    throw TokenError(TokenErrorKind::kIndexOutOfBounds, std::string(run),
                     fmt::format("index in '{}' does not fit", run));
  }
  return value;
}

}  // namespace

std::vector<Run> ParseRuns(std::string_view text, int resolution) {
  std::vector<Run> runs;
  if (text.empty()) return runs;
  const std::int64_t r = resolution;
  const std::int64_t volume = r * r * r;
  std::size_t pos = 0;
  while (true) {
    auto comma = text.find(',', pos);
    const bool last = comma == std::string_view::npos;
    if (last) comma = text.size();
    const auto run_text = text.substr(pos, comma - pos);
    if (run_text.empty()) {
      throw TokenError(TokenErrorKind::kMalformedSyntax, std::string(run_text),
                       fmt::format("empty run at offset {}", pos));
    }
    Run run;
    const auto dash = run_text.find('-');
    if (dash == std::string_view::npos) {
      run.first = run.last = ParseInt(run_text, run_text);
    } else {
      run.first = ParseInt(run_text.substr(0, dash), run_text);
      run.last = ParseInt(run_text.substr(dash + 1), run_text);
      if (run.first >= run.last) {
        throw TokenError(TokenErrorKind::kDescendingRange,
                         std::string(run_text),
                         fmt::format("range '{}' is not ascending", run_text));
      }
    }
    if (run.last >= volume) {
      throw TokenError(TokenErrorKind::kIndexOutOfBounds,
                       std::string(run_text),
                       fmt::format("'{}' exceeds {} at resolution {}",
                                   run_text, volume - 1, resolution));
    }
    if (!runs.empty()) {
      const Run& prev = runs.back();
      if (run.first <= prev.last && run.last >= prev.first) {
        throw TokenError(TokenErrorKind::kOverlappingRuns,
                         std::string(run_text),
                         fmt::format("run '{}' overlaps its predecessor",
                                     run_text));
      }
      if (run.first == prev.last + 1) {
        throw TokenError(TokenErrorKind::kAdjacentRuns, std::string(run_text),
                         fmt::format("run '{}' continues its predecessor and "
                                     "must be merged",
                                     run_text));
      }
      if (run.first < prev.first) {
        throw TokenError(TokenErrorKind::kUnsortedRuns, std::string(run_text),
                         fmt::format("run '{}' is out of order", run_text));
      }
    }
    runs.push_back(run);
    if (last) break;
    pos = comma + 1;
  }
  return runs;
}

std::string FormatRuns(const std::vector<Run>& runs) {
  fmt::memory_buffer buf;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i) buf.push_back(',');
    if (runs[i].first == runs[i].last) {
      fmt::format_to(std::back_inserter(buf), "{}", runs[i].first);
    } else {
      fmt::format_to(std::back_inserter(buf), "{}-{}", runs[i].first,
                     runs[i].last);
    }
  }
  return fmt::to_string(buf);
}

TokenString Encode(const VoxelGrid& grid) {
  std::vector<Run> runs;
  const auto bits = grid.bits();
  const auto n = static_cast<std::int64_t>(bits.size());
  std::int64_t i = 0;
  while (i < n) {
    if (!bits[i]) {
      ++i;
      continue;
    }
    std::int64_t j = i;
    while (j + 1 < n && bits[j + 1]) ++j;
    runs.push_back({i, j});
    i = j + 1;
  }
  return {FormatRuns(runs), grid.resolution()};
}

VoxelGrid Decode(const TokenString& tokens) {
  VoxelGrid grid(tokens.resolution);
  for (const Run& run : ParseRuns(tokens.text, tokens.resolution)) {
    for (std::int64_t i = run.first; i <= run.last; ++i) grid.SetIndex(i);
  }
  return grid;
}

std::int64_t CountTokens(std::string_view text, const TokenizerModel& model) {
  const int group = std::max(1, model.digit_group);
  std::int64_t count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (IsDigit(text[i])) {
      std::size_t j = i;
      while (j < text.size() && IsDigit(text[j])) ++j;
      const auto digits = static_cast<std::int64_t>(j - i);
      count += (digits + group - 1) / group;
      i = j;
      continue;
    }
    const bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!ws || model.whitespace_is_token) ++count;
    ++i;
  }
  return count;
}

std::string_view RepresentationName(Representation r) {
  switch (r) {
    case Representation::kMeshText: return "mesh-text";
    case Representation::kQuantizedMesh: return "quantized-mesh";
    case Representation::kVoxelCoords: return "voxel-coords";
    case Representation::kIndexList: return "index-list";
    case Representation::kMergedRuns: return "merged-runs";
  }
  return "unknown";
}

std::string QuantizedMeshText(const TriMesh& mesh, int resolution) {
  fmt::memory_buffer buf;
  const auto q = [resolution](double v) {
    return std::clamp(static_cast<int>(std::floor(v * resolution)), 0,
                      resolution - 1);
  };
  for (const auto& v : mesh.vertices) {
    fmt::format_to(std::back_inserter(buf), "v {} {} {}\n", q(v.x()),
                   q(v.y()), q(v.z()));
  }
  for (const auto& f : mesh.faces) {
    fmt::format_to(std::back_inserter(buf), "f {} {} {}\n", f[0] + 1, f[1] + 1,
                   f[2] + 1);
  }
  return fmt::to_string(buf);
}

std::string VoxelCoordsText(const VoxelGrid& grid) {
  fmt::memory_buffer buf;
  for (const auto& c : grid.Cells()) {
    fmt::format_to(std::back_inserter(buf), "{} {} {}\n", c.x, c.y, c.z);
  }
  return fmt::to_string(buf);
}

std::string IndexListText(const VoxelGrid& grid) {
  const auto indices = grid.Indices();
  return fmt::format("{}", fmt::join(indices, ","));
}

std::vector<TokenReport> CompareRepresentations(const TriMesh& mesh,
                                                int resolution,
                                                const TokenizerModel& model) {
  const VoxelGrid grid = Voxelize(mesh, resolution, VoxelizeMode::kSurface);
  const std::int64_t counts[] = {
      CountTokens(FormatObj(mesh), model),
      CountTokens(QuantizedMeshText(mesh, resolution), model),
      CountTokens(VoxelCoordsText(grid), model),
      CountTokens(IndexListText(grid), model),
      CountTokens(Encode(grid).text, model),
  };
  const auto merged = counts[4];
  const auto index = counts[3];
  const auto coords = counts[2];
  if (!(merged <= index && index <= coords)) {
    throw Error(fmt::format(
        "token ordering violated: merged-runs {} index-list {} voxel-coords {}",
        merged, index, coords));
  }
  std::vector<TokenReport> reports;
  for (int r = 0; r < 5; ++r) {
    TokenReport rep;
    rep.representation = static_cast<Representation>(r);
    rep.tokens = counts[r];
    rep.ratio = counts[r] > 0 ? static_cast<double>(counts[0]) / counts[r]
                              : std::numeric_limits<double>::infinity();
    reports.push_back(rep);
  }
  return reports;
}

std::string ReportCsv(const std::vector<TokenReport>& reports) {
  std::string out = "representation,tokens,ratio\n";
  for (const auto& r : reports) {
    out += fmt::format("{},{},{:.6f}\n", RepresentationName(r.representation),
                       r.tokens, r.ratio);
  }
  return out;
}

}  // namespace simready
