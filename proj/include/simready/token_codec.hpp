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

// Text serialization of sparse voxel sets: occupied linear indices in
// ascending order, consecutive indices merged into "a-b" ranges, runs
// separated by a single comma.
//
//   runs := run ("," run)*
//   run  := INT | INT "-" INT        (a < b for ranges)
//
// The empty grid encodes to the empty string.

#ifndef SIMREADY_TOKEN_CODEC_HPP_
#define SIMREADY_TOKEN_CODEC_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simready/error.hpp"
#include "simready/mesh.hpp"
#include "simready/voxel.hpp"

namespace simready {

enum class TokenErrorKind {
  kMalformedSyntax,
  kDescendingRange,
  kIndexOutOfBounds,
  kUnsortedRuns,
  kOverlappingRuns,
  kAdjacentRuns,
};

// Carries the offending substring of the token text.
class TokenError : public KindedError<TokenErrorKind> {
 public:
  TokenError(Kind kind, std::string offending, const std::string& what)
      : KindedError(kind, what), offending_(std::move(offending)) {}

  const std::string& offending() const { return offending_; }

 private:
  std::string offending_;
};

struct TokenString {
  std::string text;
  int resolution = kDefaultResolution;

  friend bool operator==(const TokenString&, const TokenString&) = default;
};

struct Run {
  std::int64_t first = 0;
  std::int64_t last = 0;  // inclusive

  friend bool operator==(const Run&, const Run&) = default;
};

TokenString Encode(const VoxelGrid& grid);
VoxelGrid Decode(const TokenString& tokens);

// Parses and validates the grammar without materializing a grid.
std::vector<Run> ParseRuns(std::string_view text, int resolution);
std::string FormatRuns(const std::vector<Run>& runs);

// Deterministic stand-in for a BPE tokenizer: every non-digit character is
// one token and each maximal digit run is chunked left to right into groups
// of at most `digit_group` digits.
struct TokenizerModel {
  int digit_group = 3;
  bool whitespace_is_token = true;
};

std::int64_t CountTokens(std::string_view text,
                         const TokenizerModel& model = {});

enum class Representation {
  kMeshText,
  kQuantizedMesh,
  kVoxelCoords,
  kIndexList,
  kMergedRuns,
};

std::string_view RepresentationName(Representation r);

struct TokenReport {
  Representation representation = Representation::kMeshText;
  std::int64_t tokens = 0;
  double ratio = 1.0;  // mesh-text tokens / tokens
};

// Text forms compared by CompareRepresentations.
std::string QuantizedMeshText(const TriMesh& mesh, int resolution);
std::string VoxelCoordsText(const VoxelGrid& grid);
std::string IndexListText(const VoxelGrid& grid);

// `mesh` must be normalized. Surface voxelization is used for the voxel
// forms. Reports are ordered as the Representation enum.
std::vector<TokenReport> CompareRepresentations(
    const TriMesh& mesh, int resolution, const TokenizerModel& model = {});

// CSV with header "representation,tokens,ratio".
std::string ReportCsv(const std::vector<TokenReport>& reports);

}  // namespace simready

#endif  // SIMREADY_TOKEN_CODEC_HPP_
