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

#include <gtest/gtest.h>

#include <cctype>

#include "test_util.hpp"

namespace simready {
namespace {

using testing::Rng;

VoxelGrid FromIndices(int r, std::initializer_list<std::int64_t> idx) {
  VoxelGrid g(r);
  for (auto i : idx) g.SetIndex(i);
  return g;
}

void ExpectTokenError(const std::string& text, int r, TokenErrorKind kind,
                      const std::string& offending) {
  try {
    Decode({text, r});
    ADD_FAILURE() << "accepted '" << text << "'";
  } catch (const TokenError& e) {
    EXPECT_EQ(e.kind(), kind) << text;
    EXPECT_EQ(e.offending(), offending) << text;
  }
}

// Runs written by hand from the occupied index list.
std::string NaiveRuns(const VoxelGrid& g) {
  std::string out;
  const auto idx = g.Indices();
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && idx[j + 1] == idx[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(idx[i]);
    if (j > i) out += "-" + std::to_string(idx[j]);
    i = j + 1;
  }
  return out;
}

// Non-digit characters count one each; digit runs count ceil(len / 3).
std::int64_t HandCount(const std::string& s) {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      n += static_cast<std::int64_t>((j - i + 2) / 3);
      i = j;
    } else {
      ++n;
      ++i;
    }
  }
  return n;
}

TEST(Encode, Examples) {
  EXPECT_EQ(Encode(FromIndices(32, {0, 1, 2, 5})).text, "0-2,5");
  EXPECT_EQ(Encode(VoxelGrid::Full(32)).text, "0-32767");
  VoxelGrid g(32);
  g.Set({0, 0, 0});
  g.Set({2, 0, 0});
  g.Set({3, 0, 0});
  EXPECT_EQ(Encode(g).text, "0,2-3");
  EXPECT_EQ(Encode(VoxelGrid(32)).text, "");
  EXPECT_EQ(Encode(VoxelGrid(32)).resolution, 32);
}

TEST(Decode, Examples) {
  EXPECT_EQ(Decode({"0-2,5", 32}).Indices(), (std::vector<std::int64_t>{0, 1, 2, 5}));
  EXPECT_TRUE(Decode({"", 32}).Empty());
  ExpectTokenError("5-2", 32, TokenErrorKind::kDescendingRange, "5-2");
  ExpectTokenError("32768", 32, TokenErrorKind::kIndexOutOfBounds, "32768");
}

TEST(Decode, DistinctErrorKinds) {
  ExpectTokenError("5,3", 32, TokenErrorKind::kUnsortedRuns, "3");
  ExpectTokenError("0-5,3-8", 32, TokenErrorKind::kOverlappingRuns, "3-8");
  ExpectTokenError("0-2,3", 32, TokenErrorKind::kAdjacentRuns, "3");
  ExpectTokenError("0-0", 32, TokenErrorKind::kDescendingRange, "0-0");
  ExpectTokenError("1,,2", 32, TokenErrorKind::kMalformedSyntax, "");
  ExpectTokenError("1, 2", 32, TokenErrorKind::kMalformedSyntax, " 2");
  ExpectTokenError("a", 32, TokenErrorKind::kMalformedSyntax, "a");
  ExpectTokenError("1-", 32, TokenErrorKind::kMalformedSyntax, "1-");
  ExpectTokenError("-1", 32, TokenErrorKind::kMalformedSyntax, "-1");
  ExpectTokenError("0-512", 8, TokenErrorKind::kIndexOutOfBounds, "0-512");
}

TEST(Codec, PropertyRoundTripAndMaximality) {
  Rng rng(21);
  const int resolutions[] = {8, 16, 32};
  const double densities[] = {0.01, 0.1, 0.5, 1.0};
  for (int trial = 0; trial < 120; ++trial) {
    const VoxelGrid g =
        testing::RandomGrid(rng, resolutions[trial % 3], densities[trial % 4]);
    const TokenString t = Encode(g);
    ASSERT_EQ(Decode(t), g);
    ASSERT_EQ(t.text, NaiveRuns(g));
    const auto runs = ParseRuns(t.text, t.resolution);
    for (std::size_t i = 1; i < runs.size(); ++i) {
      ASSERT_GT(runs[i].first, runs[i - 1].last + 1);
    }
  }
}

TEST(Codec, PropertyCanonicalTextIsFixedPoint) {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<simready::Run> runs;
    std::int64_t at = testing::UniformInt(rng, 0, 20);
    const int n = testing::UniformInt(rng, 0, 12);
    for (int k = 0; k < n; ++k) {
      const std::int64_t len = testing::UniformInt(rng, 0, 30);
      runs.push_back({at, at + len});
      at += len + testing::UniformInt(rng, 2, 40);
    }
    const std::string s = FormatRuns(runs);
    ASSERT_EQ(ParseRuns(s, 32), runs);
    ASSERT_EQ(Encode(Decode({s, 32})).text, s);
  }
}

TEST(CountTokens, Examples) {
  EXPECT_EQ(CountTokens("0-2,5"), 5);
  EXPECT_EQ(CountTokens(""), 0);
  EXPECT_EQ(CountTokens("0-32767"), 4);
}

TEST(CountTokens, MatchesHandCountOnRandomText) {
  Rng rng(23);
  const std::string alphabet = "0123456789-,. \nvf";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const int len = testing::UniformInt(rng, 0, 60);
    for (int i = 0; i < len; ++i) {
      s += alphabet[testing::UniformInt(rng, 0, static_cast<int>(alphabet.size()) - 1)];
    }
    ASSERT_EQ(CountTokens(s), HandCount(s)) << s;
  }
}

TEST(CountTokens, ModelIsPluggable) {
  EXPECT_EQ(CountTokens("0-32767", {.digit_group = 1}), 7);
  EXPECT_EQ(CountTokens("1 2", {.digit_group = 3, .whitespace_is_token = false}), 2);
}

TEST(CompareRepresentations, OrderingOnBoxes) {
  Rng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec3 lo = testing::RandomPoint(rng, 0.0, 0.5);
    const TriMesh m =
        Normalize(testing::Box(lo, lo + testing::RandomPoint(rng, 0.1, 0.5))).mesh;
    const auto reports = CompareRepresentations(m, 16);
    ASSERT_EQ(reports.size(), 5u);
    EXPECT_EQ(reports[0].representation, Representation::kMeshText);
    EXPECT_EQ(reports[0].ratio, 1.0);
    const auto count = [&](Representation r) {
      return reports[static_cast<int>(r)].tokens;
    };
    EXPECT_LE(count(Representation::kMergedRuns), count(Representation::kIndexList));
    EXPECT_LE(count(Representation::kIndexList), count(Representation::kVoxelCoords));
    EXPECT_EQ(count(Representation::kMeshText), CountTokens(FormatObj(m)));
    const VoxelGrid g = Voxelize(m, 16);
    EXPECT_EQ(count(Representation::kMergedRuns), CountTokens(Encode(g).text));
  }
}

TEST(CompareRepresentations, TextForms) {
  VoxelGrid g(4);
  g.Set({1, 0, 0});
  g.Set({0, 1, 0});
  EXPECT_EQ(VoxelCoordsText(g), "1 0 0\n0 1 0\n");
  EXPECT_EQ(IndexListText(g), "1,4");
  TriMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0.5, 0.26), Vec3(0.99, 0, 1)};
  tri.faces = {{0, 1, 2}};
  EXPECT_EQ(QuantizedMeshText(tri, 4), "v 0 0 0\nv 3 2 1\nv 3 0 3\nf 1 2 3\n");
}

TEST(ReportCsv, Layout) {
  std::vector<TokenReport> r = {{Representation::kMeshText, 100, 1.0},
                                {Representation::kMergedRuns, 8, 12.5}};
  EXPECT_EQ(ReportCsv(r),
            "representation,tokens,ratio\nmesh-text,100,1.000000\n"
            "merged-runs,8,12.500000\n");
}

}  // namespace
}  // namespace simready
