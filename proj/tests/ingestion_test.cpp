// Copyright 2026 The demohash Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "demohash/ingestion.hpp"
#include "test_util.hpp"

namespace demohash {
namespace {

FeatureStore tiny_store() {
  SynthConfig cfg;
  cfg.clusters = 2;
  cfg.samples = 4;
  cfg.views = 2;
  cfg.dim_v = 8;
  cfg.dim_t = 5;
  cfg.seed = 11;
  return generate_synthetic(cfg);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected demohash::Error";
  return ErrorKind::kIo;
}

TEST(FeatureStoreFile, RoundTripPreservesShapeAndBits) {
  testing::TempDir dir;
  const auto store = tiny_store();
  write_feature_store(store, dir / "s.dfs");
  const auto loaded = load_feature_store(dir / "s.dfs");
  EXPECT_EQ(loaded.samples, 4u);
  EXPECT_EQ(loaded.views, 2u);
  EXPECT_EQ(loaded.dim_v, 8u);
  EXPECT_EQ(loaded, store);
  EXPECT_EQ(encode_feature_store(loaded), encode_feature_store(store));
}

TEST(FeatureStoreFile, UnlabeledStoreRoundTrips) {
  auto store = tiny_store();
  store.num_labels = 0;
  store.labels.clear();
  const auto loaded = decode_feature_store(encode_feature_store(store));
  EXPECT_FALSE(loaded.has_labels());
  EXPECT_EQ(loaded, store);
}

TEST(FeatureStoreFile, FlippedPayloadByteFailsChecksum) {
  auto bytes = encode_feature_store(tiny_store());
  bytes[8 + 5 * 8 + 3] ^= 0x01;  // inside the first view vector
  EXPECT_EQ(kind_of([&] { decode_feature_store(bytes); }), ErrorKind::kChecksum);
}

TEST(FeatureStoreFile, BadMagicIsRejected) {
  auto bytes = encode_feature_store(tiny_store());
  bytes[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_feature_store(bytes); }), ErrorKind::kBadMagic);
  EXPECT_EQ(kind_of([] { decode_feature_store(std::vector<std::uint8_t>{1, 2}); }),
            ErrorKind::kBadMagic);
}

TEST(FeatureStoreFile, HeaderClaimingMoreRowsIsTruncation) {
  // Header says N=10, payload holds 9 rows.
  SynthConfig cfg;
  cfg.samples = 9;
  cfg.views = 1;
  cfg.dim_v = 4;
  cfg.dim_t = 3;
  cfg.clusters = 2;
  auto bytes = encode_feature_store(generate_synthetic(cfg));
  const std::uint64_t ten = 10;
  std::memcpy(bytes.data() + 8, &ten, sizeof ten);
  EXPECT_EQ(kind_of([&] { decode_feature_store(bytes); }), ErrorKind::kTruncated);
}

TEST(FeatureStoreFile, TrailingGarbageIsTruncation) {
  auto bytes = encode_feature_store(tiny_store());
  bytes.push_back(0);
  EXPECT_EQ(kind_of([&] { decode_feature_store(bytes); }), ErrorKind::kTruncated);
}

TEST(FeatureStoreFile, ZeroVectorNamesOffendingSample) {
  auto store = tiny_store();
  for (auto& x : store.view(2, 1)) x = 0.0f;
  const auto bytes = encode_feature_store(store);
  try {
    decode_feature_store(bytes);
    FAIL() << "expected zero-norm error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kZeroNorm);
    EXPECT_NE(std::string(e.what()).find("sample 2"), std::string::npos) << e.what();
  }
}

TEST(FeatureStoreFile, AllZeroLabelRowIsRejected) {
  auto store = tiny_store();
  for (std::size_t k = 0; k < store.num_labels; ++k) store.labels[1 * store.num_labels + k] = 0;
  EXPECT_EQ(kind_of([&] { decode_feature_store(encode_feature_store(store)); }),
            ErrorKind::kEmptyLabelRow);
}

TEST(FeatureStoreFile, LoadNormalizesVectors) {
  auto store = tiny_store();
  for (auto& x : store.text_row(0)) x *= 3.0f;
  const auto loaded = decode_feature_store(encode_feature_store(store));
  for (std::size_t i = 0; i < loaded.samples; ++i) {
    EXPECT_NEAR(detail::norm_of(loaded.text_row(i)), 1.0, 1e-6);
    for (std::size_t m = 0; m < loaded.views; ++m) {
      EXPECT_NEAR(detail::norm_of(loaded.view(i, m)), 1.0, 1e-6);
    }
  }
}

TEST(FeatureCsv, ParsesHandWrittenFixture) {
  std::istringstream in(
      "# two samples, one view\n"
      "dims,2,1,2,2,2\n"
      "v,0,0,3,4\n"
      "v,1,0,0,2\n"
      "t,0,1,0\n"
      "t,1,0,5\n"
      "l,0,1,0\n"
      "l,1,0,1\n");
  const auto s = parse_feature_csv(in);
  EXPECT_EQ(s.samples, 2u);
  EXPECT_FLOAT_EQ(s.view(0, 0)[0], 0.6f);
  EXPECT_FLOAT_EQ(s.view(0, 0)[1], 0.8f);
  EXPECT_FLOAT_EQ(s.text_row(1)[1], 1.0f);
  EXPECT_EQ(s.label_row(1)[1], 1);
}

TEST(FeatureCsv, MissingRowsAreReported) {
  std::istringstream in("dims,2,1,2,2,0\nv,0,0,1,0\nt,0,1,0\nt,1,0,1\n");
  EXPECT_EQ(kind_of([&] { parse_feature_csv(in); }), ErrorKind::kTruncated);
}

TEST(FeatureCsv, FormatParsesBack) {
  const auto store = tiny_store();
  std::istringstream in(format_feature_csv(store));
  const auto back = parse_feature_csv(in);
  ASSERT_EQ(back.image_views.size(), store.image_views.size());
  for (std::size_t k = 0; k < store.image_views.size(); ++k) {
    EXPECT_NEAR(back.image_views[k], store.image_views[k], 1e-7);
  }
  EXPECT_EQ(back.labels, store.labels);
}

TEST(Synthetic, SameSeedGivesIdenticalBytes) {
  SynthConfig cfg;
  cfg.samples = 50;
  EXPECT_EQ(encode_feature_store(generate_synthetic(cfg)),
            encode_feature_store(generate_synthetic(cfg)));
  SynthConfig other = cfg;
  other.seed = cfg.seed + 1;
  EXPECT_NE(generate_synthetic(cfg), generate_synthetic(other));
}

TEST(Synthetic, NoiseFreeLimitGivesIdenticalSameClusterViews) {
  SynthConfig cfg;
  cfg.clusters = 2;
  cfg.samples = 4;
  cfg.views = 1;
  cfg.dim_v = 16;
  cfg.dim_t = 16;
  cfg.view_noise = 1e-12;
  const auto s = generate_synthetic(cfg);
  auto cluster = [&](std::size_t i) { return s.label_row(i)[0] ? 0 : 1; };
  for (std::size_t i = 0; i < s.samples; ++i) {
    for (std::size_t j = 0; j < s.samples; ++j) {
      if (cluster(i) != cluster(j)) continue;
      const auto a = s.view(i, 0), b = s.view(j, 0);
      EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin())) << i << " vs " << j;
    }
  }
}

TEST(Synthetic, WithinClusterCosineExceedsBetweenCluster) {
  SynthConfig cfg;
  cfg.clusters = 8;
  cfg.samples = 2000;
  cfg.views = 5;
  cfg.dim_v = 64;
  const auto s = generate_synthetic(cfg);
  auto cluster = [&](std::size_t i) {
    const auto row = s.label_row(i);
    return std::find(row.begin(), row.end(), 1) - row.begin();
  };
  // Direct averages over a strided subset of sample pairs, first view.
  double within = 0, between = 0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t i = 0; i < s.samples; i += 7) {
    for (std::size_t j = i + 1; j < s.samples; j += 5) {
      double dot = 0;
      for (std::size_t k = 0; k < s.dim_v; ++k) dot += s.view(i, 0)[k] * s.view(j, 0)[k];
      if (cluster(i) == cluster(j)) {
        within += dot;
        ++nw;
      } else {
        between += dot;
        ++nb;
      }
    }
  }
  ASSERT_GT(nw, 0u);
  ASSERT_GT(nb, 0u);
  EXPECT_GT(within / nw, between / nb);
}

TEST(Synthetic, ConfigValidation) {
  SynthConfig cfg;
  cfg.clusters = 1;
  EXPECT_EQ(kind_of([&] { generate_synthetic(cfg); }), ErrorKind::kConfig);
  cfg.clusters = 2;
  cfg.view_noise = 0.0;
  EXPECT_EQ(kind_of([&] { generate_synthetic(cfg); }), ErrorKind::kConfig);
}

TEST(Slicing, TakeViewsKeepsLeadingViews) {
  const auto s = tiny_store();
  const auto one = take_views(s, 1);
  EXPECT_EQ(one.views, 1u);
  for (std::size_t i = 0; i < s.samples; ++i) {
    const auto a = one.view(i, 0), b = s.view(i, 0);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
  EXPECT_EQ(kind_of([&] { take_views(s, 3); }), ErrorKind::kConfig);
}

}  // namespace
}  // namespace demohash
