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

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "demohash/binary_io.hpp"
#include "demohash/common.hpp"

namespace demohash {

/// Per-sample features for both modalities. Samples are identified by their
/// row index. Storage is float32 to match the DEMOFS1 payload exactly; the
/// numeric modules promote to double when they read it.
struct FeatureStore {
  std::size_t samples = 0;
  std::size_t views = 0;
  std::size_t dim_v = 0;
  std::size_t dim_t = 0;
  std::size_t num_labels = 0;  // 0 means unlabeled

  std::vector<float> image_views;   // samples x views x dim_v
  std::vector<float> text;          // samples x dim_t
  std::vector<std::uint8_t> labels; // samples x num_labels, 0/1

  bool has_labels() const { return num_labels > 0; }

  std::span<const float> view(std::size_t i, std::size_t m) const {
    return {image_views.data() + (i * views + m) * dim_v, dim_v};
  }
  std::span<float> view(std::size_t i, std::size_t m) {
    return {image_views.data() + (i * views + m) * dim_v, dim_v};
  }
  std::span<const float> text_row(std::size_t i) const {
    return {text.data() + i * dim_t, dim_t};
  }
  std::span<float> text_row(std::size_t i) {
    return {text.data() + i * dim_t, dim_t};
  }
  std::span<const std::uint8_t> label_row(std::size_t i) const {
    return {labels.data() + i * num_labels, num_labels};
  }

  bool operator==(const FeatureStore&) const = default;
};

inline constexpr std::string_view kFeatureMagic = "DEMOFS1";
inline constexpr double kUnitTolerance = 1e-6;

namespace detail {

inline double norm_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

inline void normalize_row(std::span<float> v, const std::string& what) {
  const double n = norm_of(v);
  if (n == 0.0 || !std::isfinite(n)) {
    throw Error(ErrorKind::kZeroNorm, "ingestion", what + " has zero or non-finite norm");
  }
  if (std::abs(n - 1.0) <= kUnitTolerance) return;
  for (auto& x : v) x = static_cast<float>(x / n);
}

}  // namespace detail

/// Unit-normalizes every vector that is not already unit within tolerance and
/// checks the remaining structural invariants. Already-normalized rows are
/// left untouched so a write/load cycle is bit-exact.
inline void normalize_and_validate(FeatureStore& store) {
  if (store.samples < 2) throw Error(ErrorKind::kContract, "ingestion", "need at least 2 samples");
  if (store.views < 1 || store.dim_v < 1 || store.dim_t < 1) {
    throw Error(ErrorKind::kContract, "ingestion", "views, dim_v and dim_t must be positive");
  }
  if (store.image_views.size() != store.samples * store.views * store.dim_v ||
      store.text.size() != store.samples * store.dim_t ||
      store.labels.size() != store.samples * store.num_labels) {
    throw Error(ErrorKind::kContract, "ingestion", "tensor sizes disagree with dimensions");
  }
  for (std::size_t i = 0; i < store.samples; ++i) {
    for (std::size_t m = 0; m < store.views; ++m) {
      detail::normalize_row(store.view(i, m),
                            "image view (sample " + std::to_string(i) + ", view " +
                                std::to_string(m) + ")");
    }
    detail::normalize_row(store.text_row(i), "text embedding (sample " + std::to_string(i) + ")");
    if (store.has_labels()) {
      const auto row = store.label_row(i);
      bool any = false;
      for (auto b : row) {
        if (b > 1) {
          throw Error(ErrorKind::kContract, "ingestion",
                      "label byte outside {0,1} at sample " + std::to_string(i));
        }
        any = any || b != 0;
      }
      if (!any) {
        throw Error(ErrorKind::kEmptyLabelRow, "ingestion",
                    "label row of sample " + std::to_string(i) + " is all zeros");
      }
    }
  }
}

inline std::vector<std::uint8_t> encode_feature_store(const FeatureStore& store) {
  io::ByteWriter w;
  w.magic(kFeatureMagic);
  w.u64(store.samples);
  w.u64(store.views);
  w.u64(store.dim_v);
  w.u64(store.dim_t);
  w.u64(store.num_labels);
  const auto payload = w.size();
  w.array(std::span<const float>(store.image_views));
  w.array(std::span<const float>(store.text));
  w.array(std::span<const std::uint8_t>(store.labels));
  w.seal(payload);
  return std::move(w.bytes());
}

inline FeatureStore decode_feature_store(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "ingestion");
  r.expect_magic(kFeatureMagic);
  FeatureStore s;
  s.samples = r.u64();
  s.views = r.u64();
  s.dim_v = r.u64();
  s.dim_t = r.u64();
  s.num_labels = r.u64();
  const auto payload = r.position();
  // Size checks in bytes before allocating, so a corrupt header cannot request
  // an absurd buffer.
  const double declared = 4.0 * s.samples * s.views * s.dim_v + 4.0 * s.samples * s.dim_t +
                          1.0 * s.samples * s.num_labels;
  if (declared > static_cast<double>(r.remaining())) {
    throw Error(ErrorKind::kTruncated, "ingestion",
                "header declares " + std::to_string(static_cast<std::uint64_t>(declared)) +
                    " payload bytes, file holds " + std::to_string(r.remaining()));
  }
  s.image_views.resize(s.samples * s.views * s.dim_v);
  s.text.resize(s.samples * s.dim_t);
  s.labels.resize(s.samples * s.num_labels);
  r.array(std::span<float>(s.image_views));
  r.array(std::span<float>(s.text));
  r.array(std::span<std::uint8_t>(s.labels));
  r.verify_seal(payload);
  normalize_and_validate(s);
  return s;
}

inline void write_feature_store(const FeatureStore& store, const std::filesystem::path& path) {
  io::atomic_write(path, encode_feature_store(store), "ingestion");
}

inline FeatureStore load_feature_store(const std::filesystem::path& path) {
  return decode_feature_store(io::read_file(path, "ingestion"));
}

// CSV form, intended for tiny hand-written fixtures:
//
//   # comment lines start with '#'
//   dims,N,M,d_v,d_t,L
//   v,<sample>,<view>,x_1,...,x_{d_v}
//   t,<sample>,x_1,...,x_{d_t}
//   l,<sample>,b_1,...,b_L
//
// Every (sample, view) row and every text row must appear exactly once; label
// rows are required when L > 0.
inline FeatureStore parse_feature_csv(std::istream& in) {
  auto fail = [](std::size_t line, const std::string& msg) {
    return Error(ErrorKind::kContract, "ingestion",
                 "csv line " + std::to_string(line) + ": " + msg);
  };
  FeatureStore s;
  bool have_dims = false;
  std::vector<std::uint8_t> seen_views, seen_text, seen_labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    auto to_u = [&](std::size_t k) -> std::size_t {
      if (k >= cells.size()) throw fail(lineno, "missing field");
      try {
        return std::stoull(cells[k]);
      } catch (const std::exception&) {
        throw fail(lineno, "bad integer '" + cells[k] + "'");
      }
    };
    auto to_f = [&](std::size_t k) -> float {
      try {
        return std::stof(cells[k]);
      } catch (const std::exception&) {
        throw fail(lineno, "bad number '" + cells[k] + "'");
      }
    };
    const std::string& kind = cells.at(0);
    if (kind == "dims") {
      s.samples = to_u(1);
      s.views = to_u(2);
      s.dim_v = to_u(3);
      s.dim_t = to_u(4);
      s.num_labels = to_u(5);
      s.image_views.assign(s.samples * s.views * s.dim_v, 0.0f);
      s.text.assign(s.samples * s.dim_t, 0.0f);
      s.labels.assign(s.samples * s.num_labels, 0);
      seen_views.assign(s.samples * s.views, 0);
      seen_text.assign(s.samples, 0);
      seen_labels.assign(s.samples, 0);
      have_dims = true;
      continue;
    }
    if (!have_dims) throw fail(lineno, "'dims' row must come first");
    const std::size_t i = to_u(1);
    if (i >= s.samples) throw fail(lineno, "sample index out of range");
    if (kind == "v") {
      const std::size_t m = to_u(2);
      if (m >= s.views) throw fail(lineno, "view index out of range");
      if (cells.size() != 3 + s.dim_v) throw fail(lineno, "expected d_v values");
      auto row = s.view(i, m);
      for (std::size_t k = 0; k < s.dim_v; ++k) row[k] = to_f(3 + k);
      seen_views[i * s.views + m] = 1;
    } else if (kind == "t") {
      if (cells.size() != 2 + s.dim_t) throw fail(lineno, "expected d_t values");
      auto row = s.text_row(i);
      for (std::size_t k = 0; k < s.dim_t; ++k) row[k] = to_f(2 + k);
      seen_text[i] = 1;
    } else if (kind == "l") {
      if (cells.size() != 2 + s.num_labels) throw fail(lineno, "expected L label values");
      for (std::size_t k = 0; k < s.num_labels; ++k) {
        s.labels[i * s.num_labels + k] = static_cast<std::uint8_t>(to_u(2 + k));
      }
      seen_labels[i] = 1;
    } else {
      throw fail(lineno, "unknown row kind '" + kind + "'");
    }
  }
  if (!have_dims) throw Error(ErrorKind::kTruncated, "ingestion", "csv has no 'dims' row");
  auto all = [](const std::vector<std::uint8_t>& v) {
    return std::all_of(v.begin(), v.end(), [](auto b) { return b != 0; });
  };
  if (!all(seen_views) || !all(seen_text) || (s.has_labels() && !all(seen_labels))) {
    throw Error(ErrorKind::kTruncated, "ingestion", "csv is missing rows declared by 'dims'");
  }
  normalize_and_validate(s);
  return s;
}

inline std::string format_feature_csv(const FeatureStore& s) {
  std::ostringstream out;
  out.precision(9);
  out << "dims," << s.samples << ',' << s.views << ',' << s.dim_v << ',' << s.dim_t << ','
      << s.num_labels << '\n';
  for (std::size_t i = 0; i < s.samples; ++i) {
    for (std::size_t m = 0; m < s.views; ++m) {
      out << "v," << i << ',' << m;
      for (float x : s.view(i, m)) out << ',' << x;
      out << '\n';
    }
    out << "t," << i;
    for (float x : s.text_row(i)) out << ',' << x;
    out << '\n';
    if (s.has_labels()) {
      out << "l," << i;
      for (auto b : s.label_row(i)) out << ',' << int(b);
      out << '\n';
    }
  }
  return out.str();
}

/// Loads either format, chosen by extension (".csv" is CSV, anything else is
/// DEMOFS1).
inline FeatureStore load_features_any(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::kIo, "ingestion", "cannot open " + path.string());
    return parse_feature_csv(in);
  }
  return load_feature_store(path);
}

/// Restricts a store to a contiguous range of samples.
inline FeatureStore slice_samples(const FeatureStore& s, std::size_t first, std::size_t count) {
  if (first + count > s.samples) throw Error(ErrorKind::kContract, "ingestion", "slice out of range");
  FeatureStore out = s;
  out.samples = count;
  const auto vstride = s.views * s.dim_v;
  out.image_views.assign(s.image_views.begin() + first * vstride,
                         s.image_views.begin() + (first + count) * vstride);
  out.text.assign(s.text.begin() + first * s.dim_t, s.text.begin() + (first + count) * s.dim_t);
  out.labels.assign(s.labels.begin() + first * s.num_labels,
                    s.labels.begin() + (first + count) * s.num_labels);
  return out;
}

/// Keeps only the first `views` view vectors of each sample.
inline FeatureStore take_views(const FeatureStore& s, std::size_t views) {
  if (views < 1 || views > s.views) {
    throw Error(ErrorKind::kConfig, "ingestion",
                "requested " + std::to_string(views) + " views, store has " +
                    std::to_string(s.views));
  }
  FeatureStore out = s;
  out.views = views;
  out.image_views.clear();
  out.image_views.reserve(s.samples * views * s.dim_v);
  for (std::size_t i = 0; i < s.samples; ++i) {
    for (std::size_t m = 0; m < views; ++m) {
      const auto row = s.view(i, m);
      out.image_views.insert(out.image_views.end(), row.begin(), row.end());
    }
  }
  return out;
}

/// Double-precision copy of a float row, re-normalized to unit length.
inline Vector unit_double(std::span<const float> row) {
  Vector v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t k = 0; k < row.size(); ++k) v[static_cast<Eigen::Index>(k)] = row[k];
  const double n = v.norm();
  if (n == 0.0) throw Error(ErrorKind::kZeroNorm, "ingestion", "zero-norm row");
  return v / n;
}

/// Arithmetic mean of the unit (double) view vectors of sample i.
inline Vector view_mean(const FeatureStore& s, std::size_t i) {
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(s.dim_v));
  for (std::size_t m = 0; m < s.views; ++m) mean += unit_double(s.view(i, m));
  return mean / static_cast<double>(s.views);
}

/// Image-side network input: the re-normalized view mean.
inline Matrix image_inputs(const FeatureStore& s) {
  Matrix x(static_cast<Eigen::Index>(s.samples), static_cast<Eigen::Index>(s.dim_v));
  for (std::size_t i = 0; i < s.samples; ++i) {
    const Vector mean = view_mean(s, i);
    const double n = mean.norm();
    if (n == 0.0) {
      throw Error(ErrorKind::kDegenerate, "ingestion",
                  "view mean of sample " + std::to_string(i) + " has zero norm");
    }
    x.row(static_cast<Eigen::Index>(i)) = (mean / n).transpose();
  }
  return x;
}

inline Matrix text_inputs(const FeatureStore& s) {
  Matrix x(static_cast<Eigen::Index>(s.samples), static_cast<Eigen::Index>(s.dim_t));
  for (std::size_t i = 0; i < s.samples; ++i) {
    x.row(static_cast<Eigen::Index>(i)) = unit_double(s.text_row(i)).transpose();
  }
  return x;
}

struct SynthConfig {
  std::size_t clusters = 8;
  std::size_t samples = 1000;
  std::size_t views = 5;
  std::size_t dim_v = 64;
  std::size_t dim_t = 64;
  double between = 1.0;     // per-coordinate std of cluster centers
  double view_noise = 0.8;  // per-coordinate std of view / text noise
  std::uint64_t seed = 7;

  void validate() const {
    if (clusters < 2) throw Error(ErrorKind::kConfig, "ingestion", "synthetic: clusters must be >= 2");
    if (samples < 2) throw Error(ErrorKind::kConfig, "ingestion", "synthetic: samples must be >= 2");
    if (views < 1 || dim_v < 1 || dim_t < 1) {
      throw Error(ErrorKind::kConfig, "ingestion", "synthetic: views and dims must be positive");
    }
    if (!(view_noise > 0.0)) throw Error(ErrorKind::kConfig, "ingestion", "synthetic: view noise must be > 0");
    if (!(between > 0.0)) throw Error(ErrorKind::kConfig, "ingestion", "synthetic: cluster spread must be > 0");
  }
};

/// Gaussian clusters in two independent spaces. Sample i draws a cluster c_i;
/// each image view is the image-space center of c_i plus noise, and its text
/// embedding is the text-space center of c_i plus noise. Labels are one-hot c_i.
///
/// Centers are Gaussian draws, orthogonalized when the dimension allows it
/// (clusters <= dim), and scaled to norm between * sqrt(dim), so cluster
/// separation does not depend on chance correlations between centers.
inline FeatureStore generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.clusters - 1);

  auto centers = [&](std::size_t dim) {
    std::vector<std::vector<double>> c(cfg.clusters, std::vector<double>(dim));
    const bool orthogonal = cfg.clusters <= dim;
    const double target = cfg.between * std::sqrt(static_cast<double>(dim));
    for (std::size_t k = 0; k < c.size(); ++k) {
      auto& row = c[k];
      for (auto& x : row) x = gauss(rng);
      if (orthogonal) {
        for (std::size_t p = 0; p < k; ++p) {
          double dot = 0.0, pp = 0.0;
          for (std::size_t t = 0; t < dim; ++t) {
            dot += row[t] * c[p][t];
            pp += c[p][t] * c[p][t];
          }
          for (std::size_t t = 0; t < dim; ++t) row[t] -= dot / pp * c[p][t];
        }
      }
      double sq = 0.0;
      for (double x : row) sq += x * x;
      const double scale = target / std::sqrt(sq);
      for (auto& x : row) x *= scale;
    }
    return c;
  };
  const auto image_centers = centers(cfg.dim_v);
  const auto text_centers = centers(cfg.dim_t);

  FeatureStore s;
  s.samples = cfg.samples;
  s.views = cfg.views;
  s.dim_v = cfg.dim_v;
  s.dim_t = cfg.dim_t;
  s.num_labels = cfg.clusters;
  s.image_views.resize(s.samples * s.views * s.dim_v);
  s.text.resize(s.samples * s.dim_t);
  s.labels.assign(s.samples * s.num_labels, 0);

  auto fill = [&](std::span<float> out, const std::vector<double>& center) {
    std::vector<double> v(center.size());
    double sq = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = center[k] + cfg.view_noise * gauss(rng);
      sq += v[k] * v[k];
    }
    const double n = std::sqrt(sq);
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(v[k] / n);
  };

  for (std::size_t i = 0; i < s.samples; ++i) {
    const std::size_t c = pick(rng);
    for (std::size_t m = 0; m < s.views; ++m) fill(s.view(i, m), image_centers[c]);
    fill(s.text_row(i), text_centers[c]);
    s.labels[i * s.num_labels + c] = 1;
  }
  normalize_and_validate(s);
  return s;
}

}  // namespace demohash
