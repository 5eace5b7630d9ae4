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

// Energy-distance structure mining.
//
// Each image is represented by M view vectors, treated as draws from the
// image's latent semantic distribution. Two images are compared with the
// two-sample energy statistic
//
//     E(U, V) = 2A - B - C,
//     A = mean_{m,m'} rho(u_m, v_m'),  B = mean rho(u_m, u_m'),  C = mean rho(v_m, v_m'),
//
// with rho(u, v) = 1 - <u, v> (cosine distance on unit vectors). Substituting
// rho, the constant terms cancel and the double sums factor through the view
// means:
//
//     E(U, V) = 2(1 - <u_bar, v_bar>) - (1 - |u_bar|^2) - (1 - |v_bar|^2)
//             = |u_bar - v_bar|^2.
//
// So the O(M^2 d) statistic is computed in O(M d) per sample plus O(d) per
// pair, and it is nonnegative, symmetric and exactly zero on identical sets.
// Pairs with E < tau are declared positives (S = 1); otherwise S blends the
// image-side and text-side cosine similarities with weight alpha.

#pragma once

#include <cmath>
#include <filesystem>
#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "demohash/binary_io.hpp"
#include "demohash/common.hpp"
#include "demohash/ingestion.hpp"

namespace demohash {

inline constexpr double kUnitContractTolerance = 1e-4;

namespace detail {

inline void require_unit(const Eigen::Ref<const Vector>& v, const char* what) {
  const double n = v.norm();
  if (std::abs(n - 1.0) > kUnitContractTolerance) {
    throw Error(ErrorKind::kContract, "structure-mining",
                std::string(what) + " is not unit-norm (norm " + std::to_string(n) + ")");
  }
}

}  // namespace detail

/// Cosine similarity of two unit vectors, i.e. their dot product.
inline double cos_sim(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kContract, "structure-mining", "cos_sim dimension mismatch");
  }
  detail::require_unit(u, "cos_sim lhs");
  detail::require_unit(v, "cos_sim rhs");
  return std::clamp(u.dot(v), -1.0, 1.0);
}

inline double cos_dist(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
  return 1.0 - cos_sim(u, v);
}

/// Energy statistic between two sets of unit vectors, one vector per row.
inline double energy_statistic(const Matrix& u, const Matrix& v) {
  if (u.rows() == 0 || v.rows() == 0) {
    throw Error(ErrorKind::kContract, "structure-mining", "energy statistic of an empty set");
  }
  if (u.cols() != v.cols()) {
    throw Error(ErrorKind::kContract, "structure-mining", "energy statistic dimension mismatch");
  }
  for (Eigen::Index r = 0; r < u.rows(); ++r) detail::require_unit(u.row(r).transpose(), "view");
  for (Eigen::Index r = 0; r < v.rows(); ++r) detail::require_unit(v.row(r).transpose(), "view");
  const Vector ubar = u.colwise().mean().transpose();
  const Vector vbar = v.colwise().mean().transpose();
  return (ubar - vbar).squaredNorm();
}

struct DivergenceMatrix {
  Matrix values;  // symmetric, zero diagonal
};

struct StructureParams {
  double tau = 1.25;
  double alpha = 0.5;

  void validate() const {
    if (!(tau > 0.0)) throw Error(ErrorKind::kConfig, "structure-mining", "tau must be > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw Error(ErrorKind::kConfig, "structure-mining", "alpha must lie in [0, 1]");
    }
  }
};

struct SimilarityStructure {
  Matrix s;
  double tau = 0.0;
  double alpha = 0.0;
};

/// Lower branch of the structure: alpha-blend of the two modality similarities.
inline double blend(double image_sim, double text_sim, double alpha) {
  return alpha * image_sim + (1.0 - alpha) * text_sim;
}

inline double structure_entry(double divergence, double image_sim, double text_sim,
                              const StructureParams& p) {
  return divergence < p.tau ? 1.0 : blend(image_sim, text_sim, p.alpha);
}

/// Per-sample summaries of a FeatureStore from which every pairwise quantity
/// is computed. Full matrices and row blocks are both built from the same
/// per-entry functions, so they agree bit for bit.
class StructureMiner {
 public:
  explicit StructureMiner(const FeatureStore& store) {
    const auto n = static_cast<Eigen::Index>(store.samples);
    means_.resize(n, static_cast<Eigen::Index>(store.dim_v));
    view_dirs_.resize(n, static_cast<Eigen::Index>(store.dim_v));
    texts_.resize(n, static_cast<Eigen::Index>(store.dim_t));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      // Views are summed in ascending m, fixing the reduction order.
      const Vector mean = view_mean(store, si);
      means_.row(i) = mean.transpose();
      const double len = mean.norm();
      if (!(len > 0.0)) {
        throw Error(ErrorKind::kDegenerate, "structure-mining",
                    "view sum of sample " + std::to_string(si) +
                        " has zero norm; its views cancel out");
      }
      view_dirs_.row(i) = (mean / len).transpose();
      texts_.row(i) = unit_double(store.text_row(si)).transpose();
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(means_.rows()); }

  double divergence(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return (means_.row(static_cast<Eigen::Index>(i)) - means_.row(static_cast<Eigen::Index>(j)))
        .squaredNorm();
  }

  double image_similarity(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    return clamp_dot(view_dirs_, i, j);
  }

  double text_similarity(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    return clamp_dot(texts_, i, j);
  }

  double similarity(std::size_t i, std::size_t j, const StructureParams& p) const {
    if (i == j) return 1.0;
    return structure_entry(divergence(i, j), image_similarity(i, j), text_similarity(i, j), p);
  }

  /// Rows [begin, end) of S. Used by the streaming path for N beyond memory.
  Matrix structure_rows(std::size_t begin, std::size_t end, const StructureParams& p) const {
    Matrix block(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(size()));
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < size(); ++j) {
        block(static_cast<Eigen::Index>(i - begin), static_cast<Eigen::Index>(j)) =
            similarity(i, j, p);
      }
    }
    return block;
  }

  template <typename Entry>
  Matrix symmetric(Entry entry, unsigned threads) const {
    const auto n = size();
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry(i, j);
        }
      }
    });
    return out;
  }

 private:
  static double clamp_dot(const Matrix& rows, std::size_t i, std::size_t j) {
    const double d =
        rows.row(static_cast<Eigen::Index>(i)).dot(rows.row(static_cast<Eigen::Index>(j)));
    return std::clamp(d, -1.0, 1.0);
  }

  Matrix means_;
  Matrix view_dirs_;
  Matrix texts_;
};

inline DivergenceMatrix divergence_matrix(const FeatureStore& store, unsigned threads = 1) {
  const StructureMiner miner(store);
  return {miner.symmetric([&](std::size_t i, std::size_t j) { return miner.divergence(i, j); },
                          threads)};
}

/// (S^v, S^t): cosine similarity of re-normalized view sums, and of text embeddings.
inline std::pair<Matrix, Matrix> modality_similarities(const FeatureStore& store,
                                                       unsigned threads = 1) {
  const StructureMiner miner(store);
  return {
      miner.symmetric([&](std::size_t i, std::size_t j) { return miner.image_similarity(i, j); },
                      threads),
      miner.symmetric([&](std::size_t i, std::size_t j) { return miner.text_similarity(i, j); },
                      threads)};
}

inline SimilarityStructure build_structure(const DivergenceMatrix& div, const Matrix& image_sim,
                                           const Matrix& text_sim, double tau, double alpha) {
  const StructureParams p{tau, alpha};
  p.validate();
  const auto n = div.values.rows();
  if (div.values.cols() != n || image_sim.rows() != n || image_sim.cols() != n ||
      text_sim.rows() != n || text_sim.cols() != n) {
    throw Error(ErrorKind::kContract, "structure-mining", "structure inputs are not conformable");
  }
  SimilarityStructure out{Matrix(n, n), tau, alpha};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.s(i, j) = i == j ? 1.0
                           : std::clamp(structure_entry(div.values(i, j), image_sim(i, j),
                                                        text_sim(i, j), p),
                                        -1.0, 1.0);
    }
  }
  return out;
}

/// Full pipeline for one store: divergences, modality similarities, structure.
inline SimilarityStructure mine_structure(const FeatureStore& store, const StructureParams& p,
                                          unsigned threads = 1) {
  p.validate();
  const StructureMiner miner(store);
  return {miner.symmetric([&](std::size_t i, std::size_t j) { return miner.similarity(i, j, p); },
                          threads),
          p.tau, p.alpha};
}

/// Streams S in row blocks of at most `block_rows`, calling sink(first_row, block).
inline void stream_structure(const FeatureStore& store, const StructureParams& p,
                             std::size_t block_rows,
                             const std::function<void(std::size_t, const Matrix&)>& sink) {
  p.validate();
  if (block_rows == 0) throw Error(ErrorKind::kConfig, "structure-mining", "block_rows must be > 0");
  const StructureMiner miner(store);
  for (std::size_t begin = 0; begin < miner.size(); begin += block_rows) {
    const std::size_t end = std::min(miner.size(), begin + block_rows);
    sink(begin, miner.structure_rows(begin, end, p));
  }
}

// DEMOSM1: magic, u64 N, f64 tau, f64 alpha, u64 has_divergence, then S and
// (optionally) the divergence matrix as row-major f64, then CRC32 of payload.
inline constexpr std::string_view kStructureMagic = "DEMOSM1";

inline std::vector<std::uint8_t> encode_structure(const SimilarityStructure& s,
                                                  const DivergenceMatrix* div = nullptr) {
  io::ByteWriter w;
  w.magic(kStructureMagic);
  w.u64(static_cast<std::uint64_t>(s.s.rows()));
  w.f64(s.tau);
  w.f64(s.alpha);
  w.u64(div != nullptr ? 1 : 0);
  const auto payload = w.size();
  w.array(std::span<const double>(s.s.data(), static_cast<std::size_t>(s.s.size())));
  if (div != nullptr) {
    w.array(std::span<const double>(div->values.data(),
                                    static_cast<std::size_t>(div->values.size())));
  }
  w.seal(payload);
  return std::move(w.bytes());
}

struct StructureFile {
  SimilarityStructure structure;
  std::optional<DivergenceMatrix> divergence;
};

inline StructureFile decode_structure(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "structure-mining");
  r.expect_magic(kStructureMagic);
  const auto n = r.u64();
  StructureFile f;
  f.structure.tau = r.f64();
  f.structure.alpha = r.f64();
  const bool has_div = r.u64() != 0;
  const auto payload = r.position();
  const double need = 8.0 * static_cast<double>(n) * static_cast<double>(n) * (has_div ? 2 : 1);
  if (need > static_cast<double>(r.remaining())) {
    throw Error(ErrorKind::kTruncated, "structure-mining", "structure payload shorter than header");
  }
  const auto ni = static_cast<Eigen::Index>(n);
  f.structure.s.resize(ni, ni);
  r.array(std::span<double>(f.structure.s.data(), static_cast<std::size_t>(n * n)));
  if (has_div) {
    DivergenceMatrix d{Matrix(ni, ni)};
    r.array(std::span<double>(d.values.data(), static_cast<std::size_t>(n * n)));
    f.divergence = std::move(d);
  }
  r.verify_seal(payload);
  return f;
}

inline void write_structure(const std::filesystem::path& path, const SimilarityStructure& s,
                            const DivergenceMatrix* div = nullptr) {
  io::atomic_write(path, encode_structure(s, div), "structure-mining");
}

inline StructureFile load_structure(const std::filesystem::path& path) {
  return decode_structure(io::read_file(path, "structure-mining"));
}

}  // namespace demohash
