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

// Bit-packed binary codes and linear-scan Hamming ranking.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <vector>

#include "demohash/binary_io.hpp"
#include "demohash/common.hpp"
#include "demohash/hashnet.hpp"

namespace demohash {

inline constexpr std::size_t words_for_bits(std::size_t bits) { return (bits + 63) / 64; }

/// N codes of K bits, ceil(K/64) words each. Bit k of a code lives in word
/// k / 64 at position k % 64; unused high bits of the last word are zero.
class BinaryCodebook {
 public:
  BinaryCodebook() = default;
  BinaryCodebook(std::size_t bits, Modality modality)
      : bits_(bits), words_(words_for_bits(bits)), modality_(modality) {
    if (bits == 0) throw Error(ErrorKind::kConfig, "retrieval-engine", "code length must be > 0");
  }

  std::size_t bits() const { return bits_; }
  std::size_t words_per_code() const { return words_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  Modality modality() const { return modality_; }
  const std::vector<std::uint64_t>& ids() const { return ids_; }
  std::uint64_t id(std::size_t row) const { return ids_[row]; }
  std::span<const std::uint64_t> words() const { return data_; }

  std::span<const std::uint64_t> code(std::size_t row) const {
    return {data_.data() + row * words_, words_};
  }

  bool bit(std::size_t row, std::size_t k) const {
    return (code(row)[k / 64] >> (k % 64)) & 1u;
  }

  void push_back(std::span<const std::uint64_t> code, std::uint64_t id) {
    if (code.size() != words_) {
      throw Error(ErrorKind::kContract, "retrieval-engine", "code word count mismatch");
    }
    if (bits_ % 64 != 0 && (code.back() >> (bits_ % 64)) != 0) {
      throw Error(ErrorKind::kContract, "retrieval-engine", "padding bits must be zero");
    }
    data_.insert(data_.end(), code.begin(), code.end());
    ids_.push_back(id);
  }

  bool operator==(const BinaryCodebook&) const = default;

 private:
  std::size_t bits_ = 0;
  std::size_t words_ = 0;
  Modality modality_ = Modality::kImage;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint64_t> data_;
};

/// Sign-thresholds relaxed codes: bit = 1 iff value > 0, so sgn(0) maps to 0.
/// Sample ids default to the row index.
inline BinaryCodebook binarize(const Matrix& relaxed, Modality modality,
                               std::span<const std::uint64_t> ids = {}) {
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(relaxed.rows())) {
    throw Error(ErrorKind::kContract, "retrieval-engine", "id count differs from code count");
  }
  const auto bits = static_cast<std::size_t>(relaxed.cols());
  BinaryCodebook book(bits, modality);
  std::vector<std::uint64_t> code(book.words_per_code());
  for (Eigen::Index r = 0; r < relaxed.rows(); ++r) {
    std::fill(code.begin(), code.end(), 0);
    for (std::size_t k = 0; k < bits; ++k) {
      if (relaxed(r, static_cast<Eigen::Index>(k)) > 0.0) code[k / 64] |= std::uint64_t{1} << (k % 64);
    }
    book.push_back(code, ids.empty() ? static_cast<std::uint64_t>(r) : ids[static_cast<std::size_t>(r)]);
  }
  return book;
}

inline std::size_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kContract, "retrieval-engine", "hamming: code lengths differ");
  }
  std::size_t d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  return d;
}

struct RankedHit {
  std::uint64_t id = 0;
  std::uint32_t distance = 0;
  bool operator==(const RankedHit&) const = default;
};

/// Ascending distance, ties by ascending id.
using RankedList = std::vector<RankedHit>;

/// Linear-scan ranker over one database codebook. Ranking is a counting sort
/// by distance over rows pre-ordered by id, so ties come out in ascending id
/// order whatever order the database was built in.
class HammingRanker {
 public:
  explicit HammingRanker(const BinaryCodebook& db) : db_(&db) {
    if (db.empty()) throw Error(ErrorKind::kContract, "retrieval-engine", "empty database");
    by_id_.resize(db.size());
    std::iota(by_id_.begin(), by_id_.end(), std::uint32_t{0});
    std::stable_sort(by_id_.begin(), by_id_.end(),
                     [&](auto a, auto b) { return db.id(a) < db.id(b); });
    for (std::size_t k = 1; k < by_id_.size(); ++k) {
      if (db.id(by_id_[k]) == db.id(by_id_[k - 1])) {
        throw Error(ErrorKind::kContract, "retrieval-engine", "duplicate sample id in database");
      }
    }
  }

  const BinaryCodebook& database() const { return *db_; }

  /// Distances to every database row, in row order.
  void distances(std::span<const std::uint64_t> query, std::vector<std::uint32_t>& out) const {
    check_query(query);
    const auto& db = *db_;
    const std::size_t words = db.words_per_code();
    const std::uint64_t* base = db.words().data();
    out.resize(db.size());
    if (words == 1) {
      const std::uint64_t q = query[0];
      for (std::size_t r = 0; r < db.size(); ++r) {
        out[r] = static_cast<std::uint32_t>(std::popcount(q ^ base[r]));
      }
      return;
    }
    if (words == 2) {
      const std::uint64_t q0 = query[0], q1 = query[1];
      for (std::size_t r = 0; r < db.size(); ++r) {
        out[r] = static_cast<std::uint32_t>(std::popcount(q0 ^ base[2 * r]) +
                                            std::popcount(q1 ^ base[2 * r + 1]));
      }
      return;
    }
    for (std::size_t r = 0; r < db.size(); ++r) {
      std::uint32_t d = 0;
      for (std::size_t w = 0; w < words; ++w) {
        d += static_cast<std::uint32_t>(std::popcount(query[w] ^ base[r * words + w]));
      }
      out[r] = d;
    }
  }

  /// Full ranking, or the first top_k entries when top_k > 0.
  RankedList rank(std::span<const std::uint64_t> query, std::size_t top_k = 0) const {
    std::vector<std::uint32_t> dist;
    distances(query, dist);
    const std::size_t k = db_->bits();
    std::vector<std::uint32_t> start(k + 2, 0);
    for (auto d : dist) ++start[d + 1];
    std::partial_sum(start.begin(), start.end(), start.begin());
    RankedList out(db_->size());
    for (auto row : by_id_) {
      out[start[dist[row]]++] = {db_->id(row), dist[row]};
    }
    if (top_k > 0 && top_k < out.size()) out.resize(top_k);
    return out;
  }

 private:
  void check_query(std::span<const std::uint64_t> query) const {
    if (query.size() != db_->words_per_code()) {
      throw Error(ErrorKind::kContract, "retrieval-engine", "query code length differs from database");
    }
  }

  const BinaryCodebook* db_;
  std::vector<std::uint32_t> by_id_;
};

inline RankedList rank_database(std::span<const std::uint64_t> query, const BinaryCodebook& db,
                                std::size_t top_k = 0) {
  return HammingRanker(db).rank(query, top_k);
}

/// Relaxed codes -> packed codebook, through the modality's network.
inline BinaryCodebook encode(const HashNetParams& params, const Matrix& inputs, Modality modality) {
  return binarize(forward(params, inputs, modality), modality);
}

// DEMOBC1: magic, u64 K, u64 N, u8 modality, N*ceil(K/64) u64 words, N u64 ids,
// CRC32 of everything after the magic-and-header.
inline constexpr std::string_view kCodebookMagic = "DEMOBC1";

inline std::vector<std::uint8_t> encode_codebook(const BinaryCodebook& book) {
  io::ByteWriter w;
  w.magic(kCodebookMagic);
  w.u64(book.bits());
  w.u64(book.size());
  w.u8(static_cast<std::uint8_t>(book.modality()));
  const auto payload = w.size();
  w.array(book.words());
  w.array(std::span<const std::uint64_t>(book.ids()));
  w.seal(payload);
  return std::move(w.bytes());
}

inline BinaryCodebook decode_codebook(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "retrieval-engine");
  r.expect_magic(kCodebookMagic);
  const auto bits = r.u64();
  const auto n = r.u64();
  const auto modality = r.u8();
  if (modality > 1) throw Error(ErrorKind::kContract, "retrieval-engine", "unknown modality byte");
  const auto payload = r.position();
  const auto words = words_for_bits(bits);
  if (8.0 * static_cast<double>(n) * static_cast<double>(words + 1) >
      static_cast<double>(r.remaining())) {
    throw Error(ErrorKind::kTruncated, "retrieval-engine", "codebook shorter than its header");
  }
  std::vector<std::uint64_t> data(n * words), ids(n);
  r.array(std::span<std::uint64_t>(data));
  r.array(std::span<std::uint64_t>(ids));
  r.verify_seal(payload);
  BinaryCodebook book(bits, static_cast<Modality>(modality));
  for (std::size_t i = 0; i < n; ++i) {
    book.push_back(std::span<const std::uint64_t>(data.data() + i * words, words), ids[i]);
  }
  return book;
}

inline void write_codebook(const std::filesystem::path& path, const BinaryCodebook& book) {
  io::atomic_write(path, encode_codebook(book), "retrieval-engine");
}

inline BinaryCodebook load_codebook(const std::filesystem::path& path) {
  return decode_codebook(io::read_file(path, "retrieval-engine"));
}

}  // namespace demohash
