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

// Little-endian byte buffers, CRC32 framing and atomic file writes shared by
// every on-disk format (DEMOFS1, DEMOSM1, DEMONN1, DEMOBC1).

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "demohash/common.hpp"

namespace demohash::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian and written without byte swapping");

inline constexpr std::size_t kMagicSize = 8;

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large buffers in pieces.
  constexpr std::size_t kPiece = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kPiece) {
    const std::size_t len = std::min(kPiece, bytes.size() - off);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

class ByteWriter {
 public:
  void magic(std::string_view tag) {
    std::array<char, kMagicSize> m{};
    std::memcpy(m.data(), tag.data(), std::min(tag.size(), kMagicSize - 1));
    raw(m.data(), m.size());
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  template <typename T>
  void array(std::span<const T> values) {
    raw(values.data(), values.size_bytes());
  }

  std::size_t size() const { return buf_.size(); }
  std::vector<std::uint8_t>& bytes() { return buf_; }

  /// Appends CRC32 of everything written since byte offset `from`.
  void seal(std::size_t from) {
    u32(crc32(std::span(buf_).subspan(from)));
  }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string module)
      : bytes_(bytes), module_(std::move(module)) {}

  void expect_magic(std::string_view tag) {
    if (bytes_.size() < kMagicSize) {
      throw Error(ErrorKind::kBadMagic, module_, "file shorter than format magic");
    }
    std::array<char, kMagicSize> want{};
    std::memcpy(want.data(), tag.data(), std::min(tag.size(), kMagicSize - 1));
    if (std::memcmp(bytes_.data(), want.data(), kMagicSize) != 0) {
      throw Error(ErrorKind::kBadMagic, module_,
                  "expected magic '" + std::string(tag) + "'");
    }
    pos_ = kMagicSize;
  }

  std::uint8_t u8() { return scalar<std::uint8_t>(); }
  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  std::uint64_t u64() { return scalar<std::uint64_t>(); }
  float f32() { return scalar<float>(); }
  double f64() { return scalar<double>(); }

  template <typename T>
  void array(std::span<T> out) {
    require(out.size_bytes());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  /// Checks that exactly the payload [from, position) plus a trailing CRC32
  /// remain, and that the CRC matches.
  void verify_seal(std::size_t from) {
    if (remaining() != sizeof(std::uint32_t)) {
      throw Error(ErrorKind::kTruncated, module_,
                  "payload length disagrees with header (" + std::to_string(remaining()) +
                      " trailing bytes, expected 4)");
    }
    const auto computed = crc32(bytes_.subspan(from, pos_ - from));
    const auto stored = u32();
    if (computed != stored) {
      throw Error(ErrorKind::kChecksum, module_, "payload CRC32 mismatch");
    }
  }

  /// Guards header-declared sizes before any allocation.
  void require(std::size_t n) const {
    if (n > remaining()) {
      throw Error(ErrorKind::kTruncated, module_,
                  "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                      ", only " + std::to_string(remaining()) + " remain");
    }
  }

 private:
  template <typename T>
  T scalar() {
    require(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::string module_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path,
                                           const std::string& module) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, module, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a partially written artifact.
inline void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes,
                         const std::string& module) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, module, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kIo, module, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, module, "rename to " + path.string() + ": " + ec.message());
}

inline void atomic_write(const std::filesystem::path& path, std::string_view text,
                         const std::string& module) {
  atomic_write(path,
               std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
               module);
}

}  // namespace demohash::io
