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

// Modality-specific two-layer hashing networks:
//
//     code = tanh(W2^T relu(W1^T x + b1) + b2)
//
// Inputs are batched as rows, so a batch X (B x d) maps to codes (B x K).

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "demohash/binary_io.hpp"
#include "demohash/common.hpp"

namespace demohash {

enum class Modality : std::uint8_t { kImage = 0, kText = 1 };

inline std::string_view to_string(Modality m) {
  return m == Modality::kImage ? "image" : "text";
}

struct ModalityNet {
  Matrix w1;  // d x H
  Vector b1;  // H
  Matrix w2;  // H x K
  Vector b2;  // K

  Eigen::Index input_dim() const { return w1.rows(); }
  Eigen::Index hidden() const { return w1.cols(); }
  Eigen::Index bits() const { return w2.cols(); }

  static ModalityNet zeros(Eigen::Index d, Eigen::Index h, Eigen::Index k) {
    return {Matrix::Zero(d, h), Vector::Zero(h), Matrix::Zero(h, k), Vector::Zero(k)};
  }

  ModalityNet& operator+=(const ModalityNet& o) {
    w1 += o.w1;
    b1 += o.b1;
    w2 += o.w2;
    b2 += o.b2;
    return *this;
  }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  bool operator==(const ModalityNet& o) const {
    return w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

struct HashNetParams {
  ModalityNet image;
  ModalityNet text;

  const ModalityNet& net(Modality m) const { return m == Modality::kImage ? image : text; }
  ModalityNet& net(Modality m) { return m == Modality::kImage ? image : text; }
  Eigen::Index bits() const { return image.bits(); }
  Eigen::Index hidden() const { return image.hidden(); }

  bool operator==(const HashNetParams&) const = default;
};

struct NetShape {
  std::size_t dim_v = 0;
  std::size_t dim_t = 0;
  std::size_t hidden = 512;
  std::size_t bits = 16;
};

/// Weights uniform in +-1/sqrt(fan_in), biases zero.
inline HashNetParams init_params(const NetShape& shape, std::uint64_t seed) {
  if (shape.dim_v == 0 || shape.dim_t == 0 || shape.hidden == 0 || shape.bits == 0) {
    throw Error(ErrorKind::kConfig, "hashing-network", "network dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  auto layer = [&](std::size_t fan_in, std::size_t fan_out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
    return w;
  };
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  const auto k = static_cast<Eigen::Index>(shape.bits);
  HashNetParams p;
  p.image.w1 = layer(shape.dim_v, shape.hidden);
  p.image.b1 = Vector::Zero(h);
  p.image.w2 = layer(shape.hidden, shape.bits);
  p.image.b2 = Vector::Zero(k);
  p.text.w1 = layer(shape.dim_t, shape.hidden);
  p.text.b1 = Vector::Zero(h);
  p.text.w2 = layer(shape.hidden, shape.bits);
  p.text.b2 = Vector::Zero(k);
  return p;
}

/// Activations kept for the backward pass.
struct ForwardCache {
  Matrix input;       // B x d
  Matrix pre_hidden;  // B x H
  Matrix hidden;      // B x H, relu(pre_hidden)
  Matrix codes;       // B x K, tanh output
};

inline ForwardCache forward_cached(const ModalityNet& net, const Matrix& x) {
  if (x.cols() != net.input_dim()) {
    throw Error(ErrorKind::kContract, "hashing-network",
                "input has " + std::to_string(x.cols()) + " features, network expects " +
                    std::to_string(net.input_dim()));
  }
  ForwardCache c;
  c.input = x;
  c.pre_hidden = (x * net.w1).rowwise() + net.b1.transpose();
  c.hidden = c.pre_hidden.cwiseMax(0.0);
  c.codes = ((c.hidden * net.w2).rowwise() + net.b2.transpose()).array().tanh().matrix();
  return c;
}

/// Relaxed codes in (-1, 1) for a batch of inputs.
inline Matrix forward(const HashNetParams& params, const Matrix& x, Modality modality) {
  return forward_cached(params.net(modality), x).codes;
}

/// Parameter gradients given dL/dcodes.
inline ModalityNet backward(const ModalityNet& net, const ForwardCache& c, const Matrix& dcodes) {
  const Matrix dz2 = dcodes.cwiseProduct((1.0 - c.codes.array().square()).matrix());
  ModalityNet g;
  g.w2 = c.hidden.transpose() * dz2;
  g.b2 = dz2.colwise().sum().transpose();
  const Matrix dhidden = dz2 * net.w2.transpose();
  const Matrix dz1 =
      (c.pre_hidden.array() > 0.0).select(dhidden, Matrix::Zero(dhidden.rows(), dhidden.cols()));
  g.w1 = c.input.transpose() * dz1;
  g.b1 = dz1.colwise().sum().transpose();
  return g;
}

// DEMONN1: magic, u64 d_v, d_t, H, K, then f64 tensors (image W1 b1 W2 b2,
// text W1 b1 W2 b2, each row-major), then CRC32 of the tensor payload.
inline constexpr std::string_view kCheckpointMagic = "DEMONN1";

inline std::vector<std::uint8_t> encode_checkpoint(const HashNetParams& p) {
  io::ByteWriter w;
  w.magic(kCheckpointMagic);
  w.u64(static_cast<std::uint64_t>(p.image.input_dim()));
  w.u64(static_cast<std::uint64_t>(p.text.input_dim()));
  w.u64(static_cast<std::uint64_t>(p.hidden()));
  w.u64(static_cast<std::uint64_t>(p.bits()));
  const auto payload = w.size();
  for (const auto* net : {&p.image, &p.text}) {
    w.array(std::span<const double>(net->w1.data(), static_cast<std::size_t>(net->w1.size())));
    w.array(std::span<const double>(net->b1.data(), static_cast<std::size_t>(net->b1.size())));
    w.array(std::span<const double>(net->w2.data(), static_cast<std::size_t>(net->w2.size())));
    w.array(std::span<const double>(net->b2.data(), static_cast<std::size_t>(net->b2.size())));
  }
  w.seal(payload);
  return std::move(w.bytes());
}

inline HashNetParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "hashing-network");
  r.expect_magic(kCheckpointMagic);
  NetShape shape;
  shape.dim_v = r.u64();
  shape.dim_t = r.u64();
  shape.hidden = r.u64();
  shape.bits = r.u64();
  const auto payload = r.position();
  const double doubles = static_cast<double>(shape.hidden) *
                             (static_cast<double>(shape.dim_v + shape.dim_t) + 2.0 +
                              2.0 * static_cast<double>(shape.bits)) +
                         2.0 * static_cast<double>(shape.bits);
  if (8.0 * doubles > static_cast<double>(r.remaining())) {
    throw Error(ErrorKind::kTruncated, "hashing-network", "checkpoint shorter than its header");
  }
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  const auto k = static_cast<Eigen::Index>(shape.bits);
  HashNetParams p{ModalityNet::zeros(static_cast<Eigen::Index>(shape.dim_v), h, k),
                  ModalityNet::zeros(static_cast<Eigen::Index>(shape.dim_t), h, k)};
  for (auto* net : {&p.image, &p.text}) {
    r.array(std::span<double>(net->w1.data(), static_cast<std::size_t>(net->w1.size())));
    r.array(std::span<double>(net->b1.data(), static_cast<std::size_t>(net->b1.size())));
    r.array(std::span<double>(net->w2.data(), static_cast<std::size_t>(net->w2.size())));
    r.array(std::span<double>(net->b2.data(), static_cast<std::size_t>(net->b2.size())));
  }
  r.verify_seal(payload);
  if (!p.image.all_finite() || !p.text.all_finite()) {
    throw Error(ErrorKind::kNonFinite, "hashing-network", "checkpoint holds non-finite weights");
  }
  return p;
}

inline void write_checkpoint(const std::filesystem::path& path, const HashNetParams& p) {
  io::atomic_write(path, encode_checkpoint(p), "hashing-network");
}

inline HashNetParams load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path, "hashing-network"));
}

}  // namespace demohash
