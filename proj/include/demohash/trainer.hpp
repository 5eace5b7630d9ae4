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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "demohash/common.hpp"
#include "demohash/hashnet.hpp"
#include "demohash/ingestion.hpp"
#include "demohash/losses.hpp"
#include "demohash/structure.hpp"

namespace demohash {

struct TrainConfig {
  std::size_t bits = 16;
  std::size_t hidden = 512;
  double learning_rate = 1e-3;
  double momentum = 0.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  LossConfig loss;
  // Stop once the mean loss of the last 10 epochs improves on the previous 10
  // by less than this. Zero disables early stopping.
  double early_stop_delta = 0.0;
  std::uint64_t seed = 7;

  void validate() const {
    if (batch_size < 2) throw Error(ErrorKind::kConfig, "hashing-network", "batch size must be >= 2");
    if (bits == 0 || hidden == 0) {
      throw Error(ErrorKind::kConfig, "hashing-network", "bits and hidden width must be positive");
    }
    if (!(loss.retrieval.temperature > 0.0)) {
      throw Error(ErrorKind::kConfig, "hashing-network", "temperature must be > 0");
    }
    if (!(learning_rate > 0.0)) {
      throw Error(ErrorKind::kConfig, "hashing-network", "learning rate must be > 0");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
      throw Error(ErrorKind::kConfig, "hashing-network", "momentum must lie in [0, 1)");
    }
  }
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double guided = 0.0;
  double retrieval = 0.0;
  double cooccurrence = 0.0;
  double total = 0.0;
};

struct TrainResult {
  HashNetParams params;
  std::vector<EpochLoss> trace;
};

inline std::string format_loss_trace(const std::vector<EpochLoss>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,L_gui,L_ret,L_co,total\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << e.guided << ',' << e.retrieval << ',' << e.cooccurrence << ','
        << e.total << '\n';
  }
  return out.str();
}

namespace detail {

inline Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

inline Matrix gather_block(const Matrix& s, std::span<const std::size_t> idx) {
  const auto b = static_cast<Eigen::Index>(idx.size());
  Matrix out(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      out(i, j) = s(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

inline void check_finite(const TotalLoss& l, std::size_t epoch, std::size_t batch) {
  const std::pair<const char*, double> terms[] = {
      {"L_gui", l.guided}, {"L_ret", l.retrieval}, {"L_co", l.cooccurrence}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::kNonFinite, "hashing-network",
                  std::string(name) + " is not finite at epoch " + std::to_string(epoch) +
                      ", batch " + std::to_string(batch) +
                      "; lower the learning rate or check the inputs");
    }
  }
}

}  // namespace detail

/// Parameter gradients of the weighted total loss on one batch.
struct BatchGradient {
  TotalLoss loss;
  HashNetParams grad;
};

inline BatchGradient batch_gradient(const HashNetParams& params, const Matrix& image_x,
                                    const Matrix& text_x, const Matrix& s_block,
                                    const LossConfig& cfg,
                                    const RetrievalTargets* fixed_targets = nullptr) {
  const auto fv = forward_cached(params.image, image_x);
  const auto ft = forward_cached(params.text, text_x);
  BatchGradient out;
  out.loss = total_loss(fv.codes, ft.codes, s_block, cfg, fixed_targets);
  out.grad.image = backward(params.image, fv, out.loss.grad_image);
  out.grad.text = backward(params.text, ft, out.loss.grad_text);
  return out;
}

/// Mini-batch SGD over shuffled batches. Image input is the re-normalized
/// view mean; text input is the text embedding. Deterministic for a fixed seed.
inline TrainResult train(const FeatureStore& store, const SimilarityStructure& structure,
                         const TrainConfig& cfg) {
  cfg.validate();
  const auto n = store.samples;
  if (static_cast<std::size_t>(structure.s.rows()) != n ||
      static_cast<std::size_t>(structure.s.cols()) != n) {
    throw Error(ErrorKind::kContract, "hashing-network",
                "structure is " + std::to_string(structure.s.rows()) + "x" +
                    std::to_string(structure.s.cols()) + " but the store has " +
                    std::to_string(n) + " samples");
  }
  const Matrix image_x = image_inputs(store);
  const Matrix text_x = text_inputs(store);

  TrainResult result;
  result.params = init_params({store.dim_v, store.dim_t, cfg.hidden, cfg.bits}, cfg.seed);
  auto& params = result.params;
  HashNetParams velocity{
      ModalityNet::zeros(params.image.input_dim(), params.hidden(), params.bits()),
      ModalityNet::zeros(params.text.input_dim(), params.hidden(), params.bits())};

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto step = [&](ModalityNet& p, ModalityNet& v, const ModalityNet& g) {
    const double lr = cfg.learning_rate;
    const double mu = cfg.momentum;
    v.w1 = mu * v.w1 + g.w1;
    v.b1 = mu * v.b1 + g.b1;
    v.w2 = mu * v.w2 + g.w2;
    v.b2 = mu * v.b2 + g.b2;
    p.w1 -= lr * v.w1;
    p.b1 -= lr * v.b1;
    p.w2 -= lr * v.w2;
    p.b2 -= lr * v.b2;
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss sum{epoch};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      if (end - start < 2) break;  // a singleton tail has no pairs
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      BatchGradient g;
      try {
        g = batch_gradient(params, detail::gather_rows(image_x, idx),
                           detail::gather_rows(text_x, idx),
                           detail::gather_block(structure.s, idx), cfg.loss);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNonFinite) throw;
        throw Error(ErrorKind::kNonFinite, "hashing-network",
                    std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batches) + "; lower the learning rate or check the inputs");
      }
      detail::check_finite(g.loss, epoch, batches);
      step(params.image, velocity.image, g.grad.image);
      step(params.text, velocity.text, g.grad.text);
      sum.guided += g.loss.guided;
      sum.retrieval += g.loss.retrieval;
      sum.cooccurrence += g.loss.cooccurrence;
      sum.total += g.loss.total;
      ++batches;
    }
    const double inv = batches > 0 ? 1.0 / static_cast<double>(batches) : 0.0;
    sum.guided *= inv;
    sum.retrieval *= inv;
    sum.cooccurrence *= inv;
    sum.total *= inv;
    result.trace.push_back(sum);

    if (cfg.early_stop_delta > 0.0 && result.trace.size() >= 20) {
      auto window_mean = [&](std::size_t from) {
        double s = 0.0;
        for (std::size_t k = from; k < from + 10; ++k) s += result.trace[k].total;
        return s / 10.0;
      };
      const auto t = result.trace.size();
      if (window_mean(t - 20) - window_mean(t - 10) < cfg.early_stop_delta) break;
    }
  }
  return result;
}

/// Which objective the gradient checker differentiates.
enum class LossTerm { kGuided, kRetrieval, kCooccurrence, kTotal };

inline LossConfig isolate(const LossConfig& base, LossTerm term) {
  LossConfig cfg = base;
  switch (term) {
    case LossTerm::kGuided: cfg.weights = {1.0, 0.0, 0.0}; break;
    case LossTerm::kRetrieval: cfg.weights = {0.0, 1.0, 0.0}; break;
    case LossTerm::kCooccurrence: cfg.weights = {0.0, 0.0, 1.0}; break;
    case LossTerm::kTotal: break;
  }
  return cfg;
}

/// Max relative error between analytic parameter gradients and central finite
/// differences with step h. Retrieval targets are frozen at the unperturbed
/// parameters, matching the gradient-free treatment of the sharpened targets.
/// Relative error is |a - f| / max(|a|, |f|, floor).
inline double gradient_check(const HashNetParams& params, const Matrix& image_x,
                             const Matrix& text_x, const Matrix& s_block, const LossConfig& base,
                             LossTerm term, double h = 1e-5, double floor = 1e-6) {
  const LossConfig cfg = isolate(base, term);
  const Matrix codes_v = forward(params, image_x, Modality::kImage);
  const Matrix codes_t = forward(params, text_x, Modality::kText);
  const RetrievalTargets targets =
      retrieval_targets(retrieval_distributions(codes_v, codes_t), cfg.retrieval);
  const auto analytic = batch_gradient(params, image_x, text_x, s_block, cfg, &targets);

  HashNetParams probe = params;
  auto objective = [&] {
    const Matrix v = forward(probe, image_x, Modality::kImage);
    const Matrix t = forward(probe, text_x, Modality::kText);
    return total_loss(v, t, s_block, cfg, &targets).total;
  };

  double worst = 0.0;
  auto sweep = [&](double* values, const double* grads, Eigen::Index count) {
    for (Eigen::Index k = 0; k < count; ++k) {
      const double saved = values[k];
      values[k] = saved + h;
      const double up = objective();
      values[k] = saved - h;
      const double down = objective();
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  };
  for (auto m : {Modality::kImage, Modality::kText}) {
    auto& p = probe.net(m);
    const auto& g = analytic.grad.net(m);
    sweep(p.w1.data(), g.w1.data(), p.w1.size());
    sweep(p.b1.data(), g.b1.data(), p.b1.size());
    sweep(p.w2.data(), g.w2.data(), p.w2.size());
    sweep(p.b2.data(), g.b2.data(), p.b2.size());
  }
  return worst;
}

}  // namespace demohash
