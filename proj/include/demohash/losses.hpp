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

// Collaborative consistency losses over a batch of relaxed codes.
//
// All terms are functions of row-normalized codes N^v, N^t (B x K), so each
// cosine-similarity matrix is a product like N^v N^t^T. Gradients are first
// formed with respect to the normalized rows and then pulled back through the
// normalization: for a = |a| a_hat and upstream g,
//
//     dL/da = (g - <g, a_hat> a_hat) / |a|.
//
// Retrieval consistency maps each row of cosine similarities to a
// distribution by softmax, sharpens the opposite direction as a fixed target,
// and averages KL(target || distribution) over rows. With the target held
// fixed, the gradient with respect to the logits of a row is p - q.
//
// Every term is a batch mean (L_gui over B^2 pairs, L_ret over B rows, L_co
// over B pairs) so that unit weights keep the three on a comparable scale.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "demohash/common.hpp"

namespace demohash {

/// Loss value plus gradients with respect to the image and text code batches.
struct CodeLoss {
  double value = 0.0;
  Matrix grad_image;
  Matrix grad_text;
};

namespace detail {

struct RowNormalized {
  Matrix unit;
  Vector norms;
};

inline RowNormalized normalize_rows(const Matrix& codes, const char* what) {
  RowNormalized out{codes, codes.rowwise().norm()};
  for (Eigen::Index i = 0; i < codes.rows(); ++i) {
    if (!std::isfinite(out.norms[i])) {
      throw Error(ErrorKind::kNonFinite, "hashing-network",
                  std::string(what) + " code in batch row " + std::to_string(i) +
                      " is not finite");
    }
    if (!(out.norms[i] > 0.0)) {
      throw Error(ErrorKind::kDegenerate, "hashing-network",
                  std::string(what) + " code in batch row " + std::to_string(i) +
                      " has zero norm");
    }
    out.unit.row(i) /= out.norms[i];
  }
  return out;
}

inline Matrix pull_back(const RowNormalized& n, const Matrix& grad_unit) {
  Matrix g = grad_unit;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double along = g.row(i).dot(n.unit.row(i));
    g.row(i) = (g.row(i) - along * n.unit.row(i)) / n.norms[i];
  }
  return g;
}

inline void require_same_batch(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::kContract, "hashing-network", "image and text batches differ in shape");
  }
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace detail

/// Guided consistency: squared error between every modality-pair cosine
/// similarity and the structure block, averaged over B^2 pairs.
inline CodeLoss loss_guided(const Matrix& image_codes, const Matrix& text_codes,
                            const Matrix& s_block) {
  detail::require_same_batch(image_codes, text_codes);
  const auto b = image_codes.rows();
  if (s_block.rows() != b || s_block.cols() != b) {
    throw Error(ErrorKind::kContract, "hashing-network", "structure block does not match batch");
  }
  const auto nv = detail::normalize_rows(image_codes, "image");
  const auto nt = detail::normalize_rows(text_codes, "text");
  const double scale = 1.0 / static_cast<double>(b * b);

  CodeLoss out;
  Matrix gv = Matrix::Zero(b, image_codes.cols());
  Matrix gt = Matrix::Zero(b, text_codes.cols());
  const Matrix* units[2] = {&nv.unit, &nt.unit};
  Matrix* grads[2] = {&gv, &gt};
  for (int e1 = 0; e1 < 2; ++e1) {
    for (int e2 = 0; e2 < 2; ++e2) {
      const Matrix resid = (*units[e1]) * units[e2]->transpose() - s_block;
      out.value += scale * resid.squaredNorm();
      *grads[e1] += (2.0 * scale) * resid * (*units[e2]);
      *grads[e2] += (2.0 * scale) * resid.transpose() * (*units[e1]);
    }
  }
  out.grad_image = detail::pull_back(nv, gv);
  out.grad_text = detail::pull_back(nt, gt);
  return out;
}

struct RetrievalDistributions {
  Matrix text_to_image;  // row i: softmax over images of cos(t_i, v_j)
  Matrix image_to_text;  // row i: softmax over texts of cos(v_i, t_j)
};

inline RetrievalDistributions retrieval_distributions(const Matrix& image_codes,
                                                      const Matrix& text_codes) {
  detail::require_same_batch(image_codes, text_codes);
  const auto nv = detail::normalize_rows(image_codes, "image");
  const auto nt = detail::normalize_rows(text_codes, "text");
  const Matrix t2i = nt.unit * nv.unit.transpose();
  return {detail::softmax_rows(t2i), detail::softmax_rows(t2i.transpose())};
}

/// p^(1/T) renormalized. Computed in log space so small T does not underflow
/// the larger entries.
inline std::vector<double> sharpen(std::span<const double> p, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::kConfig, "hashing-network", "sharpening temperature must be > 0");
  }
  double mx = -INFINITY;
  for (double x : p) {
    if (x < 0.0) throw Error(ErrorKind::kContract, "hashing-network", "negative probability");
    if (x > 0.0) mx = std::max(mx, std::log(x));
  }
  if (mx == -INFINITY) {
    throw Error(ErrorKind::kContract, "hashing-network", "cannot sharpen an all-zero vector");
  }
  std::vector<double> out(p.size());
  double total = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    out[b] = p[b] > 0.0 ? std::exp((std::log(p[b]) - mx) / temperature) : 0.0;
    total += out[b];
  }
  for (auto& x : out) x /= total;
  return out;
}

inline Matrix sharpen_rows(const Matrix& p, double temperature) {
  Matrix out(p.rows(), p.cols());
  std::vector<double> row(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) row[static_cast<std::size_t>(j)] = p(i, j);
    const auto s = sharpen(row, temperature);
    for (Eigen::Index j = 0; j < p.cols(); ++j) out(i, j) = s[static_cast<std::size_t>(j)];
  }
  return out;
}

/// sum_b q_b log(q_b / p_b), with 0 log 0 = 0.
inline double kl_divergence(std::span<const double> q, std::span<const double> p) {
  double kl = 0.0;
  for (std::size_t b = 0; b < q.size(); ++b) {
    if (q[b] == 0.0) continue;
    if (!(p[b] > 0.0)) {
      throw Error(ErrorKind::kContract, "hashing-network",
                  "KL reference has a zero entry where the target has mass");
    }
    kl += q[b] * std::log(q[b] / p[b]);
  }
  return kl;
}

struct RetrievalOptions {
  double temperature = 0.25;
  bool sharpen = true;  // false: the opposite direction is used unsharpened
};

/// Fixed targets for the two KL terms, computed from the current distributions.
struct RetrievalTargets {
  Matrix for_text_to_image;  // delta(P^{I2T}), target for P^{T2I}
  Matrix for_image_to_text;  // delta(P^{T2I}), target for P^{I2T}
};

inline RetrievalTargets retrieval_targets(const RetrievalDistributions& d,
                                          const RetrievalOptions& opt) {
  if (!opt.sharpen) return {d.image_to_text, d.text_to_image};
  return {sharpen_rows(d.image_to_text, opt.temperature),
          sharpen_rows(d.text_to_image, opt.temperature)};
}

inline double row_kl_sum(const Matrix& targets, const Matrix& dist) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    const Vector q = targets.row(i).transpose();
    const Vector p = dist.row(i).transpose();
    total += kl_divergence(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())),
                           std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  }
  return total;
}

/// Value of the retrieval loss on given distributions:
/// (1/B) sum_i KL(delta(p_i^{I2T}) || p_i^{T2I}) + KL(delta(p_i^{T2I}) || p_i^{I2T}).
inline double retrieval_kl(const Matrix& image_to_text, const Matrix& text_to_image,
                           const RetrievalOptions& opt) {
  const auto targets = retrieval_targets({text_to_image, image_to_text}, opt);
  return (row_kl_sum(targets.for_text_to_image, text_to_image) +
          row_kl_sum(targets.for_image_to_text, image_to_text)) /
         static_cast<double>(text_to_image.rows());
}

/// Retrieval consistency loss and its code gradients. Targets are treated as
/// constants; pass `fixed` to evaluate against externally frozen targets.
inline CodeLoss loss_retrieval(const Matrix& image_codes, const Matrix& text_codes,
                               const RetrievalOptions& opt,
                               const RetrievalTargets* fixed = nullptr) {
  detail::require_same_batch(image_codes, text_codes);
  const auto nv = detail::normalize_rows(image_codes, "image");
  const auto nt = detail::normalize_rows(text_codes, "text");
  const Matrix t2i_logits = nt.unit * nv.unit.transpose();
  const Matrix i2t_logits = t2i_logits.transpose();
  const Matrix p_t2i = detail::softmax_rows(t2i_logits);
  const Matrix p_i2t = detail::softmax_rows(i2t_logits);
  const RetrievalTargets targets =
      fixed != nullptr ? *fixed : retrieval_targets({p_t2i, p_i2t}, opt);

  const double scale = 1.0 / static_cast<double>(image_codes.rows());
  CodeLoss out;
  out.value = scale * (row_kl_sum(targets.for_text_to_image, p_t2i) +
                       row_kl_sum(targets.for_image_to_text, p_i2t));

  // Targets sum to one per row, so d/dlogits of KL(q || softmax) is p - q.
  const Matrix g_t2i = scale * (p_t2i - targets.for_text_to_image);
  const Matrix g_i2t = scale * (p_i2t - targets.for_image_to_text);
  const Matrix gt = g_t2i * nv.unit + g_i2t.transpose() * nv.unit;
  const Matrix gv = g_t2i.transpose() * nt.unit + g_i2t * nt.unit;
  out.grad_image = detail::pull_back(nv, gv);
  out.grad_text = detail::pull_back(nt, gt);
  return out;
}

/// Co-occurrence: pulls each paired (image i, text i) cosine toward gamma,
/// averaged over the batch.
inline CodeLoss loss_cooccurrence(const Matrix& image_codes, const Matrix& text_codes,
                                  double gamma) {
  detail::require_same_batch(image_codes, text_codes);
  const auto nv = detail::normalize_rows(image_codes, "image");
  const auto nt = detail::normalize_rows(text_codes, "text");
  const auto b = image_codes.rows();
  const double scale = 1.0 / static_cast<double>(b);
  CodeLoss out;
  Matrix gv(b, image_codes.cols());
  Matrix gt(b, text_codes.cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    const double r = nv.unit.row(i).dot(nt.unit.row(i)) - gamma;
    out.value += scale * r * r;
    gv.row(i) = (2.0 * scale * r) * nt.unit.row(i);
    gt.row(i) = (2.0 * scale * r) * nv.unit.row(i);
  }
  out.grad_image = detail::pull_back(nv, gv);
  out.grad_text = detail::pull_back(nt, gt);
  return out;
}

struct LossWeights {
  double guided = 1.0;
  double retrieval = 1.0;
  double cooccurrence = 1.0;
};

struct LossConfig {
  LossWeights weights;
  RetrievalOptions retrieval;
  double gamma = 1.5;
};

struct TotalLoss {
  double guided = 0.0;
  double retrieval = 0.0;
  double cooccurrence = 0.0;
  double total = 0.0;
  Matrix grad_image;
  Matrix grad_text;
};

/// Weighted sum of the three terms. A term whose weight is zero is skipped
/// entirely and reported as 0.
inline TotalLoss total_loss(const Matrix& image_codes, const Matrix& text_codes,
                            const Matrix& s_block, const LossConfig& cfg,
                            const RetrievalTargets* fixed_targets = nullptr) {
  TotalLoss out;
  out.grad_image = Matrix::Zero(image_codes.rows(), image_codes.cols());
  out.grad_text = Matrix::Zero(text_codes.rows(), text_codes.cols());
  auto add = [&](double weight, const CodeLoss& term, double& slot) {
    slot = term.value;
    out.total += weight * term.value;
    out.grad_image += weight * term.grad_image;
    out.grad_text += weight * term.grad_text;
  };
  if (cfg.weights.guided != 0.0) {
    add(cfg.weights.guided, loss_guided(image_codes, text_codes, s_block), out.guided);
  }
  if (cfg.weights.retrieval != 0.0) {
    add(cfg.weights.retrieval,
        loss_retrieval(image_codes, text_codes, cfg.retrieval, fixed_targets), out.retrieval);
  }
  if (cfg.weights.cooccurrence != 0.0) {
    add(cfg.weights.cooccurrence, loss_cooccurrence(image_codes, text_codes, cfg.gamma),
        out.cooccurrence);
  }
  return out;
}

}  // namespace demohash
