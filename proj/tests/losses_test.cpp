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
#include <vector>

#include "demohash/losses.hpp"
#include "test_util.hpp"

namespace demohash {
namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Matrix& m) {
  Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[i][k] = m(i, k);
  return r;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

// Four explicit modality-pair loops.
double guided_oracle(const Rows& v, const Rows& t, const Matrix& s) {
  const std::size_t b = v.size();
  double total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double sij = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      total += std::pow(cosine(v[i], v[j]) - sij, 2);
      total += std::pow(cosine(v[i], t[j]) - sij, 2);
      total += std::pow(cosine(t[i], v[j]) - sij, 2);
      total += std::pow(cosine(t[i], t[j]) - sij, 2);
    }
  }
  return total / static_cast<double>(b * b);
}

std::vector<double> softmax(const std::vector<double>& z) {
  double mx = z[0];
  for (double x : z) mx = std::max(mx, x);
  std::vector<double> p(z.size());
  double s = 0;
  for (std::size_t k = 0; k < z.size(); ++k) s += (p[k] = std::exp(z[k] - mx));
  for (auto& x : p) x /= s;
  return p;
}

std::vector<double> sharpen_oracle(const std::vector<double>& p, double temp) {
  std::vector<double> q(p.size());
  double s = 0;
  for (std::size_t k = 0; k < p.size(); ++k) s += (q[k] = std::pow(p[k], 1.0 / temp));
  for (auto& x : q) x /= s;
  return q;
}

double retrieval_oracle(const Rows& v, const Rows& t, double temp, bool sharpen) {
  const std::size_t b = v.size();
  double total = 0;
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> zi2t(b), zt2i(b);
    for (std::size_t j = 0; j < b; ++j) {
      zi2t[j] = cosine(v[i], t[j]);
      zt2i[j] = cosine(t[i], v[j]);
    }
    const auto pi2t = softmax(zi2t), pt2i = softmax(zt2i);
    const auto qt2i = sharpen ? sharpen_oracle(pi2t, temp) : pi2t;
    const auto qi2t = sharpen ? sharpen_oracle(pt2i, temp) : pt2i;
    for (std::size_t j = 0; j < b; ++j) {
      total += qt2i[j] * std::log(qt2i[j] / pt2i[j]);
      total += qi2t[j] * std::log(qi2t[j] / pi2t[j]);
    }
  }
  return total / static_cast<double>(b);
}

double cooccurrence_oracle(const Rows& v, const Rows& t, double gamma) {
  double total = 0;
  for (std::size_t i = 0; i < v.size(); ++i) total += std::pow(cosine(v[i], t[i]) - gamma, 2);
  return total / static_cast<double>(v.size());
}

Matrix random_structure(std::mt19937_64& rng, Eigen::Index b) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix s(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    s(i, i) = 1;
    for (Eigen::Index j = 0; j < i; ++j) s(i, j) = s(j, i) = u(rng);
  }
  return s;
}

// Central differences of a code-level objective, for gradient comparisons.
template <typename F>
Matrix numeric_grad(Matrix x, F&& f, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double saved = x.data()[k];
    x.data()[k] = saved + h;
    const double up = f(x);
    x.data()[k] = saved - h;
    const double down = f(x);
    x.data()[k] = saved;
    g.data()[k] = (up - down) / (2 * h);
  }
  return g;
}

TEST(Sharpen, WorkedExample) {
  const std::vector<double> p{0.6, 0.4};
  const auto q = sharpen(p, 0.25);
  // 0.6^4 = 0.1296, 0.4^4 = 0.0256, sum 0.1552
  EXPECT_NEAR(q[0], 0.1296 / 0.1552, 1e-12);
  EXPECT_NEAR(q[1], 0.0256 / 0.1552, 1e-12);
  EXPECT_NEAR(q[0], 0.8351, 1e-4);
  EXPECT_NEAR(q[1], 0.1649, 1e-4);
}

TEST(Sharpen, UnitTemperatureIsIdentity) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const auto q = sharpen(p, 1.0);
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(q[k], p[k], 1e-15);
}

TEST(Sharpen, UniformStaysUniform) {
  const std::vector<double> p(5, 0.2);
  for (double temp : {0.05, 0.25, 2.0}) {
    for (double x : sharpen(p, temp)) EXPECT_NEAR(x, 0.2, 1e-15);
  }
}

TEST(Sharpen, LowTemperatureDoesNotUnderflow) {
  const std::vector<double> p{0.3, 0.7};
  const auto q = sharpen(p, 1e-3);
  EXPECT_NEAR(q[1], 1.0, 1e-12);
  EXPECT_GE(q[0], 0.0);
}

TEST(Sharpen, RejectsBadInput) {
  const std::vector<double> p{0.5, 0.5};
  EXPECT_THROW(sharpen(p, 0.0), Error);
  EXPECT_THROW(sharpen(std::vector<double>{0.0, 0.0}, 0.5), Error);
  EXPECT_THROW(sharpen(std::vector<double>{-0.1, 1.1}, 0.5), Error);
}

TEST(GuidedLoss, MatchesLoopOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Matrix v = testing::gaussian(rng, 3, 4), tx = testing::gaussian(rng, 3, 4);
    const Matrix s = random_structure(rng, 3);
    EXPECT_NEAR(loss_guided(v, tx, s).value, guided_oracle(to_rows(v), to_rows(tx), s), 1e-12);
  }
}

TEST(GuidedLoss, PerfectAgreementIsZero) {
  Matrix v(2, 2);
  v << 1, 0, 0, 1;
  const Matrix s = Matrix::Identity(2, 2);
  EXPECT_NEAR(loss_guided(v, v, s).value, 0.0, 1e-15);
}

TEST(RetrievalLoss, MatchesLoopOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const Matrix v = testing::gaussian(rng, 3, 5), tx = testing::gaussian(rng, 3, 5);
    for (bool sh : {true, false}) {
      const RetrievalOptions opt{0.25, sh};
      EXPECT_NEAR(loss_retrieval(v, tx, opt).value,
                  retrieval_oracle(to_rows(v), to_rows(tx), 0.25, sh), 1e-12);
    }
  }
}

TEST(RetrievalLoss, UnsharpenedIdenticalCodesAreZero) {
  std::mt19937_64 rng(7);
  const Matrix v = testing::gaussian(rng, 4, 6);
  EXPECT_NEAR(loss_retrieval(v, v, {0.25, false}).value, 0.0, 1e-15);
}

TEST(RetrievalLoss, ValueHelperAgrees) {
  std::mt19937_64 rng(8);
  const Matrix v = testing::gaussian(rng, 4, 6), tx = testing::gaussian(rng, 4, 6);
  const auto d = retrieval_distributions(v, tx);
  EXPECT_NEAR(retrieval_kl(d.image_to_text, d.text_to_image, {}),
              loss_retrieval(v, tx, {}).value, 1e-14);
}

TEST(CooccurrenceLoss, IdenticalCodesGiveQuarter) {
  std::mt19937_64 rng(9);
  const Matrix v = testing::gaussian(rng, 3, 8);
  EXPECT_NEAR(loss_cooccurrence(v, v, 1.5).value, 0.25, 1e-15);
}

TEST(CooccurrenceLoss, MatchesLoopOracle) {
  std::mt19937_64 rng(10);
  const Matrix v = testing::gaussian(rng, 3, 4), tx = testing::gaussian(rng, 3, 4);
  EXPECT_NEAR(loss_cooccurrence(v, tx, 1.5).value,
              cooccurrence_oracle(to_rows(v), to_rows(tx), 1.5), 1e-12);
}

TEST(TotalLoss, IsWeightedSumOfTerms) {
  std::mt19937_64 rng(11);
  const Matrix v = testing::gaussian(rng, 3, 4), tx = testing::gaussian(rng, 3, 4);
  const Matrix s = random_structure(rng, 3);
  LossConfig cfg;
  cfg.weights = {0.7, 1.3, 0.4};
  const auto l = total_loss(v, tx, s, cfg);
  EXPECT_NEAR(l.total, 0.7 * l.guided + 1.3 * l.retrieval + 0.4 * l.cooccurrence, 1e-14);
  EXPECT_NEAR(l.guided, guided_oracle(to_rows(v), to_rows(tx), s), 1e-12);
  EXPECT_NEAR(l.retrieval, retrieval_oracle(to_rows(v), to_rows(tx), 0.25, true), 1e-12);
  EXPECT_NEAR(l.cooccurrence, cooccurrence_oracle(to_rows(v), to_rows(tx), 1.5), 1e-12);

  cfg.weights.retrieval = 0;
  EXPECT_EQ(total_loss(v, tx, s, cfg).retrieval, 0.0);
}

TEST(CodeGradients, AgreeWithFiniteDifferences) {
  std::mt19937_64 rng(12);
  const Matrix v = testing::gaussian(rng, 4, 5), tx = testing::gaussian(rng, 4, 5);
  const Matrix s = random_structure(rng, 4);
  const LossConfig cfg;
  const auto targets = retrieval_targets(retrieval_distributions(v, tx), cfg.retrieval);
  const auto l = total_loss(v, tx, s, cfg, &targets);
  const Matrix nv = numeric_grad(v, [&](const Matrix& x) {
    return total_loss(x, tx, s, cfg, &targets).total;
  });
  const Matrix nt = numeric_grad(tx, [&](const Matrix& x) {
    return total_loss(v, x, s, cfg, &targets).total;
  });
  EXPECT_LT((l.grad_image - nv).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LT((l.grad_text - nt).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(CodeLosses, ZeroCodeRowIsDegenerate) {
  Matrix v = Matrix::Ones(2, 3);
  v.row(1).setZero();
  try {
    loss_cooccurrence(v, Matrix::Ones(2, 3), 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

}  // namespace
}  // namespace demohash
