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

#include <algorithm>
#include <fstream>
#include <random>

#include "demohash/evaluation.hpp"
#include "test_util.hpp"

namespace demohash {
namespace {

RankedList ranking_of(std::initializer_list<std::uint64_t> ids) {
  RankedList r;
  for (auto id : ids) r.push_back({id, 0});
  return r;
}

struct Instance {
  BinaryCodebook queries;
  BinaryCodebook db;
  LabelMatrix qlabels;
  LabelMatrix dblabels;
};

LabelMatrix random_labels(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                          double density) {
  std::bernoulli_distribution on(density);
  LabelMatrix l{rows, cols, std::vector<std::uint8_t>(rows * cols)};
  for (auto& x : l.data) x = on(rng) ? 1 : 0;
  return l;
}

Instance random_instance(std::mt19937_64& rng, std::size_t nq, std::size_t ndb, std::size_t bits) {
  auto codes = [&](std::size_t n, Modality m) {
    return binarize(testing::gaussian(rng, static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(bits)),
                    m);
  };
  Instance in{codes(nq, Modality::kImage), codes(ndb, Modality::kText), {}, {}};
  in.qlabels = random_labels(rng, nq, 5, 0.3);
  in.dblabels = random_labels(rng, ndb, 5, 0.3);
  return in;
}

// MAP from an explicit sort and the textbook AP definition.
double brute_force_map(const Instance& in, bool exclude_zero) {
  double total = 0;
  std::size_t counted = 0;
  for (std::size_t q = 0; q < in.queries.size(); ++q) {
    std::vector<std::pair<std::size_t, std::size_t>> order;  // (distance, id)
    for (std::size_t r = 0; r < in.db.size(); ++r) {
      std::size_t d = 0;
      for (std::size_t k = 0; k < in.db.bits(); ++k) d += in.queries.bit(q, k) != in.db.bit(r, k);
      order.emplace_back(d, in.db.id(r));
    }
    std::sort(order.begin(), order.end());
    std::size_t rel_total = 0, hits = 0;
    double sum = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      bool rel = false;
      for (std::size_t c = 0; c < in.qlabels.cols; ++c) {
        rel = rel || (in.qlabels.row(q)[c] && in.dblabels.row(order[k].second)[c]);
      }
      if (rel) {
        ++hits;
        sum += double(hits) / double(k + 1);
        ++rel_total;
      }
    }
    if (rel_total == 0 && exclude_zero) continue;
    total += rel_total ? sum / double(rel_total) : 0.0;
    ++counted;
  }
  return counted ? total / double(counted) : 0.0;
}

TEST(Relevance, LabelIntersection) {
  const std::vector<std::uint8_t> a{1, 0, 1}, b{0, 1, 1}, c{0, 1, 0}, z{0, 0, 0};
  EXPECT_TRUE(relevant(a, b));
  EXPECT_FALSE(relevant(a, c));
  EXPECT_FALSE(relevant(z, a));
  EXPECT_THROW(relevant(a, std::vector<std::uint8_t>{1}), Error);
}

TEST(AveragePrecision, WorkedExamples) {
  const std::vector<std::uint8_t> rel{1, 0, 1, 0};
  // Relevant items at ranks 1 and 3: (1/1 + 2/3) / 2.
  EXPECT_EQ(average_precision(ranking_of({0, 1, 2, 3}), rel), 5.0 / 6.0);
  const std::vector<std::uint8_t> all(4, 1), none(4, 0);
  EXPECT_DOUBLE_EQ(average_precision(ranking_of({3, 1, 0, 2}), all), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(ranking_of({3, 1, 0, 2}), none), 0.0);
}

TEST(Map, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto in = random_instance(rng, 1 + t % 7, 5 + t * 2, 4 + t % 13);
    for (bool ex : {false, true}) {
      EvalOptions opt;
      opt.exclude_zero_relevant = ex;
      const auto rep = evaluate(in.queries, in.db, in.qlabels, in.dblabels, opt);
      EXPECT_NEAR(rep.map, brute_force_map(in, ex), 1e-12) << t;
    }
  }
}

TEST(Map, ZeroRelevantQueriesCountedAndOptionallyExcluded) {
  Instance in{binarize(Matrix::Ones(2, 8), Modality::kImage),
              binarize(Matrix::Ones(3, 8), Modality::kText),
              {2, 2, {1, 0, 0, 1}},
              {3, 2, {1, 0, 1, 0, 1, 0}}};
  // Every database item carries label 0 only, so query 1 has nothing relevant.
  auto rep = evaluate(in.queries, in.db, in.qlabels, in.dblabels);
  EXPECT_EQ(rep.zero_relevant_queries, 1u);
  EXPECT_DOUBLE_EQ(rep.map, 0.5);
  EvalOptions opt;
  opt.exclude_zero_relevant = true;
  EXPECT_DOUBLE_EQ(evaluate(in.queries, in.db, in.qlabels, in.dblabels, opt).map, 1.0);
}

TEST(Curves, FullRadiusRecallIsOneAndRecallAtNIsMonotone) {
  std::mt19937_64 rng(2);
  auto in = random_instance(rng, 10, 250, 12);
  for (std::size_t q = 0; q < 10; ++q) in.qlabels.data[q * 5] = 1;
  for (std::size_t r = 0; r < 250; r += 3) in.dblabels.data[r * 5] = 1;
  const auto rep = evaluate(in.queries, in.db, in.qlabels, in.dblabels);
  ASSERT_EQ(rep.pr_curve.size(), 13u);
  EXPECT_DOUBLE_EQ(rep.pr_curve.back().x, 1.0);
  for (std::size_t r = 1; r < rep.pr_curve.size(); ++r) {
    EXPECT_GE(rep.pr_curve[r].x, rep.pr_curve[r - 1].x);
  }
  for (std::size_t g = 1; g < rep.r_at_n.size(); ++g) {
    EXPECT_GE(rep.r_at_n[g].second, rep.r_at_n[g - 1].second);
  }
  // Grid is 1, 100, 200, 250 (clamped).
  ASSERT_EQ(rep.p_at_n.size(), 4u);
  EXPECT_EQ(rep.p_at_n.back().first, 250u);
  EXPECT_DOUBLE_EQ(rep.r_at_n.back().second, 1.0);

  // P@N at the full database is the mean relevance rate.
  double rate = 0;
  for (std::size_t q = 0; q < 10; ++q) {
    std::size_t rel = 0;
    for (std::size_t r = 0; r < 250; ++r) rel += relevant(in.qlabels.row(q), in.dblabels.row(r));
    rate += rel / 250.0;
  }
  EXPECT_NEAR(rep.p_at_n.back().second, rate / 10, 1e-12);
}

TEST(Evaluate, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(3);
  const auto in = random_instance(rng, 37, 120, 16);
  EvalOptions one, four;
  four.threads = 4;
  const auto a = evaluate(in.queries, in.db, in.qlabels, in.dblabels, one);
  const auto b = evaluate(in.queries, in.db, in.qlabels, in.dblabels, four);
  EXPECT_EQ(a.map, b.map);
  EXPECT_EQ(pr_csv(a), pr_csv(b));
}

TEST(Evaluate, ContractChecks) {
  std::mt19937_64 rng(4);
  const auto in = random_instance(rng, 3, 10, 8);
  const auto other_bits = binarize(Matrix::Ones(10, 16), Modality::kText);
  EXPECT_THROW(evaluate(in.queries, other_bits, in.qlabels, in.dblabels), Error);
  LabelMatrix short_labels{9, 5, std::vector<std::uint8_t>(45, 1)};
  EXPECT_THROW(evaluate(in.queries, in.db, in.qlabels, short_labels), Error);
}

TEST(Report, WritesJsonAndCurves) {
  std::mt19937_64 rng(5);
  const auto in = random_instance(rng, 4, 30, 16);
  const auto d = evaluate(in.queries, in.db, in.qlabels, in.dblabels);
  EvalReport rep{d, d, 16, "synthetic", 7};
  testing::TempDir dir;
  write_report(dir.path(), rep);
  std::ifstream js(dir / "report_k16.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["bits"], 16);
  EXPECT_DOUBLE_EQ(j["map_i2t"].get<double>(), d.map);
  for (const char* f : {"pr_i2t_k16.csv", "pn_t2i_k16.csv", "rn_i2t_k16.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(pr_csv(d).substr(0, 23), "radius,recall,precision");
}

}  // namespace
}  // namespace demohash
