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

// MAP@All and hash-lookup curves against multi-hot label ground truth.
//
// A database item is relevant to a query when their label sets intersect.
// Curve conventions:
//   - PR curve: one point per Hamming radius r = 0..K; an item is retrieved
//     when its distance is <= r. Precision is averaged over queries that
//     retrieve at least one item at that radius, recall over queries with at
//     least one relevant item.
//   - P@N / R@N: N = 1, 100, 200, ..., 5000, clamped to the database size.
//     Precision is averaged over all queries, recall over queries with at
//     least one relevant item.

#pragma once

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "demohash/binary_io.hpp"
#include "demohash/common.hpp"
#include "demohash/ingestion.hpp"
#include "demohash/retrieval.hpp"

namespace demohash {

/// Row-major 0/1 label matrix.
struct LabelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> data;

  std::span<const std::uint8_t> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  static LabelMatrix from_store(const FeatureStore& s) {
    if (!s.has_labels()) {
      throw Error(ErrorKind::kContract, "evaluation", "feature store carries no labels");
    }
    return {s.samples, s.num_labels, s.labels};
  }
};

inline bool relevant(std::span<const std::uint8_t> query, std::span<const std::uint8_t> item) {
  if (query.size() != item.size()) {
    throw Error(ErrorKind::kContract, "evaluation", "label dimensions differ");
  }
  for (std::size_t k = 0; k < query.size(); ++k) {
    if (query[k] != 0 && item[k] != 0) return true;
  }
  return false;
}

/// Average precision of a full ranking. `relevance` is indexed by sample id.
/// Returns 0 when nothing is relevant. Accumulates in long double and rounds
/// once, so small cases such as ranks {1, 3} give the double nearest 5/6.
inline double average_precision(const RankedList& ranking, std::span<const std::uint8_t> relevance) {
  std::size_t hits = 0;
  long double sum = 0.0L;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (relevance[ranking[k].id]) {
      ++hits;
      sum += static_cast<long double>(hits) / static_cast<long double>(k + 1);
    }
  }
  return hits == 0 ? 0.0 : static_cast<double>(sum / static_cast<long double>(hits));
}

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

struct DirectionReport {
  double map = 0.0;
  std::size_t queries = 0;
  std::size_t zero_relevant_queries = 0;
  std::vector<CurvePoint> pr_curve;             // (recall, precision) per radius 0..K
  std::vector<std::pair<std::size_t, double>> p_at_n;
  std::vector<std::pair<std::size_t, double>> r_at_n;
};

struct EvalOptions {
  bool exclude_zero_relevant = false;
  std::size_t max_n = 5000;
  std::size_t step_n = 100;
  unsigned threads = 1;
};

inline std::vector<std::size_t> top_n_grid(std::size_t db_size, const EvalOptions& opt) {
  std::vector<std::size_t> grid{1};
  for (std::size_t n = opt.step_n; n <= opt.max_n; n += opt.step_n) grid.push_back(n);
  for (auto& n : grid) n = std::min(n, db_size);
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// One retrieval direction: every query code ranked against the database.
/// Ranking ids index the label rows of the database.
inline DirectionReport evaluate(const BinaryCodebook& queries, const BinaryCodebook& db,
                                const LabelMatrix& query_labels, const LabelMatrix& db_labels,
                                const EvalOptions& opt = {}) {
  if (queries.empty()) throw Error(ErrorKind::kContract, "evaluation", "empty query set");
  if (queries.bits() != db.bits()) {
    throw Error(ErrorKind::kContract, "evaluation", "query and database code lengths differ");
  }
  if (query_labels.rows != queries.size() || db_labels.rows != db.size() ||
      query_labels.cols != db_labels.cols) {
    throw Error(ErrorKind::kContract, "evaluation", "label matrices do not match the codebooks");
  }
  for (auto id : db.ids()) {
    if (id >= db_labels.rows) {
      throw Error(ErrorKind::kContract, "evaluation", "database id outside label range");
    }
  }
  for (auto id : queries.ids()) {
    if (id >= query_labels.rows) {
      throw Error(ErrorKind::kContract, "evaluation", "query id outside label range");
    }
  }
  const HammingRanker ranker(db);
  const std::size_t nq = queries.size();
  const std::size_t k_bits = db.bits();
  const auto grid = top_n_grid(db.size(), opt);

  struct PerQuery {
    double ap = 0.0;
    std::size_t relevant = 0;
    std::vector<std::size_t> hits_at_radius;      // cumulative relevant with d <= r
    std::vector<std::size_t> retrieved_at_radius; // cumulative items with d <= r
    std::vector<std::size_t> hits_at_n;
  };
  std::vector<PerQuery> per(nq);

  parallel_for(nq, opt.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> rel(db_labels.rows);
    for (std::size_t q = begin; q < end; ++q) {
      auto& out = per[q];
      const auto qlabels = query_labels.row(queries.id(q));
      std::fill(rel.begin(), rel.end(), 0);
      for (std::size_t r = 0; r < db.size(); ++r) {
        const auto id = db.id(r);
        rel[id] = relevant(qlabels, db_labels.row(id)) ? 1 : 0;
        out.relevant += rel[id];
      }
      const RankedList ranking = ranker.rank(queries.code(q));
      out.ap = average_precision(ranking, rel);

      out.hits_at_radius.assign(k_bits + 1, 0);
      out.retrieved_at_radius.assign(k_bits + 1, 0);
      for (const auto& hit : ranking) {
        ++out.retrieved_at_radius[hit.distance];
        out.hits_at_radius[hit.distance] += rel[hit.id];
      }
      std::partial_sum(out.hits_at_radius.begin(), out.hits_at_radius.end(),
                       out.hits_at_radius.begin());
      std::partial_sum(out.retrieved_at_radius.begin(), out.retrieved_at_radius.end(),
                       out.retrieved_at_radius.begin());

      out.hits_at_n.resize(grid.size());
      std::size_t hits = 0, g = 0;
      for (std::size_t k = 0; k < ranking.size() && g < grid.size(); ++k) {
        hits += rel[ranking[k].id];
        while (g < grid.size() && grid[g] == k + 1) out.hits_at_n[g++] = hits;
      }
    }
  });

  // Reductions in query order, independent of the thread count.
  DirectionReport rep;
  rep.queries = nq;
  double ap_sum = 0.0;
  std::size_t counted = 0;
  for (const auto& p : per) {
    if (p.relevant == 0) {
      ++rep.zero_relevant_queries;
      if (opt.exclude_zero_relevant) continue;
    }
    ap_sum += p.ap;
    ++counted;
  }
  rep.map = counted == 0 ? 0.0 : ap_sum / static_cast<double>(counted);

  for (std::size_t r = 0; r <= k_bits; ++r) {
    double prec = 0.0, rec = 0.0;
    std::size_t np = 0, nr = 0;
    for (const auto& p : per) {
      if (p.retrieved_at_radius[r] > 0) {
        prec += static_cast<double>(p.hits_at_radius[r]) /
                static_cast<double>(p.retrieved_at_radius[r]);
        ++np;
      }
      if (p.relevant > 0) {
        rec += static_cast<double>(p.hits_at_radius[r]) / static_cast<double>(p.relevant);
        ++nr;
      }
    }
    rep.pr_curve.push_back({nr ? rec / static_cast<double>(nr) : 0.0,
                            np ? prec / static_cast<double>(np) : 0.0});
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    double prec = 0.0, rec = 0.0;
    std::size_t nr = 0;
    for (const auto& p : per) {
      prec += static_cast<double>(p.hits_at_n[g]) / static_cast<double>(grid[g]);
      if (p.relevant > 0) {
        rec += static_cast<double>(p.hits_at_n[g]) / static_cast<double>(p.relevant);
        ++nr;
      }
    }
    rep.p_at_n.emplace_back(grid[g], prec / static_cast<double>(nq));
    rep.r_at_n.emplace_back(grid[g], nr ? rec / static_cast<double>(nr) : 0.0);
  }
  return rep;
}

struct EvalReport {
  DirectionReport i2t;  // image queries against the text database
  DirectionReport t2i;  // text queries against the image database
  std::size_t bits = 0;
  std::string dataset;
  std::uint64_t seed = 0;
};

inline EvalReport evaluate_cross_modal(const BinaryCodebook& query_image,
                                       const BinaryCodebook& query_text,
                                       const BinaryCodebook& db_image,
                                       const BinaryCodebook& db_text,
                                       const LabelMatrix& query_labels,
                                       const LabelMatrix& db_labels, const EvalOptions& opt = {}) {
  EvalReport rep;
  rep.bits = db_image.bits();
  rep.i2t = evaluate(query_image, db_text, query_labels, db_labels, opt);
  rep.t2i = evaluate(query_text, db_image, query_labels, db_labels, opt);
  return rep;
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["bits"] = r.bits;
  j["dataset"] = r.dataset;
  j["seed"] = r.seed;
  for (const auto& [name, d] : {std::pair{"i2t", &r.i2t}, std::pair{"t2i", &r.t2i}}) {
    j[std::string("map_") + name] = d->map;
    j[std::string("queries_") + name] = d->queries;
    j[std::string("zero_relevant_") + name] = d->zero_relevant_queries;
  }
  return j;
}

inline std::string pr_csv(const DirectionReport& d) {
  std::ostringstream out;
  out.precision(17);
  out << "radius,recall,precision\n";
  for (std::size_t r = 0; r < d.pr_curve.size(); ++r) {
    out << r << ',' << d.pr_curve[r].x << ',' << d.pr_curve[r].y << '\n';
  }
  return out.str();
}

inline std::string top_n_csv(const std::vector<std::pair<std::size_t, double>>& curve,
                             const char* column) {
  std::ostringstream out;
  out.precision(17);
  out << "n," << column << '\n';
  for (const auto& [n, v] : curve) out << n << ',' << v << '\n';
  return out.str();
}

/// report_k<K>.json plus pr_/pn_/rn_<dir>_k<K>.csv for both directions.
inline void write_report(const std::filesystem::path& dir, const EvalReport& r) {
  std::filesystem::create_directories(dir);
  const std::string k = "_k" + std::to_string(r.bits);
  io::atomic_write(dir / ("report" + k + ".json"), report_json(r).dump(2) + "\n", "evaluation");
  for (const auto& [name, d] : {std::pair{"i2t", &r.i2t}, std::pair{"t2i", &r.t2i}}) {
    const std::string suffix = std::string("_") + name + k + ".csv";
    io::atomic_write(dir / ("pr" + suffix), pr_csv(*d), "evaluation");
    io::atomic_write(dir / ("pn" + suffix), top_n_csv(d->p_at_n, "precision"), "evaluation");
    io::atomic_write(dir / ("rn" + suffix), top_n_csv(d->r_at_n, "recall"), "evaluation");
  }
}

}  // namespace demohash
