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

// End-to-end synthetic run: synth -> mine -> train -> encode -> eval.

#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "demohash/evaluation.hpp"
#include "demohash/ingestion.hpp"
#include "demohash/retrieval.hpp"
#include "demohash/structure.hpp"
#include "demohash/trainer.hpp"

namespace demohash {

/// Ablation variants. Each one changes exactly one component.
enum class Variant { kFull, kNoDistribution, kNoRetrieval, kNoSharpen };

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoDistribution: return "w/o D";
    case Variant::kNoRetrieval: return "w/o R";
    case Variant::kNoSharpen: return "w/o S";
  }
  return "?";
}

/// Views used for mining (1 for w/o D, otherwise all), and the loss config.
inline std::size_t mining_views(Variant v, std::size_t available) {
  return v == Variant::kNoDistribution ? 1 : available;
}

inline LossConfig apply_variant(LossConfig loss, Variant v) {
  if (v == Variant::kNoRetrieval) loss.weights.retrieval = 0.0;
  if (v == Variant::kNoSharpen) loss.retrieval.sharpen = false;
  return loss;
}

struct PipelineConfig {
  SynthConfig synth;          // synth.samples is the database/training size
  std::size_t queries = 200;  // drawn from the same generator, ahead of the database
  StructureParams structure;
  TrainConfig train;
  Variant variant = Variant::kFull;
  unsigned threads = 1;
};

struct PipelineResult {
  EvalReport report;
  std::vector<EpochLoss> trace;
  double seconds_mine = 0.0;
  double seconds_train = 0.0;
  double seconds_eval = 0.0;
};

struct SplitStores {
  FeatureStore query;
  FeatureStore database;
};

/// Generates queries + database in one draw; the first `queries` samples are
/// the query set.
inline SplitStores synth_split(const SynthConfig& cfg, std::size_t queries) {
  SynthConfig all = cfg;
  all.samples = cfg.samples + queries;
  const FeatureStore store = generate_synthetic(all);
  return {slice_samples(store, 0, queries), slice_samples(store, queries, cfg.samples)};
}

inline EvalReport evaluate_params(const HashNetParams& params, const FeatureStore& query,
                                  const FeatureStore& db, const EvalOptions& opt = {}) {
  const auto qi = encode(params, image_inputs(query), Modality::kImage);
  const auto qt = encode(params, text_inputs(query), Modality::kText);
  const auto di = encode(params, image_inputs(db), Modality::kImage);
  const auto dt = encode(params, text_inputs(db), Modality::kText);
  return evaluate_cross_modal(qi, qt, di, dt, LabelMatrix::from_store(query),
                              LabelMatrix::from_store(db), opt);
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  const auto split = synth_split(cfg.synth, cfg.queries);

  PipelineResult out;
  auto t0 = Clock::now();
  const FeatureStore mining_store =
      take_views(split.database, mining_views(cfg.variant, split.database.views));
  const SimilarityStructure structure = mine_structure(mining_store, cfg.structure, cfg.threads);
  auto t1 = Clock::now();

  TrainConfig tc = cfg.train;
  tc.loss = apply_variant(tc.loss, cfg.variant);
  auto trained = train(split.database, structure, tc);
  auto t2 = Clock::now();

  EvalOptions eo;
  eo.threads = cfg.threads;
  out.report = evaluate_params(trained.params, split.query, split.database, eo);
  out.report.dataset = "synthetic";
  out.report.seed = cfg.synth.seed;
  auto t3 = Clock::now();

  out.trace = std::move(trained.trace);
  out.seconds_mine = seconds(t0, t1);
  out.seconds_train = seconds(t1, t2);
  out.seconds_eval = seconds(t2, t3);
  return out;
}

}  // namespace demohash
