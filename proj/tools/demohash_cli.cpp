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

// demohash command line: synth, mine, train, encode, retrieve, eval, ablate, bench.
//
// Every subcommand writes <primary output>.manifest.json next to its main
// artifact with the resolved flags and CRC32 hashes of the files it read.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "demohash/evaluation.hpp"
#include "demohash/pipeline.hpp"
#include "demohash/retrieval.hpp"
#include "demohash/structure.hpp"
#include "demohash/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace demohash::cli {
namespace {

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

/// Collects inputs and the resolved config, and writes the manifest last.
class Manifest {
 public:
  explicit Manifest(const CLI::App* sub) : sub_(sub) {}

  void input(const std::string& role, const fs::path& path) {
    const auto bytes = io::read_file(path, "cli");
    inputs_[role] = {{"path", path.string()}, {"crc32", hex32(io::crc32(bytes))}};
  }
  void set(const std::string& key, ordered_json value) { extra_[key] = std::move(value); }

  void write(const fs::path& primary) const {
    ordered_json j;
    j["subcommand"] = sub_->get_name();
    ordered_json config = ordered_json::object();
    for (const auto* opt : sub_->get_options()) {
      const auto name = opt->get_single_name();
      if (name == "help" || name == "config") continue;
      if (opt->get_expected_min() == 0) {
        config[name] = opt->count() > 0 && opt->as<bool>();
      } else if (opt->count() > 0) {
        std::string joined;
        for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
        config[name] = joined;
      } else {
        config[name] = opt->get_default_str();
      }
    }
    j["config"] = std::move(config);
    j["inputs"] = inputs_;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    fs::path out = primary;
    out += ".manifest.json";
    io::atomic_write(out, j.dump(2) + "\n", "cli");
  }

 private:
  const CLI::App* sub_;
  ordered_json inputs_ = ordered_json::object();
  ordered_json extra_ = ordered_json::object();
};

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorKind::kIo, "cli", std::string(what) + " '" + p.string() + "' does not exist");
  }
}

void write_features(const FeatureStore& s, const fs::path& path) {
  if (path.extension() == ".csv") {
    io::atomic_write(path, format_feature_csv(s), "ingestion");
  } else {
    write_feature_store(s, path);
  }
}

fs::path codebook_path(const std::string& prefix, Modality m) {
  return prefix + "." + std::string(to_string(m)) + ".dbc";
}

LabelMatrix labels_for(const FeatureStore& s, const char* which) {
  if (!s.has_labels()) {
    throw Error(ErrorKind::kContract, "evaluation",
                std::string(which) + " feature store has no labels; eval needs ground truth");
  }
  return LabelMatrix::from_store(s);
}

// Shared option groups. Each binds into a struct owned by run().

void add_synth_options(CLI::App* sub, SynthConfig& c) {
  sub->add_option("--clusters", c.clusters, "number of semantic clusters")->capture_default_str();
  sub->add_option("--samples", c.samples, "database samples")->capture_default_str();
  sub->add_option("--views", c.views, "image views per sample")->capture_default_str();
  sub->add_option("--dim-v", c.dim_v, "image feature dimension")->capture_default_str();
  sub->add_option("--dim-t", c.dim_t, "text feature dimension")->capture_default_str();
  sub->add_option("--between", c.between, "cluster center spread")->capture_default_str();
  sub->add_option("--noise", c.view_noise, "per-coordinate view noise")->capture_default_str();
}

struct TrainFlags {
  TrainConfig cfg;
  bool no_retrieval = false;
  bool no_sharpen = false;

  TrainConfig resolved() const {
    TrainConfig c = cfg;
    if (no_retrieval) c.loss.weights.retrieval = 0.0;
    if (no_sharpen) c.loss.retrieval.sharpen = false;
    return c;
  }
  std::string variant() const {
    if (no_retrieval) return std::string(variant_name(Variant::kNoRetrieval));
    if (no_sharpen) return std::string(variant_name(Variant::kNoSharpen));
    return std::string(variant_name(Variant::kFull));
  }
};

void add_train_options(CLI::App* sub, TrainFlags& f) {
  auto& c = f.cfg;
  sub->add_option("--bits", c.bits, "code length K")->capture_default_str();
  sub->add_option("--hidden", c.hidden, "hidden layer width")->capture_default_str();
  sub->add_option("--epochs", c.epochs, "training epochs")->capture_default_str();
  sub->add_option("--lr", c.learning_rate, "SGD learning rate")->capture_default_str();
  sub->add_option("--momentum", c.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--batch", c.batch_size, "mini-batch size")->capture_default_str();
  sub->add_option("--temperature", c.loss.retrieval.temperature, "sharpening temperature")
      ->capture_default_str();
  sub->add_option("--gamma", c.loss.gamma, "co-occurrence target")->capture_default_str();
  sub->add_option("--w-gui", c.loss.weights.guided, "guided loss weight")->capture_default_str();
  sub->add_option("--w-ret", c.loss.weights.retrieval, "retrieval loss weight")
      ->capture_default_str();
  sub->add_option("--w-co", c.loss.weights.cooccurrence, "co-occurrence loss weight")
      ->capture_default_str();
  sub->add_option("--early-stop", c.early_stop_delta, "10-epoch window improvement floor")
      ->capture_default_str();
  sub->add_flag("--no-retrieval-loss", f.no_retrieval, "drop the retrieval consistency term");
  sub->add_flag("--no-sharpen", f.no_sharpen, "use unsharpened retrieval targets");
}

// Flat key=value config: each line becomes --key=value, inserted before the
// command-line flags so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    std::size_t drop = 0;
    if (args[k] == "--config" && k + 1 < args.size()) {
      path = args[k + 1];
      drop = 2;
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      drop = 1;
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::kIo, "cli", "cannot open config file '" + path + "'");
    std::vector<std::string> injected;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::kConfig, "cli",
                    path + ":" + std::to_string(lineno) + ": expected key=value");
      }
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      injected.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
               args.begin() + static_cast<std::ptrdiff_t>(k + drop));
    // args[0] is the program name, args[1] the subcommand.
    const std::size_t at = std::min<std::size_t>(2, args.size());
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
    args.push_back("--config=" + path);  // recorded, otherwise ignored
    break;
  }
  return args;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"demohash: unsupervised cross-modal hashing with distribution-based structure"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  unsigned threads = 1;
  std::uint64_t seed = 7;
  std::string config_path;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "worker threads")->capture_default_str()->check(
        CLI::Range(1u, 1024u));
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--config", config_path, "flat key=value config file");
  };

  // synth
  SynthConfig synth;
  std::string synth_out, synth_query_out;
  std::size_t synth_queries = 0;
  auto* s_synth = app.add_subcommand("synth", "generate a clustered synthetic feature store");
  add_synth_options(s_synth, synth);
  s_synth->add_option("--out", synth_out, "database store (.dfs, or .csv)")->required();
  s_synth->add_option("--query-out", synth_query_out, "query store, drawn ahead of the database");
  s_synth->add_option("--queries", synth_queries, "query samples")->capture_default_str();
  common(s_synth);

  // mine
  std::string mine_in, mine_out;
  std::size_t mine_views = 0;
  StructureParams mine_params;
  bool mine_div = false;
  auto* s_mine = app.add_subcommand("mine", "mine the similarity structure S");
  s_mine->add_option("--features", mine_in, "feature store")->required();
  s_mine->add_option("--out", mine_out, "structure file (DEMOSM1)")->required();
  s_mine->add_option("--views", mine_views, "views used for mining (0 = all)")
      ->capture_default_str();
  s_mine->add_option("--tau", mine_params.tau, "divergence threshold")->capture_default_str();
  s_mine->add_option("--alpha", mine_params.alpha, "image/text blend weight")
      ->capture_default_str();
  s_mine->add_flag("--with-divergence", mine_div, "also store the divergence matrix");
  common(s_mine);

  // train
  std::string train_in, train_structure, train_out, train_loss;
  TrainFlags train_flags;
  auto* s_train = app.add_subcommand("train", "train the two hashing networks");
  s_train->add_option("--features", train_in, "feature store")->required();
  s_train->add_option("--structure", train_structure, "structure file from mine")->required();
  s_train->add_option("--out", train_out, "checkpoint (DEMONN1)")->required();
  s_train->add_option("--loss-csv", train_loss, "per-epoch loss trace");
  add_train_options(s_train, train_flags);
  common(s_train);

  // encode
  std::string enc_in, enc_ckpt, enc_prefix;
  auto* s_enc = app.add_subcommand("encode", "binarize a store into image and text codebooks");
  s_enc->add_option("--features", enc_in, "feature store")->required();
  s_enc->add_option("--checkpoint", enc_ckpt, "checkpoint from train")->required();
  s_enc->add_option("--out-prefix", enc_prefix, "writes <prefix>.image.dbc and <prefix>.text.dbc")
      ->required();
  common(s_enc);

  // retrieve
  std::string ret_query, ret_db, ret_out;
  std::size_t ret_top = 0;
  auto* s_ret = app.add_subcommand("retrieve", "rank a database codebook for every query code");
  s_ret->add_option("--query", ret_query, "query codebook")->required();
  s_ret->add_option("--db", ret_db, "database codebook")->required();
  s_ret->add_option("--out", ret_out, "ranked CSV: query,rank,id,distance")->required();
  s_ret->add_option("--top-k", ret_top, "rows per query (0 = full ranking)")
      ->capture_default_str();
  common(s_ret);

  // eval
  std::string ev_qcodes, ev_dbcodes, ev_qfeat, ev_dbfeat, ev_dir;
  EvalOptions ev_opt;
  auto* s_eval = app.add_subcommand("eval", "MAP@All and curves in both directions");
  s_eval->add_option("--query-codes", ev_qcodes, "query codebook prefix")->required();
  s_eval->add_option("--db-codes", ev_dbcodes, "database codebook prefix")->required();
  s_eval->add_option("--query-features", ev_qfeat, "query store (labels)")->required();
  s_eval->add_option("--db-features", ev_dbfeat, "database store (labels)")->required();
  s_eval->add_option("--out-dir", ev_dir, "report directory")->required();
  s_eval->add_flag("--exclude-zero-relevant", ev_opt.exclude_zero_relevant,
                   "drop queries with no relevant items from MAP");
  common(s_eval);

  // ablate
  SynthConfig ab_synth;
  TrainFlags ab_train;
  StructureParams ab_params;
  std::size_t ab_queries = 200;
  std::vector<std::uint64_t> ab_seeds{1, 2, 3, 4, 5};
  std::string ab_out;
  auto* s_ab = app.add_subcommand("ablate", "full model against w/o D, w/o R and w/o S");
  add_synth_options(s_ab, ab_synth);
  add_train_options(s_ab, ab_train);
  s_ab->add_option("--queries", ab_queries, "query samples")->capture_default_str();
  s_ab->add_option("--tau", ab_params.tau, "divergence threshold")->capture_default_str();
  s_ab->add_option("--alpha", ab_params.alpha, "image/text blend weight")->capture_default_str();
  s_ab->add_option("--seeds", ab_seeds, "seeds to average over")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
      ->capture_default_str();
  s_ab->add_option("--out", ab_out, "JSON summary")->required();
  s_ab->add_option("--threads", threads, "worker threads")->capture_default_str()->check(
      CLI::Range(1u, 1024u));
  s_ab->add_option("--config", config_path, "flat key=value config file");

  // bench
  std::size_t b_queries = 2000, b_db = 18015, b_bits = 128;
  std::string b_qcodes, b_dbcodes, b_out;
  auto* s_bench = app.add_subcommand("bench", "time full Hamming ranking of a query set");
  s_bench->add_option("--queries", b_queries, "random query codes")->capture_default_str();
  s_bench->add_option("--db-size", b_db, "random database codes")->capture_default_str();
  s_bench->add_option("--bits", b_bits, "code length")->capture_default_str();
  s_bench->add_option("--query-codes", b_qcodes, "use this query codebook instead");
  s_bench->add_option("--db-codes", b_dbcodes, "use this database codebook instead");
  s_bench->add_option("--out", b_out, "JSON timing report")->required();
  common(s_bench);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }

    if (s_synth->parsed()) {
      synth.seed = seed;
      synth.validate();
      if (synth_queries > 0 && synth_query_out.empty()) {
        throw Error(ErrorKind::kConfig, "cli", "--queries needs --query-out");
      }
      Manifest m(s_synth);
      const auto split = synth_split(synth, synth_queries);
      write_features(split.database, synth_out);
      if (synth_queries > 0) write_features(split.query, synth_query_out);
      m.write(synth_out);
      std::cout << "wrote " << split.database.samples << " database samples to " << synth_out;
      if (synth_queries > 0) std::cout << " and " << synth_queries << " queries to " << synth_query_out;
      std::cout << "\n";
    } else if (s_mine->parsed()) {
      mine_params.validate();
      require_file(mine_in, "feature store");
      Manifest m(s_mine);
      m.input("features", mine_in);
      const auto store = load_features_any(mine_in);
      const std::size_t views = mine_views == 0 ? store.views : mine_views;
      const auto used = take_views(store, views);
      m.set("variant", std::string(variant_name(views == 1 && store.views > 1
                                                    ? Variant::kNoDistribution
                                                    : Variant::kFull)));
      m.set("views_used", views);
      const auto s = mine_structure(used, mine_params, threads);
      if (mine_div) {
        const auto div = divergence_matrix(used, threads);
        write_structure(mine_out, s, &div);
      } else {
        write_structure(mine_out, s);
      }
      m.write(mine_out);
      std::cout << "mined " << s.s.rows() << "x" << s.s.cols() << " structure with M=" << views
                << "\n";
    } else if (s_train->parsed()) {
      train_flags.cfg.seed = seed;
      const auto cfg = train_flags.resolved();
      cfg.validate();
      require_file(train_in, "feature store");
      require_file(train_structure, "structure file");
      Manifest m(s_train);
      m.input("features", train_in);
      m.input("structure", train_structure);
      m.set("variant", train_flags.variant());
      const auto store = load_features_any(train_in);
      const auto sf = load_structure(train_structure);
      const auto result = train(store, sf.structure, cfg);
      write_checkpoint(train_out, result.params);
      if (!train_loss.empty()) io::atomic_write(train_loss, format_loss_trace(result.trace), "cli");
      m.write(train_out);
      if (!result.trace.empty()) {
        std::cout << "trained " << result.trace.size() << " epochs, final loss "
                  << result.trace.back().total << "\n";
      }
    } else if (s_enc->parsed()) {
      require_file(enc_in, "feature store");
      require_file(enc_ckpt, "checkpoint");
      Manifest m(s_enc);
      m.input("features", enc_in);
      m.input("checkpoint", enc_ckpt);
      const auto store = load_features_any(enc_in);
      const auto params = load_checkpoint(enc_ckpt);
      write_codebook(codebook_path(enc_prefix, Modality::kImage),
                     encode(params, image_inputs(store), Modality::kImage));
      write_codebook(codebook_path(enc_prefix, Modality::kText),
                     encode(params, text_inputs(store), Modality::kText));
      m.write(codebook_path(enc_prefix, Modality::kImage));
      std::cout << "encoded " << store.samples << " samples at " << params.bits() << " bits\n";
    } else if (s_ret->parsed()) {
      require_file(ret_query, "query codebook");
      require_file(ret_db, "database codebook");
      Manifest m(s_ret);
      m.input("query", ret_query);
      m.input("db", ret_db);
      const auto q = load_codebook(ret_query);
      const auto db = load_codebook(ret_db);
      const HammingRanker ranker(db);
      std::vector<RankedList> lists(q.size());
      parallel_for(q.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) lists[i] = ranker.rank(q.code(i), ret_top);
      });
      std::ostringstream out;
      out << "query,rank,id,distance\n";
      for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t r = 0; r < lists[i].size(); ++r) {
          out << q.id(i) << ',' << r + 1 << ',' << lists[i][r].id << ',' << lists[i][r].distance
              << '\n';
        }
      }
      io::atomic_write(ret_out, out.str(), "cli");
      m.write(ret_out);
    } else if (s_eval->parsed()) {
      const auto qi = codebook_path(ev_qcodes, Modality::kImage);
      const auto qt = codebook_path(ev_qcodes, Modality::kText);
      const auto di = codebook_path(ev_dbcodes, Modality::kImage);
      const auto dt = codebook_path(ev_dbcodes, Modality::kText);
      for (const auto& p : {qi, qt, di, dt}) require_file(p, "codebook");
      require_file(ev_qfeat, "query store");
      require_file(ev_dbfeat, "database store");
      Manifest m(s_eval);
      m.input("query_image", qi);
      m.input("query_text", qt);
      m.input("db_image", di);
      m.input("db_text", dt);
      m.input("query_features", ev_qfeat);
      m.input("db_features", ev_dbfeat);
      const auto qstore = load_features_any(ev_qfeat);
      const auto dbstore = load_features_any(ev_dbfeat);
      ev_opt.threads = threads;
      auto rep = evaluate_cross_modal(load_codebook(qi), load_codebook(qt), load_codebook(di),
                                      load_codebook(dt), labels_for(qstore, "query"),
                                      labels_for(dbstore, "database"), ev_opt);
      rep.dataset = fs::path(ev_dbfeat).stem().string();
      rep.seed = seed;
      for (const auto* d : {&rep.i2t, &rep.t2i}) {
        if (d->zero_relevant_queries > 0) {
          std::cerr << "warning: " << d->zero_relevant_queries
                    << " queries have no relevant database item; they score AP 0"
                    << (ev_opt.exclude_zero_relevant ? " and are excluded from MAP" : "") << "\n";
        }
      }
      write_report(ev_dir, rep);
      m.write(fs::path(ev_dir) / ("report_k" + std::to_string(rep.bits) + ".json"));
      std::cout << "MAP i2t " << rep.i2t.map << "  t2i " << rep.t2i.map << "\n";
    } else if (s_ab->parsed()) {
      ab_synth.validate();
      ab_params.validate();
      ab_train.resolved().validate();
      if (ab_seeds.empty()) throw Error(ErrorKind::kConfig, "cli", "--seeds is empty");
      Manifest m(s_ab);
      ordered_json summary;
      summary["seeds"] = ab_seeds;
      ordered_json variants = ordered_json::array();
      for (auto v : {Variant::kFull, Variant::kNoDistribution, Variant::kNoRetrieval,
                     Variant::kNoSharpen}) {
        ordered_json runs = ordered_json::array();
        double sum_i2t = 0.0, sum_t2i = 0.0;
        for (auto sd : ab_seeds) {
          PipelineConfig pc;
          pc.synth = ab_synth;
          pc.synth.seed = sd;
          pc.queries = ab_queries;
          pc.structure = ab_params;
          pc.train = ab_train.resolved();
          pc.train.seed = sd;
          pc.variant = v;
          pc.threads = threads;
          const auto r = run_pipeline(pc);
          sum_i2t += r.report.i2t.map;
          sum_t2i += r.report.t2i.map;
          runs.push_back({{"seed", sd}, {"map_i2t", r.report.i2t.map}, {"map_t2i", r.report.t2i.map}});
        }
        const double n = static_cast<double>(ab_seeds.size());
        variants.push_back({{"variant", variant_name(v)},
                            {"mean_map_i2t", sum_i2t / n},
                            {"mean_map_t2i", sum_t2i / n},
                            {"runs", runs}});
        std::cout << variant_name(v) << ": i2t " << sum_i2t / n << "  t2i " << sum_t2i / n << "\n";
      }
      summary["variants"] = variants;
      io::atomic_write(ab_out, summary.dump(2) + "\n", "cli");
      m.write(ab_out);
    } else if (s_bench->parsed()) {
      Manifest m(s_bench);
      BinaryCodebook q, db;
      if (!b_qcodes.empty() || !b_dbcodes.empty()) {
        if (b_qcodes.empty() || b_dbcodes.empty()) {
          throw Error(ErrorKind::kConfig, "cli", "--query-codes and --db-codes go together");
        }
        require_file(b_qcodes, "query codebook");
        require_file(b_dbcodes, "database codebook");
        m.input("query", b_qcodes);
        m.input("db", b_dbcodes);
        q = load_codebook(b_qcodes);
        db = load_codebook(b_dbcodes);
      } else {
        if (b_bits == 0) throw Error(ErrorKind::kConfig, "cli", "--bits must be > 0");
        std::mt19937_64 rng(seed);
        auto random_book = [&](std::size_t n, Modality mod) {
          BinaryCodebook book(b_bits, mod);
          std::vector<std::uint64_t> code(book.words_per_code());
          for (std::size_t i = 0; i < n; ++i) {
            for (auto& w : code) w = rng();
            if (b_bits % 64 != 0) code.back() &= (std::uint64_t{1} << (b_bits % 64)) - 1;
            book.push_back(code, i);
          }
          return book;
        };
        q = random_book(b_queries, Modality::kImage);
        db = random_book(b_db, Modality::kText);
      }
      if (db.empty()) {
        throw Error(ErrorKind::kContract, "retrieval-engine", "benchmark database is empty");
      }
      if (q.bits() != db.bits()) {
        throw Error(ErrorKind::kContract, "retrieval-engine", "query and database code lengths differ");
      }
      const HammingRanker ranker(db);
      std::vector<std::uint64_t> checksum(q.size());
      const auto t0 = std::chrono::steady_clock::now();
      parallel_for(q.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) checksum[i] = ranker.rank(q.code(i)).front().id;
      });
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double comparisons = static_cast<double>(q.size()) * static_cast<double>(db.size());
      ordered_json j{{"queries", q.size()},
                     {"db_size", db.size()},
                     {"bits", db.bits()},
                     {"threads", threads},
                     {"seconds", secs},
                     {"comparisons_per_second", secs > 0 ? comparisons / secs : 0.0}};
      io::atomic_write(b_out, j.dump(2) + "\n", "cli");
      m.write(b_out);
      std::cout << q.size() << " x " << db.size() << " at " << db.bits() << " bits: " << secs
                << " s\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace demohash::cli

int main(int argc, char** argv) { return demohash::cli::run(argc, argv); }
