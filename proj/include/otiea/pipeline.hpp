#pragma once

// Dataset loading and whole-run orchestration used by the command-line tool.

#include "otiea/checkpoint.hpp"
#include "otiea/config.hpp"
#include "otiea/evaluator.hpp"
#include "otiea/kg_data.hpp"
#include "otiea/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

namespace otiea {

// Training is single precision; tests that check gradients use double.
using TrainScalar = float;

struct Dataset {
  std::shared_ptr<const KnowledgeGraph> left;
  std::shared_ptr<const KnowledgeGraph> right;
  std::vector<AlignedPair> links;
};

inline Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw LoadError("dataset directory not found: " + dir.string());
  Dataset d;
  d.left = std::make_shared<const KnowledgeGraph>(load_kg(dir, 1));
  d.right = std::make_shared<const KnowledgeGraph>(load_kg(dir, 2));
  d.links = read_links(dir / "ref_ent_ids", *d.left, *d.right);
  return d;
}

struct PreparedRun {
  Dataset data;
  ExpandedGraph left;
  ExpandedGraph right;
  SeedSet seeds;
};

inline PreparedRun prepare_run(const RunConfig& cfg) {
  auto data = load_dataset(cfg.dataset);
  auto seeds = split_links(data.links, cfg.train.train_ratio, cfg.train.rng_seed);
  auto left = expand_relations(data.left);
  auto right = expand_relations(data.right);
  return PreparedRun{std::move(data), std::move(left), std::move(right), std::move(seeds)};
}

inline std::pair<EmbeddingMatrix, EmbeddingMatrix> initial_embeddings(const RunConfig& cfg,
                                                                      const Dataset& data) {
  const Index dim = cfg.train.model.encoder.entity_dim;
  if (cfg.vectors.empty()) {
    WordVectors none;
    return {init_embeddings(*data.left, none, dim, cfg.train.rng_seed),
            init_embeddings(*data.right, none, dim, cfg.train.rng_seed)};
  }
  return {init_embeddings(*data.left, cfg.vectors, dim, cfg.train.rng_seed),
          init_embeddings(*data.right, cfg.vectors, dim, cfg.train.rng_seed)};
}

struct RunResult {
  AlignmentState<TrainScalar> state;
  AlignmentMetrics metrics;
  ParameterStore<TrainScalar> parameters;
};

inline RunResult run_training(const RunConfig& cfg, const PreparedRun& run,
                              const Trainer<TrainScalar>::EpochCallback& on_epoch = {}) {
  const auto tcfg = cfg.effective_train();
  tcfg.validate();
  auto [x1, x2] = initial_embeddings(cfg, run.data);
  Trainer<TrainScalar> trainer(run.left, run.right, tcfg,
                               make_training_parameters<TrainScalar>(tcfg.model.encoder, x1, x2,
                                                                     tcfg.rng_seed));
  auto state = trainer.train(run.seeds, on_epoch);
  auto metrics = evaluate_alignment(state.final_left, state.final_right, run.seeds.test_pairs);
  return RunResult{std::move(state), std::move(metrics), trainer.parameters()};
}

// Rebuilds the final embeddings of a checkpoint against `run`'s graphs.
inline AlignmentMetrics evaluate_checkpoint(const Checkpoint<TrainScalar>& ck, const RunConfig& cfg,
                                            const PreparedRun& run) {
  const auto tcfg = cfg.effective_train();
  tcfg.validate();
  auto [x1, x2] = initial_embeddings(cfg, run.data);
  auto expected = make_training_parameters<TrainScalar>(tcfg.model.encoder, x1, x2, tcfg.rng_seed);
  check_compatible(ck.parameters, expected);
  Trainer<TrainScalar> trainer(run.left, run.right, tcfg, ck.parameters);
  auto [l, r] = trainer.embed();
  return evaluate_alignment(l, r, run.seeds.test_pairs);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
}

inline std::string loss_csv(const AlignmentState<TrainScalar>& state) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,loss,train_pairs,added_pairs\n";
  for (const auto& r : state.history) {
    out << r.epoch << ',' << r.loss << ',' << r.train_pairs << ',' << r.added_pairs << '\n';
  }
  return out.str();
}

// One line per added pair: epoch, KG1 raw id, KG2 raw id, L1 distance.
inline std::string expansion_log(const AlignmentState<TrainScalar>& state, const Dataset& data) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch\tkg1_id\tkg2_id\tdistance\n";
  for (const auto& round : state.expansion_log) {
    for (const auto& a : round.added) {
      out << round.epoch << '\t' << data.left->raw_id(a.pair.left) << '\t'
          << data.right->raw_id(a.pair.right) << '\t' << a.distance << '\n';
    }
  }
  return out.str();
}

}  // namespace otiea
