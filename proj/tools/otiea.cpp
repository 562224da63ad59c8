// otiea: train, evaluate, sweep and synthetic data generation.

#include "otiea/otiea.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace otiea;

namespace {

constexpr int kExitMissingDataset = 2;

struct RunFlags {
  std::string config;
  std::string dataset;
  std::string variant;
  std::vector<std::string> ablations;
  int mode = 0;
  int depth = 0;
  std::string seed;
  std::string out;
  std::vector<std::string> sets;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
    cmd.add_option("--dataset", dataset, "DBP15K-format directory");
    cmd.add_option("--variant", variant, "base or semi")->check(CLI::IsMember({"base", "semi"}));
    cmd.add_option("--ablation", ablations, "wo-E, wo-O or wo-C (repeatable)")
        ->check(CLI::IsMember({"wo-E", "wo-O", "wo-C"}));
    cmd.add_option("--mode", mode, "decoder cycle mode")->check(CLI::Range(1, 3));
    cmd.add_option("--depth", depth, "GCN-highway layers")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", seed, "seed for split, initialization and sampling");
    cmd.add_option("--out", out, "output directory");
    cmd.add_option("--set", sets, "override any config key, as key=value (repeatable)");
  }

  // File values first, then --set, then the dedicated flags.
  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!dataset.empty()) cfg.dataset = dataset;
    if (!variant.empty()) set_config_value(cfg, "variant", variant);
    for (const auto& a : ablations) {
      if (a == "wo-E") cfg.train.model.ablation.without_global = true;
      if (a == "wo-O") cfg.train.model.ablation.without_ontology = true;
      if (a == "wo-C") cfg.train.model.ablation.without_cycle = true;
    }
    if (mode != 0) cfg.train.model.cycle_mode = mode;
    if (depth != 0) cfg.train.model.encoder.depth = depth;
    if (!seed.empty()) set_config_value(cfg, "seed", seed);
    if (!out.empty()) cfg.output_dir = out;
    cfg.effective_train().validate();
    return cfg;
  }
};

class MissingDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw MissingDataset("no dataset given (use --dataset or the dataset key)");
  if (!fs::is_directory(cfg.dataset)) throw MissingDataset("dataset directory not found: " + cfg.dataset);
}

std::string metrics_text(const AlignmentMetrics& m) { return to_json(m).dump(2) + "\n"; }

int cmd_train(const RunFlags& flags) {
  auto cfg = flags.resolve();
  require_dataset(cfg);
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  write_text(out / "config.snapshot", serialize(cfg));

  auto run = prepare_run(cfg);
  std::cerr << "train: " << run.data.left->entity_count() << " / " << run.data.right->entity_count()
            << " entities, " << run.seeds.train_pairs.size() << " seed pairs, " << run.seeds.test_pairs.size()
            << " test pairs\n";
  const auto start = std::chrono::steady_clock::now();
  auto result = run_training(cfg, run, [&](const EpochRecord& r) {
    if (r.epoch % 10 == 0 || r.added_pairs > 0) {
      std::cerr << "epoch " << r.epoch << " loss " << r.loss << " train_pairs " << r.train_pairs;
      if (r.added_pairs > 0) std::cerr << " (+" << r.added_pairs << ")";
      std::cerr << '\n';
    }
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Checkpoint<TrainScalar> ck;
  ck.config_text = serialize(cfg);
  ck.epoch = static_cast<std::uint64_t>(result.state.epoch);
  ck.parameters = std::move(result.parameters);
  ck.train_pairs = result.state.train_pairs;
  save_checkpoint(out / "checkpoint.bin", ck);
  write_text(out / "loss.csv", loss_csv(result.state));
  write_text(out / "expansion.log", expansion_log(result.state, run.data));
  write_text(out / "metrics.json", metrics_text(result.metrics));
  std::cout << to_csv(result.metrics);
  std::cerr << "trained in " << secs << " s, artifacts in " << out.string() << '\n';
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& dataset, const std::string& out) {
  auto ck = load_checkpoint<TrainScalar>(checkpoint);
  auto cfg = parse_config(ck.config_text);
  if (!dataset.empty()) cfg.dataset = dataset;
  require_dataset(cfg);
  auto run = prepare_run(cfg);
  auto metrics = evaluate_checkpoint(ck, cfg, run);
  const auto text = metrics_text(metrics);
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "metrics.json", text);
  }
  std::cout << text;
  return 0;
}

std::vector<std::string> default_axis_values(const std::string& axis) {
  if (axis == "dims") return {"50", "100", "150", "200", "250", "300"};
  if (axis == "depth") return {"1", "2", "3"};
  if (axis == "ratio") return {"0.25", "0.3", "0.35", "0.4", "0.45", "0.5"};
  return {"1", "2", "3"};
}

void apply_axis(RunConfig& cfg, const std::string& axis, const std::string& value) {
  if (axis == "dims") {
    set_config_value(cfg, "relation_dim", value);
    set_config_value(cfg, "ontology_dim", value);
  } else if (axis == "depth") {
    set_config_value(cfg, "depth", value);
  } else if (axis == "ratio") {
    set_config_value(cfg, "train_ratio", value);
  } else {
    set_config_value(cfg, "cycle_mode", value);
  }
  cfg.effective_train().validate();
}

int cmd_sweep(const RunFlags& flags, const std::string& axis, std::vector<std::string> values) {
  auto base = flags.resolve();
  require_dataset(base);
  if (values.empty()) values = default_axis_values(axis);
  const fs::path out = base.output_dir;
  fs::create_directories(out);
  write_text(out / "config.snapshot", serialize(base));

  std::ostringstream csv;
  csv.precision(17);
  csv << "axis,value,status,hits@1,hits@10,mrr,l2r_hits@1,r2l_hits@1,seconds\n";
  int failures = 0;
  for (const auto& value : values) {
    const auto start = std::chrono::steady_clock::now();
    try {
      RunConfig cfg = base;
      apply_axis(cfg, axis, value);
      auto result = run_training(cfg, prepare_run(cfg));
      const auto& m = result.metrics;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      csv << axis << ',' << value << ",ok," << m.averaged.hits.at(1) << ',' << m.averaged.hits.at(10) << ','
          << m.averaged.mrr << ',' << m.left_to_right.hits.at(1) << ',' << m.right_to_left.hits.at(1) << ','
          << secs << '\n';
      std::cerr << "sweep " << axis << '=' << value << ": hits@1 " << m.averaged.hits.at(1) << '\n';
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "sweep " << axis << '=' << value << " failed: " << e.what() << '\n';
      csv << axis << ',' << value << ",error,,,,,,\n";
    }
    write_text(out / "sweep.csv", csv.str());
  }
  std::cout << csv.str();
  return failures == static_cast<int>(values.size()) ? 1 : 0;
}

int cmd_gen_synth(const SynthSpec& spec, const std::string& out) {
  write_synthetic_dataset(spec, out);
  std::cerr << "wrote synthetic pair (" << spec.entities << " entities, " << spec.triples << " triples) to " << out
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual entity alignment with ontology-enhanced triple encoding"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train a model and write run artifacts");
  train_flags.attach(*train);

  std::string ck_path, eval_dataset, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "recompute metrics from a checkpoint");
  evaluate->add_option("checkpoint", ck_path, "checkpoint.bin written by train")->required();
  evaluate->add_option("--dataset", eval_dataset, "dataset directory (default: the one recorded at train time)");
  evaluate->add_option("--out", eval_out, "also write metrics.json here");

  RunFlags sweep_flags;
  std::string axis;
  std::vector<std::string> axis_values;
  auto* sweep = app.add_subcommand("sweep", "train one model per axis value and collect sweep.csv");
  sweep_flags.attach(*sweep);
  sweep->add_option("--axis", axis, "dims, depth, ratio or mode")
      ->required()
      ->check(CLI::IsMember({"dims", "depth", "ratio", "mode"}));
  sweep->add_option("--values", axis_values, "axis values (default: the standard grid for the axis)");

  SynthSpec spec;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "write a synthetic DBP15K-format graph pair");
  gen->add_option("--entities", spec.entities, "entities per graph")->capture_default_str();
  gen->add_option("--relations", spec.relations, "relation types")->capture_default_str();
  gen->add_option("--triples", spec.triples, "triples per graph")->capture_default_str();
  gen->add_option("--noise", spec.noise, "fraction of KG2 triples rewired, in [0,1)")->capture_default_str();
  gen->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  gen->add_option("--out", synth_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_flags);
    if (*evaluate) return cmd_evaluate(ck_path, eval_dataset, eval_out);
    if (*sweep) return cmd_sweep(sweep_flags, axis, axis_values);
    if (*gen) return cmd_gen_synth(spec, synth_out);
  } catch (const MissingDataset& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingDataset;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
