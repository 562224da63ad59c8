#pragma once

// Flat `key = value` run configuration with one canonical serialization.

#include "otiea/trainer.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace otiea {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { kBase, kSemi };

struct RunConfig {
  std::string dataset;
  std::string vectors;  // empty: every name token uses the seeded fallback
  std::string output_dir = "run";
  Variant variant = Variant::kBase;
  TrainConfig train;

  TrainConfig effective_train() const {
    TrainConfig t = train;
    t.semi_supervised = variant == Variant::kSemi;
    return t;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

inline std::string unquote(const std::string& raw, const std::string& key) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') return raw;
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] == '\\') {
      if (i + 2 >= raw.size()) throw ConfigError("dangling escape in value of " + key);
      ++i;
    }
    out.push_back(raw[i]);
  }
  return out;
}

// Strips a trailing `# comment` that is outside double quotes.
inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

}  // namespace detail

struct ConfigField {
  std::string key;
  std::string doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// Every field, in canonical order, with its documentation.
inline const std::vector<ConfigField>& config_fields() {
  using detail::format_double;
  using detail::parse_bool;
  using detail::parse_number;
  using detail::quote;
  static const std::vector<ConfigField> fields = {
      {"dataset", "DBP15K-format directory (ent_ids_*, triples_*, ref_ent_ids)",
       [](const RunConfig& c) { return quote(c.dataset); },
       [](RunConfig& c, const std::string& v) { c.dataset = v; }},
      {"vectors", "word-vector file for name initialization; empty = seeded fallback only",
       [](const RunConfig& c) { return quote(c.vectors); },
       [](RunConfig& c, const std::string& v) { c.vectors = v; }},
      {"output_dir", "run directory for artifacts", [](const RunConfig& c) { return quote(c.output_dir); },
       [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
      {"variant", "base | semi",
       [](const RunConfig& c) { return quote(c.variant == Variant::kSemi ? "semi" : "base"); },
       [](RunConfig& c, const std::string& v) {
         if (v == "base") c.variant = Variant::kBase;
         else if (v == "semi") c.variant = Variant::kSemi;
         else throw ConfigError("variant must be base or semi, got '" + v + "'");
       }},
      {"wo_e", "disable the global triple feature",
       [](const RunConfig& c) { return std::string(c.train.model.ablation.without_global ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.train.model.ablation.without_global = parse_bool("wo_e", v); }},
      {"wo_o", "disable the ontology path",
       [](const RunConfig& c) { return std::string(c.train.model.ablation.without_ontology ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.train.model.ablation.without_ontology = parse_bool("wo_o", v); }},
      {"wo_c", "disable the decoder cycle (head,tail only)",
       [](const RunConfig& c) { return std::string(c.train.model.ablation.without_cycle ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.train.model.ablation.without_cycle = parse_bool("wo_c", v); }},
      {"cycle_mode", "decoder stage order: 1, 2 or 3",
       [](const RunConfig& c) { return std::to_string(c.train.model.cycle_mode); },
       [](RunConfig& c, const std::string& v) { c.train.model.cycle_mode = parse_number<int>("cycle_mode", v); }},
      {"depth", "GCN-highway layers",
       [](const RunConfig& c) { return std::to_string(c.train.model.encoder.depth); },
       [](RunConfig& c, const std::string& v) { c.train.model.encoder.depth = parse_number<int>("depth", v); }},
      {"entity_dim", "d_e",
       [](const RunConfig& c) { return std::to_string(c.train.model.encoder.entity_dim); },
       [](RunConfig& c, const std::string& v) { c.train.model.encoder.entity_dim = parse_number<Index>("entity_dim", v); }},
      {"relation_dim", "d_r",
       [](const RunConfig& c) { return std::to_string(c.train.model.encoder.relation_dim); },
       [](RunConfig& c, const std::string& v) { c.train.model.encoder.relation_dim = parse_number<Index>("relation_dim", v); }},
      {"ontology_dim", "d_o",
       [](const RunConfig& c) { return std::to_string(c.train.model.encoder.ontology_dim); },
       [](RunConfig& c, const std::string& v) { c.train.model.encoder.ontology_dim = parse_number<Index>("ontology_dim", v); }},
      {"margin", "hinge margin λ", [](const RunConfig& c) { return format_double(c.train.margin); },
       [](RunConfig& c, const std::string& v) { c.train.margin = parse_number<double>("margin", v); }},
      {"negatives_k", "nearest neighbors per entity for negative sampling",
       [](const RunConfig& c) { return std::to_string(c.train.negatives_k); },
       [](RunConfig& c, const std::string& v) { c.train.negatives_k = parse_number<int>("negatives_k", v); }},
      {"epochs", "training epochs", [](const RunConfig& c) { return std::to_string(c.train.epochs); },
       [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<int>("epochs", v); }},
      {"expansion_period", "epochs between negative refreshes and seed expansion",
       [](const RunConfig& c) { return std::to_string(c.train.expansion_period); },
       [](RunConfig& c, const std::string& v) { c.train.expansion_period = parse_number<int>("expansion_period", v); }},
      {"learning_rate", "Adam step size", [](const RunConfig& c) { return format_double(c.train.learning_rate); },
       [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_number<double>("learning_rate", v); }},
      {"seed", "seed for the split, initialization and sampling",
       [](const RunConfig& c) { return std::to_string(c.train.rng_seed); },
       [](RunConfig& c, const std::string& v) { c.train.rng_seed = parse_number<std::uint64_t>("seed", v); }},
      {"train_ratio", "fraction of links used as training seeds",
       [](const RunConfig& c) { return format_double(c.train.train_ratio); },
       [](RunConfig& c, const std::string& v) { c.train.train_ratio = parse_number<double>("train_ratio", v); }},
  };
  return fields;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : config_fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

inline std::string serialize(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& f : config_fields()) out << f.key << " = " << f.get(cfg) << '\n';
  return out.str();
}

inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto key = detail::trim(body.substr(0, eq));
    set_config_value(base, key, detail::unquote(detail::trim(body.substr(eq + 1)), key));
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace otiea
