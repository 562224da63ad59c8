#pragma once

// Knowledge-graph loading for DBP15K-style directories, relation expansion,
// normalized adjacency and name-vector entity initialization.

#include "otiea/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace otiea {

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triple {
  Index head = 0;
  Index relation = 0;
  Index tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// One side of an alignment task with dense entity and relation ids.
// Raw ids from the files are kept so that alignment links can be resolved.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  KnowledgeGraph(std::vector<std::int64_t> raw_entity_ids, std::vector<std::string> uris,
                 Index relation_count, std::vector<Triple> triples)
      : raw_ids_(std::move(raw_entity_ids)),
        uris_(std::move(uris)),
        relation_count_(relation_count),
        triples_(std::move(triples)) {
    if (raw_ids_.empty()) throw ValidationError("knowledge graph has no entities");
    if (raw_ids_.size() != uris_.size()) throw ValidationError("entity id/uri count mismatch");
    for (std::size_t i = 0; i < raw_ids_.size(); ++i) {
      if (!dense_.emplace(raw_ids_[i], static_cast<Index>(i)).second) {
        throw ValidationError("duplicate entity id " + std::to_string(raw_ids_[i]));
      }
    }
    const Index n = entity_count();
    for (const auto& t : triples_) {
      if (t.head < 0 || t.head >= n || t.tail < 0 || t.tail >= n || t.relation < 0 ||
          t.relation >= relation_count_) {
        throw ValidationError("triple references an id outside the graph");
      }
    }
    std::sort(triples_.begin(), triples_.end());
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
  }

  Index entity_count() const { return static_cast<Index>(raw_ids_.size()); }
  Index relation_count() const { return relation_count_; }
  const std::vector<Triple>& triples() const { return triples_; }
  const std::vector<std::string>& uris() const { return uris_; }
  std::int64_t raw_id(Index dense) const { return raw_ids_[static_cast<std::size_t>(dense)]; }

  std::optional<Index> dense_id(std::int64_t raw) const {
    auto it = dense_.find(raw);
    if (it == dense_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::int64_t> raw_ids_;
  std::vector<std::string> uris_;
  std::unordered_map<std::int64_t, Index> dense_;
  Index relation_count_ = 0;
  std::vector<Triple> triples_;
};

// D̃^(-1/2) (A + I) D̃^(-1/2) over a binary, symmetrized edge set.
// Parallel edges collapse to one entry and every node gets a self-loop.
inline SparseMatrix<double> normalized_adjacency(const std::vector<std::pair<Index, Index>>& edges,
                                                 Index n) {
  std::set<std::pair<Index, Index>> cells;
  for (Index i = 0; i < n; ++i) cells.emplace(i, i);
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw ValidationError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") outside node range " + std::to_string(n));
    }
    cells.emplace(a, b);
    cells.emplace(b, a);
  }
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (const auto& [a, b] : cells) degree[static_cast<std::size_t>(a)] += 1.0;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(cells.size());
  for (const auto& [a, b] : cells) {
    entries.emplace_back(a, b, 1.0 / std::sqrt(degree[static_cast<std::size_t>(a)] *
                                               degree[static_cast<std::size_t>(b)]));
  }
  SparseMatrix<double> out(n, n);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

// A graph after adding reverse (r + k) and self (2k) relations.
// Only obtainable from expand_relations(), so a graph cannot be expanded twice.
class ExpandedGraph {
 public:
  const KnowledgeGraph& base() const { return *base_; }
  Index entity_count() const { return base_->entity_count(); }
  Index relation_count() const { return 2 * base_->relation_count() + 1; }
  Index self_relation() const { return 2 * base_->relation_count(); }
  const std::vector<Triple>& triples() const { return triples_; }
  const SparseMatrix<double>& norm_adjacency() const { return adjacency_; }

  // Distinct (head, tail) pairs of the expanded triples, self-loops included.
  std::vector<std::pair<Index, Index>> edges() const {
    std::set<std::pair<Index, Index>> seen;
    for (const auto& t : triples_) seen.emplace(t.head, t.tail);
    return {seen.begin(), seen.end()};
  }

 private:
  friend ExpandedGraph expand_relations(std::shared_ptr<const KnowledgeGraph> kg);
  ExpandedGraph() = default;

  std::shared_ptr<const KnowledgeGraph> base_;
  std::vector<Triple> triples_;
  SparseMatrix<double> adjacency_;
};

inline ExpandedGraph expand_relations(std::shared_ptr<const KnowledgeGraph> kg) {
  ExpandedGraph g;
  const Index k = kg->relation_count();
  std::set<Triple> out;
  for (const auto& t : kg->triples()) {
    out.insert(t);
    out.insert(Triple{t.tail, t.relation + k, t.head});
  }
  for (Index e = 0; e < kg->entity_count(); ++e) out.insert(Triple{e, 2 * k, e});
  g.triples_.assign(out.begin(), out.end());
  g.base_ = std::move(kg);
  g.adjacency_ = normalized_adjacency(g.edges(), g.entity_count());
  return g;
}

inline ExpandedGraph expand_relations(const KnowledgeGraph& kg) {
  return expand_relations(std::make_shared<const KnowledgeGraph>(kg));
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

inline std::int64_t parse_id(const std::string& field, const std::string& where) {
  try {
    std::size_t used = 0;
    auto v = std::stoll(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": not an integer id: '" + field + "'");
  }
}

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

}  // namespace detail

// Reads `ent_ids_<side>` and `triples_<side>` from a DBP15K directory.
inline KnowledgeGraph load_kg(const std::filesystem::path& dir, int side) {
  if (side != 1 && side != 2) throw std::invalid_argument("side must be 1 or 2");
  const auto ent_path = dir / ("ent_ids_" + std::to_string(side));
  const auto tri_path = dir / ("triples_" + std::to_string(side));

  std::vector<std::int64_t> raw_ids;
  std::vector<std::string> uris;
  std::unordered_map<std::int64_t, Index> dense;
  {
    auto in = detail::open_or_throw(ent_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = detail::strip_cr(line);
      if (line.empty()) continue;
      auto fields = detail::split_tabs(line);
      const std::string where = ent_path.string() + ":" + std::to_string(lineno);
      if (fields.size() < 2) throw ValidationError(where + ": expected 'id<TAB>uri'");
      auto id = detail::parse_id(fields[0], where);
      if (!dense.emplace(id, static_cast<Index>(raw_ids.size())).second) {
        throw ValidationError(where + ": duplicate entity id " + fields[0]);
      }
      raw_ids.push_back(id);
      uris.push_back(fields[1]);
    }
  }

  std::vector<std::array<std::int64_t, 3>> raw_triples;
  std::map<std::int64_t, Index> relations;
  {
    auto in = detail::open_or_throw(tri_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = detail::strip_cr(line);
      if (line.empty()) continue;
      auto fields = detail::split_tabs(line);
      const std::string where = tri_path.string() + ":" + std::to_string(lineno);
      if (fields.size() != 3) throw ValidationError(where + ": expected 'h<TAB>r<TAB>t'");
      std::array<std::int64_t, 3> t{detail::parse_id(fields[0], where),
                                    detail::parse_id(fields[1], where),
                                    detail::parse_id(fields[2], where)};
      if (!dense.contains(t[0]) || !dense.contains(t[2])) {
        throw ValidationError(where + ": triple references unknown entity id");
      }
      relations.emplace(t[1], 0);
      raw_triples.push_back(t);
    }
  }
  Index next = 0;
  for (auto& [raw, id] : relations) id = next++;

  std::vector<Triple> triples;
  triples.reserve(raw_triples.size());
  for (const auto& t : raw_triples) {
    triples.push_back(Triple{dense.at(t[0]), relations.at(t[1]), dense.at(t[2])});
  }
  return KnowledgeGraph(std::move(raw_ids), std::move(uris), static_cast<Index>(relations.size()),
                        std::move(triples));
}

struct AlignedPair {
  Index left = 0;   // dense id in KG1
  Index right = 0;  // dense id in KG2

  friend auto operator<=>(const AlignedPair&, const AlignedPair&) = default;
};

struct SeedSet {
  std::vector<AlignedPair> train_pairs;
  std::vector<AlignedPair> test_pairs;
  double ratio = 0.0;
};

inline std::vector<AlignedPair> read_links(const std::filesystem::path& path,
                                           const KnowledgeGraph& kg1, const KnowledgeGraph& kg2) {
  auto in = detail::open_or_throw(path);
  std::vector<AlignedPair> links;
  std::set<Index> left_seen, right_seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 2) throw ValidationError(where + ": expected 'id1<TAB>id2'");
    auto a = kg1.dense_id(detail::parse_id(fields[0], where));
    auto b = kg2.dense_id(detail::parse_id(fields[1], where));
    if (!a || !b) throw ValidationError(where + ": link references unknown entity id");
    if (!left_seen.insert(*a).second || !right_seen.insert(*b).second) {
      throw ValidationError(where + ": entity appears in more than one link");
    }
    links.push_back(AlignedPair{*a, *b});
  }
  return links;
}

// Deterministic Fisher-Yates driven directly by mt19937_64 output so the
// split does not depend on the standard library's distribution algorithms.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

inline SeedSet split_links(std::vector<AlignedPair> links, double ratio, std::uint64_t rng_seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("seed ratio must lie in (0,1)");
  seeded_shuffle(links, rng_seed);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(links.size())));
  SeedSet s;
  s.ratio = ratio;
  s.train_pairs.assign(links.begin(), links.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test_pairs.assign(links.begin() + static_cast<std::ptrdiff_t>(n_train), links.end());
  return s;
}

inline SeedSet load_seeds(const std::filesystem::path& path, const KnowledgeGraph& kg1,
                          const KnowledgeGraph& kg2, double ratio, std::uint64_t rng_seed) {
  return split_links(read_links(path, kg1, kg2), ratio, rng_seed);
}

// Name tokens of a URI: last path segment, lowercased, split on '_' and any
// ASCII non-alphanumeric. Non-ASCII bytes are kept inside tokens.
inline std::vector<std::string> name_tokens(std::string_view uri) {
  auto slash = uri.find_last_of('/');
  std::string_view name = slash == std::string_view::npos ? uri : uri.substr(slash + 1);
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : name) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

struct EmbeddingMatrix {
  Matrix<double> values;

  Index dim() const { return values.cols(); }
  Index rows() const { return values.rows(); }
};

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct WordVectors {
  std::unordered_map<std::string, std::vector<double>> vectors;
  double mean_norm = 1.0;
};

// Reads `token f1 ... f_dim` lines, keeping only tokens in `wanted` (all when
// empty). A leading word2vec-style "count dim" header is skipped.
inline WordVectors load_word_vectors(const std::filesystem::path& path, Index dim,
                                     const std::unordered_set<std::string>& wanted = {}) {
  auto in = detail::open_or_throw(path);
  WordVectors wv;
  double norm_sum = 0.0;
  std::size_t count = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> v;
    double x = 0.0;
    while (ss >> x) v.push_back(x);
    if (lineno == 1 && v.size() == 1) continue;
    if (static_cast<Index>(v.size()) != dim) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": vector has " +
                            std::to_string(v.size()) + " components, expected " +
                            std::to_string(dim));
    }
    double norm = 0.0;
    for (double c : v) norm += c * c;
    norm_sum += std::sqrt(norm);
    ++count;
    if (wanted.empty() || wanted.contains(token)) wv.vectors.emplace(token, std::move(v));
  }
  if (count > 0) wv.mean_norm = norm_sum / static_cast<double>(count);
  return wv;
}

// Seeded Gaussian direction with the given Euclidean norm, keyed by text.
inline std::vector<double> fallback_vector(std::string_view key, Index dim, double norm,
                                           std::uint64_t rng_seed) {
  std::mt19937_64 rng(fnv1a(key) ^ (rng_seed * 0x9E3779B97F4A7C15ull));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double sq = 0.0;
  for (auto& c : v) {
    c = gauss(rng);
    sq += c * c;
  }
  const double scale = sq > 0.0 ? norm / std::sqrt(sq) : 0.0;
  for (auto& c : v) c *= scale;
  return v;
}

// Entity vector = mean of its name-token vectors; out-of-vocabulary tokens
// use fallback_vector(). An entity without tokens is keyed by its URI.
inline EmbeddingMatrix init_embeddings(const KnowledgeGraph& kg, const WordVectors& wv, Index dim,
                                       std::uint64_t rng_seed) {
  EmbeddingMatrix out{Matrix<double>::Zero(kg.entity_count(), dim)};
  for (Index e = 0; e < kg.entity_count(); ++e) {
    const auto& uri = kg.uris()[static_cast<std::size_t>(e)];
    auto tokens = name_tokens(uri);
    if (tokens.empty()) {
      auto v = fallback_vector("uri:" + uri, dim, wv.mean_norm, rng_seed);
      for (Index c = 0; c < dim; ++c) out.values(e, c) = v[static_cast<std::size_t>(c)];
      continue;
    }
    for (const auto& tok : tokens) {
      auto it = wv.vectors.find(tok);
      const std::vector<double> v =
          it != wv.vectors.end() ? it->second : fallback_vector(tok, dim, wv.mean_norm, rng_seed);
      if (static_cast<Index>(v.size()) != dim) throw ValidationError("word vector dimension mismatch");
      for (Index c = 0; c < dim; ++c) out.values(e, c) += v[static_cast<std::size_t>(c)];
    }
    out.values.row(e) /= static_cast<double>(tokens.size());
  }
  return out;
}

inline EmbeddingMatrix init_embeddings(const KnowledgeGraph& kg,
                                       const std::filesystem::path& vectors_path, Index dim,
                                       std::uint64_t rng_seed) {
  std::unordered_set<std::string> wanted;
  for (const auto& uri : kg.uris()) {
    for (auto& t : name_tokens(uri)) wanted.insert(std::move(t));
  }
  return init_embeddings(kg, load_word_vectors(vectors_path, dim, wanted), dim, rng_seed);
}

}  // namespace otiea
