#pragma once

// Synthetic DBP15K-format graph pairs: KG2 is an id-permuted copy of KG1
// with a fraction of its triples rewired.

#include "otiea/kg_data.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace otiea {

struct SynthSpec {
  Index entities = 200;
  Index relations = 20;
  Index triples = 600;
  double noise = 0.0;
  std::uint64_t seed = 7;
};

struct SynthPair {
  std::vector<Triple> left_triples;
  std::vector<Triple> right_triples;  // in KG2 dense ids
  std::vector<Index> entity_map;      // KG1 id -> KG2 id
  std::vector<Index> relation_map;    // KG1 relation -> KG2 relation
};

inline SynthPair make_synthetic_pair(const SynthSpec& s) {
  if (s.entities < 2 || s.relations < 1 || s.triples < 1) {
    throw std::invalid_argument("synthetic graph needs >= 2 entities, >= 1 relation, >= 1 triple");
  }
  if (!(s.noise >= 0.0 && s.noise < 1.0)) throw std::invalid_argument("noise must lie in [0,1)");
  const auto max_triples = s.entities * (s.entities - 1) * s.relations;
  if (s.triples > max_triples) throw std::invalid_argument("more triples requested than distinct ones exist");

  std::mt19937_64 rng(s.seed);
  auto pick = [&](Index n) { return static_cast<Index>(rng() % static_cast<std::uint64_t>(n)); };

  std::set<Triple> kg1;
  // A random tree first so no entity is isolated, then uniform fill.
  for (Index e = 1; e < s.entities && static_cast<Index>(kg1.size()) < s.triples; ++e) {
    const Index other = pick(e);
    const Index r = pick(s.relations);
    kg1.insert(rng() % 2 ? Triple{e, r, other} : Triple{other, r, e});
  }
  while (static_cast<Index>(kg1.size()) < s.triples) {
    const Index h = pick(s.entities), t = pick(s.entities);
    if (h == t) continue;
    kg1.insert(Triple{h, pick(s.relations), t});
  }

  SynthPair out;
  out.left_triples.assign(kg1.begin(), kg1.end());
  out.entity_map.resize(static_cast<std::size_t>(s.entities));
  std::iota(out.entity_map.begin(), out.entity_map.end(), Index{0});
  seeded_shuffle(out.entity_map, s.seed + 1);
  out.relation_map.resize(static_cast<std::size_t>(s.relations));
  std::iota(out.relation_map.begin(), out.relation_map.end(), Index{0});
  seeded_shuffle(out.relation_map, s.seed + 2);

  std::vector<Triple> mapped;
  mapped.reserve(out.left_triples.size());
  for (const auto& t : out.left_triples) {
    mapped.push_back({out.entity_map[static_cast<std::size_t>(t.head)],
                      out.relation_map[static_cast<std::size_t>(t.relation)],
                      out.entity_map[static_cast<std::size_t>(t.tail)]});
  }
  // Rewire the tails of a `noise` fraction of triples, keeping them distinct.
  const auto n_noisy = static_cast<std::size_t>(s.noise * static_cast<double>(mapped.size()));
  std::vector<std::size_t> order(mapped.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  seeded_shuffle(order, s.seed + 3);
  std::set<Triple> present(mapped.begin(), mapped.end());
  for (std::size_t i = 0; i < n_noisy; ++i) {
    auto& t = mapped[order[i]];
    for (int attempt = 0; attempt < 64; ++attempt) {
      Triple candidate{t.head, t.relation, pick(s.entities)};
      if (candidate.tail == t.head || present.contains(candidate)) continue;
      present.erase(t);
      present.insert(candidate);
      t = candidate;
      break;
    }
  }
  out.right_triples.assign(present.begin(), present.end());
  return out;
}

// Writes ent_ids_{1,2}, triples_{1,2} and ref_ent_ids. KG2 entity raw ids are
// offset by the entity count and relation raw ids by the relation count, as
// in DBP15K where both sides share one id space.
inline SynthPair write_synthetic_dataset(const SynthSpec& s, const std::filesystem::path& dir) {
  auto pair = make_synthetic_pair(s);
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw LoadError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("ent_ids_1");
    for (Index e = 0; e < s.entities; ++e) f << e << "\thttp://synthetic.kg1/resource/a" << e << "x\n";
  }
  {
    auto f = open("ent_ids_2");
    for (Index e = 0; e < s.entities; ++e) {
      f << (s.entities + e) << "\thttp://synthetic.kg2/resource/b" << e << "y\n";
    }
  }
  {
    auto f = open("triples_1");
    for (const auto& t : pair.left_triples) f << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
  {
    auto f = open("triples_2");
    for (const auto& t : pair.right_triples) {
      f << (s.entities + t.head) << '\t' << (s.relations + t.relation) << '\t' << (s.entities + t.tail)
        << '\n';
    }
  }
  {
    auto f = open("ref_ent_ids");
    for (Index e = 0; e < s.entities; ++e) {
      f << e << '\t' << (s.entities + pair.entity_map[static_cast<std::size_t>(e)]) << '\n';
    }
  }
  return pair;
}

}  // namespace otiea
