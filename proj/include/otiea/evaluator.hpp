#pragma once

// Hits@k and MRR over held-out alignment pairs, ranked by L1 distance.

#include "otiea/kg_data.hpp"
#include "otiea/neighbors.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace otiea {

enum class Direction { kLeftToRight, kRightToLeft, kAveraged };

inline std::string to_string(Direction d) {
  switch (d) {
    case Direction::kLeftToRight: return "KG1->KG2";
    case Direction::kRightToLeft: return "KG2->KG1";
    case Direction::kAveraged: return "averaged";
  }
  return "?";
}

struct MetricsReport {
  std::map<int, double> hits;  // k -> percentage
  double mrr = 0.0;
  Direction direction = Direction::kLeftToRight;
  std::size_t n_test = 0;
};

inline const std::vector<int> kDefaultHitsAt = {1, 10};

// Rank (1 = nearest) of each pair's gold counterpart among the counterpart
// side of all test pairs. Equal distances favor the lower entity id, so a
// gold entity tied with a lower-id candidate ranks behind it.
template <typename Scalar>
std::vector<std::size_t> rank_gold(const Matrix<Scalar>& x_left, const Matrix<Scalar>& x_right,
                                   const std::vector<AlignedPair>& test_pairs) {
  std::vector<Index> queries, candidates;
  queries.reserve(test_pairs.size());
  candidates.reserve(test_pairs.size());
  for (const auto& p : test_pairs) {
    queries.push_back(p.left);
    candidates.push_back(p.right);
  }
  const auto d = pairwise_l1(x_left, queries, x_right, candidates);
  std::vector<std::size_t> ranks(test_pairs.size());
  for (std::size_t q = 0; q < test_pairs.size(); ++q) {
    const auto row = static_cast<Index>(q);
    const Scalar gold = d(row, row);
    const Index gold_id = candidates[q];
    std::size_t better = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const Scalar dc = d(row, static_cast<Index>(c));
      if (dc < gold || (dc == gold && candidates[c] < gold_id)) ++better;
    }
    ranks[q] = better + 1;
  }
  return ranks;
}

inline MetricsReport compute_metrics(const std::vector<std::size_t>& ranks,
                                     const std::vector<int>& ks = kDefaultHitsAt,
                                     Direction direction = Direction::kLeftToRight) {
  if (ranks.empty()) throw std::invalid_argument("compute_metrics: no ranks");
  MetricsReport r;
  r.direction = direction;
  r.n_test = ranks.size();
  double reciprocal = 0.0;
  for (auto rank : ranks) {
    if (rank < 1) throw std::invalid_argument("compute_metrics: ranks start at 1");
    reciprocal += 1.0 / static_cast<double>(rank);
  }
  r.mrr = reciprocal / static_cast<double>(ranks.size());
  for (int k : ks) {
    std::size_t hit = 0;
    for (auto rank : ranks) hit += rank <= static_cast<std::size_t>(k) ? 1 : 0;
    r.hits[k] = 100.0 * static_cast<double>(hit) / static_cast<double>(ranks.size());
  }
  return r;
}

struct AlignmentMetrics {
  MetricsReport left_to_right;
  MetricsReport right_to_left;
  MetricsReport averaged;
};

template <typename Scalar>
AlignmentMetrics evaluate_alignment(const Matrix<Scalar>& x_left, const Matrix<Scalar>& x_right,
                                    const std::vector<AlignedPair>& test_pairs,
                                    const std::vector<int>& ks = kDefaultHitsAt) {
  std::vector<AlignedPair> swapped;
  swapped.reserve(test_pairs.size());
  for (const auto& p : test_pairs) swapped.push_back({p.right, p.left});
  AlignmentMetrics m;
  m.left_to_right = compute_metrics(rank_gold(x_left, x_right, test_pairs), ks, Direction::kLeftToRight);
  m.right_to_left = compute_metrics(rank_gold(x_right, x_left, swapped), ks, Direction::kRightToLeft);
  m.averaged.direction = Direction::kAveraged;
  m.averaged.n_test = test_pairs.size();
  m.averaged.mrr = 0.5 * (m.left_to_right.mrr + m.right_to_left.mrr);
  for (int k : ks) m.averaged.hits[k] = 0.5 * (m.left_to_right.hits[k] + m.right_to_left.hits[k]);
  return m;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json hits = nlohmann::json::object();
  for (const auto& [k, v] : r.hits) hits[std::to_string(k)] = v;
  return {{"direction", to_string(r.direction)}, {"hits", hits}, {"mrr", r.mrr}, {"n_test", r.n_test}};
}

inline nlohmann::json to_json(const AlignmentMetrics& m) {
  return nlohmann::json::array({to_json(m.left_to_right), to_json(m.right_to_left), to_json(m.averaged)});
}

// direction,hits@k...,mrr,n_test with one row per direction.
inline std::string to_csv(const AlignmentMetrics& m) {
  std::ostringstream out;
  out.precision(17);
  out << "direction";
  for (const auto& [k, _] : m.left_to_right.hits) out << ",hits@" << k;
  out << ",mrr,n_test\n";
  for (const auto* r : {&m.left_to_right, &m.right_to_left, &m.averaged}) {
    out << to_string(r->direction);
    for (const auto& [_, v] : r->hits) out << ',' << v;
    out << ',' << r->mrr << ',' << r->n_test << '\n';
  }
  return out.str();
}

}  // namespace otiea
