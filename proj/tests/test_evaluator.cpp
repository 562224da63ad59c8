#include "support/fixtures.hpp"

#include <gtest/gtest.h>

namespace otiea {
namespace {

using testing::random_matrix;
using M = Matrix<double>;

std::vector<AlignedPair> identity_pairs(Index n) {
  std::vector<AlignedPair> out;
  for (Index e = 0; e < n; ++e) out.push_back({e, e});
  return out;
}

TEST(Metrics, PerfectRanks) {
  auto r = compute_metrics({1, 1, 1});
  EXPECT_EQ(r.hits.at(1), 100.0);
  EXPECT_EQ(r.hits.at(10), 100.0);
  EXPECT_EQ(r.mrr, 1.0);
  EXPECT_EQ(r.n_test, 3u);
}

TEST(Metrics, MixedRanks) {
  auto r = compute_metrics({1, 2, 4});
  EXPECT_NEAR(r.hits.at(1), 33.333333333333336, 1e-12);
  EXPECT_EQ(r.hits.at(10), 100.0);
  EXPECT_NEAR(r.mrr, (1.0 + 0.5 + 0.25) / 3.0, 1e-15);
}

TEST(Metrics, InvalidInput) {
  EXPECT_THROW(compute_metrics({}), std::invalid_argument);
  EXPECT_THROW(compute_metrics({1, 0}), std::invalid_argument);
}

TEST(Metrics, HitsMonotoneInK) {
  std::mt19937_64 rng(1);
  std::vector<std::size_t> ranks(200);
  for (auto& r : ranks) r = 1 + rng() % 50;
  auto m = compute_metrics(ranks, {1, 5, 10, 50});
  EXPECT_LE(m.hits.at(1), m.hits.at(5));
  EXPECT_LE(m.hits.at(5), m.hits.at(10));
  EXPECT_LE(m.hits.at(10), m.hits.at(50));
  EXPECT_EQ(m.hits.at(50), 100.0);
}

TEST(RankGold, IdenticalEmbeddingsRankFirst) {
  M x = random_matrix(6, 3, 2);
  for (auto r : rank_gold(x, x, identity_pairs(6))) EXPECT_EQ(r, 1u);
}

TEST(RankGold, TieGoesToLowerId) {
  M xl(2, 1), xr(2, 1);
  xl << 0, 10;
  xr << -1, 1;  // both right entities are at distance 1 from left 0
  auto ranks = rank_gold(xl, xr, {{0, 1}, {1, 0}});
  EXPECT_EQ(ranks[0], 2u);
}

TEST(RankGold, MatchesBruteForce) {
  M xl = random_matrix(30, 4, 3), xr = random_matrix(30, 4, 4);
  auto pairs = identity_pairs(30);
  auto ranks = rank_gold(xl, xr, pairs);
  for (Index q = 0; q < 30; ++q) {
    const double gold = (xl.row(q) - xr.row(q)).cwiseAbs().sum();
    std::size_t better = 0;
    for (Index c = 0; c < 30; ++c) better += (xl.row(q) - xr.row(c)).cwiseAbs().sum() < gold ? 1 : 0;
    EXPECT_EQ(ranks[static_cast<std::size_t>(q)], better + 1);
  }
}

TEST(EvaluateAlignment, InvariantToPairOrderAndScale) {
  M xl = random_matrix(25, 4, 5), xr = random_matrix(25, 4, 6);
  auto pairs = identity_pairs(25);
  auto base = evaluate_alignment(xl, xr, pairs);
  auto shuffled = pairs;
  seeded_shuffle(shuffled, 9);
  auto perm = evaluate_alignment(xl, xr, shuffled);
  EXPECT_EQ(base.averaged.hits, perm.averaged.hits);
  EXPECT_NEAR(base.averaged.mrr, perm.averaged.mrr, 1e-12);
  M sl = xl * 3.0, sr = xr * 3.0;
  auto scaled = evaluate_alignment(sl, sr, pairs);
  EXPECT_EQ(base.averaged.hits, scaled.averaged.hits);
  EXPECT_NEAR(base.averaged.mrr, scaled.averaged.mrr, 1e-12);
}

TEST(EvaluateAlignment, AveragesBothDirections) {
  M xl = random_matrix(20, 3, 7), xr = random_matrix(20, 3, 8);
  auto m = evaluate_alignment(xl, xr, identity_pairs(20));
  EXPECT_EQ(m.averaged.hits.at(1), 0.5 * (m.left_to_right.hits.at(1) + m.right_to_left.hits.at(1)));
  EXPECT_EQ(m.averaged.mrr, 0.5 * (m.left_to_right.mrr + m.right_to_left.mrr));
  EXPECT_EQ(m.right_to_left.direction, Direction::kRightToLeft);
}

TEST(Report, JsonAndCsv) {
  M x = random_matrix(4, 2, 9);
  auto m = evaluate_alignment(x, x, identity_pairs(4));
  auto j = to_json(m);
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["direction"], "KG1->KG2");
  EXPECT_EQ(j[2]["hits"]["1"], 100.0);
  EXPECT_EQ(j[1]["n_test"], 4);
  auto csv = to_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "direction,hits@1,hits@10,mrr,n_test");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
}  // namespace otiea
