#include "support/fixtures.hpp"

#include <gtest/gtest.h>

namespace otiea {
namespace {

using testing::max_abs_diff;
using testing::random_matrix;
using M = Matrix<double>;

struct Instance {
  std::vector<Triple> triples;
  Index n = 0;
  TripleIndex index;
  EncoderConfig cfg = testing::toy_config();
  ParameterStore<double> store;
  M ensemble;
  M x;
};

Instance make(std::vector<Triple> triples, Index n, Index relations, std::uint64_t seed) {
  Instance in;
  in.triples = std::move(triples);
  in.n = n;
  in.index = TripleIndex::build(in.triples, n, relations);
  in.store = testing::random_parameters(in.cfg, seed);
  in.ensemble = random_matrix(static_cast<Index>(in.triples.size()), in.cfg.triple_dim(), seed + 1);
  in.x = random_matrix(n, in.cfg.entity_dim, seed + 2);
  return in;
}

Instance from_graph(Index n, Index k, Index m, std::uint64_t seed) {
  auto g = expand_relations(testing::random_kg(n, k, m, seed));
  return make(g.triples(), n, g.relation_count(), seed);
}

TEST(CycleMode, StageOrders) {
  using R = EntityRole;
  EXPECT_EQ(CycleMode::from_number(1).stages(), (std::vector<R>{R::kHead, R::kTail}));
  EXPECT_EQ(CycleMode::from_number(2).stages(), (std::vector<R>{R::kHead, R::kTail, R::kHead}));
  EXPECT_EQ(CycleMode::from_number(3).stages(), (std::vector<R>{R::kHead, R::kTail, R::kHead, R::kTail}));
  EXPECT_THROW(CycleMode::from_number(0), std::invalid_argument);
  EXPECT_THROW(CycleMode::from_number(4), std::invalid_argument);
}

TEST(RoleAttention, SingletonHeadUpdate) {
  auto in = make({{0, 0, 1}}, 2, 1, 1);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, in.store);
  auto r = role_attention(EntityRole::kHead, tape.constant(in.ensemble), tape.constant(in.x), in.index, p);
  EXPECT_EQ(r.weights.value()(0, 0), 1.0);
  M want0 = in.x.row(0) + (in.ensemble * in.store.at(param::kDecHeadW)).cwiseMax(0.0);
  EXPECT_LT((r.output.value().row(0) - want0).cwiseAbs().maxCoeff(), 1e-15);
  // Entity 1 is never a head.
  EXPECT_EQ(r.output.value().row(1), in.x.row(1));
}

TEST(RoleAttention, ZeroWeightIsIdentity) {
  auto in = from_graph(10, 3, 15, 2);
  in.store.at(param::kDecHeadW).setZero();
  in.store.at(param::kDecTailW).setZero();
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, in.store);
  for (auto role : {EntityRole::kHead, EntityRole::kTail}) {
    EXPECT_EQ(role_attention(role, tape.constant(in.ensemble), tape.constant(in.x), in.index, p).output.value(), in.x);
  }
}

TEST(RoleAttention, WeightsSumToOnePerEntity) {
  auto in = from_graph(15, 3, 30, 3);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, in.store);
  for (auto role : {EntityRole::kHead, EntityRole::kTail}) {
    auto w = role_attention(role, tape.constant(in.ensemble), tape.constant(in.x), in.index, p).weights.value();
    std::vector<double> sums(static_cast<std::size_t>(in.n), 0.0);
    const auto& anchor = role == EntityRole::kHead ? *in.index.heads : *in.index.tails;
    for (std::size_t k = 0; k < anchor.size(); ++k) sums[static_cast<std::size_t>(anchor[k])] += w(static_cast<Index>(k), 0);
    // The self relation makes every entity both a head and a tail.
    for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(RoleAttention, TwelveTripleGraphMatchesScriptedOracle) {
  auto in = make({{0, 0, 1}, {0, 1, 2}, {1, 0, 2}, {2, 1, 3}, {3, 0, 0}, {3, 1, 1}, {4, 0, 0}, {4, 1, 2},
                  {2, 0, 4}, {1, 1, 4}, {0, 0, 3}, {4, 0, 3}},
                 5, 2, 4);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, in.store);
  auto P = reference::from_store(in.store);
  for (int role : {0, 1}) {
    auto r = role_attention(role == 0 ? EntityRole::kHead : EntityRole::kTail, tape.constant(in.ensemble),
                            tape.constant(in.x), in.index, p);
    auto want = reference::role_stage(role, in.triples, reference::from_eigen(in.ensemble), reference::from_eigen(in.x), P);
    EXPECT_LT(max_abs_diff(r.weights.value(), want.weights), 1e-10);
    EXPECT_LT(max_abs_diff(r.output.value(), want.output), 1e-10);
  }
}

TEST(CycleCoEnhance, ModeOneIsPrefixOfModeTwo) {
  auto in = from_graph(12, 3, 20, 5);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, in.store);
  auto t = tape.constant(in.ensemble);
  auto x = tape.constant(in.x);
  auto m1 = cycle_co_enhance(t, x, in.index, CycleMode::from_number(1), p);
  auto m2 = cycle_co_enhance(t, x, in.index, CycleMode::from_number(2), p);
  auto m3 = cycle_co_enhance(t, x, in.index, CycleMode::from_number(3), p);
  ASSERT_EQ(m1.size(), 2u);
  ASSERT_EQ(m2.size(), 3u);
  ASSERT_EQ(m3.size(), 4u);
  EXPECT_EQ(m1[1].output.value(), m2[1].output.value());
  EXPECT_EQ(m2[2].output.value(), m3[2].output.value());
  auto extra = role_attention(EntityRole::kTail, t, m2.back().output, in.index, p);
  EXPECT_EQ(m3.back().output.value(), extra.output.value());
}

TEST(NeighborReaggregate, SelfLoopsOnly) {
  auto store = testing::random_parameters(testing::toy_config(), 6);
  M x = random_matrix(4, 4, 7);
  auto nbr = NeighborIndex::build({{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 4);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, store);
  auto g = neighbor_reaggregate(tape.constant(x), nbr, p);
  M want = x + (x * store.at(param::kGatW)).cwiseMax(0.0);
  EXPECT_LT((g.output.value() - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(g.weights.value(), M::Ones(4, 1));
}

TEST(NeighborReaggregate, SymmetricNodesGiveIdenticalRows) {
  auto store = testing::random_parameters(testing::toy_config(), 8);
  // Path 1 - 0 - 2 with self-loops: nodes 1 and 2 are interchangeable.
  auto g = expand_relations(testing::permuted(testing::random_kg(3, 1, 0, 1), {0, 1, 2}));
  auto nbr = NeighborIndex::build({{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {2, 0}, {2, 2}}, 3);
  M x = random_matrix(3, 4, 9);
  x.row(2) = x.row(1);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, store);
  auto out = neighbor_reaggregate(tape.constant(x), nbr, p).output.value();
  EXPECT_EQ(out.row(1), out.row(2));
  (void)g;
}

TEST(NeighborReaggregate, MatchesScriptedOracle) {
  auto g = expand_relations(testing::random_kg(8, 2, 12, 10));
  auto store = testing::random_parameters(testing::toy_config(), 11);
  M x = random_matrix(8, 4, 12);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, store);
  auto out = neighbor_reaggregate(tape.constant(x), NeighborIndex::build(g), p);
  auto want = reference::gat(reference::from_eigen(x), g.edges(), reference::from_store(store));
  EXPECT_LT(max_abs_diff(out.output.value(), want.output), 1e-10);
  // Softmax over each node's neighbors.
  std::vector<double> sums(8, 0.0);
  const auto edges = g.edges();
  for (std::size_t k = 0; k < edges.size(); ++k) {
    sums[static_cast<std::size_t>(edges[k].first)] += out.weights.value()(static_cast<Index>(k), 0);
  }
  for (double s : sums) EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(NeighborReaggregate, NodeCountMismatch) {
  auto store = testing::random_parameters(testing::toy_config(), 13);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, store);
  EXPECT_THROW(neighbor_reaggregate(tape.constant(M::Zero(3, 4)), NeighborIndex::build({{0, 0}}, 4), p), ShapeError);
}

TEST(Decoder, PermutationEquivariant) {
  auto kg = testing::random_kg(9, 3, 14, 14);
  auto perm = testing::random_permutation(9, 15);
  auto kg2 = testing::permuted(kg, perm);
  ModelConfig cfg;
  cfg.encoder = testing::toy_config();
  auto store = testing::random_parameters(cfg.encoder, 16);
  M x0 = random_matrix(9, cfg.encoder.entity_dim, 17);
  auto g1 = expand_relations(kg);
  auto g2 = expand_relations(kg2);
  auto c1 = GraphContext<double>::build(g1);
  auto c2 = GraphContext<double>::build(g2);
  ad::Tape<double> tape;
  BoundParameters<double> p(tape, store);
  auto a = forward(c1, tape.constant(x0), cfg, p).final_embeddings().value();
  auto b = forward(c2, tape.constant(testing::permute_rows(x0, perm)), cfg, p).final_embeddings().value();
  for (Index e = 0; e < 9; ++e) {
    EXPECT_LT((a.row(e) - b.row(perm[static_cast<std::size_t>(e)])).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Decoder, GradientsMatchFiniteDifferences) {
  auto in = from_graph(6, 2, 7, 18);
  M weights = random_matrix(6, in.cfg.entity_dim, 19);
  auto nbr = NeighborIndex::build(expand_relations(testing::random_kg(6, 2, 7, 18)));
  auto objective = [&](std::map<std::string, M>* grads) {
    ad::Tape<double> tape;
    BoundParameters<double> p(tape, in.store);
    auto stages = cycle_co_enhance(tape.constant(in.ensemble), tape.constant(in.x), in.index,
                                   CycleMode::from_number(3), p);
    auto out = neighbor_reaggregate(stages.back().output, nbr, p).output;
    auto loss = ad::sum(ad::cwise_mul(out, tape.constant(weights)));
    if (grads) {
      tape.backward(loss);
      *grads = p.gradients();
    }
    return loss.value()(0, 0);
  };
  std::map<std::string, M> grads;
  objective(&grads);
  auto r = testing::check_gradients(in.store, grads, [&] { return objective(nullptr); },
                                    {param::kDecHeadW, param::kDecHeadAtt, param::kDecTailW, param::kDecTailAtt,
                                     param::kGatW, param::kGatAtt});
  EXPECT_LT(r.worst_error, 1e-4) << r.worst_name;
}

}  // namespace
}  // namespace otiea
