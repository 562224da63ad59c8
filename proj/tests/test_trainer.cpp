#include "support/fixtures.hpp"

#include <gtest/gtest.h>

namespace otiea {
namespace {

using testing::random_matrix;
using M = Matrix<double>;

std::vector<std::pair<Index, Index>> as_pairs(const std::vector<AlignedPair>& v) {
  std::vector<std::pair<Index, Index>> out;
  for (const auto& p : v) out.emplace_back(p.left, p.right);
  return out;
}

TEST(L1Distance, Examples) {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 3}, c{0, 0}, d{3, -4};
  EXPECT_EQ(l1_distance<double>(a, b), 0.0);
  EXPECT_EQ(l1_distance<double>(c, d), 7.0);
  const std::vector<double> e{1};
  EXPECT_THROW(l1_distance<double>(a, e), std::invalid_argument);
}

TEST(L1Distance, SymmetricAndMatchesOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int s = 0; s < 1000; ++s) {
    std::vector<double> x(7), y(7);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    EXPECT_EQ(l1_distance<double>(x, y), l1_distance<double>(y, x));
    EXPECT_NEAR(l1_distance<double>(x, y), reference::l1(x, y), 1e-12);
  }
}

TEST(NearestNeighbors, TwoEntitiesClipK) {
  M x(2, 2);
  x << 0, 0, 1, 1;
  auto nn = k_nearest_within(x, {0, 1}, 5);
  EXPECT_EQ(nn[0], (std::vector<Index>{1}));
  EXPECT_EQ(nn[1], (std::vector<Index>{0}));
}

TEST(NearestNeighbors, MatchesBruteForce) {
  M x = random_matrix(20, 3, 4);
  std::vector<Index> q{0, 5, 7, 19};
  auto nn = k_nearest_within(x, q, 5);
  for (std::size_t i = 0; i < q.size(); ++i) {
    std::vector<std::pair<double, Index>> all;
    for (Index c = 0; c < 20; ++c) {
      if (c != q[i]) all.push_back({(x.row(q[i]) - x.row(c)).cwiseAbs().sum(), c});
    }
    std::sort(all.begin(), all.end());
    std::vector<Index> want;
    for (int k = 0; k < 5; ++k) want.push_back(all[static_cast<std::size_t>(k)].second);
    EXPECT_EQ(nn[i], want);
  }
}

TEST(NegativeSampler, CorruptsExactlyOneSideFromPool) {
  M xl = random_matrix(12, 3, 5), xr = random_matrix(12, 3, 6);
  std::vector<AlignedPair> pos{{0, 3}, {4, 1}, {7, 7}, {11, 2}};
  NegativeSampler s;
  s.refresh(pos, xl, xr, 5);
  std::mt19937_64 rng(1);
  auto b = s.draw(pos, rng);
  ASSERT_EQ(b.positives.size(), 8u);
  for (std::size_t k = 0; k < b.positives.size(); ++k) {
    const auto& p = b.positives[k];
    const auto& n = b.negatives[k];
    EXPECT_NE(p, n);
    if (k % 2 == 0) {
      EXPECT_EQ(n.right, p.right);
      const auto& pool = s.left_pool(p.left);
      EXPECT_NE(std::find(pool.begin(), pool.end(), n.left), pool.end());
    } else {
      EXPECT_EQ(n.left, p.left);
      const auto& pool = s.right_pool(p.right);
      EXPECT_NE(std::find(pool.begin(), pool.end(), n.right), pool.end());
    }
  }
}

TEST(NegativeSampler, SameSeedSameDraw) {
  M xl = random_matrix(10, 3, 7), xr = random_matrix(10, 3, 8);
  std::vector<AlignedPair> pos{{0, 0}, {1, 2}, {3, 5}};
  std::mt19937_64 a(9), b(9);
  EXPECT_EQ(sample_negatives(pos, xl, xr, 3, a).negatives, sample_negatives(pos, xl, xr, 3, b).negatives);
}

double hinge_of(const M& xl, const M& xr, const std::vector<AlignedPair>& pos, const std::vector<AlignedPair>& neg,
                double margin) {
  ad::Tape<double> tape;
  return margin_loss(tape.constant(xl), tape.constant(xr), pos, neg, margin).value()(0, 0);
}

TEST(MarginLoss, HandExamples) {
  M xl(3, 1), xr(3, 1);
  xl << 0, 0, 0;
  xr << 1, 5, 4;
  // dis(pos) = 1, dis(neg) = 5: 1 - 5 + 3 < 0.
  EXPECT_EQ(hinge_of(xl, xr, {{0, 0}}, {{0, 1}}, 3.0), 0.0);
  // dis(pos) = 4, dis(neg) = 1: 4 - 1 + 3.
  EXPECT_EQ(hinge_of(xl, xr, {{0, 2}}, {{0, 0}}, 3.0), 6.0);
  // dis(pos) = 1, dis(neg) = 4: 1 - 4 + 3 = 0 at the boundary.
  EXPECT_EQ(hinge_of(xl, xr, {{0, 0}}, {{0, 2}}, 3.0), 0.0);
  // dis(pos) = 4, dis(neg) = 3 with margin 3: 4.
  M yl(2, 1), yr(2, 1);
  yl << 0, 0;
  yr << 4, 3;
  EXPECT_EQ(hinge_of(yl, yr, {{0, 0}}, {{1, 1}}, 3.0), 4.0);
  EXPECT_EQ(hinge_of(xl, xr, {}, {}, 3.0), 0.0);
  EXPECT_THROW(hinge_of(xl, xr, {{0, 0}}, {}, 3.0), std::invalid_argument);
}

TEST(MarginLoss, MatchesOracleAndGradients) {
  M xl = random_matrix(8, 4, 10), xr = random_matrix(8, 4, 11);
  std::vector<AlignedPair> pos{{0, 1}, {2, 2}, {5, 7}, {6, 0}}, neg{{3, 1}, {2, 6}, {1, 7}, {6, 4}};
  auto want = reference::margin_loss(reference::from_eigen(xl), reference::from_eigen(xr), as_pairs(pos),
                                     as_pairs(neg), 1.5);
  EXPECT_NEAR(hinge_of(xl, xr, pos, neg, 1.5), want, 1e-12);

  ParameterStore<double> store;
  store.declare("l", 8, 4);
  store.declare("r", 8, 4);
  store.at("l") = xl;
  store.at("r") = xr;
  auto objective = [&](std::map<std::string, M>* grads) {
    ad::Tape<double> tape;
    BoundParameters<double> p(tape, store);
    auto loss = margin_loss(p("l"), p("r"), pos, neg, 1.5);
    if (grads) {
      tape.backward(loss);
      *grads = p.gradients();
    }
    return loss.value()(0, 0);
  };
  std::map<std::string, M> grads;
  objective(&grads);
  auto r = testing::check_gradients(store, grads, [&] { return objective(nullptr); }, {"l", "r"});
  EXPECT_LT(r.worst_error, 1e-4) << r.worst_name;
}

TEST(ExpandSeeds, SingleCandidatePair) {
  M xl = random_matrix(3, 2, 12), xr = random_matrix(3, 2, 13);
  auto out = expand_seeds(xl, xr, {{0, 1}, {1, 2}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].pair, (AlignedPair{2, 0}));
  EXPECT_DOUBLE_EQ(out[0].distance, (xl.row(2) - xr.row(0)).cwiseAbs().sum());
}

TEST(ExpandSeeds, NonMutualPairsAreDropped) {
  // Left 0 and 1 both prefer right 0; right 0 prefers left 1. Right 1 prefers left 1 too.
  M xl(2, 1), xr(2, 1);
  xl << 0.0, 1.0;
  xr << 0.9, 3.0;
  auto out = expand_seeds(xl, xr, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].pair, (AlignedPair{1, 0}));
}

TEST(ExpandSeeds, MatchesBruteForceAndSwapSymmetry) {
  M xl = random_matrix(15, 3, 14), xr = random_matrix(15, 3, 15);
  std::vector<AlignedPair> used{{0, 4}, {3, 3}, {9, 1}};
  auto out = expand_seeds(xl, xr, used);
  std::set<Index> ul{0, 3, 9}, ur{4, 3, 1};
  std::set<std::pair<Index, Index>> want;
  auto nearest = [](const M& a, Index i, const M& b, const std::set<Index>& skip) {
    Index best = -1;
    double bd = 0.0;
    for (Index j = 0; j < b.rows(); ++j) {
      if (skip.contains(j)) continue;
      const double d = (a.row(i) - b.row(j)).cwiseAbs().sum();
      if (best < 0 || d < bd) best = j, bd = d;
    }
    return best;
  };
  for (Index i = 0; i < 15; ++i) {
    if (ul.contains(i)) continue;
    const Index j = nearest(xl, i, xr, ur);
    if (nearest(xr, j, xl, ul) == i) want.insert({i, j});
  }
  std::set<std::pair<Index, Index>> got;
  for (const auto& e : out) got.insert({e.pair.left, e.pair.right});
  EXPECT_EQ(got, want);
  EXPECT_FALSE(want.empty());

  std::vector<AlignedPair> used_swapped;
  for (const auto& p : used) used_swapped.push_back({p.right, p.left});
  std::set<std::pair<Index, Index>> swapped;
  for (const auto& e : expand_seeds(xr, xl, used_swapped)) swapped.insert({e.pair.right, e.pair.left});
  EXPECT_EQ(swapped, got);
}

TEST(ExpandSeeds, NoCandidatesLeft) {
  M xl = random_matrix(2, 2, 16), xr = random_matrix(2, 2, 17);
  EXPECT_TRUE(expand_seeds(xl, xr, {{0, 0}, {1, 1}}).empty());
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterStore<double> store;
  store.declare("w", 2, 2);
  store.declare("untouched", 1, 1);
  store.at("w") << 1, 2, 3, 4;
  store.at("untouched") << 7;
  Adam<double> opt(0.1);
  std::map<std::string, M> grads;
  grads["w"] = M(2, 2);
  grads["w"] << 0.5, -2, 1e3, -1e-3;
  opt.step(store, grads);
  M want(2, 2);
  want << 0.9, 2.1, 2.9, 4.1;
  EXPECT_LT((store.at("w") - want).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(store.at("untouched")(0, 0), 7.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MatchesScriptedUpdates) {
  ParameterStore<double> store;
  store.declare("w", 1, 1);
  store.at("w") << 0.0;
  Adam<double> opt(0.01);
  double m = 0, v = 0, w = 0;
  const double gs[] = {1.0, -0.5, 2.0, 0.1};
  for (int t = 1; t <= 4; ++t) {
    const double g = gs[t - 1];
    opt.step(store, {{"w", M::Constant(1, 1, g)}});
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(store.at("w")(0, 0), w, 1e-14);
  }
}

TEST(AnchorRows, TieAndProjectGradients) {
  ParameterStore<double> store;
  store.declare(param::entity_table(1), 3, 2);
  store.declare(param::entity_table(2), 3, 2);
  store.at(param::entity_table(1)) << 1, 1, 2, 2, 3, 3;
  store.at(param::entity_table(2)) << 5, 5, 6, 6, 7, 7;
  std::vector<AlignedPair> pairs{{0, 2}};
  tie_anchor_rows(store, pairs);
  EXPECT_EQ(store.at(param::entity_table(1)).row(0), (M(1, 2) << 4, 4).finished());
  EXPECT_EQ(store.at(param::entity_table(2)).row(2), (M(1, 2) << 4, 4).finished());
  EXPECT_EQ(store.at(param::entity_table(1)).row(1), (M(1, 2) << 2, 2).finished());

  std::map<std::string, M> grads{{param::entity_table(1), M::Ones(3, 2)},
                                 {param::entity_table(2), M::Constant(3, 2, 2.0)}};
  project_anchor_gradients(grads, pairs);
  M g1 = M::Zero(3, 2), g2 = M::Zero(3, 2);
  g1.row(0).setConstant(3.0);
  g2.row(2).setConstant(3.0);
  EXPECT_EQ(grads.at(param::entity_table(1)), g1);
  EXPECT_EQ(grads.at(param::entity_table(2)), g2);
}

TEST(TrainConfig, Validation) {
  TrainConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = [&](auto edit) {
    TrainConfig c;
    edit(c);
    EXPECT_THROW(c.validate(), std::invalid_argument);
  };
  bad([](TrainConfig& c) { c.margin = 0; });
  bad([](TrainConfig& c) { c.negatives_k = 0; });
  bad([](TrainConfig& c) { c.epochs = -1; });
  bad([](TrainConfig& c) { c.expansion_period = 0; });
  bad([](TrainConfig& c) { c.learning_rate = 0; });
  bad([](TrainConfig& c) { c.train_ratio = 1.0; });
  bad([](TrainConfig& c) { c.model.cycle_mode = 4; });
  bad([](TrainConfig& c) { c.model.encoder.depth = 0; });
}

struct Toy {
  ExpandedGraph left;
  ExpandedGraph right;
  EmbeddingMatrix x1, x2;
  SeedSet seeds;
  TrainConfig cfg;

  Toy()
      : left(expand_relations(testing::random_kg(24, 3, 60, 20))),
        right(expand_relations(testing::random_kg(24, 3, 60, 20))) {
    x1.values = random_matrix(24, 4, 21);
    x2.values = random_matrix(24, 4, 22);
    std::vector<AlignedPair> links;
    for (Index e = 0; e < 24; ++e) links.push_back({e, e});
    seeds = split_links(links, 0.25, 3);
    cfg.model.encoder = testing::toy_config();
    cfg.epochs = 12;
    cfg.learning_rate = 1e-2;
  }

  Trainer<double> trainer() const {
    return Trainer<double>(left, right, cfg, make_training_parameters<double>(cfg.model.encoder, x1, x2, 5));
  }
};

TEST(Trainer, ZeroEpochsReturnsInitialForward) {
  Toy toy;
  toy.cfg.epochs = 0;
  auto t = toy.trainer();
  auto [l, r] = t.embed();
  auto state = t.train(toy.seeds);
  EXPECT_EQ(state.final_left, l);
  EXPECT_EQ(state.final_right, r);
  EXPECT_TRUE(state.history.empty());
  // Without epochs the seeds are not tied either.
  EXPECT_EQ(t.parameters().at(param::entity_table(1)), toy.x1.values);
}

TEST(Trainer, LossIsFiniteAndRunIsDeterministic) {
  Toy toy;
  auto a = toy.trainer().train(toy.seeds);
  auto b = toy.trainer().train(toy.seeds);
  ASSERT_EQ(a.history.size(), 12u);
  for (double v : a.loss_history()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(a.loss_history(), b.loss_history());
  EXPECT_EQ(a.final_left, b.final_left);
}

TEST(Trainer, SeedRowsTiedAndOtherRowsFrozen) {
  Toy toy;
  auto t = toy.trainer();
  auto state = t.train(toy.seeds);
  const auto& t1 = t.parameters().at(param::entity_table(1));
  const auto& t2 = t.parameters().at(param::entity_table(2));
  std::set<Index> anchored;
  for (const auto& p : state.train_pairs) {
    EXPECT_EQ(t1.row(p.left), t2.row(p.right));
    anchored.insert(p.left);
  }
  for (Index e = 0; e < 24; ++e) {
    if (!anchored.contains(e)) EXPECT_EQ(t1.row(e), toy.x1.values.row(e));
  }
}

TEST(Trainer, SemiExpandsOnSchedule) {
  Toy toy;
  toy.cfg.semi_supervised = true;
  std::vector<int> seen;
  auto state = toy.trainer().train(toy.seeds, [&](const EpochRecord& r) { seen.push_back(r.epoch); });
  ASSERT_EQ(state.expansion_log.size(), 2u);
  EXPECT_EQ(state.expansion_log[0].epoch, 5);
  EXPECT_EQ(state.expansion_log[1].epoch, 10);
  std::size_t added = 0;
  for (const auto& r : state.expansion_log) added += r.added.size();
  EXPECT_EQ(state.train_pairs.size(), toy.seeds.train_pairs.size() + added);
  EXPECT_EQ(state.history[4].added_pairs, state.expansion_log[0].added.size());
  EXPECT_EQ(seen.size(), 12u);
}

TEST(Trainer, NonFiniteLossIsReported) {
  Toy toy;
  toy.x1.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(toy.trainer().train(toy.seeds), TrainingError);
}

TEST(Trainer, EmbeddingWidthMismatch) {
  Toy toy;
  toy.x1.values = random_matrix(24, 5, 1);
  EXPECT_THROW(toy.trainer(), std::invalid_argument);
}

}  // namespace
}  // namespace otiea
