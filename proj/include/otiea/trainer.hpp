#pragma once

// Margin-ranking training with k-NN negatives and bidirectional seed expansion.

#include "otiea/autodiff.hpp"
#include "otiea/kg_data.hpp"
#include "otiea/model.hpp"
#include "otiea/neighbors.hpp"
#include "otiea/parameters.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace otiea {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  ModelConfig model;
  double margin = 3.0;
  int negatives_k = 5;
  int epochs = 60;
  int expansion_period = 5;
  double learning_rate = 1e-3;
  std::uint64_t rng_seed = 1;
  bool semi_supervised = false;
  double train_ratio = 0.3;

  void validate() const {
    model.encoder.validate();
    (void)model.effective_mode();
    if (!(margin > 0.0)) throw std::invalid_argument("margin must be > 0");
    if (negatives_k < 1) throw std::invalid_argument("negatives_k must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (expansion_period < 1) throw std::invalid_argument("expansion_period must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw std::invalid_argument("train_ratio must lie in (0,1)");
  }
};

// Candidate pools of same-side nearest neighbors for the entities of the
// current positive pairs.
class NegativeSampler {
 public:
  template <typename Scalar>
  void refresh(const std::vector<AlignedPair>& positives, const Matrix<Scalar>& x_left,
               const Matrix<Scalar>& x_right, int k) {
    left_pool_.clear();
    right_pool_.clear();
    std::set<Index> lefts, rights;
    for (const auto& p : positives) {
      lefts.insert(p.left);
      rights.insert(p.right);
    }
    std::vector<Index> lq(lefts.begin(), lefts.end()), rq(rights.begin(), rights.end());
    auto ln = k_nearest_within(x_left, lq, static_cast<std::size_t>(k));
    auto rn = k_nearest_within(x_right, rq, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < lq.size(); ++i) left_pool_[lq[i]] = std::move(ln[i]);
    for (std::size_t i = 0; i < rq.size(); ++i) right_pool_[rq[i]] = std::move(rn[i]);
  }

  const std::vector<Index>& left_pool(Index e) const { return left_pool_.at(e); }
  const std::vector<Index>& right_pool(Index e) const { return right_pool_.at(e); }

  struct Batch {
    std::vector<AlignedPair> positives;  // each positive listed once per negative
    std::vector<AlignedPair> negatives;
  };

  // One left-corrupted and one right-corrupted negative per positive, each
  // drawn uniformly from the entity's neighbor pool.
  Batch draw(const std::vector<AlignedPair>& positives, std::mt19937_64& rng) const {
    Batch b;
    b.positives.reserve(2 * positives.size());
    b.negatives.reserve(2 * positives.size());
    for (const auto& p : positives) {
      const auto& lp = left_pool_.at(p.left);
      const auto& rp = right_pool_.at(p.right);
      if (!lp.empty()) {
        b.positives.push_back(p);
        b.negatives.push_back({lp[rng() % lp.size()], p.right});
      }
      if (!rp.empty()) {
        b.positives.push_back(p);
        b.negatives.push_back({p.left, rp[rng() % rp.size()]});
      }
    }
    return b;
  }

 private:
  std::map<Index, std::vector<Index>> left_pool_;
  std::map<Index, std::vector<Index>> right_pool_;
};

template <typename Scalar>
NegativeSampler::Batch sample_negatives(const std::vector<AlignedPair>& positives,
                                        const Matrix<Scalar>& x_left, const Matrix<Scalar>& x_right,
                                        int k, std::mt19937_64& rng) {
  NegativeSampler s;
  s.refresh(positives, x_left, x_right, k);
  return s.draw(positives, rng);
}

// Σ max(dis(pos) − dis(neg) + λ, 0) over aligned (positive, negative) lists.
template <typename Scalar>
ad::Var<Scalar> margin_loss(const ad::Var<Scalar>& x_left, const ad::Var<Scalar>& x_right,
                            const std::vector<AlignedPair>& positives,
                            const std::vector<AlignedPair>& negatives, Scalar margin) {
  if (positives.size() != negatives.size()) {
    throw std::invalid_argument("margin_loss: positives and negatives must pair up");
  }
  auto ids = [](const std::vector<AlignedPair>& pairs, bool left) {
    std::vector<Index> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(left ? p.left : p.right);
    return std::make_shared<const std::vector<Index>>(std::move(out));
  };
  if (positives.empty()) return x_left.tape()->constant(Matrix<Scalar>::Zero(1, 1));
  auto d_pos = ad::l1_rows(ad::gather_rows(x_left, ids(positives, true)),
                           ad::gather_rows(x_right, ids(positives, false)));
  auto d_neg = ad::l1_rows(ad::gather_rows(x_left, ids(negatives, true)),
                           ad::gather_rows(x_right, ids(negatives, false)));
  return ad::hinge_sum(ad::sub(d_pos, d_neg), margin);
}

struct ExpandedPair {
  AlignedPair pair;
  double distance = 0.0;
};

// Mutual nearest neighbors between the entities of each side that are not yet
// in `train_pairs`. Uses embeddings only; no gold labels are consulted.
template <typename Scalar>
std::vector<ExpandedPair> expand_seeds(const Matrix<Scalar>& x_left, const Matrix<Scalar>& x_right,
                                       const std::vector<AlignedPair>& train_pairs) {
  std::set<Index> used_l, used_r;
  for (const auto& p : train_pairs) {
    used_l.insert(p.left);
    used_r.insert(p.right);
  }
  std::vector<Index> cand_l, cand_r;
  for (Index e = 0; e < x_left.rows(); ++e) if (!used_l.contains(e)) cand_l.push_back(e);
  for (Index e = 0; e < x_right.rows(); ++e) if (!used_r.contains(e)) cand_r.push_back(e);
  if (cand_l.empty() || cand_r.empty()) return {};

  const auto d = pairwise_l1(x_left, cand_l, x_right, cand_r);
  // Candidate lists are sorted by id, so strict < keeps the lowest id on ties.
  std::vector<Index> best_r(cand_l.size()), best_l(cand_r.size());
  for (Index i = 0; i < d.rows(); ++i) {
    Index arg = 0;
    for (Index j = 1; j < d.cols(); ++j) if (d(i, j) < d(i, arg)) arg = j;
    best_r[static_cast<std::size_t>(i)] = arg;
  }
  for (Index j = 0; j < d.cols(); ++j) {
    Index arg = 0;
    for (Index i = 1; i < d.rows(); ++i) if (d(i, j) < d(arg, j)) arg = i;
    best_l[static_cast<std::size_t>(j)] = arg;
  }
  std::vector<ExpandedPair> out;
  for (Index i = 0; i < d.rows(); ++i) {
    const Index j = best_r[static_cast<std::size_t>(i)];
    if (best_l[static_cast<std::size_t>(j)] == i) {
      out.push_back({{cand_l[static_cast<std::size_t>(i)], cand_r[static_cast<std::size_t>(j)]},
                     static_cast<double>(d(i, j))});
    }
  }
  return out;
}

// Adam over every array of a ParameterStore.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParameterStore<Scalar>& params, const std::map<std::string, Matrix<Scalar>>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, value] : params.all()) {
      auto g = grads.find(name);
      if (g == grads.end()) continue;
      auto [mit, fresh] = m_.try_emplace(name, Matrix<Scalar>::Zero(value.rows(), value.cols()));
      auto& v = v_.try_emplace(name, Matrix<Scalar>::Zero(value.rows(), value.cols())).first->second;
      auto& m = mit->second;
      m = Scalar(beta1_) * m + Scalar(1.0 - beta1_) * g->second;
      v = Scalar(beta2_) * v + Scalar(1.0 - beta2_) * g->second.cwiseAbs2();
      value.array() -= Scalar(lr_) * (m.array() / Scalar(c1)) /
                       ((v.array() / Scalar(c2)).sqrt() + Scalar(eps_));
    }
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Matrix<Scalar>> m_, v_;
};

struct ExpansionRound {
  int epoch = 0;
  std::vector<ExpandedPair> added;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::size_t train_pairs = 0;
  std::size_t added_pairs = 0;
};

template <typename Scalar>
struct AlignmentState {
  std::vector<AlignedPair> train_pairs;
  std::vector<AlignedPair> test_pairs;
  std::vector<ExpansionRound> expansion_log;
  std::vector<EpochRecord> history;
  Matrix<Scalar> final_left;
  Matrix<Scalar> final_right;
  int epoch = 0;

  std::vector<double> loss_history() const {
    std::vector<double> out;
    for (const auto& r : history) out.push_back(r.loss);
    return out;
  }
};

// Declares the model parameters plus one trainable entity table per graph,
// initialized from the given name embeddings.
template <typename Scalar>
ParameterStore<Scalar> make_training_parameters(const EncoderConfig& cfg, const EmbeddingMatrix& left,
                                                const EmbeddingMatrix& right, std::uint64_t seed) {
  if (left.dim() != cfg.entity_dim || right.dim() != cfg.entity_dim) {
    throw std::invalid_argument("initial embeddings do not match entity_dim");
  }
  auto store = make_model_parameters<Scalar>(cfg, seed);
  store.declare(param::entity_table(1), left.rows(), left.dim());
  store.at(param::entity_table(1)) = left.values.template cast<Scalar>();
  store.declare(param::entity_table(2), right.rows(), right.dim());
  store.at(param::entity_table(2)) = right.values.template cast<Scalar>();
  return store;
}

// Seed pairs share one trainable entity row: both rows are set to their mean
// and receive the summed gradient. Entities outside the training pairs keep
// their name vectors fixed.
template <typename Scalar>
void tie_anchor_rows(ParameterStore<Scalar>& params, const std::vector<AlignedPair>& pairs) {
  auto& t1 = params.at(param::entity_table(1));
  auto& t2 = params.at(param::entity_table(2));
  for (const auto& pr : pairs) {
    const Matrix<Scalar> mean = (t1.row(pr.left) + t2.row(pr.right)) * Scalar(0.5);
    t1.row(pr.left) = mean;
    t2.row(pr.right) = mean;
  }
}

template <typename Scalar>
void project_anchor_gradients(std::map<std::string, Matrix<Scalar>>& grads,
                              const std::vector<AlignedPair>& pairs) {
  auto& g1 = grads.at(param::entity_table(1));
  auto& g2 = grads.at(param::entity_table(2));
  Matrix<Scalar> p1 = Matrix<Scalar>::Zero(g1.rows(), g1.cols());
  Matrix<Scalar> p2 = Matrix<Scalar>::Zero(g2.rows(), g2.cols());
  for (const auto& pr : pairs) {
    p1.row(pr.left) = g1.row(pr.left) + g2.row(pr.right);
    p2.row(pr.right) = p1.row(pr.left);
  }
  g1 = std::move(p1);
  g2 = std::move(p2);
}

// Training loop over a graph pair with shared model parameters.
template <typename Scalar>
class Trainer {
 public:
  using EpochCallback = std::function<void(const EpochRecord&)>;

  Trainer(const ExpandedGraph& left, const ExpandedGraph& right, TrainConfig cfg,
          ParameterStore<Scalar> params)
      : left_(GraphContext<Scalar>::build(left)),
        right_(GraphContext<Scalar>::build(right)),
        cfg_(std::move(cfg)),
        params_(std::move(params)),
        optimizer_(cfg_.learning_rate) {
    cfg_.validate();
  }

  const ParameterStore<Scalar>& parameters() const { return params_; }
  const TrainConfig& config() const { return cfg_; }

  // Forward both graphs under the current parameters; returns (X_f1, X_f2).
  std::pair<Matrix<Scalar>, Matrix<Scalar>> embed() const {
    ad::Tape<Scalar> tape;
    BoundParameters<Scalar> p(tape, params_);
    auto l = forward(left_, p(param::entity_table(1)), cfg_.model, p);
    auto r = forward(right_, p(param::entity_table(2)), cfg_.model, p);
    return {l.final_embeddings().value(), r.final_embeddings().value()};
  }

  AlignmentState<Scalar> train(const SeedSet& seeds, const EpochCallback& on_epoch = {}) {
    AlignmentState<Scalar> state;
    state.train_pairs = seeds.train_pairs;
    state.test_pairs = seeds.test_pairs;
    std::mt19937_64 rng(cfg_.rng_seed ^ 0x5DEECE66Dull);
    NegativeSampler sampler;
    if (cfg_.epochs > 0) tie_anchor_rows(params_, state.train_pairs);

    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      ad::Tape<Scalar> tape;
      BoundParameters<Scalar> p(tape, params_);
      auto l = forward(left_, p(param::entity_table(1)), cfg_.model, p);
      auto r = forward(right_, p(param::entity_table(2)), cfg_.model, p);
      const auto& xl = l.final_embeddings();
      const auto& xr = r.final_embeddings();

      if ((epoch - 1) % cfg_.expansion_period == 0) {
        sampler.refresh(state.train_pairs, xl.value(), xr.value(), cfg_.negatives_k);
      }
      auto batch = sampler.draw(state.train_pairs, rng);
      auto loss = margin_loss(xl, xr, batch.positives, batch.negatives, Scalar(cfg_.margin));
      const double loss_value = static_cast<double>(loss.value()(0, 0));
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      auto grads = p.gradients();
      project_anchor_gradients(grads, state.train_pairs);
      optimizer_.step(params_, grads);

      EpochRecord rec{epoch, loss_value, state.train_pairs.size(), 0};
      if (cfg_.semi_supervised && epoch % cfg_.expansion_period == 0) {
        auto [el, er] = embed();
        ExpansionRound round{epoch, expand_seeds(el, er, state.train_pairs)};
        std::vector<AlignedPair> fresh;
        for (const auto& a : round.added) fresh.push_back(a.pair);
        tie_anchor_rows(params_, fresh);
        state.train_pairs.insert(state.train_pairs.end(), fresh.begin(), fresh.end());
        rec.added_pairs = round.added.size();
        rec.train_pairs = state.train_pairs.size();
        state.expansion_log.push_back(std::move(round));
      }
      state.history.push_back(rec);
      state.epoch = epoch;
      if (on_epoch) on_epoch(rec);
    }
    std::tie(state.final_left, state.final_right) = embed();
    return state;
  }

 private:
  GraphContext<Scalar> left_;
  GraphContext<Scalar> right_;
  TrainConfig cfg_;
  ParameterStore<Scalar> params_;
  Adam<Scalar> optimizer_;
};

}  // namespace otiea
