#pragma once

// Per-triple semantic representations: latent relation, the three-stage
// interaction attention, and the relation-level global feature.

#include "otiea/autodiff.hpp"
#include "otiea/kg_data.hpp"
#include "otiea/parameters.hpp"

#include <memory>
#include <vector>

namespace otiea {

inline constexpr double kLeakySlope = 0.2;

// Column views of the expanded triple list plus the groupings attention runs over.
struct TripleIndex {
  Index entity_count = 0;
  Index relation_count = 0;
  std::shared_ptr<const std::vector<Index>> heads;
  std::shared_ptr<const std::vector<Index>> relations;
  std::shared_ptr<const std::vector<Index>> tails;
  std::shared_ptr<const Segments> by_relation;  // T_r
  std::shared_ptr<const Segments> by_head;      // triples in which an entity is the head
  std::shared_ptr<const Segments> by_tail;

  Index triple_count() const { return static_cast<Index>(heads->size()); }

  // Triple positions of each relation group.
  std::vector<std::vector<Index>> groups() const {
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(relation_count));
    for (Index k = 0; k < triple_count(); ++k) {
      out[static_cast<std::size_t>((*relations)[static_cast<std::size_t>(k)])].push_back(k);
    }
    return out;
  }

  static TripleIndex build(const std::vector<Triple>& triples, Index entity_count,
                           Index relation_count) {
    TripleIndex idx;
    idx.entity_count = entity_count;
    idx.relation_count = relation_count;
    std::vector<Index> h, r, t;
    h.reserve(triples.size());
    r.reserve(triples.size());
    t.reserve(triples.size());
    for (const auto& tr : triples) {
      h.push_back(tr.head);
      r.push_back(tr.relation);
      t.push_back(tr.tail);
    }
    idx.by_relation = std::make_shared<const Segments>(Segments{r, relation_count});
    idx.by_head = std::make_shared<const Segments>(Segments{h, entity_count});
    idx.by_tail = std::make_shared<const Segments>(Segments{t, entity_count});
    idx.heads = std::make_shared<const std::vector<Index>>(std::move(h));
    idx.relations = std::make_shared<const std::vector<Index>>(std::move(r));
    idx.tails = std::make_shared<const std::vector<Index>>(std::move(t));
    return idx;
  }

  static TripleIndex build(const ExpandedGraph& g) {
    return build(g.triples(), g.entity_count(), g.relation_count());
  }
};

enum class TripleRole { kHead, kRelation, kTail };

// σ((X_i ‖ X_j) W + b) with σ = ReLU, one row per triple.
template <typename Scalar>
ad::Var<Scalar> latent_relation(const ad::Var<Scalar>& x_head, const ad::Var<Scalar>& x_tail,
                                const BoundParameters<Scalar>& p) {
  auto joined = ad::concat_cols<Scalar>({x_head, x_tail});
  return ad::relu(ad::add_row(ad::matmul(joined, p(param::kLatentW)), p(param::kLatentB)));
}

template <typename Scalar>
struct InteractionResult {
  ad::Var<Scalar> weights;  // m×1, softmax within each relation group
  ad::Var<Scalar> latent;   // m×d_r
};

// One stage of the interaction attention. The attended element is projected
// by W_role, the ordered concatenation of the other two by W_ctx; the score
// a^T(elem W ‖ ctx W_ctx) goes through LeakyReLU and a softmax over T_r, and
// the per-triple latent is ReLU(α · elem W).
template <typename Scalar>
InteractionResult<Scalar> interaction_attention(TripleRole role, const TripleIndex& index,
                                                const ad::Var<Scalar>& x_head,
                                                const ad::Var<Scalar>& x_rel,
                                                const ad::Var<Scalar>& x_tail,
                                                const BoundParameters<Scalar>& p) {
  ad::Var<Scalar> elem, ctx;
  const std::string* w = nullptr;
  const std::string* w_ctx = nullptr;
  const std::string* att = nullptr;
  switch (role) {
    case TripleRole::kHead:
      elem = x_head;
      ctx = ad::concat_cols<Scalar>({x_rel, x_tail});
      w = &param::kHeadW, w_ctx = &param::kHeadCtxW, att = &param::kHeadAtt;
      break;
    case TripleRole::kRelation:
      elem = x_rel;
      ctx = ad::concat_cols<Scalar>({x_head, x_tail});
      w = &param::kRelW, w_ctx = &param::kRelCtxW, att = &param::kRelAtt;
      break;
    case TripleRole::kTail:
      elem = x_tail;
      ctx = ad::concat_cols<Scalar>({x_head, x_rel});
      w = &param::kTailW, w_ctx = &param::kTailCtxW, att = &param::kTailAtt;
      break;
  }
  auto projected = ad::matmul(elem, p(*w));
  auto context = ad::matmul(ctx, p(*w_ctx));
  auto scores = ad::matmul(ad::concat_cols<Scalar>({projected, context}), p(*att));
  auto weights = ad::segment_softmax(ad::leaky_relu(scores, Scalar(kLeakySlope)), index.by_relation);
  return {weights, ad::relu(ad::scale_rows(projected, weights))};
}

template <typename Scalar>
struct GlobalFeature {
  ad::Var<Scalar> relation;  // |R|×d_r, X^r_g
  ad::Var<Scalar> triple;    // m×d_r, S_g
};

// X^r_g = mean_{T_r}(X_i ‖ X_j) W_rg + b_rg;  S_g = ReLU((X_i ‖ X^r_g ‖ X_j) W_sp + b_sp)
template <typename Scalar>
GlobalFeature<Scalar> global_relation_feature(const TripleIndex& index,
                                              const ad::Var<Scalar>& x_head,
                                              const ad::Var<Scalar>& x_tail,
                                              const BoundParameters<Scalar>& p) {
  auto pair_mean = ad::segment_mean(ad::concat_cols<Scalar>({x_head, x_tail}), index.by_relation);
  auto relation = ad::add_row(ad::matmul(pair_mean, p(param::kGlobalW)), p(param::kGlobalB));
  auto per_triple = ad::gather_rows(relation, index.relations);
  auto joined = ad::concat_cols<Scalar>({x_head, per_triple, x_tail});
  auto triple =
      ad::relu(ad::add_row(ad::matmul(joined, p(param::kGlobalTripleW)), p(param::kGlobalTripleB)));
  return {relation, triple};
}

template <typename Scalar>
struct SemanticTriple {
  ad::Var<Scalar> latent_relation;  // X^r per triple
  InteractionResult<Scalar> head, relation, tail;
  ad::Var<Scalar> combined;  // S_c
  ad::Var<Scalar> global;    // S_g, invalid when the global feature is disabled
  ad::Var<Scalar> semantic;  // S
};

// S = S_c + S_g. With `use_global` false (wo-E), S = S_c.
template <typename Scalar>
SemanticTriple<Scalar> semantic_triples(const TripleIndex& index, const ad::Var<Scalar>& x,
                                        const BoundParameters<Scalar>& p, bool use_global = true) {
  if (x.rows() != index.entity_count) throw ShapeError("semantic_triples: entity count mismatch");
  auto xh = ad::gather_rows(x, index.heads);
  auto xt = ad::gather_rows(x, index.tails);
  SemanticTriple<Scalar> out;
  out.latent_relation = latent_relation(xh, xt, p);
  out.head = interaction_attention(TripleRole::kHead, index, xh, out.latent_relation, xt, p);
  out.relation = interaction_attention(TripleRole::kRelation, index, xh, out.latent_relation, xt, p);
  out.tail = interaction_attention(TripleRole::kTail, index, xh, out.latent_relation, xt, p);
  out.combined = ad::add(ad::add(out.head.latent, out.relation.latent), out.tail.latent);
  if (use_global) {
    out.global = global_relation_feature(index, xh, xt, p).triple;
    out.semantic = ad::add(out.combined, out.global);
  } else {
    out.semantic = out.combined;
  }
  return out;
}

}  // namespace otiea
