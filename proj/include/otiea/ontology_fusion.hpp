#pragma once

// Latent ontology space, ontology-pair triples, semantic/ontology
// co-attention and the ensemble triple representation.

#include "otiea/autodiff.hpp"
#include "otiea/parameters.hpp"
#include "otiea/triple_correlation.hpp"

namespace otiea {

// tanh(X W + b), row-wise.
template <typename Scalar>
ad::Var<Scalar> to_ontology_space(const ad::Var<Scalar>& x, const BoundParameters<Scalar>& p) {
  return ad::tanh(ad::add_row(ad::matmul(x, p(param::kToOntologyW)), p(param::kToOntologyB)));
}

template <typename Scalar>
struct OntologyRelation {
  ad::Var<Scalar> pair_mean;  // |R|×2d_o, X^or_g
  ad::Var<Scalar> projected;  // |R|×d_r, X^or
};

template <typename Scalar>
OntologyRelation<Scalar> ontology_relation(const TripleIndex& index, const ad::Var<Scalar>& x_onto,
                                           const BoundParameters<Scalar>& p) {
  auto pairs = ad::concat_cols<Scalar>(
      {ad::gather_rows(x_onto, index.heads), ad::gather_rows(x_onto, index.tails)});
  auto mean = ad::segment_mean(pairs, index.by_relation);
  return {mean, ad::add_row(ad::matmul(mean, p(param::kOntoRelW)), p(param::kOntoRelB))};
}

// O = ReLU((X^o_i ‖ X^or_r ‖ X^o_j) W_t + b_t)
template <typename Scalar>
ad::Var<Scalar> ontology_triple(const TripleIndex& index, const ad::Var<Scalar>& x_onto,
                                const ad::Var<Scalar>& relation_projected,
                                const BoundParameters<Scalar>& p) {
  auto joined = ad::concat_cols<Scalar>({ad::gather_rows(x_onto, index.heads),
                                         ad::gather_rows(relation_projected, index.relations),
                                         ad::gather_rows(x_onto, index.tails)});
  return ad::relu(ad::add_row(ad::matmul(joined, p(param::kOntoTripleW)), p(param::kOntoTripleB)));
}

template <typename Scalar>
struct CoAttention {
  ad::Var<Scalar> semantic_weights;  // α from a^T(S ‖ O)
  ad::Var<Scalar> ontology_weights;  // β from a^T(O ‖ S)
  ad::Var<Scalar> enhanced_ontology;  // Ō_r = ReLU(Σ α S)
  ad::Var<Scalar> enhanced_semantic;  // S̄_r = ReLU(Σ β O)
};

template <typename Scalar>
CoAttention<Scalar> modal_co_attention(const TripleIndex& index, const ad::Var<Scalar>& semantic,
                                       const ad::Var<Scalar>& ontology,
                                       const BoundParameters<Scalar>& p) {
  const Scalar slope(kLeakySlope);
  auto score_s = ad::matmul(ad::concat_cols<Scalar>({semantic, ontology}), p(param::kCoAttSemantic));
  auto score_o = ad::matmul(ad::concat_cols<Scalar>({ontology, semantic}), p(param::kCoAttOntology));
  CoAttention<Scalar> out;
  out.semantic_weights = ad::segment_softmax(ad::leaky_relu(score_s, slope), index.by_relation);
  out.ontology_weights = ad::segment_softmax(ad::leaky_relu(score_o, slope), index.by_relation);
  out.enhanced_ontology =
      ad::relu(ad::segment_sum(ad::scale_rows(semantic, out.semantic_weights), index.by_relation));
  out.enhanced_semantic =
      ad::relu(ad::segment_sum(ad::scale_rows(ontology, out.ontology_weights), index.by_relation));
  return out;
}

// T' = S + S̄_r + Ō_r + O;  T = T' ‖ X^or_g. Relation-level inputs are
// broadcast to every triple of their group.
template <typename Scalar>
ad::Var<Scalar> ensemble_triple(const TripleIndex& index, const ad::Var<Scalar>& semantic,
                                const ad::Var<Scalar>& enhanced_semantic,
                                const ad::Var<Scalar>& enhanced_ontology,
                                const ad::Var<Scalar>& ontology,
                                const ad::Var<Scalar>& pair_mean) {
  auto fused = ad::add(ad::add(semantic, ad::gather_rows(enhanced_semantic, index.relations)),
                       ad::add(ad::gather_rows(enhanced_ontology, index.relations), ontology));
  return ad::concat_cols<Scalar>({fused, ad::gather_rows(pair_mean, index.relations)});
}

template <typename Scalar>
struct OntologyFusion {
  ad::Var<Scalar> x_onto;
  OntologyRelation<Scalar> relation;
  ad::Var<Scalar> ontology;
  CoAttention<Scalar> co;
  ad::Var<Scalar> ensemble;  // m×(d_r + 2d_o)
};

// Full ontology path. With `enabled` false (wo-O) the ensemble is S followed
// by a zero block of width 2d_o and no ontology parameter is touched.
template <typename Scalar>
OntologyFusion<Scalar> fuse_ontology(const TripleIndex& index, const ad::Var<Scalar>& x,
                                     const ad::Var<Scalar>& semantic, const EncoderConfig& cfg,
                                     const BoundParameters<Scalar>& p, bool enabled = true) {
  OntologyFusion<Scalar> out;
  if (!enabled) {
    auto zeros = semantic.tape()->constant(Matrix<Scalar>::Zero(semantic.rows(), 2 * cfg.ontology_dim));
    out.ensemble = ad::concat_cols<Scalar>({semantic, zeros});
  } else {
    out.x_onto = to_ontology_space(x, p);
    out.relation = ontology_relation(index, out.x_onto, p);
    out.ontology = ontology_triple(index, out.x_onto, out.relation.projected, p);
    out.co = modal_co_attention(index, semantic, out.ontology, p);
    out.ensemble = ensemble_triple(index, semantic, out.co.enhanced_semantic,
                                   out.co.enhanced_ontology, out.ontology, out.relation.pair_mean);
  }
  if (out.ensemble.cols() != cfg.triple_dim()) {
    throw ShapeError("ensemble triple width " + std::to_string(out.ensemble.cols()) +
                     " != 2*d_o + d_r = " + std::to_string(cfg.triple_dim()));
  }
  return out;
}

}  // namespace otiea
