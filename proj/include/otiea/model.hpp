#pragma once

// End-to-end forward pass for one knowledge graph.

#include "otiea/autodiff.hpp"
#include "otiea/entity_decoder.hpp"
#include "otiea/kg_data.hpp"
#include "otiea/ontology_fusion.hpp"
#include "otiea/parameters.hpp"
#include "otiea/topology_encoder.hpp"
#include "otiea/triple_correlation.hpp"

#include <memory>
#include <string>
#include <vector>

namespace otiea {

struct Ablation {
  bool without_global = false;    // wo-E
  bool without_ontology = false;  // wo-O
  bool without_cycle = false;     // wo-C

  bool any() const { return without_global || without_ontology || without_cycle; }
};

struct ModelConfig {
  EncoderConfig encoder;
  Ablation ablation;
  int cycle_mode = 2;

  // wo-C pins the decoder to the non-cyclic head,tail order.
  CycleMode effective_mode() const {
    return CycleMode::from_number(ablation.without_cycle ? 1 : cycle_mode);
  }
};

// Everything about a graph the forward pass needs, prepared once.
template <typename Scalar>
struct GraphContext {
  TripleIndex triples;
  NeighborIndex neighbors;
  std::shared_ptr<const SparseMatrix<Scalar>> adjacency;

  Index entity_count() const { return triples.entity_count; }

  static GraphContext build(const ExpandedGraph& g) {
    GraphContext ctx;
    ctx.triples = TripleIndex::build(g);
    ctx.neighbors = NeighborIndex::build(g);
    ctx.adjacency = std::make_shared<const SparseMatrix<Scalar>>(g.norm_adjacency().template cast<Scalar>());
    return ctx;
  }
};

template <typename Scalar>
struct ForwardResult {
  ad::Var<Scalar> encoded;
  SemanticTriple<Scalar> semantic;
  OntologyFusion<Scalar> fusion;
  std::vector<RoleAttention<Scalar>> stages;
  GraphAttention<Scalar> gat;

  const ad::Var<Scalar>& final_embeddings() const { return gat.output; }
};

template <typename Scalar>
ForwardResult<Scalar> forward(const GraphContext<Scalar>& ctx, const ad::Var<Scalar>& x0,
                              const ModelConfig& cfg, const BoundParameters<Scalar>& p) {
  ForwardResult<Scalar> r;
  r.encoded = encode_topology(x0, ctx.adjacency, cfg.encoder, p);
  r.semantic = semantic_triples(ctx.triples, r.encoded, p, !cfg.ablation.without_global);
  r.fusion = fuse_ontology(ctx.triples, r.encoded, r.semantic.semantic, cfg.encoder, p,
                           !cfg.ablation.without_ontology);
  r.stages = cycle_co_enhance(r.fusion.ensemble, r.encoded, ctx.triples, cfg.effective_mode(), p);
  r.gat = neighbor_reaggregate(r.stages.back().output, ctx.neighbors, p);
  return r;
}

// Parameters the forward pass reads under `cfg`; the rest are inert.
inline bool parameter_used(const std::string& name, const ModelConfig& cfg) {
  if (cfg.ablation.without_ontology && param::is_ontology_path(name)) return false;
  if (cfg.ablation.without_global && param::is_global_feature(name)) return false;
  return true;
}

}  // namespace otiea
