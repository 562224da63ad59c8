#pragma once

// Triple-aware entity decoder: head/tail role attention stages arranged in a
// cycle, followed by one residual graph-attention layer.

#include "otiea/autodiff.hpp"
#include "otiea/kg_data.hpp"
#include "otiea/parameters.hpp"
#include "otiea/triple_correlation.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace otiea {

enum class EntityRole { kHead, kTail };

// Ordered decoder stages. mode1 = head,tail; mode2 = head,tail,head;
// mode3 = head,tail,head,tail.
class CycleMode {
 public:
  static CycleMode from_number(int mode) {
    if (mode < 1 || mode > 3) throw std::invalid_argument("unknown cycle mode " + std::to_string(mode));
    CycleMode m;
    m.number_ = mode;
    for (int i = 0; i < mode + 1; ++i) m.stages_.push_back(i % 2 == 0 ? EntityRole::kHead : EntityRole::kTail);
    return m;
  }

  int number() const { return number_; }
  const std::vector<EntityRole>& stages() const { return stages_; }

 private:
  int number_ = 2;
  std::vector<EntityRole> stages_;
};

template <typename Scalar>
struct RoleAttention {
  ad::Var<Scalar> weights;  // m×1, softmax over each entity's incident triples in this role
  ad::Var<Scalar> output;   // n×d_e
};

// For every entity e with incident triples in `role`:
//   α = softmax_e(LeakyReLU(a^T(T W ‖ X_e))),  X_e ← X_e + ReLU(Σ α · T W)
// Entities without incident triples keep their row.
template <typename Scalar>
RoleAttention<Scalar> role_attention(EntityRole role, const ad::Var<Scalar>& ensemble,
                                     const ad::Var<Scalar>& x, const TripleIndex& index,
                                     const BoundParameters<Scalar>& p) {
  const bool head = role == EntityRole::kHead;
  const auto& anchor = head ? index.heads : index.tails;
  const auto& groups = head ? index.by_head : index.by_tail;
  auto projected = ad::matmul(ensemble, p(head ? param::kDecHeadW : param::kDecTailW));
  auto scores = ad::matmul(ad::concat_cols<Scalar>({projected, ad::gather_rows(x, anchor)}),
                           p(head ? param::kDecHeadAtt : param::kDecTailAtt));
  RoleAttention<Scalar> out;
  out.weights = ad::segment_softmax(ad::leaky_relu(scores, Scalar(kLeakySlope)), groups);
  out.output = ad::add(x, ad::relu(ad::segment_sum(ad::scale_rows(projected, out.weights), groups)));
  return out;
}

// Runs the stages of `mode` in order, each stage consuming the previous output.
// Repeated roles share that role's parameters.
template <typename Scalar>
std::vector<RoleAttention<Scalar>> cycle_co_enhance(const ad::Var<Scalar>& ensemble,
                                                    const ad::Var<Scalar>& x,
                                                    const TripleIndex& index, const CycleMode& mode,
                                                    const BoundParameters<Scalar>& p) {
  std::vector<RoleAttention<Scalar>> stages;
  auto current = x;
  for (EntityRole role : mode.stages()) {
    stages.push_back(role_attention(role, ensemble, current, index, p));
    current = stages.back().output;
  }
  return stages;
}

// Neighbor structure for the final graph-attention layer.
struct NeighborIndex {
  Index node_count = 0;
  std::shared_ptr<const std::vector<Index>> centers;
  std::shared_ptr<const std::vector<Index>> neighbors;
  std::shared_ptr<const Segments> by_center;

  static NeighborIndex build(const std::vector<std::pair<Index, Index>>& edges, Index n) {
    std::vector<Index> c, nb;
    c.reserve(edges.size());
    nb.reserve(edges.size());
    for (const auto& [a, b] : edges) {
      c.push_back(a);
      nb.push_back(b);
    }
    NeighborIndex idx;
    idx.node_count = n;
    idx.by_center = std::make_shared<const Segments>(Segments{c, n});
    idx.centers = std::make_shared<const std::vector<Index>>(std::move(c));
    idx.neighbors = std::make_shared<const std::vector<Index>>(std::move(nb));
    return idx;
  }

  static NeighborIndex build(const ExpandedGraph& g) { return build(g.edges(), g.entity_count()); }
};

template <typename Scalar>
struct GraphAttention {
  ad::Var<Scalar> weights;  // per edge, softmax over each center's neighbors
  ad::Var<Scalar> output;   // X_f
};

// Single-head graph attention with residual:
//   α_ij = softmax_j(LeakyReLU(a^T(x_i W ‖ x_j W))),  x_f_i = x_i + ReLU(Σ_j α_ij x_j W)
template <typename Scalar>
GraphAttention<Scalar> neighbor_reaggregate(const ad::Var<Scalar>& x, const NeighborIndex& nbr,
                                            const BoundParameters<Scalar>& p) {
  if (x.rows() != nbr.node_count) throw ShapeError("neighbor_reaggregate: node count mismatch");
  auto projected = ad::matmul(x, p(param::kGatW));
  auto at_neighbor = ad::gather_rows(projected, nbr.neighbors);
  auto scores = ad::matmul(
      ad::concat_cols<Scalar>({ad::gather_rows(projected, nbr.centers), at_neighbor}), p(param::kGatAtt));
  GraphAttention<Scalar> out;
  out.weights = ad::segment_softmax(ad::leaky_relu(scores, Scalar(kLeakySlope)), nbr.by_center);
  out.output =
      ad::add(x, ad::relu(ad::segment_sum(ad::scale_rows(at_neighbor, out.weights), nbr.by_center)));
  return out;
}

}  // namespace otiea
