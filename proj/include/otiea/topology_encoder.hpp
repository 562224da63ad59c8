#pragma once

// GCN propagation with layer-wise highway gates.

#include "otiea/autodiff.hpp"
#include "otiea/parameters.hpp"

#include <memory>

namespace otiea {

// ReLU(Â X) with Â the normalized adjacency. No weight matrix: the highway
// gate that follows carries the trainable mixing.
template <typename Scalar>
ad::Var<Scalar> gcn_layer(const ad::Var<Scalar>& x,
                          std::shared_ptr<const SparseMatrix<Scalar>> norm_adj) {
  return ad::relu(ad::spmm(std::move(norm_adj), x));
}

// T = sigmoid(X_in W + b);  out = T ⊙ X_gcn + (1 − T) ⊙ X_in
template <typename Scalar>
ad::Var<Scalar> highway(const ad::Var<Scalar>& x_in, const ad::Var<Scalar>& x_gcn,
                        const ad::Var<Scalar>& weight, const ad::Var<Scalar>& bias) {
  if (x_in.rows() != x_gcn.rows() || x_in.cols() != x_gcn.cols()) {
    throw ShapeError("highway: layer input and propagated input differ in shape");
  }
  auto gate = ad::sigmoid(ad::add_row(ad::matmul(x_in, weight), bias));
  return ad::add(ad::cwise_mul(gate, x_gcn), ad::cwise_mul(ad::one_minus(gate), x_in));
}

template <typename Scalar>
ad::Var<Scalar> encode_topology(const ad::Var<Scalar>& x0,
                                std::shared_ptr<const SparseMatrix<Scalar>> norm_adj,
                                const EncoderConfig& cfg, const BoundParameters<Scalar>& params) {
  cfg.validate();
  if (x0.cols() != cfg.entity_dim) throw ShapeError("encode_topology: embedding width mismatch");
  auto x = x0;
  for (int l = 0; l < cfg.depth; ++l) {
    auto propagated = gcn_layer(x, norm_adj);
    x = highway(x, propagated, params(param::highway_weight(l)), params(param::highway_bias(l)));
  }
  return x;
}

}  // namespace otiea
