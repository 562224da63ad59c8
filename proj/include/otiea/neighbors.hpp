#pragma once

// L1 distances and nearest-neighbor queries over embedding rows.
// Ties are always broken by the lower candidate id.

#include "otiea/autodiff.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace otiea {

template <typename Scalar>
Scalar l1_distance(std::span<const Scalar> x, std::span<const Scalar> y) {
  if (x.size() != y.size()) throw std::invalid_argument("l1_distance: dimension mismatch");
  Scalar d(0);
  for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
  return d;
}

template <typename Scalar>
std::span<const Scalar> row_span(const Matrix<Scalar>& m, Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

// D(q, c) = ||queries.row(query_ids[q]) − candidates.row(candidate_ids[c])||_1
template <typename Scalar>
Matrix<Scalar> pairwise_l1(const Matrix<Scalar>& queries, const std::vector<Index>& query_ids,
                           const Matrix<Scalar>& candidates, const std::vector<Index>& candidate_ids) {
  if (queries.cols() != candidates.cols()) throw std::invalid_argument("pairwise_l1: width mismatch");
  Matrix<Scalar> cand(static_cast<Index>(candidate_ids.size()), candidates.cols());
  for (std::size_t c = 0; c < candidate_ids.size(); ++c) cand.row(static_cast<Index>(c)) = candidates.row(candidate_ids[c]);
  Matrix<Scalar> out(static_cast<Index>(query_ids.size()), static_cast<Index>(candidate_ids.size()));
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    out.row(static_cast<Index>(q)) =
        (cand.rowwise() - queries.row(query_ids[q])).cwiseAbs().rowwise().sum().transpose();
  }
  return out;
}

// Positions (into `distances`' columns) of the k smallest entries, nearest first.
template <typename Scalar>
std::vector<Index> k_smallest(const Eigen::Ref<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>& distances,
                              const std::vector<Index>& ids, std::size_t k, Index exclude_id = -1) {
  std::vector<std::size_t> order;
  order.reserve(ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c) {
    if (ids[c] != exclude_id) order.push_back(c);
  }
  k = std::min(k, order.size());
  auto less = [&](std::size_t a, std::size_t b) {
    const Scalar da = distances(static_cast<Index>(a)), db = distances(static_cast<Index>(b));
    return da < db || (da == db && ids[a] < ids[b]);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), less);
  std::vector<Index> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ids[order[i]]);
  return out;
}

// k nearest entities within the same matrix for each query, excluding itself.
template <typename Scalar>
std::vector<std::vector<Index>> k_nearest_within(const Matrix<Scalar>& x,
                                                 const std::vector<Index>& query_ids, std::size_t k) {
  std::vector<Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  const auto d = pairwise_l1(x, query_ids, x, all);
  std::vector<std::vector<Index>> out;
  out.reserve(query_ids.size());
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    out.push_back(k_smallest<Scalar>(d.row(static_cast<Index>(q)), all, k, query_ids[q]));
  }
  return out;
}

}  // namespace otiea
