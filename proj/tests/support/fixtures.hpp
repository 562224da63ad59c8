#pragma once

#include "otiea/otiea.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

namespace otiea::testing {

inline KnowledgeGraph random_kg(Index n, Index relations, Index triples, std::uint64_t seed,
                                bool allow_self_loops = false) {
  std::mt19937_64 rng(seed);
  std::set<Triple> out;
  int guard = 0;
  while (static_cast<Index>(out.size()) < triples && guard++ < 100000) {
    Index h = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    Index t = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    if (h == t && !allow_self_loops) continue;
    out.insert({h, static_cast<Index>(rng() % static_cast<std::uint64_t>(relations)), t});
  }
  std::vector<std::int64_t> ids(static_cast<std::size_t>(n));
  std::vector<std::string> uris;
  for (Index e = 0; e < n; ++e) {
    ids[static_cast<std::size_t>(e)] = e;
    uris.push_back("http://toy/resource/e" + std::to_string(e));
  }
  return KnowledgeGraph(ids, uris, relations, {out.begin(), out.end()});
}

// Random permutation of 0..n-1.
inline std::vector<Index> random_permutation(Index n, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

// Same graph with entity e renamed to perm[e].
inline KnowledgeGraph permuted(const KnowledgeGraph& kg, const std::vector<Index>& perm) {
  std::vector<Triple> moved;
  for (const auto& t : kg.triples()) {
    moved.push_back({perm[static_cast<std::size_t>(t.head)], t.relation, perm[static_cast<std::size_t>(t.tail)]});
  }
  std::vector<std::int64_t> ids(static_cast<std::size_t>(kg.entity_count()));
  std::iota(ids.begin(), ids.end(), std::int64_t{0});
  return KnowledgeGraph(ids, kg.uris(), kg.relation_count(), moved);
}

// Rows moved so that row e of `x` lands at perm[e].
template <typename Scalar>
Matrix<Scalar> permute_rows(const Matrix<Scalar>& x, const std::vector<Index>& perm) {
  Matrix<Scalar> out(x.rows(), x.cols());
  for (Index e = 0; e < x.rows(); ++e) out.row(perm[static_cast<std::size_t>(e)]) = x.row(e);
  return out;
}

template <typename Scalar = double>
Matrix<Scalar> random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
  return m;
}

// Model parameters with every entry (biases included) drawn at random.
inline ParameterStore<double> random_parameters(const EncoderConfig& cfg, std::uint64_t seed,
                                                double scale = 0.5) {
  auto store = make_model_parameters<double>(cfg, seed);
  std::uint64_t s = seed * 7919;
  for (auto& [name, m] : store.all()) m = random_matrix(m.rows(), m.cols(), ++s, scale);
  return store;
}

inline EncoderConfig toy_config(int depth = 2) {
  EncoderConfig c;
  c.depth = depth;
  c.entity_dim = 4;
  c.relation_dim = 3;
  c.ontology_dim = 2;
  return c;
}

inline std::vector<std::pair<Index, Index>> edges_of(const std::vector<Triple>& triples) {
  std::set<std::pair<Index, Index>> s;
  for (const auto& t : triples) s.emplace(t.head, t.tail);
  return {s.begin(), s.end()};
}

inline std::vector<int> stage_roles(int mode) {
  std::vector<int> roles;
  for (int i = 0; i < mode + 1; ++i) roles.push_back(i % 2);
  return roles;
}

// Largest |a − b| between an Eigen matrix and a reference matrix.
inline double max_abs_diff(const Matrix<double>& a, const reference::Mat& b) {
  EXPECT_EQ(static_cast<std::size_t>(a.rows()), b.size());
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    EXPECT_EQ(static_cast<std::size_t>(a.cols()), b[static_cast<std::size_t>(i)].size());
    for (Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::fabs(a(i, j) - b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    }
  }
  return worst;
}

inline double max_abs_diff(const Matrix<double>& a, const reference::Vec& b) {
  EXPECT_EQ(static_cast<std::size_t>(a.size()), b.size());
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a.data()[i] - b[static_cast<std::size_t>(i)]));
  return worst;
}

// |analytic − numeric| / max(|analytic|, |numeric|, floor). The floor keeps
// gradients that are zero up to finite-difference roundoff from dominating.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

struct GradCheckResult {
  std::string worst_name;
  double worst_error = 0.0;
  std::size_t checked = 0;
};

// Central differences on every entry of every parameter named in `names`.
// `loss` evaluates the scalar objective; `analytic` holds tape gradients.
inline GradCheckResult check_gradients(ParameterStore<double>& store,
                                       const std::map<std::string, Matrix<double>>& analytic,
                                       const std::function<double()>& loss,
                                       const std::vector<std::string>& names, double h = 1e-6) {
  GradCheckResult r;
  for (const auto& name : names) {
    auto& m = store.at(name);
    const auto& g = analytic.at(name);
    for (Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + h;
      const double up = loss();
      m.data()[i] = saved - h;
      const double down = loss();
      m.data()[i] = saved;
      const double err = relative_error(g.data()[i], (up - down) / (2 * h));
      ++r.checked;
      if (err > r.worst_error) {
        r.worst_error = err;
        r.worst_name = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("otiea_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace otiea::testing
