#pragma once

#include "otiea/autodiff.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace otiea {

// Layer sizes shared by every stage of the model.
struct EncoderConfig {
  int depth = 2;
  Index entity_dim = 300;
  Index relation_dim = 100;
  Index ontology_dim = 100;

  Index triple_dim() const { return relation_dim + 2 * ontology_dim; }

  void validate() const {
    if (depth < 1) throw std::invalid_argument("encoder depth must be >= 1");
    if (entity_dim <= 0 || relation_dim <= 0 || ontology_dim <= 0) {
      throw std::invalid_argument("encoder dimensions must be positive");
    }
  }
};

// Named trainable arrays with fixed shapes. Iteration order is the name order.
template <typename Scalar>
class ParameterStore {
 public:
  void declare(const std::string& name, Index rows, Index cols) {
    if (values_.contains(name)) throw std::logic_error("parameter declared twice: " + name);
    values_.emplace(name, Matrix<Scalar>::Zero(rows, cols));
  }

  bool contains(const std::string& name) const { return values_.contains(name); }

  Matrix<Scalar>& at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }

  const Matrix<Scalar>& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [name, _] : values_) out.push_back(name);
    return out;
  }

  const std::map<std::string, Matrix<Scalar>>& all() const { return values_; }
  std::map<std::string, Matrix<Scalar>>& all() { return values_; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, m] : values_) n += static_cast<std::size_t>(m.size());
    return n;
  }

  template <typename Other>
  ParameterStore<Other> cast() const {
    ParameterStore<Other> out;
    for (const auto& [name, m] : values_) {
      out.declare(name, m.rows(), m.cols());
      out.at(name) = m.template cast<Other>();
    }
    return out;
  }

 private:
  std::map<std::string, Matrix<Scalar>> values_;
};

// Glorot-style uniform fill in [-sqrt(6/(fan_in+fan_out)), +...].
template <typename Scalar>
void fan_uniform(Matrix<Scalar>& m, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
}

namespace param {

inline std::string highway_weight(int layer) { return "encoder.highway.W." + std::to_string(layer); }
inline std::string highway_bias(int layer) { return "encoder.highway.b." + std::to_string(layer); }

inline const std::string kLatentW = "triple.latent.W";
inline const std::string kLatentB = "triple.latent.b";
// Interaction attention per role: projection of the attended element, of the
// concatenated other two elements, and the attention vector.
inline const std::string kHeadW = "triple.head.W";
inline const std::string kHeadCtxW = "triple.head.W_ctx";
inline const std::string kHeadAtt = "triple.head.a";
inline const std::string kRelW = "triple.relation.W";
inline const std::string kRelCtxW = "triple.relation.W_ctx";
inline const std::string kRelAtt = "triple.relation.a";
inline const std::string kTailW = "triple.tail.W";
inline const std::string kTailCtxW = "triple.tail.W_ctx";
inline const std::string kTailAtt = "triple.tail.a";
inline const std::string kGlobalW = "triple.global.W";
inline const std::string kGlobalB = "triple.global.b";
inline const std::string kGlobalTripleW = "triple.global_triple.W";
inline const std::string kGlobalTripleB = "triple.global_triple.b";

inline const std::string kToOntologyW = "ontology.project.W";
inline const std::string kToOntologyB = "ontology.project.b";
inline const std::string kOntoRelW = "ontology.relation.W";
inline const std::string kOntoRelB = "ontology.relation.b";
inline const std::string kOntoTripleW = "ontology.triple.W";
inline const std::string kOntoTripleB = "ontology.triple.b";
inline const std::string kCoAttSemantic = "ontology.coatt.a_semantic";
inline const std::string kCoAttOntology = "ontology.coatt.a_ontology";

inline const std::string kDecHeadW = "decoder.head.W";
inline const std::string kDecHeadAtt = "decoder.head.a";
inline const std::string kDecTailW = "decoder.tail.W";
inline const std::string kDecTailAtt = "decoder.tail.a";
inline const std::string kGatW = "decoder.gat.W";
inline const std::string kGatAtt = "decoder.gat.a";

inline std::string entity_table(int side) { return "embedding.kg" + std::to_string(side); }

inline bool is_ontology_path(const std::string& name) { return name.rfind("ontology.", 0) == 0; }
inline bool is_global_feature(const std::string& name) {
  return name.rfind("triple.global", 0) == 0;
}

}  // namespace param

// Initial highway gate bias. sigmoid(8) ~ 0.9997, so training starts with
// every gate open and entities begin as their propagated neighborhoods.
inline constexpr double kHighwayGateBias = 8.0;

// Declares every model parameter for `cfg` in a fixed order and fills
// weights/attention vectors from `seed`. Highway biases start at
// kHighwayGateBias, all other biases at zero.
template <typename Scalar>
ParameterStore<Scalar> make_model_parameters(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Index de = cfg.entity_dim, dr = cfg.relation_dim, dO = cfg.ontology_dim;
  const Index dt = cfg.triple_dim();

  struct Decl {
    std::string name;
    Index rows, cols;
    bool random;
  };
  std::vector<Decl> decls;
  for (int l = 0; l < cfg.depth; ++l) {
    decls.push_back({param::highway_weight(l), de, de, true});
    decls.push_back({param::highway_bias(l), 1, de, false});
  }
  decls.push_back({param::kLatentW, 2 * de, dr, true});
  decls.push_back({param::kLatentB, 1, dr, false});
  decls.push_back({param::kHeadW, de, dr, true});
  decls.push_back({param::kHeadCtxW, dr + de, dr, true});
  decls.push_back({param::kHeadAtt, 2 * dr, 1, true});
  decls.push_back({param::kRelW, dr, dr, true});
  decls.push_back({param::kRelCtxW, 2 * de, dr, true});
  decls.push_back({param::kRelAtt, 2 * dr, 1, true});
  decls.push_back({param::kTailW, de, dr, true});
  decls.push_back({param::kTailCtxW, de + dr, dr, true});
  decls.push_back({param::kTailAtt, 2 * dr, 1, true});
  decls.push_back({param::kGlobalW, 2 * de, dr, true});
  decls.push_back({param::kGlobalB, 1, dr, false});
  decls.push_back({param::kGlobalTripleW, 2 * de + dr, dr, true});
  decls.push_back({param::kGlobalTripleB, 1, dr, false});
  decls.push_back({param::kToOntologyW, de, dO, true});
  decls.push_back({param::kToOntologyB, 1, dO, false});
  decls.push_back({param::kOntoRelW, 2 * dO, dr, true});
  decls.push_back({param::kOntoRelB, 1, dr, false});
  decls.push_back({param::kOntoTripleW, 2 * dO + dr, dr, true});
  decls.push_back({param::kOntoTripleB, 1, dr, false});
  decls.push_back({param::kCoAttSemantic, 2 * dr, 1, true});
  decls.push_back({param::kCoAttOntology, 2 * dr, 1, true});
  decls.push_back({param::kDecHeadW, dt, de, true});
  decls.push_back({param::kDecHeadAtt, 2 * de, 1, true});
  decls.push_back({param::kDecTailW, dt, de, true});
  decls.push_back({param::kDecTailAtt, 2 * de, 1, true});
  decls.push_back({param::kGatW, de, de, true});
  decls.push_back({param::kGatAtt, 2 * de, 1, true});

  ParameterStore<Scalar> store;
  std::mt19937_64 rng(seed);
  for (const auto& d : decls) {
    store.declare(d.name, d.rows, d.cols);
    if (d.random) fan_uniform(store.at(d.name), rng);
  }
  for (int l = 0; l < cfg.depth; ++l) store.at(param::highway_bias(l)).setConstant(Scalar(kHighwayGateBias));
  return store;
}

// Parameters placed on a tape as differentiable leaves.
template <typename Scalar>
class BoundParameters {
 public:
  BoundParameters(ad::Tape<Scalar>& tape, const ParameterStore<Scalar>& store) {
    for (const auto& [name, m] : store.all()) vars_.emplace(name, tape.variable(m));
  }

  const ad::Var<Scalar>& operator()(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw std::out_of_range("parameter not bound: " + name);
    return it->second;
  }

  bool contains(const std::string& name) const { return vars_.contains(name); }

  // Gradients after Tape::backward(); parameters off the loss path get zeros.
  std::map<std::string, Matrix<Scalar>> gradients() const {
    std::map<std::string, Matrix<Scalar>> out;
    for (const auto& [name, v] : vars_) {
      out.emplace(name, v.grad().size() == 0 ? Matrix<Scalar>::Zero(v.rows(), v.cols())
                                             : Matrix<Scalar>(v.grad()));
    }
    return out;
  }

 private:
  std::map<std::string, ad::Var<Scalar>> vars_;
};

}  // namespace otiea
