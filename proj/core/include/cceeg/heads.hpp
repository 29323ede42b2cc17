#pragma once

#include "cceeg/graph.hpp"
#include "cceeg/model.hpp"
#include "cceeg/nn_ops.hpp"
#include "cceeg/parameters.hpp"

#include <cstdint>
#include <string>

namespace cceeg {

// Task head over encoder features: flatten [C*n, d] -> hidden (GELU, dropout)
// -> output logits/value. Output width is 1 for binary and regression tasks,
// k for k-way classification. Parameters are named head.w1/b1/w2/b2 so they
// ride along in checkpoints as extra tensors.

inline std::vector<ParamSpec> head_param_specs(std::int64_t n_tokens, std::int64_t d,
                                               std::int64_t hidden, std::int64_t out) {
  return {
      {"head.w1", {n_tokens * d, hidden}, InitKind::kaiming, n_tokens * d},
      {"head.b1", {hidden}, InitKind::zeros, 0},
      {"head.w2", {hidden, out}, InitKind::kaiming, hidden},
      {"head.b2", {out}, InitKind::zeros, 0},
  };
}

template <typename S>
ParameterSet<S> init_head_params(std::int64_t n_tokens, std::int64_t d, std::int64_t hidden,
                                 std::int64_t out, std::uint64_t seed) {
  ParameterSet<S> p;
  for (const ParamSpec& spec : head_param_specs(n_tokens, d, hidden, out))
    p.add(spec.name, detail::init_tensor<S>(spec, seed));
  return p;
}

template <typename S>
struct HeadIds {
  int w1, b1, w2, b2;
};

template <typename S>
HeadIds<S> bind_head(Graph<S>& g, const ParameterSet<S>& p) {
  return {g.leaf(p.get("head.w1")), g.leaf(p.get("head.b1")), g.leaf(p.get("head.w2")),
          g.leaf(p.get("head.b2"))};
}

// features: [N, d] node -> [1, out] logits node.
template <typename S>
int head_forward(Graph<S>& g, int features, const HeadIds<S>& h, DropoutStream<S>* drop) {
  const std::int64_t n_tokens = g.val(features).dim(0);
  const std::int64_t d = g.val(features).dim(1);
  int x = ops::reshape(g, features, {std::int64_t{1}, n_tokens * d});
  x = ops::affine(g, x, h.w1, h.b1);
  x = ops::gelu(g, x);
  if (drop) x = drop->apply(g, x);
  return ops::affine(g, x, h.w2, h.b2);
}

}  // namespace cceeg
