#include "abel/nn/params.hpp"

#include <functional>
#include <numeric>

#include "abel/util/error.hpp"

namespace abel::nn {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape_)
    : shape(std::move(shape_)), data(nn::element_count(shape), 0.0) {}

std::size_t ParamSet::element_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.tensor.size();
  return n;
}

GradSet GradSet::zeros_like(const ParamSet& params) {
  GradSet g;
  g.tensors.reserve(params.size());
  for (const auto& l : params.layers) g.tensors.emplace_back(l.tensor.shape);
  return g;
}

void check_congruent(const ParamSet& params, const GradSet& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("layer count mismatch: " + std::to_string(params.size()) + " vs " +
                     std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.layers[i].tensor.same_shape(grads.tensors[i]) ||
        params.layers[i].tensor.size() != grads.tensors[i].size()) {
      throw ShapeError("shape mismatch in layer '" + params.layers[i].name + "'");
    }
  }
}

void check_congruent(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) throw ShapeError("layer count mismatch between parameter sets");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.layers[i].tensor.same_shape(b.layers[i].tensor) ||
        a.layers[i].tensor.size() != b.layers[i].tensor.size()) {
      throw ShapeError("shape mismatch in layer '" + a.layers[i].name + "'");
    }
  }
}

void check_congruent(const ParamSet& params, const GradSet& a, const GradSet& b) {
  check_congruent(params, a);
  check_congruent(params, b);
}

}  // namespace abel::nn
