#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace abel::nn {

// Dense row-major array of 64-bit reals.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_);

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool operator==(const Tensor&) const = default;
};

std::size_t element_count(const std::vector<std::size_t>& shape);

// One named parameter tensor of a model.
struct ParamTensor {
  std::string name;
  Tensor tensor;
  bool l2_enabled = true;        // subject to the L2 penalty
  bool scale_invariant = false;  // network output invariant to tensor -> a * tensor

  bool operator==(const ParamTensor&) const = default;
};

// Ordered parameter tensors of one model. Shapes are fixed at initialization.
struct ParamSet {
  std::vector<ParamTensor> layers;

  std::size_t size() const { return layers.size(); }
  std::size_t element_count() const;
  bool operator==(const ParamSet&) const = default;
};

// Gradients of the bare loss (no L2 term), one tensor per ParamSet layer.
struct GradSet {
  std::vector<Tensor> tensors;

  // Zero-filled gradients congruent with `params`.
  static GradSet zeros_like(const ParamSet& params);

  std::size_t size() const { return tensors.size(); }
  bool operator==(const GradSet&) const = default;
};

// Throws ShapeError if the two sets differ in layer count or any shape.
void check_congruent(const ParamSet& params, const GradSet& grads);
void check_congruent(const ParamSet& a, const ParamSet& b);
void check_congruent(const ParamSet& params, const GradSet& a, const GradSet& b);

// Ordered (layer name, value) pairs.
using PerLayer = std::vector<std::pair<std::string, double>>;

}  // namespace abel::nn
