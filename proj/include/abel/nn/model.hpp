#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "abel/nn/params.hpp"

namespace abel::nn {

// Row-major batch x features matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

struct Batch {
  Matrix inputs;            // batch x input_dim
  std::vector<int> labels;  // class indices in [0, classes)
};

enum class Activation : std::uint8_t { kRelu = 0, kTanh = 1 };
enum class ArchKind : std::uint8_t { kMlp = 0, kConvNet = 1 };

std::string_view activation_name(Activation a);
std::string_view arch_kind_name(ArchKind k);

// Network description.
//
// kMlp:     input -> [dense -> act] x hidden.size() -> dense(classes)
// kConvNet: input viewed as (channels, height, width)
//           -> [conv3x3 -> act] x conv_channels.size() -> avgpool2x2
//           -> [dense -> act] x hidden.size() -> dense(classes)
//
// With `normalize`, every hidden dense/conv layer divides its pre-activation by
// the L2 norm of the corresponding weight row (filter), which makes the network
// invariant to rescaling that weight tensor. `normalize_output` does the same
// for the final layer. A net with both flags and no bias is fully
// scale-invariant.
struct ModelArch {
  ArchKind kind = ArchKind::kMlp;
  int input_dim = 0;
  std::vector<int> hidden;
  Activation activation = Activation::kRelu;
  bool normalize = false;
  bool normalize_output = false;
  bool bias = true;
  bool l2_on_bias = true;
  int classes = 2;
  // Multiplies the fan-in scaled initialization. Very small values (e.g.
  // 1/256) put training in a regime where the weight norm no longer bounces and
  // accuracy degrades.
  double init_scale = 1.0;

  // kConvNet only; input_dim must equal channels * height * width.
  int image_channels = 1;
  int image_height = 0;
  int image_width = 0;
  std::vector<int> conv_channels;
  int kernel = 3;

  // Throws InputError naming the first invalid field.
  void validate() const;
  bool operator==(const ModelArch&) const = default;
};

struct LossAndGrad {
  double loss = 0.0;
  GradSet grads;
  Matrix logits;
};

class Network {
 public:
  // Throws InputError for an invalid architecture.
  explicit Network(ModelArch arch);

  const ModelArch& arch() const { return arch_; }

  // Deterministic in (seed, sigma_w); weights uniform in
  // +-sigma_w * sqrt(gain / fan_in) with gain 6 for relu hidden layers and 3
  // otherwise; biases zero. Throws InputError unless sigma_w > 0.
  ParamSet init_params(std::uint64_t seed, double sigma_w) const;

  // Logits for a batch. Throws ShapeError on structural mismatch and
  // NumericError if any logit is non-finite.
  Matrix forward(const ParamSet& params, const Matrix& inputs) const;

  // Mean smoothed cross-entropy and its exact gradient w.r.t. every parameter.
  LossAndGrad loss_and_grad(const ParamSet& params, const Batch& batch,
                            double label_smoothing) const;

  GradSet grad(const ParamSet& params, const Batch& batch, double label_smoothing) const {
    return loss_and_grad(params, batch, label_smoothing).grads;
  }

 private:
  struct Dense {
    std::size_t in = 0, out = 0;
    bool normalize = false;
    int weight = -1, bias = -1;  // ParamSet indices
  };
  struct Conv {
    std::size_t in_ch = 0, out_ch = 0, height = 0, width = 0, kernel = 3;
    bool normalize = false;
    int weight = -1, bias = -1;
  };
  struct Pool {
    std::size_t channels = 0, height = 0, width = 0;
  };
  struct Act {};
  using Op = std::variant<Dense, Conv, Pool, Act>;

  struct Trace;
  Matrix run_forward(const ParamSet& params, const Matrix& inputs, Trace* trace) const;

  ModelArch arch_;
  std::vector<Op> ops_;
  std::vector<ParamTensor> layout_;  // names, shapes, flags; data unused
};

// Mean cross-entropy against targets 1 - s on the true class and s / (C - 1)
// elsewhere. Throws InputError for s outside [0, 1) or out-of-range labels and
// ShapeError for mismatched sizes.
double loss_ce(const Matrix& logits, std::span<const int> labels, double label_smoothing);

// Fraction of rows whose arg-max differs from the label.
double error_rate(const Matrix& logits, std::span<const int> labels);

}  // namespace abel::nn
