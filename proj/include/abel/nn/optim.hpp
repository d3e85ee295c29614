#pragma once

#include <cstdint>
#include <variant>

#include "abel/nn/params.hpp"

namespace abel::nn {

// Heavy-ball momentum: v <- mu v + (g + lambda w); w <- w - lr v.
// With mu = 0 this is exactly w <- w - lr g - lr lambda w.
struct MomentumState {
  GradSet velocity;
  double momentum = 0.9;
  bool operator==(const MomentumState&) const = default;
};

// Bias-corrected Adam; lambda enters as an added gradient term (L2), not as
// decoupled weight decay.
struct AdamState {
  GradSet m;
  GradSet v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamState&) const = default;
};

using OptState = std::variant<MomentumState, AdamState>;

MomentumState make_momentum(const ParamSet& params, double momentum);
AdamState make_adam(const ParamSet& params, double beta1 = 0.9, double beta2 = 0.999,
                    double eps = 1e-8);

// lambda applies only to layers with l2_enabled. Throws ShapeError when the
// buffers or gradients are not congruent with params and InputError for lr <= 0
// or lambda < 0.
void step_sgd(ParamSet& params, MomentumState& opt, const GradSet& grads, double lr,
              double lambda);
void step_adam(ParamSet& params, AdamState& opt, const GradSet& grads, double lr, double lambda);
void step(ParamSet& params, OptState& opt, const GradSet& grads, double lr, double lambda);

// sqrt of the sum of squares of all gradient entries.
double global_norm(const GradSet& grads);

// Rescales all tensors by max_norm / |g| when |g| > max_norm; identity otherwise.
GradSet clip_global_norm(const GradSet& grads, double max_norm);

}  // namespace abel::nn
