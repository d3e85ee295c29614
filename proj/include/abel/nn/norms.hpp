#pragma once

#include "abel/nn/params.hpp"

namespace abel::nn {

enum class NormFilter { kAll, kL2Only };

struct LayerSums {
  double total = 0.0;
  PerLayer per_layer;  // only layers selected by the filter
};

// |w|^2 = sum over layers of the squared L2 norm of each tensor.
LayerSums weight_norm_sq(const ParamSet& params, NormFilter filter = NormFilter::kAll);

// g . w, total and per layer. Throws ShapeError on mismatch.
LayerSums inner_gw(const ParamSet& params, const GradSet& grads);

// |g|^2 per layer, laid out like weight_norm_sq.
LayerSums grad_norm_sq(const ParamSet& params, const GradSet& grads);

struct Angle {
  double cos = 1.0;
  double sin = 0.0;
};

// Angle between two parameter vectors. Throws ShapeError on mismatch and
// DomainError if either vector is zero.
Angle angle_cos_sin(const ParamSet& prev, const ParamSet& next);

struct NormDeltaPrediction {
  // eta^2 |g|^2 - (2 - eta lambda) eta lambda |w|^2 - 2 eta (1 - eta lambda) g.w
  double exact = 0.0;
  // eta^2 |g|^2 - 2 eta lambda |w|^2 - 2 eta g.w (drops O(eta^2 lambda) terms)
  double truncated = 0.0;
};

// Change of |w|^2 under one plain SGD step w <- w - eta g - eta lambda w.
NormDeltaPrediction predicted_delta_wsq(double wsq, double gsq, double gw, double eta,
                                        double lambda);

}  // namespace abel::nn
