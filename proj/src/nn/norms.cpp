#include "abel/nn/norms.hpp"

#include <cmath>

#include "abel/util/error.hpp"

namespace abel::nn {

namespace {

// Accumulates in extended precision so that differences of successive norms
// are not dominated by summation error.
double dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

LayerSums weight_norm_sq(const ParamSet& params, NormFilter filter) {
  LayerSums out;
  long double total = 0.0L;
  for (const auto& l : params.layers) {
    if (filter == NormFilter::kL2Only && !l.l2_enabled) continue;
    const double v = dot(l.tensor.data, l.tensor.data);
    out.per_layer.emplace_back(l.name, v);
    total += v;
  }
  out.total = static_cast<double>(total);
  return out;
}

LayerSums inner_gw(const ParamSet& params, const GradSet& grads) {
  check_congruent(params, grads);
  LayerSums out;
  long double total = 0.0L;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = dot(params.layers[i].tensor.data, grads.tensors[i].data);
    out.per_layer.emplace_back(params.layers[i].name, v);
    total += v;
  }
  out.total = static_cast<double>(total);
  return out;
}

LayerSums grad_norm_sq(const ParamSet& params, const GradSet& grads) {
  check_congruent(params, grads);
  LayerSums out;
  long double total = 0.0L;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = dot(grads.tensors[i].data, grads.tensors[i].data);
    out.per_layer.emplace_back(params.layers[i].name, v);
    total += v;
  }
  out.total = static_cast<double>(total);
  return out;
}

Angle angle_cos_sin(const ParamSet& prev, const ParamSet& next) {
  check_congruent(prev, next);
  long double pp = 0.0L, nn = 0.0L, pn = 0.0L;
  for (std::size_t l = 0; l < prev.size(); ++l) {
    const auto& a = prev.layers[l].tensor.data;
    const auto& b = next.layers[l].tensor.data;
    for (std::size_t i = 0; i < a.size(); ++i) {
      pp += static_cast<long double>(a[i]) * a[i];
      nn += static_cast<long double>(b[i]) * b[i];
      pn += static_cast<long double>(a[i]) * b[i];
    }
  }
  if (pp == 0.0L || nn == 0.0L) throw DomainError("angle undefined for a zero vector");
  long double c = pn / std::sqrt(pp * nn);
  if (c > 1.0L) c = 1.0L;
  if (c < -1.0L) c = -1.0L;
  return {static_cast<double>(c), static_cast<double>(std::sqrt(1.0L - c * c))};
}

NormDeltaPrediction predicted_delta_wsq(double wsq, double gsq, double gw, double eta,
                                        double lambda) {
  const double el = eta * lambda;
  return {eta * eta * gsq - (2.0 - el) * el * wsq - 2.0 * eta * (1.0 - el) * gw,
          eta * eta * gsq - 2.0 * el * wsq - 2.0 * eta * gw};
}

}  // namespace abel::nn
