#include "abel/nn/optim.hpp"

#include <cmath>

#include "abel/util/error.hpp"

namespace abel::nn {

namespace {

void check_hyper(double lr, double lambda) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InputError("learning rate must be > 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be >= 0");
}

}  // namespace

MomentumState make_momentum(const ParamSet& params, double momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must be in [0, 1)");
  return {GradSet::zeros_like(params), momentum};
}

AdamState make_adam(const ParamSet& params, double beta1, double beta2, double eps) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw InputError("invalid adam constants");
  }
  AdamState s;
  s.m = GradSet::zeros_like(params);
  s.v = GradSet::zeros_like(params);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void step_sgd(ParamSet& params, MomentumState& opt, const GradSet& grads, double lr,
              double lambda) {
  check_hyper(lr, lambda);
  check_congruent(params, grads, opt.velocity);
  const double mu = opt.momentum;
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto& w = params.layers[l].tensor.data;
    const auto& g = grads.tensors[l].data;
    auto& v = opt.velocity.tensors[l].data;
    const double lam = params.layers[l].l2_enabled ? lambda : 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = mu * v[i] + (g[i] + lam * w[i]);
      w[i] -= lr * v[i];
    }
  }
}

void step_adam(ParamSet& params, AdamState& opt, const GradSet& grads, double lr, double lambda) {
  check_hyper(lr, lambda);
  check_congruent(params, grads, opt.m);
  check_congruent(params, opt.v);
  opt.t += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto& w = params.layers[l].tensor.data;
    const auto& g = grads.tensors[l].data;
    auto& m = opt.m.tensors[l].data;
    auto& v = opt.v.tensors[l].data;
    const double lam = params.layers[l].l2_enabled ? lambda : 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + lam * w[i];
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * gi;
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * gi * gi;
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt.eps);
    }
  }
}

void step(ParamSet& params, OptState& opt, const GradSet& grads, double lr, double lambda) {
  std::visit(
      [&](auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, MomentumState>) {
          step_sgd(params, s, grads, lr, lambda);
        } else {
          step_adam(params, s, grads, lr, lambda);
        }
      },
      opt);
}

double global_norm(const GradSet& grads) {
  long double s = 0.0L;
  for (const auto& t : grads.tensors) {
    for (double v : t.data) s += static_cast<long double>(v) * v;
  }
  return std::sqrt(static_cast<double>(s));
}

GradSet clip_global_norm(const GradSet& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InputError("max_norm must be > 0");
  const double norm = global_norm(grads);
  if (norm <= max_norm) return grads;
  const double scale = max_norm / norm;
  GradSet out = grads;
  for (auto& t : out.tensors) {
    for (auto& v : t.data) v *= scale;
  }
  return out;
}

}  // namespace abel::nn
