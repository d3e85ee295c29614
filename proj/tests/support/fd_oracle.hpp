#pragma once

// Central finite-difference gradient oracle. Uses only forward() and loss_ce(),
// never the backward pass it is checking.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "abel/nn/model.hpp"

namespace abel::testing {

struct FdProbe {
  std::size_t layer = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct FdReport {
  std::vector<FdProbe> probes;
  std::size_t skipped_kinks = 0;
  double max_rel_error = 0.0;
};

inline double fd_loss(const nn::Network& net, const nn::ParamSet& p, const nn::Batch& batch,
                      double smoothing) {
  return nn::loss_ce(net.forward(p, batch.inputs), batch.labels, smoothing);
}

// Relative error with an absolute floor: gradients below `floor` are compared
// absolutely, where the central difference is dominated by rounding.
inline double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Probes `count` uniformly drawn coordinates. Coordinates whose forward and
// backward one-sided differences disagree (a relu kink inside [w-h, w+h]) are
// skipped and redrawn.
inline FdReport check_gradients(const nn::Network& net, const nn::ParamSet& params,
                                const nn::Batch& batch, double smoothing, std::size_t count,
                                std::uint64_t seed, double h = 1e-5, double floor = 1e-6) {
  FdReport report;
  const auto analytic = net.grad(params, batch, smoothing);
  std::mt19937_64 rng(seed);
  const double base = fd_loss(net, params, batch, smoothing);
  std::size_t attempts = 0;
  while (report.probes.size() < count && attempts < count * 20) {
    ++attempts;
    const std::size_t layer = rng() % params.size();
    const std::size_t index = rng() % params.layers[layer].tensor.size();
    nn::ParamSet p = params;
    double& w = p.layers[layer].tensor.data[index];
    const double w0 = w;
    w = w0 + h;
    const double up = fd_loss(net, p, batch, smoothing);
    w = w0 - h;
    const double down = fd_loss(net, p, batch, smoothing);
    const double fwd = (up - base) / h;
    const double bwd = (base - down) / h;
    if (std::abs(fwd - bwd) > 1e-3 * std::max(std::abs(fwd) + std::abs(bwd), 1e-4)) {
      ++report.skipped_kinks;
      continue;
    }
    FdProbe probe{layer, index, analytic.tensors[layer].data[index], (up - down) / (2 * h), 0.0};
    probe.rel_error = rel_error(probe.analytic, probe.numeric, floor);
    report.max_rel_error = std::max(report.max_rel_error, probe.rel_error);
    report.probes.push_back(probe);
  }
  return report;
}

inline nn::Batch random_batch(int rows, int dim, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  nn::Batch b;
  b.inputs = nn::Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(dim));
  for (auto& v : b.inputs.data) v = n(rng);
  for (int r = 0; r < rows; ++r) b.labels.push_back(static_cast<int>(rng() % classes));
  return b;
}

}  // namespace abel::testing
