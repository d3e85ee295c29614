#include "abel/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "abel/util/error.hpp"
#include "abel/util/random.hpp"

namespace abel::nn {

std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

std::string_view arch_kind_name(ArchKind k) { return k == ArchKind::kMlp ? "mlp" : "convnet"; }

void ModelArch::validate() const {
  auto fail = [](const std::string& what) { throw InputError("invalid arch: " + what); };
  if (input_dim < 1) fail("input_dim must be >= 1");
  if (classes < 2) fail("classes must be >= 2");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) fail("init_scale must be > 0");
  for (int h : hidden) {
    if (h < 1) fail("hidden widths must be >= 1");
  }
  if (kind == ArchKind::kMlp) {
    if (hidden.empty()) fail("an mlp needs at least one hidden layer");
  } else {
    if (conv_channels.empty()) fail("a convnet needs at least one conv layer");
    for (int c : conv_channels) {
      if (c < 1) fail("conv_channels must be >= 1");
    }
    if (image_channels < 1 || image_height < 2 || image_width < 2) {
      fail("image shape must be at least 1x2x2");
    }
    if (image_height % 2 != 0 || image_width % 2 != 0) fail("image height and width must be even");
    if (image_channels * image_height * image_width != input_dim) {
      fail("input_dim must equal image_channels * image_height * image_width");
    }
    if (kernel < 1 || kernel % 2 == 0) fail("kernel must be odd and >= 1");
  }
}

namespace {

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.data) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

Network::Network(ModelArch arch) : arch_(std::move(arch)) {
  arch_.validate();

  auto add_param = [this](std::string name, std::vector<std::size_t> shape, bool is_bias,
                          bool normalized) {
    ParamTensor p;
    p.name = std::move(name);
    p.tensor.shape = std::move(shape);
    p.l2_enabled = is_bias ? arch_.l2_on_bias : true;
    p.scale_invariant = !is_bias && normalized;
    layout_.push_back(std::move(p));
    return static_cast<int>(layout_.size() - 1);
  };
  auto add_dense = [&](const std::string& name, std::size_t in, std::size_t out, bool normalized) {
    Dense d{in, out, normalized, -1, -1};
    d.weight = add_param(name + ".w", {out, in}, false, normalized);
    if (arch_.bias) d.bias = add_param(name + ".b", {out}, true, normalized);
    ops_.emplace_back(d);
  };

  std::size_t in = static_cast<std::size_t>(arch_.input_dim);
  if (arch_.kind == ArchKind::kConvNet) {
    std::size_t ch = static_cast<std::size_t>(arch_.image_channels);
    const auto h = static_cast<std::size_t>(arch_.image_height);
    const auto w = static_cast<std::size_t>(arch_.image_width);
    const auto k = static_cast<std::size_t>(arch_.kernel);
    for (std::size_t i = 0; i < arch_.conv_channels.size(); ++i) {
      const auto oc = static_cast<std::size_t>(arch_.conv_channels[i]);
      const std::string name = "conv" + std::to_string(i);
      Conv c{ch, oc, h, w, k, arch_.normalize, -1, -1};
      c.weight = add_param(name + ".w", {oc, ch, k, k}, false, arch_.normalize);
      if (arch_.bias) c.bias = add_param(name + ".b", {oc}, true, arch_.normalize);
      ops_.emplace_back(c);
      ops_.emplace_back(Act{});
      ch = oc;
    }
    ops_.emplace_back(Pool{ch, h, w});
    in = ch * (h / 2) * (w / 2);
  }
  for (std::size_t i = 0; i < arch_.hidden.size(); ++i) {
    const auto out = static_cast<std::size_t>(arch_.hidden[i]);
    add_dense("dense" + std::to_string(i), in, out, arch_.normalize);
    ops_.emplace_back(Act{});
    in = out;
  }
  add_dense("out", in, static_cast<std::size_t>(arch_.classes), arch_.normalize_output);
}

ParamSet Network::init_params(std::uint64_t seed, double sigma_w) const {
  if (!(sigma_w > 0.0) || !std::isfinite(sigma_w)) throw InputError("sigma_w must be > 0");
  std::mt19937_64 rng(seed);
  ParamSet params;
  params.layers = layout_;
  const std::size_t last_weight = static_cast<std::size_t>(std::get<Dense>(ops_.back()).weight);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& layer = params.layers[i];
    layer.tensor.data.assign(element_count(layer.tensor.shape), 0.0);
    if (layer.tensor.shape.size() == 1) continue;  // bias
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < layer.tensor.shape.size(); ++d) fan_in *= layer.tensor.shape[d];
    const bool relu_hidden = arch_.activation == Activation::kRelu && i != last_weight;
    const double gain = relu_hidden ? 6.0 : 3.0;
    const double a = sigma_w * std::sqrt(gain / static_cast<double>(fan_in));
    for (auto& v : layer.tensor.data) v = a * (2.0 * uniform01(rng) - 1.0);
  }
  return params;
}

// Per-op cached values needed by the backward pass.
struct Network::Trace {
  std::vector<Matrix> inputs;            // input of each op
  std::vector<Matrix> pre_norm;          // u = W x (dense/conv only)
  std::vector<std::vector<double>> norms;  // row norms (normalized dense/conv only)
  std::vector<Matrix> outputs;           // output of each op (activations)
};

namespace {

void check_structure(const ParamSet& params, const std::vector<ParamTensor>& layout) {
  if (params.size() != layout.size()) {
    throw ShapeError("parameter set has " + std::to_string(params.size()) +
                     " tensors, model expects " + std::to_string(layout.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& t = params.layers[i].tensor;
    if (t.shape != layout[i].tensor.shape || t.size() != element_count(t.shape)) {
      throw ShapeError("parameter '" + params.layers[i].name + "' has the wrong shape");
    }
  }
}

std::vector<double> row_norms(const Tensor& w, std::size_t rows) {
  const std::size_t cols = w.size() / rows;
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* p = w.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += p[c] * p[c];
    if (!(s > 0.0)) throw NumericError("normalized layer has an all-zero weight row");
    norms[r] = std::sqrt(s);
  }
  return norms;
}

}  // namespace

Matrix Network::run_forward(const ParamSet& params, const Matrix& inputs, Trace* trace) const {
  check_structure(params, layout_);
  if (inputs.cols != static_cast<std::size_t>(arch_.input_dim) ||
      inputs.data.size() != inputs.rows * inputs.cols) {
    throw ShapeError("input has " + std::to_string(inputs.cols) + " features, model expects " +
                     std::to_string(arch_.input_dim));
  }
  const std::size_t batch = inputs.rows;
  Matrix x = inputs;
  for (std::size_t oi = 0; oi < ops_.size(); ++oi) {
    const auto& op = ops_[oi];
    Matrix y;
    Matrix u;
    std::vector<double> norms;
    if (const auto* d = std::get_if<Dense>(&op)) {
      const auto& w = params.layers[static_cast<std::size_t>(d->weight)].tensor.data;
      u = Matrix(batch, d->out);
      for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.row(b);
        double* ub = u.row(b);
        for (std::size_t j = 0; j < d->out; ++j) {
          const double* wj = w.data() + j * d->in;
          double s = 0.0;
          for (std::size_t i = 0; i < d->in; ++i) s += wj[i] * xb[i];
          ub[j] = s;
        }
      }
      y = u;
      if (d->normalize) {
        norms = row_norms(params.layers[static_cast<std::size_t>(d->weight)].tensor, d->out);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < d->out; ++j) y.at(b, j) /= norms[j];
        }
      }
      if (d->bias >= 0) {
        const auto& bias = params.layers[static_cast<std::size_t>(d->bias)].tensor.data;
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < d->out; ++j) y.at(b, j) += bias[j];
        }
      }
    } else if (const auto* c = std::get_if<Conv>(&op)) {
      const auto& w = params.layers[static_cast<std::size_t>(c->weight)].tensor.data;
      const std::size_t hw = c->height * c->width;
      const std::size_t k = c->kernel;
      const auto pad = static_cast<std::ptrdiff_t>(k / 2);
      const auto H = static_cast<std::ptrdiff_t>(c->height);
      const auto W = static_cast<std::ptrdiff_t>(c->width);
      u = Matrix(batch, c->out_ch * hw);
      for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.row(b);
        double* ub = u.row(b);
        for (std::size_t o = 0; o < c->out_ch; ++o) {
          double* uo = ub + o * hw;
          for (std::size_t ci = 0; ci < c->in_ch; ++ci) {
            const double* xc = xb + ci * hw;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const double wv = w[((o * c->in_ch + ci) * k + ky) * k + kx];
                const auto dy = static_cast<std::ptrdiff_t>(ky) - pad;
                const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
                for (std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, -dy);
                     yy < std::min(H, H - dy); ++yy) {
                  for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, -dx);
                       xx < std::min(W, W - dx); ++xx) {
                    uo[yy * W + xx] += wv * xc[(yy + dy) * W + (xx + dx)];
                  }
                }
              }
            }
          }
        }
      }
      y = u;
      if (c->normalize) {
        norms = row_norms(params.layers[static_cast<std::size_t>(c->weight)].tensor, c->out_ch);
      }
      const double* bias = c->bias >= 0
                               ? params.layers[static_cast<std::size_t>(c->bias)].tensor.data.data()
                               : nullptr;
      for (std::size_t b = 0; b < batch; ++b) {
        double* yb = y.row(b);
        for (std::size_t o = 0; o < c->out_ch; ++o) {
          const double scale = c->normalize ? 1.0 / norms[o] : 1.0;
          const double shift = bias ? bias[o] : 0.0;
          for (std::size_t p = 0; p < hw; ++p) yb[o * hw + p] = yb[o * hw + p] * scale + shift;
        }
      }
    } else if (const auto* p = std::get_if<Pool>(&op)) {
      const std::size_t oh = p->height / 2, ow = p->width / 2;
      y = Matrix(batch, p->channels * oh * ow);
      for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.row(b);
        double* yb = y.row(b);
        for (std::size_t ch = 0; ch < p->channels; ++ch) {
          const double* xc = xb + ch * p->height * p->width;
          for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
              const double* top = xc + (2 * i) * p->width + 2 * j;
              const double* bot = top + p->width;
              yb[(ch * oh + i) * ow + j] = 0.25 * (top[0] + top[1] + bot[0] + bot[1]);
            }
          }
        }
      }
    } else {
      y = x;
      if (arch_.activation == Activation::kRelu) {
        for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
      } else {
        for (auto& v : y.data) v = std::tanh(v);
      }
    }
    if (!std::holds_alternative<Act>(op)) check_finite(y, "activations");
    if (trace) {
      trace->inputs.push_back(std::move(x));
      trace->pre_norm.push_back(std::move(u));
      trace->norms.push_back(std::move(norms));
      trace->outputs.push_back(y);
    }
    x = std::move(y);
  }
  check_finite(x, "logits");
  return x;
}

Matrix Network::forward(const ParamSet& params, const Matrix& inputs) const {
  return run_forward(params, inputs, nullptr);
}

namespace {

void check_labels(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " does not match batch " +
                     std::to_string(logits.rows));
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= logits.cols) {
      throw InputError("label " + std::to_string(l) + " outside [0, " +
                       std::to_string(logits.cols) + ")");
    }
  }
}

void check_smoothing(double s) {
  if (!(s >= 0.0 && s < 1.0)) throw InputError("label_smoothing must be in [0, 1)");
}

// Row-wise log-softmax.
Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows, logits.cols);
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const double* z = logits.row(b);
    const double m = *std::max_element(z, z + logits.cols);
    double s = 0.0;
    for (std::size_t k = 0; k < logits.cols; ++k) s += std::exp(z[k] - m);
    const double lse = m + std::log(s);
    for (std::size_t k = 0; k < logits.cols; ++k) out.at(b, k) = z[k] - lse;
  }
  return out;
}

double target(std::size_t k, int label, std::size_t classes, double s) {
  return static_cast<int>(k) == label ? 1.0 - s : s / static_cast<double>(classes - 1);
}

}  // namespace

double loss_ce(const Matrix& logits, std::span<const int> labels, double label_smoothing) {
  check_smoothing(label_smoothing);
  check_labels(logits, labels);
  if (logits.rows == 0) throw ShapeError("empty batch");
  const Matrix lp = log_softmax(logits);
  double total = 0.0;
  for (std::size_t b = 0; b < lp.rows; ++b) {
    for (std::size_t k = 0; k < lp.cols; ++k) {
      const double t = target(k, labels[b], lp.cols, label_smoothing);
      if (t != 0.0) total -= t * lp.at(b, k);
    }
  }
  return total / static_cast<double>(lp.rows);
}

double error_rate(const Matrix& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  if (logits.rows == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t b = 0; b < logits.rows; ++b) {
    const double* z = logits.row(b);
    const auto pred = std::max_element(z, z + logits.cols) - z;
    if (pred != labels[b]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(logits.rows);
}

LossAndGrad Network::loss_and_grad(const ParamSet& params, const Batch& batch,
                                   double label_smoothing) const {
  check_smoothing(label_smoothing);
  Trace tr;
  Matrix logits = run_forward(params, batch.inputs, &tr);
  check_labels(logits, batch.labels);
  if (logits.rows == 0) throw ShapeError("empty batch");

  LossAndGrad out;
  out.loss = loss_ce(logits, batch.labels, label_smoothing);
  out.grads = GradSet::zeros_like(params);

  const std::size_t B = logits.rows;
  const std::size_t C = logits.cols;
  Matrix delta(B, C);
  {
    const Matrix lp = log_softmax(logits);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t k = 0; k < C; ++k) {
        delta.at(b, k) = (std::exp(lp.at(b, k)) - target(k, batch.labels[b], C, label_smoothing)) /
                         static_cast<double>(B);
      }
    }
  }

  for (std::size_t oi = ops_.size(); oi-- > 0;) {
    const auto& op = ops_[oi];
    const Matrix& x = tr.inputs[oi];
    Matrix dx(x.rows, x.cols);
    if (const auto* d = std::get_if<Dense>(&op)) {
      const auto wi = static_cast<std::size_t>(d->weight);
      const auto& w = params.layers[wi].tensor.data;
      auto& gw = out.grads.tensors[wi].data;
      if (d->bias >= 0) {
        auto& gb = out.grads.tensors[static_cast<std::size_t>(d->bias)].data;
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t j = 0; j < d->out; ++j) gb[j] += delta.at(b, j);
        }
      }
      Matrix du = delta;
      if (d->normalize) {
        const auto& norms = tr.norms[oi];
        const Matrix& u = tr.pre_norm[oi];
        for (std::size_t j = 0; j < d->out; ++j) {
          double radial = 0.0;
          for (std::size_t b = 0; b < B; ++b) radial += delta.at(b, j) * u.at(b, j);
          const double n3 = norms[j] * norms[j] * norms[j];
          for (std::size_t i = 0; i < d->in; ++i) gw[j * d->in + i] -= radial * w[j * d->in + i] / n3;
          for (std::size_t b = 0; b < B; ++b) du.at(b, j) /= norms[j];
        }
      }
      for (std::size_t b = 0; b < B; ++b) {
        const double* xb = x.row(b);
        const double* dub = du.row(b);
        double* dxb = dx.row(b);
        for (std::size_t j = 0; j < d->out; ++j) {
          const double g = dub[j];
          if (g == 0.0) continue;
          double* gwj = gw.data() + j * d->in;
          const double* wj = w.data() + j * d->in;
          for (std::size_t i = 0; i < d->in; ++i) {
            gwj[i] += g * xb[i];
            dxb[i] += g * wj[i];
          }
        }
      }
    } else if (const auto* c = std::get_if<Conv>(&op)) {
      const auto wi = static_cast<std::size_t>(c->weight);
      const auto& w = params.layers[wi].tensor.data;
      auto& gw = out.grads.tensors[wi].data;
      const std::size_t hw = c->height * c->width;
      const std::size_t k = c->kernel;
      const std::size_t filt = c->in_ch * k * k;
      if (c->bias >= 0) {
        auto& gb = out.grads.tensors[static_cast<std::size_t>(c->bias)].data;
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t o = 0; o < c->out_ch; ++o) {
            for (std::size_t p = 0; p < hw; ++p) gb[o] += delta.at(b, o * hw + p);
          }
        }
      }
      Matrix du = delta;
      if (c->normalize) {
        const auto& norms = tr.norms[oi];
        const Matrix& u = tr.pre_norm[oi];
        for (std::size_t o = 0; o < c->out_ch; ++o) {
          double radial = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t p = 0; p < hw; ++p) radial += delta.at(b, o * hw + p) * u.at(b, o * hw + p);
          }
          const double n3 = norms[o] * norms[o] * norms[o];
          for (std::size_t q = 0; q < filt; ++q) gw[o * filt + q] -= radial * w[o * filt + q] / n3;
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t p = 0; p < hw; ++p) du.at(b, o * hw + p) /= norms[o];
          }
        }
      }
      const auto pad = static_cast<std::ptrdiff_t>(k / 2);
      const auto H = static_cast<std::ptrdiff_t>(c->height);
      const auto W = static_cast<std::ptrdiff_t>(c->width);
      for (std::size_t b = 0; b < B; ++b) {
        const double* xb = x.row(b);
        const double* dub = du.row(b);
        double* dxb = dx.row(b);
        for (std::size_t o = 0; o < c->out_ch; ++o) {
          const double* duo = dub + o * hw;
          for (std::size_t ci = 0; ci < c->in_ch; ++ci) {
            const double* xc = xb + ci * hw;
            double* dxc = dxb + ci * hw;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::size_t widx = ((o * c->in_ch + ci) * k + ky) * k + kx;
                const double wv = w[widx];
                const auto dy = static_cast<std::ptrdiff_t>(ky) - pad;
                const auto dxo = static_cast<std::ptrdiff_t>(kx) - pad;
                double acc = 0.0;
                for (std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, -dy);
                     yy < std::min(H, H - dy); ++yy) {
                  for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, -dxo);
                       xx < std::min(W, W - dxo); ++xx) {
                    const double g = duo[yy * W + xx];
                    const auto src = (yy + dy) * W + (xx + dxo);
                    acc += g * xc[src];
                    dxc[src] += g * wv;
                  }
                }
                gw[widx] += acc;
              }
            }
          }
        }
      }
    } else if (const auto* p = std::get_if<Pool>(&op)) {
      const std::size_t oh = p->height / 2, ow = p->width / 2;
      for (std::size_t b = 0; b < B; ++b) {
        const double* gb = delta.row(b);
        double* dxb = dx.row(b);
        for (std::size_t ch = 0; ch < p->channels; ++ch) {
          double* dxc = dxb + ch * p->height * p->width;
          for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
              const double g = 0.25 * gb[(ch * oh + i) * ow + j];
              double* top = dxc + (2 * i) * p->width + 2 * j;
              double* bot = top + p->width;
              top[0] += g;
              top[1] += g;
              bot[0] += g;
              bot[1] += g;
            }
          }
        }
      }
    } else {
      const Matrix& y = tr.outputs[oi];
      for (std::size_t q = 0; q < dx.data.size(); ++q) {
        const double deriv = arch_.activation == Activation::kRelu
                                 ? (y.data[q] > 0.0 ? 1.0 : 0.0)
                                 : 1.0 - y.data[q] * y.data[q];
        dx.data[q] = delta.data[q] * deriv;
      }
    }
    delta = std::move(dx);
  }

  for (const auto& t : out.grads.tensors) {
    for (double v : t.data) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient");
    }
  }
  out.logits = std::move(logits);
  return out;
}

}  // namespace abel::nn
