#include "probekit/nncore.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "probekit/error.h"
#include "probekit/kernels.h"

namespace probekit::nn {
namespace {

void CheckShape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

#ifndef NDEBUG
void DebugCheckFinite(const Matrix& m, const char* op) {
  if (!m.AllFinite()) {
    throw std::runtime_error(std::string("non-finite value after ") + op);
  }
}
#else
void DebugCheckFinite(const Matrix&, const char*) {}
#endif

}  // namespace

Matrix AffineForward(const Matrix& x, const Parameter& w, const Parameter& b) {
  CheckShape(x.cols() == w.value.rows(),
             "affine input " + ShapeString(x) + " vs W " + ShapeString(w.value));
  CheckShape(b.value.rows() == 1 && b.value.cols() == w.value.cols(),
             "affine bias " + ShapeString(b.value));
  Matrix y(x.rows(), w.value.cols());
  for (size_t i = 0; i < x.rows(); ++i) {
    auto out = y.row(i);
    std::copy(b.value.row(0).begin(), b.value.row(0).end(), out.begin());
    auto xi = x.row(i);
    for (size_t k = 0; k < x.cols(); ++k) {
      if (xi[k] != 0.0) kernels::Axpy(xi[k], w.value.row(k), out);
    }
  }
  DebugCheckFinite(y, "affine");
  return y;
}

Matrix AffineBackward(const Matrix& x, Parameter& w, Parameter& b,
                      const Matrix& dy) {
  CheckShape(dy.rows() == x.rows() && dy.cols() == w.value.cols(),
             "affine upstream " + ShapeString(dy));
  Matrix dx(x.rows(), x.cols());
  auto db = b.grad.row(0);
  for (size_t i = 0; i < x.rows(); ++i) {
    auto gi = dy.row(i);
    kernels::Axpy(1.0, gi, db);
    auto xi = x.row(i);
    auto dxi = dx.row(i);
    for (size_t k = 0; k < x.cols(); ++k) {
      if (xi[k] != 0.0) kernels::Axpy(xi[k], gi, w.grad.row(k));
      dxi[k] = kernels::Dot(gi, w.value.row(k));
    }
  }
  return dx;
}

void GlorotUniform(Parameter& p, size_t fan_in, size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : p.value.values()) v = dist(rng);
}

Matrix Activate(Activation act, const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) {
    v = act == Activation::kRelu ? std::max(v, 0.0) : std::tanh(v);
  }
  return y;
}

Matrix ActivateBackward(Activation act, const Matrix& y, const Matrix& dy) {
  CheckShape(y.SameShape(dy), "activation upstream");
  Matrix dx = dy;
  auto yv = y.values();
  auto dv = dx.values();
  for (size_t i = 0; i < dv.size(); ++i) {
    if (act == Activation::kRelu) {
      if (yv[i] <= 0.0) dv[i] = 0.0;
    } else {
      dv[i] *= 1.0 - yv[i] * yv[i];
    }
  }
  return dx;
}

std::vector<double> Softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

SoftmaxXentResult SoftmaxXent(const Matrix& logits,
                              std::span<const size_t> gold) {
  CheckShape(gold.size() == logits.rows(), "softmax gold count");
  SoftmaxXentResult out;
  out.probs = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (size_t i = 0; i < logits.rows(); ++i) {
    if (gold[i] >= logits.cols()) {
      throw std::out_of_range("gold index " + std::to_string(gold[i]) +
                              " >= class count " +
                              std::to_string(logits.cols()));
    }
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    auto prow = out.probs.row(i);
    for (size_t k = 0; k < row.size(); ++k) prow[k] = std::exp(row[k] - log_z);
    total += log_z - row[gold[i]];
  }
  out.loss = logits.rows() == 0 ? 0.0 : total / static_cast<double>(logits.rows());
  return out;
}

Matrix SoftmaxXentBackward(const Matrix& probs, std::span<const size_t> gold) {
  Matrix d = probs;
  const double inv = 1.0 / static_cast<double>(probs.rows());
  for (size_t i = 0; i < d.rows(); ++i) {
    auto r = d.row(i);
    r[gold[i]] -= 1.0;
    for (double& v : r) v *= inv;
  }
  return d;
}

AttentionPoolResult AttentionPool(const Matrix& h, Span span,
                                  const Parameter& attn) {
  if (!span.ValidFor(h.rows())) {
    throw ValidationError("span out of bounds: [" + std::to_string(span.start) +
                          "," + std::to_string(span.end) + ") for " +
                          std::to_string(h.rows()) + " rows");
  }
  CheckShape(attn.value.rows() == h.cols() && attn.value.cols() == 1,
             "attention vector " + ShapeString(attn.value));
  std::vector<double> scores(span.length());
  for (size_t t = 0; t < span.length(); ++t) {
    scores[t] = kernels::Dot(h.row(span.start + t), attn.value.values());
  }
  AttentionPoolResult out;
  out.alpha = Softmax(scores);
  out.pooled.assign(h.cols(), 0.0);
  for (size_t t = 0; t < span.length(); ++t) {
    kernels::Axpy(out.alpha[t], h.row(span.start + t), out.pooled);
  }
  return out;
}

void AttentionPoolBackward(const Matrix& h, Span span, Parameter& attn,
                           const AttentionPoolResult& fwd,
                           std::span<const double> dpooled, Matrix& dh) {
  CheckShape(dh.SameShape(h), "attention dh");
  CheckShape(dpooled.size() == h.cols(), "attention upstream");
  const size_t len = span.length();
  std::vector<double> dalpha(len);
  double weighted = 0.0;
  for (size_t t = 0; t < len; ++t) {
    dalpha[t] = kernels::Dot(dpooled, h.row(span.start + t));
    weighted += fwd.alpha[t] * dalpha[t];
  }
  auto a = attn.value.values();
  auto da = attn.grad.values();
  for (size_t t = 0; t < len; ++t) {
    const double dscore = fwd.alpha[t] * (dalpha[t] - weighted);
    auto ht = h.row(span.start + t);
    auto dht = dh.row(span.start + t);
    kernels::Axpy(fwd.alpha[t], dpooled, dht);
    kernels::Axpy(dscore, a, dht);
    kernels::Axpy(dscore, ht, da);
  }
}

Matrix ScalarMixForward(std::span<const Matrix> layers, const Parameter& weights,
                        const Parameter& gamma) {
  CheckShape(!layers.empty(), "scalar mix needs at least one layer");
  CheckShape(weights.value.size() == layers.size(),
             "mix weights " + std::to_string(weights.value.size()) + " vs " +
                 std::to_string(layers.size()) + " layers");
  const std::vector<double> s = Softmax(weights.value.values());
  const double g = gamma.value(0, 0);
  Matrix out(layers[0].rows(), layers[0].cols());
  for (size_t l = 0; l < layers.size(); ++l) {
    CheckShape(layers[l].SameShape(layers[0]), "mix layer shapes");
    kernels::Axpy(g * s[l], layers[l].values(), out.values());
  }
  return out;
}

void ScalarMixBackward(std::span<const Matrix> layers, Parameter& weights,
                       Parameter& gamma, const Matrix& dout) {
  const std::vector<double> s = Softmax(weights.value.values());
  const double g = gamma.value(0, 0);
  std::vector<double> c(layers.size());
  double dgamma = 0.0;
  for (size_t l = 0; l < layers.size(); ++l) {
    c[l] = kernels::Dot(dout.values(), layers[l].values());
    dgamma += s[l] * c[l];
  }
  // ds_l = g * c_l; dw_k = s_k (ds_k - sum_l s_l ds_l)
  const double mean_ds = g * dgamma;
  auto dw = weights.grad.values();
  for (size_t k = 0; k < layers.size(); ++k) {
    dw[k] += s[k] * (g * c[k] - mean_ds);
  }
  gamma.grad(0, 0) += dgamma;
}

size_t ConvBank::max_width() const {
  return widths.empty() ? 0 : *std::max_element(widths.begin(), widths.end());
}

ParamRefs ConvBank::Params() {
  ParamRefs refs;
  for (size_t i = 0; i < widths.size(); ++i) {
    refs.push_back(&weights[i]);
    refs.push_back(&biases[i]);
  }
  return refs;
}

ConvBank MakeConvBank(size_t input_dim, std::vector<size_t> widths,
                      size_t filters_per_width, Rng& rng) {
  ConvBank bank;
  bank.input_dim = input_dim;
  bank.filters_per_width = filters_per_width;
  bank.widths = std::move(widths);
  for (size_t w : bank.widths) {
    if (w == 0) throw std::invalid_argument("convolution width must be positive");
    Parameter weight("conv" + std::to_string(w) + ".W", filters_per_width,
                     w * input_dim);
    GlorotUniform(weight, w * input_dim, filters_per_width, rng);
    bank.weights.push_back(std::move(weight));
    bank.biases.emplace_back("conv" + std::to_string(w) + ".b", 1,
                             filters_per_width);
  }
  return bank;
}

ConvPoolResult Conv1dMaxPool(const Matrix& e, const ConvBank& bank) {
  CheckShape(e.cols() == bank.input_dim, "conv input width " + ShapeString(e));
  ConvPoolResult out;
  out.original_rows = e.rows();
  const size_t rows = std::max(e.rows(), bank.max_width());
  out.input = Matrix(rows, e.cols());
  std::copy(e.values().begin(), e.values().end(), out.input.values().begin());
  out.pooled.reserve(bank.output_dim());
  out.argmax.reserve(bank.output_dim());
  for (size_t wi = 0; wi < bank.widths.size(); ++wi) {
    const size_t w = bank.widths[wi];
    const size_t positions = rows - w + 1;
    for (size_t f = 0; f < bank.filters_per_width; ++f) {
      auto filter = bank.weights[wi].value.row(f);
      const double bias = bank.biases[wi].value(0, f);
      double best = -std::numeric_limits<double>::infinity();
      size_t best_t = 0;
      for (size_t t = 0; t < positions; ++t) {
        const double v = bias + kernels::Dot(out.input.rows_block(t, t + w), filter);
        if (v > best) {
          best = v;
          best_t = t;
        }
      }
      out.pooled.push_back(std::max(best, 0.0));
      out.argmax.push_back(best_t);
    }
  }
  return out;
}

void Conv1dMaxPoolBackward(ConvBank& bank, const ConvPoolResult& fwd,
                           std::span<const double> dpooled, Matrix* de) {
  CheckShape(dpooled.size() == bank.output_dim(), "conv upstream");
  const size_t d = bank.input_dim;
  Matrix dinput(fwd.input.rows(), d);
  size_t unit = 0;
  for (size_t wi = 0; wi < bank.widths.size(); ++wi) {
    const size_t w = bank.widths[wi];
    for (size_t f = 0; f < bank.filters_per_width; ++f, ++unit) {
      // ReLU gate: gradient flows only when the pooled value was positive.
      if (fwd.pooled[unit] <= 0.0 || dpooled[unit] == 0.0) continue;
      const double g = dpooled[unit];
      const size_t t = fwd.argmax[unit];
      bank.biases[wi].grad(0, f) += g;
      kernels::Axpy(g, fwd.input.rows_block(t, t + w), bank.weights[wi].grad.row(f));
      if (de != nullptr) {
        std::span<double> window(dinput.values().data() + t * d, w * d);
        kernels::Axpy(g, bank.weights[wi].value.row(f), window);
      }
    }
  }
  if (de != nullptr) {
    CheckShape(de->rows() == fwd.original_rows && de->cols() == d, "conv de");
    auto src = dinput.rows_block(0, fwd.original_rows);
    kernels::Axpy(1.0, src, de->values());
  }
}

}  // namespace probekit::nn
