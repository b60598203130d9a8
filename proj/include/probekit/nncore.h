#ifndef PROBEKIT_NNCORE_H_
#define PROBEKIT_NNCORE_H_

// Fixed-graph layers with hand-written backward passes. Forward functions are
// pure; backward functions accumulate into Parameter::grad and return (or
// accumulate into) the gradient with respect to their input.

#include <cstddef>
#include <span>
#include <vector>

#include "probekit/matrix.h"
#include "probekit/rng.h"
#include "probekit/types.h"

namespace probekit::nn {

// ---- affine ---------------------------------------------------------------

// y = x W + b, with W (in x out) and b (1 x out).
Matrix AffineForward(const Matrix& x, const Parameter& w, const Parameter& b);
// Accumulates dL/dW and dL/db; returns dL/dx.
Matrix AffineBackward(const Matrix& x, Parameter& w, Parameter& b,
                      const Matrix& dy);

// U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)) over the whole matrix.
void GlorotUniform(Parameter& p, size_t fan_in, size_t fan_out, Rng& rng);

// ---- elementwise ----------------------------------------------------------

enum class Activation { kRelu, kTanh };

Matrix Activate(Activation act, const Matrix& x);
// Backward written in terms of the forward *output* y.
Matrix ActivateBackward(Activation act, const Matrix& y, const Matrix& dy);

// ---- softmax / cross-entropy ----------------------------------------------

std::vector<double> Softmax(std::span<const double> logits);

struct SoftmaxXentResult {
  double loss = 0.0;  // mean over rows of -log p[gold]
  Matrix probs;
};

SoftmaxXentResult SoftmaxXent(const Matrix& logits,
                              std::span<const size_t> gold);
// (p - onehot(gold)) / batch
Matrix SoftmaxXentBackward(const Matrix& probs, std::span<const size_t> gold);

// ---- span attention pooling -----------------------------------------------

struct AttentionPoolResult {
  std::vector<double> pooled;  // width = h.cols()
  std::vector<double> alpha;   // one weight per span token
};

// scores_t = h_t . a for t in span; alpha = softmax(scores); pooled =
// sum_t alpha_t h_t. `attn` is (p x 1).
AttentionPoolResult AttentionPool(const Matrix& h, Span span,
                                  const Parameter& attn);
// Accumulates into attn.grad and rows of dh.
void AttentionPoolBackward(const Matrix& h, Span span, Parameter& attn,
                           const AttentionPoolResult& fwd,
                           std::span<const double> dpooled, Matrix& dh);

// ---- scalar mix -----------------------------------------------------------

// gamma * sum_l softmax(w)_l * layers[l]. `weights` is (1 x L), `gamma` (1 x 1).
Matrix ScalarMixForward(std::span<const Matrix> layers, const Parameter& weights,
                        const Parameter& gamma);
void ScalarMixBackward(std::span<const Matrix> layers, Parameter& weights,
                       Parameter& gamma, const Matrix& dout);

// ---- 1-D convolution + max-over-time pooling ------------------------------

// Parallel filter banks, one per width. Filter f of width w is stored as row f
// of a (filters x w*input_dim) matrix so a window of w consecutive input rows
// (contiguous in row-major storage) dots directly against it.
struct ConvBank {
  size_t input_dim = 0;
  size_t filters_per_width = 0;
  std::vector<size_t> widths;
  std::vector<Parameter> weights;
  std::vector<Parameter> biases;

  size_t output_dim() const { return widths.size() * filters_per_width; }
  size_t max_width() const;
  ParamRefs Params();
};

ConvBank MakeConvBank(size_t input_dim, std::vector<size_t> widths,
                      size_t filters_per_width, Rng& rng);

struct ConvPoolResult {
  Matrix input;                // input zero-padded to at least max_width rows
  size_t original_rows = 0;
  std::vector<double> pooled;  // ReLU(max_t conv), width order
  std::vector<size_t> argmax;  // time index of the max per output unit
};

ConvPoolResult Conv1dMaxPool(const Matrix& e, const ConvBank& bank);
// Accumulates filter gradients; if `de` is non-null, accumulates dL/de for
// the unpadded rows.
void Conv1dMaxPoolBackward(ConvBank& bank, const ConvPoolResult& fwd,
                           std::span<const double> dpooled, Matrix* de);

}  // namespace probekit::nn

#endif  // PROBEKIT_NNCORE_H_
