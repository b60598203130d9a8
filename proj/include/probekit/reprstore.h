#ifndef PROBEKIT_REPRSTORE_H_
#define PROBEKIT_REPRSTORE_H_

// EPR1 token-representation files.
//
// Layout (all integers u32 little-endian, reals IEEE-754 float32 LE):
//   "EPR1" | version=1 | dim | n_layers | n_sentences
//   per sentence: id_len | id bytes (UTF-8) | n_tokens |
//                 n_layers x n_tokens x dim reals, layer-major
//
// Layer 0 is whatever the producer stored first; exporters write the
// embedding-layer output there, and the `cat` view pairs it with layer i.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "probekit/matrix.h"
#include "probekit/types.h"

namespace probekit {

class SentenceRepr {
 public:
  SentenceRepr(std::string id, size_t n_tokens, size_t n_layers, size_t dim,
               std::vector<float> data);

  const std::string& id() const { return id_; }
  size_t n_tokens() const { return n_tokens_; }
  size_t n_layers() const { return n_layers_; }
  size_t dim() const { return dim_; }

  // Row-major n_tokens x dim block of one layer.
  std::span<const float> Layer(size_t layer) const;
  // The same block widened to float64.
  Matrix LayerMatrix(size_t layer) const;
  std::span<const float> data() const { return data_; }

 private:
  std::string id_;
  size_t n_tokens_;
  size_t n_layers_;
  size_t dim_;
  std::vector<float> data_;
};

class ReprFile {
 public:
  static constexpr uint32_t kVersion = 1;

  ReprFile(size_t dim, size_t n_layers);

  // Rejects bad magic/version, truncation, trailing bytes, duplicate ids and
  // non-finite values (naming the sentence).
  static ReprFile Parse(std::string_view bytes, const std::string& source);
  static ReprFile Read(const std::string& path);

  std::string Serialize() const;
  void Write(const std::string& path) const;

  // `data` is layer-major n_layers x n_tokens x dim.
  void Add(std::string id, size_t n_tokens, std::vector<float> data);

  size_t dim() const { return dim_; }
  size_t n_layers() const { return n_layers_; }
  size_t size() const { return sentences_.size(); }
  const std::vector<SentenceRepr>& sentences() const { return sentences_; }

  const SentenceRepr* Find(const std::string& id) const;
  // Throws ValidationError naming the missing id.
  const SentenceRepr& At(const std::string& id) const;

 private:
  size_t dim_;
  size_t n_layers_;
  std::vector<SentenceRepr> sentences_;
  std::unordered_map<std::string, size_t> index_;
};

// ---- layer views ----------------------------------------------------------

enum class ViewMode { kOnly, kCat, kMix };

struct LayerView {
  ViewMode mode = ViewMode::kCat;
  size_t layer = 0;

  size_t EffectiveDim(size_t dim) const {
    return mode == ViewMode::kCat ? 2 * dim : dim;
  }
  // "only:3", "cat:12", "mix:12"
  static LayerView Parse(std::string_view text);
  std::string ToString() const;
  bool operator==(const LayerView&) const = default;
};

// Trainable scalar-mix parameters for a mix view over layers 0..i.
struct MixParams {
  MixParams() = default;
  explicit MixParams(size_t n_layers);  // w = 0 (uniform), gamma = 1

  Parameter weights;  // 1 x (i+1), softmax-normalized when applied
  Parameter gamma;    // 1 x 1
};

// Layers 0..upto (inclusive) widened to float64.
std::vector<Matrix> WidenLayers(const SentenceRepr& repr, size_t upto);

// only -> layer i; cat -> [layer 0 | layer i] per token;
// mix -> gamma * sum_l softmax(w)_l * layer_l over l = 0..i.
// `mix` must be given iff the mode is mix.
Matrix BuildLayerView(const SentenceRepr& repr, const LayerView& view,
                      const MixParams* mix = nullptr);

// ---- synthetic embedders --------------------------------------------------

enum class EmbedderKind { kGaussianTokenType, kHashedNgram };

struct SyntheticEmbedder {
  EmbedderKind kind = EmbedderKind::kGaussianTokenType;
  size_t dim = 64;
  uint64_t seed = 13;

  static EmbedderKind ParseKind(std::string_view text);
};

std::string_view EmbedderKindName(EmbedderKind kind);

// Vector for one token at one layer, written into `out` (length dim).
//   gaussian_token_type: i.i.d. N(0,1) seeded by hash(token, layer, seed).
//   hashed_ngram: counts of character 3-grams of "<token>" hashed into dim
//   buckets, L2-normalized; identical for every layer.
void EmbedToken(const SyntheticEmbedder& embedder, std::string_view token,
                size_t layer, std::span<double> out);

// Per-layer n_tokens x dim matrices for a sentence.
std::vector<Matrix> SynthEmbed(const SyntheticEmbedder& embedder,
                               const TokenizedSentence& sentence,
                               size_t n_layers);

// EPR1 contents for a list of sentences.
ReprFile EmbedSentences(const SyntheticEmbedder& embedder,
                        const std::vector<TokenizedSentence>& sentences,
                        size_t n_layers);

}  // namespace probekit

#endif  // PROBEKIT_REPRSTORE_H_
