#include "probekit/reprstore.h"

#include <cmath>
#include <random>

#include "probekit/binary_io.h"
#include "probekit/error.h"
#include "probekit/kernels.h"
#include "probekit/nncore.h"
#include "probekit/rng.h"

namespace probekit {
namespace {

constexpr std::string_view kMagic = "EPR1";

}  // namespace

SentenceRepr::SentenceRepr(std::string id, size_t n_tokens, size_t n_layers,
                           size_t dim, std::vector<float> data)
    : id_(std::move(id)),
      n_tokens_(n_tokens),
      n_layers_(n_layers),
      dim_(dim),
      data_(std::move(data)) {
  if (data_.size() != n_layers * n_tokens * dim) {
    throw ValidationError("sentence " + id_ + ": representation size " +
                          std::to_string(data_.size()) + " != layers*tokens*dim");
  }
}

std::span<const float> SentenceRepr::Layer(size_t layer) const {
  if (layer >= n_layers_) {
    throw ValidationError("layer " + std::to_string(layer) + " out of range (" +
                          std::to_string(n_layers_) + " layers)");
  }
  const size_t block = n_tokens_ * dim_;
  return std::span<const float>(data_).subspan(layer * block, block);
}

Matrix SentenceRepr::LayerMatrix(size_t layer) const {
  Matrix m(n_tokens_, dim_);
  kernels::Widen(Layer(layer), m.values());
  return m;
}

ReprFile::ReprFile(size_t dim, size_t n_layers) : dim_(dim), n_layers_(n_layers) {
  if (dim == 0 || n_layers == 0) {
    throw ValidationError("EPR1 dim and layer count must be positive");
  }
}

void ReprFile::Add(std::string id, size_t n_tokens, std::vector<float> data) {
  if (id.empty()) throw ValidationError("EPR1 sentence id must be non-empty");
  if (index_.count(id)) throw ValidationError("duplicate sentence id " + id);
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw ValidationError("non-finite value in sentence " + id);
    }
  }
  SentenceRepr repr(id, n_tokens, n_layers_, dim_, std::move(data));
  index_.emplace(std::move(id), sentences_.size());
  sentences_.push_back(std::move(repr));
}

const SentenceRepr* ReprFile::Find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &sentences_[it->second];
}

const SentenceRepr& ReprFile::At(const std::string& id) const {
  const SentenceRepr* r = Find(id);
  if (r == nullptr) throw ValidationError("missing representation for sentence " + id);
  return *r;
}

ReprFile ReprFile::Parse(std::string_view bytes, const std::string& source) {
  binio::Reader r(bytes);
  try {
    if (r.remaining() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
      throw ValidationError("bad magic (not an EPR1 file)");
    }
    const uint32_t version = r.U32();
    if (version != kVersion) {
      throw ValidationError("unsupported EPR1 version " + std::to_string(version));
    }
    const uint32_t dim = r.U32();
    const uint32_t n_layers = r.U32();
    const uint32_t n_sentences = r.U32();
    ReprFile file(dim, n_layers);
    for (uint32_t s = 0; s < n_sentences; ++s) {
      std::string id = r.String();
      const uint32_t n_tokens = r.U32();
      const uint64_t count = uint64_t{n_layers} * n_tokens * dim;
      if (count * sizeof(float) > r.remaining()) {
        throw ValidationError("truncated payload in sentence " + id + " (" +
                              std::to_string(s + 1) + " of " +
                              std::to_string(n_sentences) + ")");
      }
      std::vector<float> data(count);
      for (float& v : data) v = r.F32();
      file.Add(std::move(id), n_tokens, std::move(data));
    }
    if (r.remaining() != 0) {
      throw ValidationError(std::to_string(r.remaining()) +
                            " trailing bytes after the last sentence");
    }
    return file;
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

ReprFile ReprFile::Read(const std::string& path) {
  return Parse(binio::ReadFile(path), path);
}

std::string ReprFile::Serialize() const {
  binio::Writer w;
  w.Bytes(kMagic);
  w.U32(kVersion);
  w.U32(static_cast<uint32_t>(dim_));
  w.U32(static_cast<uint32_t>(n_layers_));
  w.U32(static_cast<uint32_t>(sentences_.size()));
  for (const auto& s : sentences_) {
    w.String(s.id());
    w.U32(static_cast<uint32_t>(s.n_tokens()));
    for (float v : s.data()) w.F32(v);
  }
  return w.Take();
}

void ReprFile::Write(const std::string& path) const {
  binio::WriteFile(path, Serialize());
}

// ---- layer views ----------------------------------------------------------

LayerView LayerView::Parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw UsageError("layer view must look like only:i, cat:i or mix:i");
  }
  LayerView view;
  const std::string_view mode = text.substr(0, colon);
  if (mode == "only") {
    view.mode = ViewMode::kOnly;
  } else if (mode == "cat") {
    view.mode = ViewMode::kCat;
  } else if (mode == "mix") {
    view.mode = ViewMode::kMix;
  } else {
    throw UsageError("unknown layer view mode: " + std::string(mode));
  }
  try {
    view.layer = std::stoul(std::string(text.substr(colon + 1)));
  } catch (const std::exception&) {
    throw UsageError("bad layer index in view: " + std::string(text));
  }
  return view;
}

std::string LayerView::ToString() const {
  const char* name = mode == ViewMode::kOnly ? "only"
                     : mode == ViewMode::kCat ? "cat"
                                              : "mix";
  return std::string(name) + ":" + std::to_string(layer);
}

MixParams::MixParams(size_t n_layers)
    : weights("mix.weights", 1, n_layers), gamma("mix.gamma", 1, 1) {
  gamma.value(0, 0) = 1.0;
}

std::vector<Matrix> WidenLayers(const SentenceRepr& repr, size_t upto) {
  std::vector<Matrix> layers;
  layers.reserve(upto + 1);
  for (size_t l = 0; l <= upto; ++l) layers.push_back(repr.LayerMatrix(l));
  return layers;
}

Matrix BuildLayerView(const SentenceRepr& repr, const LayerView& view,
                      const MixParams* mix) {
  if (view.layer >= repr.n_layers()) {
    throw ValidationError("layer index " + std::to_string(view.layer) +
                          " out of range for " + std::to_string(repr.n_layers()) +
                          " stored layers");
  }
  if ((mix != nullptr) != (view.mode == ViewMode::kMix)) {
    throw ValidationError("mix weights must be given exactly for mix views");
  }
  switch (view.mode) {
    case ViewMode::kOnly:
      return repr.LayerMatrix(view.layer);
    case ViewMode::kCat: {
      const size_t d = repr.dim();
      Matrix out(repr.n_tokens(), 2 * d);
      const auto first = repr.Layer(0);
      const auto top = repr.Layer(view.layer);
      for (size_t t = 0; t < repr.n_tokens(); ++t) {
        auto row = out.row(t);
        kernels::Widen(first.subspan(t * d, d), row.subspan(0, d));
        kernels::Widen(top.subspan(t * d, d), row.subspan(d, d));
      }
      return out;
    }
    case ViewMode::kMix: {
      if (mix->weights.value.size() != view.layer + 1 ||
          mix->gamma.value.size() != 1) {
        throw ValidationError("mix weights dimension mismatch: expected " +
                              std::to_string(view.layer + 1) + " weights, got " +
                              std::to_string(mix->weights.value.size()));
      }
      const auto layers = WidenLayers(repr, view.layer);
      return nn::ScalarMixForward(layers, mix->weights, mix->gamma);
    }
  }
  return {};
}

// ---- synthetic embedders --------------------------------------------------

EmbedderKind SyntheticEmbedder::ParseKind(std::string_view text) {
  if (text == "gaussian_token_type") return EmbedderKind::kGaussianTokenType;
  if (text == "hashed_ngram") return EmbedderKind::kHashedNgram;
  throw UsageError("unknown embedder kind: " + std::string(text));
}

std::string_view EmbedderKindName(EmbedderKind kind) {
  return kind == EmbedderKind::kGaussianTokenType ? "gaussian_token_type"
                                                  : "hashed_ngram";
}

namespace {

// Splits UTF-8 text into code points (as byte substrings).
std::vector<std::string_view> CodePoints(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    size_t len = 1;
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c >= 0xf0) {
      len = 4;
    } else if (c >= 0xe0) {
      len = 3;
    } else if (c >= 0xc0) {
      len = 2;
    }
    len = std::min(len, s.size() - i);
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace

void EmbedToken(const SyntheticEmbedder& embedder, std::string_view token,
                size_t layer, std::span<double> out) {
  if (embedder.kind == EmbedderKind::kGaussianTokenType) {
    Rng rng(HashCombine(HashCombine(Fnv1a64(token), layer), embedder.seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out) v = normal(rng);
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<std::string_view> chars{"<"};
  for (auto cp : CodePoints(token)) chars.push_back(cp);
  chars.push_back(">");
  for (size_t i = 0; i + 3 <= chars.size(); ++i) {
    std::string gram;
    for (size_t k = 0; k < 3; ++k) gram.append(chars[i + k]);
    const uint64_t h = HashCombine(Fnv1a64(gram), embedder.seed);
    out[h % out.size()] += 1.0;
  }
  const double norm = std::sqrt(kernels::Dot(out, out));
  if (norm > 0.0) {
    for (double& v : out) v /= norm;
  }
}

std::vector<Matrix> SynthEmbed(const SyntheticEmbedder& embedder,
                               const TokenizedSentence& sentence,
                               size_t n_layers) {
  std::vector<Matrix> layers;
  layers.reserve(n_layers);
  for (size_t l = 0; l < n_layers; ++l) {
    Matrix m(sentence.tokens.size(), embedder.dim);
    for (size_t t = 0; t < sentence.tokens.size(); ++t) {
      EmbedToken(embedder, sentence.tokens[t], l, m.row(t));
    }
    layers.push_back(std::move(m));
  }
  return layers;
}

ReprFile EmbedSentences(const SyntheticEmbedder& embedder,
                        const std::vector<TokenizedSentence>& sentences,
                        size_t n_layers) {
  ReprFile file(embedder.dim, n_layers);
  for (const auto& s : sentences) {
    std::vector<float> data;
    data.reserve(n_layers * s.tokens.size() * embedder.dim);
    for (const Matrix& layer : SynthEmbed(embedder, s, n_layers)) {
      for (double v : layer.values()) data.push_back(static_cast<float>(v));
    }
    file.Add(s.id, s.tokens.size(), std::move(data));
  }
  return file;
}

}  // namespace probekit
