#include "probekit/wordconv.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "probekit/checkpoint.h"
#include "probekit/error.h"
#include "probekit/optim.h"
#include "probekit/rng.h"

namespace probekit {

using Json = nlohmann::ordered_json;

namespace {

constexpr char kUnk[] = "<unk>";

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

size_t ArgmaxOf(const std::vector<double>& v) {
  return static_cast<size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

void WordConvConfig::Validate() const {
  if (embedding_dim == 0 || filters_per_width == 0 || widths.empty()) {
    throw ValidationError("wordconv dimensions and widths must be non-empty");
  }
  for (size_t w : widths) {
    if (w == 0) throw ValidationError("wordconv filter widths must be positive");
    if (w > max_len) throw ValidationError("wordconv max_len must be >= every filter width");
  }
  if (epochs == 0 || batch_size == 0) {
    throw ValidationError("wordconv epochs and batch size must be >= 1");
  }
  if (!(lr > 0.0) || !(rho > 0.0 && rho < 1.0) || !(eps > 0.0)) {
    throw ValidationError("wordconv optimizer settings out of range");
  }
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ValidationError("wordconv dev_fraction must lie in (0, 1)");
  }
}

Json WordConvConfig::ToJson() const {
  return {{"embedding_dim", embedding_dim},
          {"widths", widths},
          {"filters_per_width", filters_per_width},
          {"max_len", max_len},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"rho", rho},
          {"eps", eps},
          {"dev_fraction", dev_fraction},
          {"init_scale", init_scale},
          {"seed", seed}};
}

WordConvConfig WordConvConfig::FromJson(const Json& j) {
  WordConvConfig c;
  c.embedding_dim = j.at("embedding_dim").get<size_t>();
  c.widths = j.at("widths").get<std::vector<size_t>>();
  c.filters_per_width = j.at("filters_per_width").get<size_t>();
  c.max_len = j.at("max_len").get<size_t>();
  c.epochs = j.at("epochs").get<size_t>();
  c.batch_size = j.at("batch_size").get<size_t>();
  c.lr = j.at("lr").get<double>();
  c.rho = j.at("rho").get<double>();
  c.eps = j.at("eps").get<double>();
  c.dev_fraction = j.at("dev_fraction").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

WordConvClassifier WordConvClassifier::Build(const WordConvConfig& config,
                                             const std::vector<std::string>& words) {
  config.Validate();
  WordConvClassifier m;
  m.config_ = config;
  m.words_.push_back(kUnk);
  m.index_.emplace(kUnk, 0);
  for (const auto& w : words) {
    std::string lw = Lower(w);
    if (m.index_.emplace(lw, m.words_.size()).second) m.words_.push_back(std::move(lw));
  }
  const size_t d = config.embedding_dim;
  m.embed_ = Parameter("embed", m.words_.size(), d);
  std::normal_distribution<double> normal(0.0, config.init_scale);
  for (size_t i = 0; i < m.words_.size(); ++i) {
    Rng rng(HashCombine(Fnv1a64(m.words_[i]), config.seed));
    for (double& v : m.embed_.value.row(i)) v = normal(rng);
  }
  Rng rng(HashCombine(config.seed, 0xc0));
  m.conv_ = nn::MakeConvBank(d, config.widths, config.filters_per_width, rng);
  m.out_w_ = Parameter("out.W", m.conv_.output_dim(), kNumEtypes);
  m.out_b_ = Parameter("out.b", 1, kNumEtypes);
  nn::GlorotUniform(m.out_w_, m.conv_.output_dim(), kNumEtypes, rng);
  return m;
}

std::vector<size_t> WordConvClassifier::Encode(std::span<const std::string> question) const {
  std::vector<size_t> ids;
  const size_t n = std::min(question.size(), config_.max_len);
  ids.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    auto it = index_.find(Lower(question[i]));
    ids.push_back(it == index_.end() ? 0 : it->second);
  }
  return ids;
}

Matrix WordConvClassifier::Embed(std::span<const size_t> ids) const {
  Matrix e(ids.size(), config_.embedding_dim);
  for (size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] >= words_.size()) throw ValidationError("word id out of range");
    const auto src = embed_.value.row(ids[t]);
    std::copy(src.begin(), src.end(), e.row(t).begin());
  }
  return e;
}

std::vector<double> WordConvClassifier::Logits(std::span<const size_t> ids) const {
  const auto pooled = nn::Conv1dMaxPool(Embed(ids), conv_);
  const Matrix logits = nn::AffineForward(Matrix::RowVector(pooled.pooled), out_w_, out_b_);
  return {logits.values().begin(), logits.values().end()};
}

EtypeLabel WordConvClassifier::Predict(std::span<const std::string> question) const {
  return static_cast<EtypeLabel>(ArgmaxOf(Logits(Encode(question))));
}

double WordConvClassifier::LossAndGrad(std::span<const Item> batch) {
  if (batch.empty()) throw ValidationError("empty wordconv batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Item& item : batch) {
    const Matrix e = Embed(item.ids);
    const auto fwd = nn::Conv1dMaxPool(e, conv_);
    const Matrix x = Matrix::RowVector(fwd.pooled);
    const Matrix logits = nn::AffineForward(x, out_w_, out_b_);
    const size_t gold[1] = {item.gold};
    const auto xent = nn::SoftmaxXent(logits, gold);
    loss += xent.loss * scale;
    Matrix dlogits = nn::SoftmaxXentBackward(xent.probs, gold);
    for (double& v : dlogits.values()) v *= scale;
    const Matrix dx = nn::AffineBackward(x, out_w_, out_b_, dlogits);
    Matrix de(e.rows(), e.cols());
    nn::Conv1dMaxPoolBackward(conv_, fwd, dx.values(), &de);
    for (size_t t = 0; t < item.ids.size(); ++t) {
      auto dst = embed_.grad.row(item.ids[t]);
      const auto src = de.row(t);
      for (size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  return loss;
}

double WordConvClassifier::Loss(std::span<const Item> batch) const {
  if (batch.empty()) throw ValidationError("empty wordconv batch");
  double loss = 0.0;
  for (const Item& item : batch) {
    const size_t gold[1] = {item.gold};
    const auto logits = Logits(item.ids);
    loss += nn::SoftmaxXent(Matrix::RowVector(logits), gold).loss;
  }
  return loss / static_cast<double>(batch.size());
}

ParamRefs WordConvClassifier::Params() {
  ParamRefs refs{&embed_};
  for (Parameter* p : conv_.Params()) refs.push_back(p);
  refs.push_back(&out_w_);
  refs.push_back(&out_b_);
  return refs;
}

std::vector<const Parameter*> WordConvClassifier::ConstParams() const {
  auto refs = const_cast<WordConvClassifier*>(this)->Params();
  return {refs.begin(), refs.end()};
}

void WordConvClassifier::Save(const std::string& path) const {
  Json meta;
  meta["kind"] = "wordconv";
  meta["config"] = config_.ToJson();
  meta["vocab"] = words_;
  SaveCheckpoint(path, meta, ConstParams());
}

WordConvClassifier WordConvClassifier::Load(const std::string& path) {
  const Checkpoint ck = LoadCheckpoint(path);
  if (ck.meta.value("kind", "") != "wordconv") {
    throw ValidationError(path + " is not a wordconv checkpoint");
  }
  WordConvClassifier m;
  try {
    auto words = ck.meta.at("vocab").get<std::vector<std::string>>();
    if (words.empty() || words[0] != kUnk) throw ValidationError("vocab must start with <unk>");
    words.erase(words.begin());
    m = Build(WordConvConfig::FromJson(ck.meta.at("config")), words);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad wordconv metadata: " + e.what());
  }
  for (Parameter* p : m.Params()) {
    p->value = ck.Value(p->name, p->value.rows(), p->value.cols());
  }
  return m;
}

double WordConvAccuracy(const WordConvClassifier& classifier,
                        std::span<const EtypeExample> items) {
  if (items.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& item : items) {
    if (classifier.Predict(item.question) == item.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

WordConvTrainResult TrainWordConvEtype(const EtypeDataset& dataset,
                                       const WordConvConfig& config) {
  config.Validate();
  const size_t n = dataset.items.size();
  if (n < 2) throw ValidationError("wordconv training needs at least two questions");
  std::vector<bool> seen(kNumEtypes, false);
  size_t distinct = 0;
  for (const auto& item : dataset.items) {
    const auto k = static_cast<size_t>(item.label);
    if (!seen[k]) {
      seen[k] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw ValidationError("wordconv training needs at least two distinct labels");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(HashCombine(config.seed, 0x5911));
  std::shuffle(order.begin(), order.end(), split_rng);
  const size_t dev_n = std::clamp<size_t>(
      static_cast<size_t>(std::llround(config.dev_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<EtypeExample> dev, train;
  for (size_t i = 0; i < n; ++i) {
    (i < dev_n ? dev : train).push_back(dataset.items[order[i]]);
  }

  std::vector<std::string> words;
  for (const auto& item : train) {
    words.insert(words.end(), item.question.begin(), item.question.end());
  }
  WordConvTrainResult result;
  result.train_size = train.size();
  result.dev_size = dev.size();
  WordConvClassifier model = WordConvClassifier::Build(config, words);
  std::vector<WordConvClassifier::Item> items;
  items.reserve(train.size());
  for (const auto& ex : train) {
    items.push_back({model.Encode(ex.question), static_cast<size_t>(ex.label)});
  }

  nn::AdadeltaState opt{{config.lr, config.rho, config.eps}, {}, {}};
  const ParamRefs params = model.Params();
  nn::ZeroGrads(params);
  Rng shuffle_rng(HashCombine(config.seed, 0x5eed));
  result.classifier = model;
  result.best_dev_accuracy = -1.0;
  for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(items.begin(), items.end(), shuffle_rng);
    double loss_sum = 0.0;
    size_t batches = 0;
    for (size_t b = 0; b < items.size(); b += config.batch_size) {
      const size_t e = std::min(items.size(), b + config.batch_size);
      loss_sum += model.LossAndGrad(std::span(items).subspan(b, e - b));
      nn::AdadeltaStep(opt, params);
      ++batches;
    }
    const double acc = WordConvAccuracy(model, dev);
    result.log.push_back({epoch, loss_sum / static_cast<double>(batches), acc});
    if (acc > result.best_dev_accuracy) {
      result.best_dev_accuracy = acc;
      result.best_epoch = epoch;
      result.classifier = model;
    }
  }
  return result;
}

EtypeGuess WordConvEtypeBackend::Guess(const QAInstance& instance) const {
  EtypeGuess g;
  g.label = classifier_.Predict(instance.question);
  if (g.label != EtypeLabel::kUnknown) g.candidates = {g.label};
  return g;
}

}  // namespace probekit
