#include "probekit/probe.h"

#include <algorithm>
#include <numeric>

#include "probekit/checkpoint.h"
#include "probekit/error.h"
#include "probekit/optim.h"
#include "probekit/rng.h"

namespace probekit {

using Json = nlohmann::ordered_json;

void ProbeConfig::Validate() const {
  if (input_dim == 0 || projection_dim == 0 || hidden_dim == 0) {
    throw ValidationError("probe dimensions must all be >= 1");
  }
  if (batch_size == 0 || eval_every == 0 || max_evals == 0 || max_epochs == 0) {
    throw ValidationError("batch size, eval interval, eval cap and epochs must be >= 1");
  }
  if (patience > max_evals) {
    throw ValidationError("patience must not exceed max_evals");
  }
}

Json ProbeConfig::ToJson() const {
  return {{"input_dim", input_dim},
          {"projection_dim", projection_dim},
          {"hidden_dim", hidden_dim},
          {"nonlinearity", nonlinearity == nn::Activation::kRelu ? "relu" : "tanh"},
          {"pairwise", pairwise},
          {"batch_size", batch_size},
          {"lr", lr},
          {"eval_every", eval_every},
          {"max_evals", max_evals},
          {"patience", patience},
          {"max_epochs", max_epochs},
          {"dev_subset", dev_subset},
          {"seed", seed}};
}

ProbeConfig ProbeConfig::FromJson(const Json& j) {
  ProbeConfig c;
  c.input_dim = j.at("input_dim").get<size_t>();
  c.projection_dim = j.at("projection_dim").get<size_t>();
  c.hidden_dim = j.at("hidden_dim").get<size_t>();
  c.nonlinearity = j.at("nonlinearity").get<std::string>() == "tanh"
                       ? nn::Activation::kTanh
                       : nn::Activation::kRelu;
  c.pairwise = j.at("pairwise").get<bool>();
  c.batch_size = j.at("batch_size").get<size_t>();
  c.lr = j.at("lr").get<double>();
  c.eval_every = j.at("eval_every").get<size_t>();
  c.max_evals = j.at("max_evals").get<size_t>();
  c.patience = j.at("patience").get<size_t>();
  c.max_epochs = j.at("max_epochs").get<size_t>();
  c.dev_subset = j.at("dev_subset").get<size_t>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

std::vector<TargetRef> CollectTargets(const EdgeDataset& dataset,
                                      const LabelVocab& vocab) {
  std::vector<TargetRef> refs;
  for (const EdgeExample& ex : dataset.examples) {
    for (size_t k = 0; k < ex.targets.size(); ++k) {
      refs.push_back({&ex, k, vocab.IndexOf(ex.targets[k].label)});
    }
  }
  return refs;
}

ProbeModel ProbeModel::Build(const ProbeConfig& config, const LabelVocab& vocab,
                             const LayerView& view) {
  config.Validate();
  if (vocab.empty()) throw ValidationError("cannot build a probe with an empty label vocabulary");
  ProbeModel m;
  m.config_ = config;
  m.vocab_ = vocab;
  m.view_ = view;
  const size_t p = config.projection_dim;
  const size_t spans = config.pairwise ? 2 : 1;
  m.proj_w_ = Parameter("proj.W", config.input_dim, p);
  m.proj_b_ = Parameter("proj.b", 1, p);
  m.attn1_ = Parameter("span1.attn", p, 1);
  if (config.pairwise) m.attn2_ = Parameter("span2.attn", p, 1);
  m.mlp1_w_ = Parameter("mlp1.W", spans * p, config.hidden_dim);
  m.mlp1_b_ = Parameter("mlp1.b", 1, config.hidden_dim);
  m.mlp2_w_ = Parameter("mlp2.W", config.hidden_dim, vocab.size());
  m.mlp2_b_ = Parameter("mlp2.b", 1, vocab.size());
  if (view.mode == ViewMode::kMix) m.mix_.emplace(view.layer + 1);

  Rng rng(config.seed);
  nn::GlorotUniform(m.proj_w_, config.input_dim, p, rng);
  nn::GlorotUniform(m.mlp1_w_, spans * p, config.hidden_dim, rng);
  nn::GlorotUniform(m.mlp2_w_, config.hidden_dim, vocab.size(), rng);
  return m;
}

ParamRefs ProbeModel::Params() {
  ParamRefs refs = {&proj_w_, &proj_b_, &attn1_};
  if (config_.pairwise) refs.push_back(&attn2_);
  for (Parameter* p : {&mlp1_w_, &mlp1_b_, &mlp2_w_, &mlp2_b_}) refs.push_back(p);
  if (mix_) {
    refs.push_back(&mix_->weights);
    refs.push_back(&mix_->gamma);
  }
  return refs;
}

std::vector<const Parameter*> ProbeModel::ConstParams() const {
  auto refs = const_cast<ProbeModel*>(this)->Params();
  return {refs.begin(), refs.end()};
}

const Parameter& ProbeModel::Attention(size_t span_index) const {
  return span_index == 0 ? attn1_ : attn2_;
}
Parameter& ProbeModel::Attention(size_t span_index) {
  return span_index == 0 ? attn1_ : attn2_;
}

Matrix ProbeModel::View(const SentenceRepr& repr) const {
  Matrix v = BuildLayerView(repr, view_, mix_ ? &*mix_ : nullptr);
  if (v.cols() != config_.input_dim) {
    throw ValidationError("representation width " + std::to_string(v.cols()) +
                          " != probe input width " +
                          std::to_string(config_.input_dim));
  }
  return v;
}

void ProbeModel::CheckTarget(const Matrix& view, const EdgeTarget& target) const {
  if (view.cols() != config_.input_dim) {
    throw ValidationError("view width " + std::to_string(view.cols()) +
                          " != probe input width " + std::to_string(config_.input_dim));
  }
  if (target.span2.has_value() != config_.pairwise) {
    throw ValidationError(config_.pairwise ? "pairwise probe needs span2"
                                           : "unary probe got a span2");
  }
  auto check = [&](Span s) {
    if (!s.ValidFor(view.rows())) {
      throw ValidationError("span out of bounds: [" + std::to_string(s.start) + "," +
                            std::to_string(s.end) + ") for " +
                            std::to_string(view.rows()) + " tokens");
    }
  };
  check(target.span1);
  if (target.span2) check(*target.span2);
}

namespace {

std::vector<Span> SpansOf(const EdgeTarget& t) {
  std::vector<Span> spans = {t.span1};
  if (t.span2) spans.push_back(*t.span2);
  return spans;
}

}  // namespace

std::vector<double> ProbeModel::PooledSpans(const Matrix& view,
                                            const EdgeTarget& target) const {
  CheckTarget(view, target);
  std::vector<double> out;
  out.reserve(mlp_input_dim());
  const auto spans = SpansOf(target);
  for (size_t s = 0; s < spans.size(); ++s) {
    const Matrix x = SliceRows(view, spans[s].start, spans[s].end);
    const Matrix proj = nn::AffineForward(x, proj_w_, proj_b_);
    const auto pooled = nn::AttentionPool(proj, Span{0, proj.rows()}, Attention(s));
    out.insert(out.end(), pooled.pooled.begin(), pooled.pooled.end());
  }
  return out;
}

std::vector<double> ProbeModel::Logits(const Matrix& view,
                                       const EdgeTarget& target) const {
  const Matrix z = Matrix::RowVector(PooledSpans(view, target));
  const Matrix h =
      nn::Activate(config_.nonlinearity, nn::AffineForward(z, mlp1_w_, mlp1_b_));
  const Matrix logits = nn::AffineForward(h, mlp2_w_, mlp2_b_);
  auto row = logits.row(0);
  return {row.begin(), row.end()};
}

std::vector<double> ProbeModel::Logits(const SentenceRepr& repr,
                                       const EdgeTarget& target) const {
  return Logits(View(repr), target);
}

double ProbeModel::Loss(const std::vector<TargetRef>& batch,
                        const ReprFile& reprs) const {
  Matrix logits(batch.size(), num_labels());
  std::vector<size_t> gold;
  for (size_t b = 0; b < batch.size(); ++b) {
    const auto l = Logits(reprs.At(batch[b].example->sentence.id), batch[b].target());
    std::copy(l.begin(), l.end(), logits.row(b).begin());
    gold.push_back(batch[b].gold);
  }
  return nn::SoftmaxXent(logits, gold).loss;
}

double ProbeModel::LossAndGrad(const std::vector<TargetRef>& batch,
                               const ReprFile& reprs) {
  nn::ZeroGrads(Params());
  const size_t p = config_.projection_dim;
  struct SpanCache {
    Matrix x;
    Matrix proj;
    nn::AttentionPoolResult pool;
  };
  struct ItemCache {
    Matrix view;
    std::vector<Span> spans;
    std::vector<SpanCache> span_cache;
  };
  std::vector<ItemCache> cache(batch.size());
  Matrix z(batch.size(), mlp_input_dim());
  std::vector<size_t> gold(batch.size());
  for (size_t b = 0; b < batch.size(); ++b) {
    ItemCache& item = cache[b];
    item.view = View(reprs.At(batch[b].example->sentence.id));
    CheckTarget(item.view, batch[b].target());
    item.spans = SpansOf(batch[b].target());
    for (size_t s = 0; s < item.spans.size(); ++s) {
      SpanCache sc;
      sc.x = SliceRows(item.view, item.spans[s].start, item.spans[s].end);
      sc.proj = nn::AffineForward(sc.x, proj_w_, proj_b_);
      sc.pool = nn::AttentionPool(sc.proj, Span{0, sc.proj.rows()}, Attention(s));
      std::copy(sc.pool.pooled.begin(), sc.pool.pooled.end(),
                z.row(b).begin() + static_cast<std::ptrdiff_t>(s * p));
      item.span_cache.push_back(std::move(sc));
    }
    gold[b] = batch[b].gold;
  }
  const Matrix h =
      nn::Activate(config_.nonlinearity, nn::AffineForward(z, mlp1_w_, mlp1_b_));
  const Matrix logits = nn::AffineForward(h, mlp2_w_, mlp2_b_);
  const auto xent = nn::SoftmaxXent(logits, gold);

  const Matrix dlogits = nn::SoftmaxXentBackward(xent.probs, gold);
  const Matrix dh = nn::AffineBackward(h, mlp2_w_, mlp2_b_, dlogits);
  const Matrix dpre = nn::ActivateBackward(config_.nonlinearity, h, dh);
  const Matrix dz = nn::AffineBackward(z, mlp1_w_, mlp1_b_, dpre);
  for (size_t b = 0; b < batch.size(); ++b) {
    ItemCache& item = cache[b];
    Matrix dview;
    if (mix_) dview = Matrix(item.view.rows(), item.view.cols());
    for (size_t s = 0; s < item.spans.size(); ++s) {
      SpanCache& sc = item.span_cache[s];
      Matrix dproj(sc.proj.rows(), sc.proj.cols());
      auto dpooled = dz.row(b).subspan(s * p, p);
      nn::AttentionPoolBackward(sc.proj, Span{0, sc.proj.rows()}, Attention(s),
                                sc.pool, dpooled, dproj);
      const Matrix dx = nn::AffineBackward(sc.x, proj_w_, proj_b_, dproj);
      if (mix_) {
        for (size_t r = 0; r < dx.rows(); ++r) {
          auto dst = dview.row(item.spans[s].start + r);
          auto src = dx.row(r);
          for (size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
      }
    }
    if (mix_) {
      const auto layers =
          WidenLayers(reprs.At(batch[b].example->sentence.id), view_.layer);
      nn::ScalarMixBackward(layers, mix_->weights, mix_->gamma, dview);
    }
  }
  return xent.loss;
}

void ProbeModel::Save(const std::string& path) const {
  Json meta;
  meta["kind"] = "probe";
  meta["config"] = config_.ToJson();
  meta["view"] = view_.ToString();
  meta["labels"] = vocab_.labels();
  SaveCheckpoint(path, meta, ConstParams());
}

ProbeModel ProbeModel::Load(const std::string& path) {
  const Checkpoint ck = LoadCheckpoint(path);
  if (ck.meta.value("kind", "") != "probe") {
    throw ValidationError(path + " is not a probe checkpoint");
  }
  ProbeModel m;
  try {
    m = Build(ProbeConfig::FromJson(ck.meta.at("config")),
              LabelVocab(ck.meta.at("labels").get<std::vector<std::string>>()),
              LayerView::Parse(ck.meta.at("view").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad probe metadata: " + e.what());
  }
  for (Parameter* p : m.Params()) {
    p->value = ck.Value(p->name, p->value.rows(), p->value.cols());
  }
  return m;
}

size_t Argmax(std::span<const double> values) {
  return static_cast<size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

ProbeEvaluation EvaluateProbe(const ProbeModel& model, const EdgeDataset& dataset,
                              const ReprFile& reprs, size_t max_targets) {
  ProbeEvaluation eval;
  ConfusionTally tally;
  tally.per_label.resize(model.num_labels());
  size_t seen = 0;
  for (const EdgeExample& ex : dataset.examples) {
    if (max_targets > 0 && seen >= max_targets) break;
    const Matrix view = model.View(reprs.At(ex.sentence.id));
    for (size_t k = 0; k < ex.targets.size(); ++k) {
      if (max_targets > 0 && seen >= max_targets) break;
      const size_t gold = model.vocab().IndexOf(ex.targets[k].label);
      const size_t pred = Argmax(model.Logits(view, ex.targets[k]));
      tally.Add(pred, gold);
      eval.predictions.push_back({InstanceKey(ex.sentence.id, k), pred, gold});
      ++seen;
    }
  }
  if (tally.total == 0) throw ValidationError("cannot evaluate on an empty dataset");
  eval.report = ReportFromTally(tally);
  return eval;
}

namespace {

void CheckCoverage(const EdgeDataset& data, const ReprFile& reprs,
                   const std::string& split) {
  for (const EdgeExample& ex : data.examples) {
    if (reprs.Find(ex.sentence.id) == nullptr) {
      throw ValidationError("missing representation for " + split + " sentence " +
                            ex.sentence.id);
    }
  }
}

}  // namespace

TrainResult TrainProbe(ProbeModel model, const EdgeDataset& train,
                       const EdgeDataset& dev, const ReprFile& train_reprs,
                       const ReprFile& dev_reprs) {
  const ProbeConfig& cfg = model.config();
  if (train.examples.empty() || dev.examples.empty()) {
    throw ValidationError("training and dev sets must be non-empty");
  }
  CheckCoverage(train, train_reprs, "train");
  CheckCoverage(dev, dev_reprs, "dev");
  std::vector<TargetRef> items = CollectTargets(train, model.vocab());

  TrainResult result{model, {}, "epoch_cap", 0, 0, -1.0};
  nn::AdamState adam;
  adam.hyper.lr = cfg.lr;
  Rng order_rng(HashCombine(cfg.seed, 0x5eed));
  size_t evals = 0;
  size_t since_best = 0;
  double loss_sum = 0.0;
  size_t loss_count = 0;
  bool stopped = false;
  size_t epoch = 0;

  auto evaluate = [&]() {
    TrainLogEntry train_entry;
    train_entry.step = result.steps;
    train_entry.epoch = epoch;
    train_entry.split = "train";
    train_entry.loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    result.log.push_back(train_entry);
    loss_sum = 0.0;
    loss_count = 0;

    TrainLogEntry entry;
    entry.step = result.steps;
    entry.epoch = epoch;
    entry.split = "dev";
    entry.report = EvaluateProbe(model, dev, dev_reprs, cfg.dev_subset).report;
    entry.report.step = result.steps;
    result.log.push_back(entry);
    ++evals;
    if (entry.report.micro_f1 > result.best_micro_f1) {
      result.best_micro_f1 = entry.report.micro_f1;
      result.best_step = result.steps;
      result.best = model;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) {
      result.stop_reason = "patience";
      stopped = true;
    } else if (evals >= cfg.max_evals) {
      result.stop_reason = "max_evals";
      stopped = true;
    }
  };

  size_t last_eval_step = 0;
  for (epoch = 0; epoch < cfg.max_epochs && !stopped; ++epoch) {
    std::shuffle(items.begin(), items.end(), order_rng);
    for (size_t start = 0; start < items.size() && !stopped; start += cfg.batch_size) {
      const size_t end = std::min(items.size(), start + cfg.batch_size);
      const std::vector<TargetRef> batch(items.begin() + static_cast<std::ptrdiff_t>(start),
                                         items.begin() + static_cast<std::ptrdiff_t>(end));
      loss_sum += model.LossAndGrad(batch, train_reprs);
      ++loss_count;
      nn::AdamStep(adam, model.Params());
      ++result.steps;
      if (result.steps % cfg.eval_every == 0) {
        evaluate();
        last_eval_step = result.steps;
      }
    }
  }
  if (!stopped && last_eval_step != result.steps) {
    epoch = cfg.max_epochs - 1;
    evaluate();
    if (result.stop_reason != "epoch_cap" && stopped) {
      // A final evaluation that trips patience still ended at the epoch cap.
      result.stop_reason = "epoch_cap";
    }
  }
  return result;
}

Json LogEntryToJson(const TrainLogEntry& entry, const LabelVocab& vocab) {
  Json j;
  j["step"] = entry.step;
  j["epoch"] = entry.epoch;
  j["split"] = entry.split;
  if (entry.split == "train") {
    j["metrics"] = {{"loss", entry.loss}};
  } else {
    j["metrics"] = ReportToJson(entry.report, vocab);
  }
  return j;
}

}  // namespace probekit
