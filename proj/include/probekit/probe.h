#ifndef PROBEKIT_PROBE_H_
#define PROBEKIT_PROBE_H_

// Edge-probing classifier: a shared projection of the span token vectors,
// one self-attention pooling vector per span, concatenation for pairwise
// targets, and a two-layer MLP over the pooled representation. The probe only
// reads the rows inside its spans.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "probekit/corpus.h"
#include "probekit/matrix.h"
#include "probekit/metrics.h"
#include "probekit/nncore.h"
#include "probekit/reprstore.h"

namespace probekit {

struct ProbeConfig {
  size_t input_dim = 0;  // LayerView effective width
  size_t projection_dim = 256;
  size_t hidden_dim = 256;
  nn::Activation nonlinearity = nn::Activation::kRelu;
  bool pairwise = false;
  size_t batch_size = 16;
  double lr = 1e-4;
  size_t eval_every = 500;  // optimizer steps between dev evaluations
  size_t max_evals = 100;   // hard cap on dev evaluations
  size_t patience = 10;     // evaluations without improvement before stopping
  size_t max_epochs = 3;
  size_t dev_subset = 2000;  // dev targets used for periodic evaluation
  uint64_t seed = 13;

  // Throws ValidationError on zero dims or patience > max_evals.
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static ProbeConfig FromJson(const nlohmann::ordered_json& j);
};

// One (sentence, target) pair with its gold label index.
struct TargetRef {
  const EdgeExample* example = nullptr;
  size_t ordinal = 0;
  size_t gold = 0;

  const EdgeTarget& target() const { return example->targets[ordinal]; }
};

std::vector<TargetRef> CollectTargets(const EdgeDataset& dataset,
                                      const LabelVocab& vocab);

class ProbeModel {
 public:
  // Seeded deterministic initialization. Throws ValidationError if the
  // vocabulary is empty or the config is inconsistent.
  static ProbeModel Build(const ProbeConfig& config, const LabelVocab& vocab,
                          const LayerView& view);

  const ProbeConfig& config() const { return config_; }
  const LabelVocab& vocab() const { return vocab_; }
  const LayerView& view() const { return view_; }
  size_t mlp_input_dim() const { return mlp1_w_.value.rows(); }
  size_t num_labels() const { return vocab_.size(); }

  ParamRefs Params();
  std::vector<const Parameter*> ConstParams() const;

  // The layer view of one sentence as this probe sees it.
  Matrix View(const SentenceRepr& repr) const;

  // Concatenated pooled span vectors (width mlp_input_dim).
  std::vector<double> PooledSpans(const Matrix& view, const EdgeTarget& target) const;
  std::vector<double> Logits(const Matrix& view, const EdgeTarget& target) const;
  std::vector<double> Logits(const SentenceRepr& repr, const EdgeTarget& target) const;

  // Mean cross-entropy over the batch; fills parameter gradients (after
  // zeroing them).
  double LossAndGrad(const std::vector<TargetRef>& batch, const ReprFile& reprs);
  double Loss(const std::vector<TargetRef>& batch, const ReprFile& reprs) const;

  void Save(const std::string& path) const;
  static ProbeModel Load(const std::string& path);

 private:
  ProbeModel() = default;
  const Parameter& Attention(size_t span_index) const;
  Parameter& Attention(size_t span_index);
  void CheckTarget(const Matrix& view, const EdgeTarget& target) const;

  ProbeConfig config_;
  LabelVocab vocab_;
  LayerView view_;
  Parameter proj_w_, proj_b_;
  Parameter attn1_, attn2_;
  Parameter mlp1_w_, mlp1_b_;
  Parameter mlp2_w_, mlp2_b_;
  std::optional<MixParams> mix_;
};

size_t Argmax(std::span<const double> values);

struct InstancePrediction {
  std::string key;  // InstanceKey(sentence id, target ordinal)
  size_t pred = 0;
  size_t gold = 0;
};

struct ProbeEvaluation {
  EvalReport report;
  std::vector<InstancePrediction> predictions;
};

// Argmax decisions over the first `max_targets` targets (0 = all). Labels
// missing from the model vocabulary are rejected.
ProbeEvaluation EvaluateProbe(const ProbeModel& model, const EdgeDataset& dataset,
                              const ReprFile& reprs, size_t max_targets = 0);

struct TrainLogEntry {
  size_t step = 0;
  size_t epoch = 0;
  std::string split;  // "train" (loss) or "dev" (metrics)
  double loss = 0.0;
  EvalReport report;
};

struct TrainResult {
  ProbeModel best;
  std::vector<TrainLogEntry> log;
  std::string stop_reason;  // "patience", "max_evals" or "epoch_cap"
  size_t steps = 0;
  size_t best_step = 0;
  double best_micro_f1 = 0.0;
};

TrainResult TrainProbe(ProbeModel model, const EdgeDataset& train,
                       const EdgeDataset& dev, const ReprFile& train_reprs,
                       const ReprFile& dev_reprs);

nlohmann::ordered_json LogEntryToJson(const TrainLogEntry& entry,
                                      const LabelVocab& vocab);

}  // namespace probekit

#endif  // PROBEKIT_PROBE_H_
