#ifndef PROBEKIT_WORDCONV_H_
#define PROBEKIT_WORDCONV_H_

// Word-level convolutional question classifier for the expected answer type:
// trainable word embeddings, parallel 1-D convolutions with max-over-time
// pooling, one affine layer and a softmax over the entity-type labels.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "probekit/filters.h"
#include "probekit/matrix.h"
#include "probekit/nncore.h"

namespace probekit {

struct WordConvConfig {
  size_t embedding_dim = 300;
  std::vector<size_t> widths = {3, 4, 5};
  size_t filters_per_width = 100;
  size_t max_len = 128;
  size_t epochs = 40;
  size_t batch_size = 50;
  double lr = 1e-5;
  double rho = 0.95;
  double eps = 1e-6;
  double dev_fraction = 0.1;
  double init_scale = 0.1;  // stddev of the hashed Gaussian embedding init
  uint64_t seed = 13;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static WordConvConfig FromJson(const nlohmann::ordered_json& j);
};

class WordConvClassifier {
 public:
  // Vocabulary = lowercased `words` plus a leading "<unk>". Embedding rows are
  // seeded from a hash of the word, so they do not depend on vocabulary order.
  static WordConvClassifier Build(const WordConvConfig& config,
                                  const std::vector<std::string>& words);

  const WordConvConfig& config() const { return config_; }
  size_t vocab_size() const { return words_.size(); }

  // Lowercases, maps unseen words to <unk> and truncates to max_len.
  std::vector<size_t> Encode(std::span<const std::string> question) const;

  std::vector<double> Logits(std::span<const size_t> ids) const;
  EtypeLabel Predict(std::span<const std::string> question) const;

  struct Item {
    std::vector<size_t> ids;
    size_t gold = 0;
  };
  // Mean cross-entropy; accumulates gradients (callers zero them).
  double LossAndGrad(std::span<const Item> batch);
  double Loss(std::span<const Item> batch) const;

  ParamRefs Params();
  std::vector<const Parameter*> ConstParams() const;

  void Save(const std::string& path) const;
  static WordConvClassifier Load(const std::string& path);

 private:
  Matrix Embed(std::span<const size_t> ids) const;

  WordConvConfig config_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, size_t> index_;
  Parameter embed_;
  nn::ConvBank conv_;
  Parameter out_w_;
  Parameter out_b_;
};

struct WordConvEpoch {
  size_t epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct WordConvTrainResult {
  WordConvClassifier classifier;  // parameters from the best dev epoch
  double best_dev_accuracy = 0.0;
  size_t best_epoch = 0;
  size_t train_size = 0;
  size_t dev_size = 0;
  std::vector<WordConvEpoch> log;
};

// Seeded train/dev split, Adadelta, best dev accuracy kept. Throws
// ValidationError on an empty dataset or one with fewer than two labels.
WordConvTrainResult TrainWordConvEtype(const EtypeDataset& dataset,
                                       const WordConvConfig& config);

double WordConvAccuracy(const WordConvClassifier& classifier,
                        std::span<const EtypeExample> items);

class WordConvEtypeBackend : public EtypeBackend {
 public:
  explicit WordConvEtypeBackend(WordConvClassifier classifier)
      : classifier_(std::move(classifier)) {}
  EtypeGuess Guess(const QAInstance& instance) const override;

 private:
  WordConvClassifier classifier_;
};

}  // namespace probekit

#endif  // PROBEKIT_WORDCONV_H_
