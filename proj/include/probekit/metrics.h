#ifndef PROBEKIT_METRICS_H_
#define PROBEKIT_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "probekit/types.h"

namespace probekit {

struct LabelCounts {
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;
  size_t support = 0;  // gold occurrences

  bool operator==(const LabelCounts&) const = default;
};

struct ConfusionTally {
  std::vector<LabelCounts> per_label;
  size_t total = 0;
  size_t correct = 0;

  void Add(size_t pred, size_t gold);
  // Sum of counts; order-independent so partial tallies can be merged.
  void Merge(const ConfusionTally& other);
};

ConfusionTally Tally(std::span<const size_t> preds, std::span<const size_t> golds,
                     size_t num_labels);

// Single-label classification scores, all in [0, 1].
struct EvalReport {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;     // mean over labels seen in gold or predictions
  double weighted_f1 = 0.0;  // gold-support-weighted mean
  ConfusionTally tally;
  size_t step = 0;
};

// F1 of one label from its counts; 0 when undefined.
double LabelF1(const LabelCounts& c);

EvalReport ReportFromTally(const ConfusionTally& tally);
// Throws ValidationError on length mismatch or empty input.
EvalReport ClassificationMetrics(std::span<const size_t> preds,
                                 std::span<const size_t> golds, size_t num_labels);

nlohmann::ordered_json ReportToJson(const EvalReport& report,
                                    const LabelVocab& vocab);

// ---- QA answer metrics ----------------------------------------------------

// Lowercase, strip ASCII punctuation, drop the articles a/an/the, collapse
// whitespace. Returns the remaining tokens.
std::vector<std::string> NormalizeAnswerTokens(std::string_view text);
std::string NormalizeAnswer(std::string_view text);

struct SpanScore {
  double f1 = 0.0;
  double em = 0.0;
};

// Token-multiset F1 and exact match, each maximized over the gold answers.
SpanScore SpanF1Em(std::string_view prediction,
                   const std::vector<std::string>& golds);

struct QaScore {
  double f1 = 0.0;  // percent
  double em = 0.0;  // percent
};

QaScore AggregateQA(std::span<const SpanScore> scores);

}  // namespace probekit

#endif  // PROBEKIT_METRICS_H_
