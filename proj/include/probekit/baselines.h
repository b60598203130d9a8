#ifndef PROBEKIT_BASELINES_H_
#define PROBEKIT_BASELINES_H_

// Representation-free confounder classifiers. Memorized keys are answered
// with the histogram argmax (ties go to the lexicographically smallest
// label); unseen keys fall back to a seeded draw.

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "probekit/corpus.h"
#include "probekit/rng.h"

namespace probekit {

enum class KeyNormalization { kExact, kLowercase };

struct MemoKey {
  std::string task;
  std::string span1;
  std::optional<std::string> span2;

  std::string Encode() const;
};

MemoKey KeyForTarget(const EdgeExample& example, const EdgeTarget& target,
                     const std::string& task, KeyNormalization norm);

using LabelHistogram = std::map<std::string, size_t>;

class MemoTable {
 public:
  void Add(const MemoKey& key, const std::string& label);

  const LabelHistogram* Find(const MemoKey& key) const;
  const LabelHistogram& global() const { return global_; }
  size_t num_keys() const { return table_.size(); }
  // Distinct training labels, sorted.
  std::vector<std::string> Labels() const;

 private:
  std::unordered_map<std::string, LabelHistogram> table_;
  LabelHistogram global_;
};

// Argmax with lexicographic tie-break. Throws on an empty histogram.
std::string HistogramArgmax(const LabelHistogram& histogram);

MemoTable FitMemo(const EdgeDataset& train, const std::string& task,
                  KeyNormalization norm = KeyNormalization::kExact);

// Fallback draw uniform over the training labels.
std::string PredictMemUniform(const MemoTable& table, const MemoKey& key, Rng& rng);
// Fallback draw proportional to the global training histogram.
std::string PredictMemFreq(const MemoTable& table, const MemoKey& key, Rng& rng);

// Positive iff the two span texts are equal after normalization. Symmetric.
bool PredictIdentityCoref(const std::string& span1_text,
                          const std::string& span2_text,
                          KeyNormalization norm = KeyNormalization::kExact);

// Global argmax. Throws ValidationError on an empty table.
std::string PredictMajority(const MemoTable& table);

std::string NormalizeKeyText(const std::string& text, KeyNormalization norm);

}  // namespace probekit

#endif  // PROBEKIT_BASELINES_H_
