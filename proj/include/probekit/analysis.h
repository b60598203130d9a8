#ifndef PROBEKIT_ANALYSIS_H_
#define PROBEKIT_ANALYSIS_H_

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "probekit/baselines.h"
#include "probekit/corpus.h"

namespace probekit {

enum class SplitPart { kEasy, kHard };

struct SplitAssignment {
  std::string criterion;  // "memo" or "label:<names>"
  std::vector<std::string> keys;  // evaluation order
  std::unordered_map<std::string, SplitPart> part;

  size_t Count(SplitPart p) const;
};

// One evaluated target: its join key, memorization key and gold label.
struct TestItem {
  std::string key;
  MemoKey memo_key;
  std::string gold;
};

std::vector<TestItem> TestItems(const EdgeDataset& test, const std::string& task,
                                KeyNormalization norm = KeyNormalization::kExact);

// Easy iff the key was memorized and the memorized argmax equals the gold.
SplitAssignment SplitEasyHard(const std::vector<TestItem>& items,
                              const MemoTable& memo);

// Hard iff the gold label is in `hard_labels`. Throws ValidationError for
// labels outside `vocab` or an empty set.
SplitAssignment SplitByLabel(const std::vector<TestItem>& items,
                             const std::set<std::string>& hard_labels,
                             const LabelVocab& vocab);

// Instance key -> predicted label.
struct NamedPredictions {
  std::string name;
  std::unordered_map<std::string, std::string> labels;
};

NamedPredictions PredictionsFromSet(const std::string& name, const PredictionSet& set);

struct DeltaTable {
  std::string reference;
  std::vector<std::string> models;
  // [model][row] with rows overall, easy, hard; percentage points.
  // NaN where the subset is empty.
  std::vector<std::array<double, 3>> deltas;
  std::array<double, 3> reference_accuracy{};  // percent
  std::array<size_t, 3> counts{};

  nlohmann::ordered_json ToJson() const;
  std::string RenderText() const;
};

inline constexpr std::array<const char*, 3> kDeltaRows = {"overall", "easy", "hard"};

// delta = accuracy(model) - accuracy(reference) on each subset. Throws
// ValidationError when prediction sets and the split do not cover the same
// instances.
DeltaTable DeltaReport(const NamedPredictions& reference,
                       const std::vector<NamedPredictions>& models,
                       const std::unordered_map<std::string, std::string>& golds,
                       const SplitAssignment& split);

}  // namespace probekit

#endif  // PROBEKIT_ANALYSIS_H_
