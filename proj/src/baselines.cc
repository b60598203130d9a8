#include "probekit/baselines.h"

#include <algorithm>
#include <cctype>

#include "probekit/error.h"

namespace probekit {

std::string NormalizeKeyText(const std::string& text, KeyNormalization norm) {
  if (norm == KeyNormalization::kExact) return text;
  std::string out = text;
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

std::string MemoKey::Encode() const {
  std::string out = task;
  out += '\x1f';
  out += span1;
  if (span2) {
    out += '\x1f';
    out += *span2;
  }
  return out;
}

MemoKey KeyForTarget(const EdgeExample& example, const EdgeTarget& target,
                     const std::string& task, KeyNormalization norm) {
  MemoKey key;
  key.task = task;
  key.span1 = NormalizeKeyText(SpanText(example.sentence.tokens, target.span1), norm);
  if (target.span2) {
    key.span2 = NormalizeKeyText(SpanText(example.sentence.tokens, *target.span2), norm);
  }
  return key;
}

void MemoTable::Add(const MemoKey& key, const std::string& label) {
  ++table_[key.Encode()][label];
  ++global_[label];
}

const LabelHistogram* MemoTable::Find(const MemoKey& key) const {
  auto it = table_.find(key.Encode());
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<std::string> MemoTable::Labels() const {
  std::vector<std::string> out;
  for (const auto& [label, count] : global_) out.push_back(label);
  return out;
}

std::string HistogramArgmax(const LabelHistogram& histogram) {
  if (histogram.empty()) throw ValidationError("empty label histogram");
  // std::map iterates in lexicographic order, so the first maximum wins ties.
  auto best = histogram.begin();
  for (auto it = histogram.begin(); it != histogram.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

MemoTable FitMemo(const EdgeDataset& train, const std::string& task,
                  KeyNormalization norm) {
  if (train.num_targets() == 0) throw ValidationError("memorization needs training targets");
  MemoTable table;
  for (const EdgeExample& ex : train.examples) {
    for (const EdgeTarget& t : ex.targets) {
      table.Add(KeyForTarget(ex, t, task, norm), t.label);
    }
  }
  return table;
}

std::string PredictMemUniform(const MemoTable& table, const MemoKey& key, Rng& rng) {
  if (const LabelHistogram* h = table.Find(key)) return HistogramArgmax(*h);
  const auto labels = table.Labels();
  if (labels.empty()) throw ValidationError("memo table has no labels");
  return labels[UniformIndex(rng, labels.size())];
}

std::string PredictMemFreq(const MemoTable& table, const MemoKey& key, Rng& rng) {
  if (const LabelHistogram* h = table.Find(key)) return HistogramArgmax(*h);
  const LabelHistogram& global = table.global();
  if (global.empty()) throw ValidationError("memo table has no labels");
  std::vector<std::string> labels;
  std::vector<double> weights;
  for (const auto& [label, count] : global) {
    labels.push_back(label);
    weights.push_back(static_cast<double>(count));
  }
  std::discrete_distribution<size_t> dist(weights.begin(), weights.end());
  return labels[dist(rng)];
}

bool PredictIdentityCoref(const std::string& span1_text,
                          const std::string& span2_text, KeyNormalization norm) {
  return NormalizeKeyText(span1_text, norm) == NormalizeKeyText(span2_text, norm);
}

std::string PredictMajority(const MemoTable& table) {
  if (table.global().empty()) throw ValidationError("majority baseline needs a fitted table");
  return HistogramArgmax(table.global());
}

}  // namespace probekit
