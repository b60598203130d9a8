#include "probekit/analysis.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "probekit/error.h"

namespace probekit {

size_t SplitAssignment::Count(SplitPart p) const {
  size_t n = 0;
  for (const auto& [key, part_of] : part) n += part_of == p ? 1 : 0;
  return n;
}

std::vector<TestItem> TestItems(const EdgeDataset& test, const std::string& task,
                                KeyNormalization norm) {
  std::vector<TestItem> items;
  for (const EdgeExample& ex : test.examples) {
    for (size_t k = 0; k < ex.targets.size(); ++k) {
      items.push_back({InstanceKey(ex.sentence.id, k),
                       KeyForTarget(ex, ex.targets[k], task, norm),
                       ex.targets[k].label});
    }
  }
  return items;
}

SplitAssignment SplitEasyHard(const std::vector<TestItem>& items,
                              const MemoTable& memo) {
  SplitAssignment split;
  split.criterion = "memo";
  for (const TestItem& item : items) {
    const LabelHistogram* h = memo.Find(item.memo_key);
    const bool easy = h != nullptr && HistogramArgmax(*h) == item.gold;
    split.keys.push_back(item.key);
    split.part[item.key] = easy ? SplitPart::kEasy : SplitPart::kHard;
  }
  return split;
}

SplitAssignment SplitByLabel(const std::vector<TestItem>& items,
                             const std::set<std::string>& hard_labels,
                             const LabelVocab& vocab) {
  if (hard_labels.empty()) throw ValidationError("hard label set must be non-empty");
  SplitAssignment split;
  split.criterion = "label:";
  for (const auto& l : hard_labels) {
    if (!vocab.Find(l)) throw ValidationError("unknown label in hard set: " + l);
    if (split.criterion.back() != ':') split.criterion += ',';
    split.criterion += l;
  }
  for (const TestItem& item : items) {
    split.keys.push_back(item.key);
    split.part[item.key] =
        hard_labels.count(item.gold) ? SplitPart::kHard : SplitPart::kEasy;
  }
  return split;
}

NamedPredictions PredictionsFromSet(const std::string& name, const PredictionSet& set) {
  NamedPredictions out;
  out.name = name;
  for (const auto& [id, rec] : set.by_id) out.labels[id] = rec.prediction;
  return out;
}

namespace {

struct Correct {
  std::array<size_t, 3> correct{};
};

Correct CountCorrect(const NamedPredictions& preds,
                     const std::unordered_map<std::string, std::string>& golds,
                     const SplitAssignment& split) {
  if (preds.labels.size() != split.keys.size()) {
    throw ValidationError("instance coverage mismatch: " + preds.name + " has " +
                          std::to_string(preds.labels.size()) + " predictions for " +
                          std::to_string(split.keys.size()) + " instances");
  }
  Correct c;
  for (const std::string& key : split.keys) {
    auto p = preds.labels.find(key);
    if (p == preds.labels.end()) {
      throw ValidationError("instance coverage mismatch: " + preds.name +
                            " has no prediction for " + key);
    }
    auto g = golds.find(key);
    if (g == golds.end()) throw ValidationError("no gold label for " + key);
    if (p->second != g->second) continue;
    ++c.correct[0];
    ++c.correct[split.part.at(key) == SplitPart::kEasy ? 1 : 2];
  }
  return c;
}

}  // namespace

DeltaTable DeltaReport(const NamedPredictions& reference,
                       const std::vector<NamedPredictions>& models,
                       const std::unordered_map<std::string, std::string>& golds,
                       const SplitAssignment& split) {
  if (split.keys.size() != split.part.size()) {
    throw ValidationError("split assignment has duplicate instance keys");
  }
  DeltaTable table;
  table.reference = reference.name;
  table.counts = {split.keys.size(), split.Count(SplitPart::kEasy),
                  split.Count(SplitPart::kHard)};
  const Correct ref = CountCorrect(reference, golds, split);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (size_t r = 0; r < 3; ++r) {
    table.reference_accuracy[r] =
        table.counts[r] == 0 ? nan
                             : 100.0 * static_cast<double>(ref.correct[r]) /
                                   static_cast<double>(table.counts[r]);
  }
  for (const NamedPredictions& model : models) {
    const Correct c = CountCorrect(model, golds, split);
    std::array<double, 3> row{};
    for (size_t r = 0; r < 3; ++r) {
      row[r] = table.counts[r] == 0
                   ? nan
                   : 100.0 *
                         (static_cast<double>(c.correct[r]) -
                          static_cast<double>(ref.correct[r])) /
                         static_cast<double>(table.counts[r]);
    }
    // overall = w_easy * easy + w_hard * hard
    const double n = static_cast<double>(table.counts[0]);
    double mixture = 0.0;
    for (size_t r = 1; r < 3; ++r) {
      if (table.counts[r] > 0) mixture += static_cast<double>(table.counts[r]) / n * row[r];
    }
    if (table.counts[0] > 0 && std::abs(mixture - row[0]) > 1e-9) {
      throw std::logic_error("split mixture identity violated");
    }
    table.models.push_back(model.name);
    table.deltas.push_back(row);
  }
  return table;
}

nlohmann::ordered_json DeltaTable::ToJson() const {
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
  };
  nlohmann::ordered_json j;
  j["reference"] = reference;
  j["counts"] = {{"overall", counts[0]}, {"easy", counts[1]}, {"hard", counts[2]}};
  j["reference_accuracy"] = {{"overall", num(reference_accuracy[0])},
                             {"easy", num(reference_accuracy[1])},
                             {"hard", num(reference_accuracy[2])}};
  auto& cols = j["deltas"] = nlohmann::ordered_json::object();
  for (size_t m = 0; m < models.size(); ++m) {
    if (models[m] == reference) {
      cols[models[m]] = "ref";
      continue;
    }
    cols[models[m]] = {{"overall", num(deltas[m][0])},
                       {"easy", num(deltas[m][1])},
                       {"hard", num(deltas[m][2])}};
  }
  return j;
}

std::string DeltaTable::RenderText() const {
  std::ostringstream out;
  const int w = 12;
  out << std::left << std::setw(10) << "split" << std::right << std::setw(8) << "n"
      << std::setw(w) << reference;
  for (const auto& m : models) out << std::setw(w) << m;
  out << "\n";
  for (size_t r = 0; r < 3; ++r) {
    out << std::left << std::setw(10) << kDeltaRows[r] << std::right << std::setw(8)
        << counts[r];
    out << std::fixed << std::setprecision(2);
    if (std::isnan(reference_accuracy[r])) {
      out << std::setw(w) << "-";
    } else {
      out << std::setw(w) << reference_accuracy[r];
    }
    for (size_t m = 0; m < models.size(); ++m) {
      if (models[m] == reference) {
        out << std::setw(w) << "ref";
      } else if (std::isnan(deltas[m][r])) {
        out << std::setw(w) << "-";
      } else {
        std::ostringstream cell;
        cell << std::showpos << std::fixed << std::setprecision(2) << deltas[m][r];
        out << std::setw(w) << cell.str();
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace probekit
