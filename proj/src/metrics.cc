#include "probekit/metrics.h"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "probekit/error.h"

namespace probekit {

void ConfusionTally::Add(size_t pred, size_t gold) {
  ++total;
  ++per_label[gold].support;
  if (pred == gold) {
    ++correct;
    ++per_label[gold].tp;
  } else {
    ++per_label[pred].fp;
    ++per_label[gold].fn;
  }
}

void ConfusionTally::Merge(const ConfusionTally& other) {
  if (per_label.size() < other.per_label.size()) {
    per_label.resize(other.per_label.size());
  }
  for (size_t k = 0; k < other.per_label.size(); ++k) {
    per_label[k].tp += other.per_label[k].tp;
    per_label[k].fp += other.per_label[k].fp;
    per_label[k].fn += other.per_label[k].fn;
    per_label[k].support += other.per_label[k].support;
  }
  total += other.total;
  correct += other.correct;
}

ConfusionTally Tally(std::span<const size_t> preds, std::span<const size_t> golds,
                     size_t num_labels) {
  if (preds.size() != golds.size()) {
    throw ValidationError("prediction count " + std::to_string(preds.size()) +
                          " != gold count " + std::to_string(golds.size()));
  }
  ConfusionTally t;
  t.per_label.resize(num_labels);
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= num_labels || golds[i] >= num_labels) {
      throw ValidationError("label index outside vocabulary");
    }
    t.Add(preds[i], golds[i]);
  }
  return t;
}

double LabelF1(const LabelCounts& c) {
  const size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

EvalReport ReportFromTally(const ConfusionTally& tally) {
  if (tally.total == 0) throw ValidationError("cannot score an empty prediction set");
  EvalReport r;
  r.tally = tally;
  const double total = static_cast<double>(tally.total);
  r.accuracy = static_cast<double>(tally.correct) / total;
  size_t tp = 0, fp = 0, fn = 0;
  double macro_sum = 0.0;
  size_t macro_n = 0;
  double weighted_sum = 0.0;
  for (const LabelCounts& c : tally.per_label) {
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    const double f1 = LabelF1(c);
    if (c.support > 0 || c.fp > 0) {
      macro_sum += f1;
      ++macro_n;
    }
    weighted_sum += static_cast<double>(c.support) * f1;
  }
  r.micro_f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  r.macro_f1 = macro_n == 0 ? 0.0 : macro_sum / static_cast<double>(macro_n);
  r.weighted_f1 = weighted_sum / total;
  return r;
}

EvalReport ClassificationMetrics(std::span<const size_t> preds,
                                 std::span<const size_t> golds, size_t num_labels) {
  return ReportFromTally(Tally(preds, golds, num_labels));
}

nlohmann::ordered_json ReportToJson(const EvalReport& report,
                                    const LabelVocab& vocab) {
  nlohmann::ordered_json j;
  j["acc"] = report.accuracy;
  j["micro_f1"] = report.micro_f1;
  j["macro_f1"] = report.macro_f1;
  j["weighted_f1"] = report.weighted_f1;
  j["total"] = report.tally.total;
  j["correct"] = report.tally.correct;
  auto& labels = j["per_label"] = nlohmann::ordered_json::object();
  for (size_t k = 0; k < report.tally.per_label.size() && k < vocab.size(); ++k) {
    const LabelCounts& c = report.tally.per_label[k];
    labels[vocab.Label(k)] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn},
                              {"support", c.support}, {"f1", LabelF1(c)}};
  }
  return j;
}

// ---- QA -------------------------------------------------------------------

std::vector<std::string> NormalizeAnswerTokens(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    cleaned.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[i]))) ++i;
    size_t j = i;
    while (j < cleaned.size() && !std::isspace(static_cast<unsigned char>(cleaned[j]))) ++j;
    if (j > i) {
      std::string tok = cleaned.substr(i, j - i);
      if (tok != "a" && tok != "an" && tok != "the") tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

std::string NormalizeAnswer(std::string_view text) {
  std::string out;
  for (const auto& t : NormalizeAnswerTokens(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

namespace {

SpanScore ScoreOne(const std::vector<std::string>& pred,
                   const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) {
    const double both = pred.empty() && gold.empty() ? 1.0 : 0.0;
    return {both, both};
  }
  std::unordered_map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  SpanScore s;
  s.em = pred == gold ? 1.0 : 0.0;
  if (common > 0) {
    const double p = static_cast<double>(common) / static_cast<double>(pred.size());
    const double r = static_cast<double>(common) / static_cast<double>(gold.size());
    s.f1 = 2.0 * p * r / (p + r);
  }
  return s;
}

}  // namespace

SpanScore SpanF1Em(std::string_view prediction,
                   const std::vector<std::string>& golds) {
  const auto pred = NormalizeAnswerTokens(prediction);
  SpanScore best;
  for (const auto& g : golds) {
    const SpanScore s = ScoreOne(pred, NormalizeAnswerTokens(g));
    best.f1 = std::max(best.f1, s.f1);
    best.em = std::max(best.em, s.em);
  }
  return best;
}

QaScore AggregateQA(std::span<const SpanScore> scores) {
  if (scores.empty()) throw ValidationError("cannot aggregate an empty score list");
  double f1 = 0.0, em = 0.0;
  for (const SpanScore& s : scores) {
    f1 += s.f1;
    em += s.em;
  }
  const double n = static_cast<double>(scores.size());
  return {100.0 * f1 / n, 100.0 * em / n};
}

}  // namespace probekit
