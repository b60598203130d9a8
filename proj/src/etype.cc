#include <algorithm>
#include <cctype>

#include "probekit/filters.h"

namespace probekit {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

}  // namespace

const std::vector<WhEntry>& WhMap() {
  using E = EtypeLabel;
  static const std::vector<WhEntry> map = {
      {{"how", "far"}, {E::kQuantity}},
      {{"how", "long"}, {E::kDate}},
      {{"how", "many"}, {E::kCardinal}},
      {{"how", "old"}, {E::kQuantity}},
      {{"what"}, {E::kProduct, E::kWorkOfArt}},
      {{"when"}, {E::kDate, E::kTime}},
      {{"where"}, {E::kFac, E::kLoc, E::kOrg, E::kGpe}},
      {{"who"}, {E::kPerson}},
      {{"whom"}, {E::kPerson}},
      {{"whose"}, {E::kPerson, E::kOrg, E::kNorp}},
  };
  return map;
}

EtypeGuess DetermineEtypeUnsupervised(std::span<const std::string> question,
                                      EtypePick pick, Rng* rng) {
  std::vector<std::string> lowered;
  lowered.reserve(question.size());
  for (const auto& t : question) lowered.push_back(Lower(t));
  for (size_t pos = 0; pos < lowered.size(); ++pos) {
    for (const WhEntry& entry : WhMap()) {
      if (pos + entry.phrase.size() > lowered.size()) continue;
      if (!std::equal(entry.phrase.begin(), entry.phrase.end(),
                      lowered.begin() + static_cast<std::ptrdiff_t>(pos))) {
        continue;
      }
      EtypeGuess guess;
      guess.candidates = entry.types;
      guess.label = entry.types.front();
      if (pick == EtypePick::kRandom && rng != nullptr && entry.types.size() > 1) {
        guess.label = entry.types[UniformIndex(*rng, entry.types.size())];
      }
      return guess;
    }
  }
  return {};
}

nlohmann::ordered_json EtypeDataset::DistributionJson() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (size_t i = 0; i < kNumEtypes; ++i) {
    if (distribution[i] > 0) j[std::string(kEtypeNames[i])] = distribution[i];
  }
  return j;
}

EtypeDataset BuildEtypeDataset(const std::vector<QAInstance>& instances,
                               const EntityIndex& entities) {
  EtypeDataset ds;
  for (const QAInstance& qa : instances) {
    if (!qa.answer_location) {
      ++ds.skipped_unlocated;
      continue;
    }
    EtypeExample ex{qa.id, qa.question, EtypeLabel::kUnknown};
    auto it = entities.find(qa.id);
    if (it == entities.end()) {
      ++ds.missing_annotations;
    } else {
      for (const Entity& e : it->second.entities) {
        if (e.sentence == qa.answer_location->sentence &&
            e.span == qa.answer_location->span) {
          ex.label = ParseEtype(e.type).value_or(EtypeLabel::kUnknown);
          break;
        }
      }
    }
    ++ds.distribution[static_cast<size_t>(ex.label)];
    ds.items.push_back(std::move(ex));
  }
  return ds;
}

EtypeGuess UnsupervisedEtypeBackend::Guess(const QAInstance& instance) const {
  return DetermineEtypeUnsupervised(instance.question);
}

EtypeGuess ExternalEtypeBackend::Guess(const QAInstance& instance) const {
  const PredictionRecord* rec = predictions_.Find(instance.id);
  if (rec == nullptr) return {};
  auto label = ParseEtype(rec->prediction);
  if (!label || *label == EtypeLabel::kUnknown) return {};
  return {*label, {*label}};
}

}  // namespace probekit
