#ifndef PROBEKIT_FILTERS_H_
#define PROBEKIT_FILTERS_H_

// Question filters that flag QA instances answerable without coreference
// reasoning:
//
//  * model-agnostic filter (MAF): predict the answer's entity type from the
//    question, pick the context sentence with the highest token overlap, and
//    fire when that sentence's entity of the predicted type is the answer;
//  * model-dependent filter (MDF): replace context pronouns with random
//    same-length strings and fire when any model still answers exactly.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "probekit/corpus.h"
#include "probekit/etype.h"
#include "probekit/rng.h"

namespace probekit {

// ---- entity type from the question ----------------------------------------

struct WhEntry {
  std::vector<std::string> phrase;  // lowercase tokens
  std::vector<EtypeLabel> types;
};

// Ordered wh-phrase map; earlier entries win at the same question position.
const std::vector<WhEntry>& WhMap();

enum class EtypePick { kFirst, kRandom };

struct EtypeGuess {
  EtypeLabel label = EtypeLabel::kUnknown;
  std::vector<EtypeLabel> candidates;  // empty for UNK_ETYPE
};

// Scans the question left to right for the earliest wh-phrase. `kRandom`
// draws the single label from the candidate list with `rng`. Question-only.
EtypeGuess DetermineEtypeUnsupervised(std::span<const std::string> question,
                                      EtypePick pick = EtypePick::kFirst,
                                      Rng* rng = nullptr);

struct EtypeExample {
  std::string instance_id;
  std::vector<std::string> question;
  EtypeLabel label = EtypeLabel::kUnknown;
};

struct EtypeDataset {
  std::vector<EtypeExample> items;
  std::array<size_t, kNumEtypes> distribution{};
  size_t missing_annotations = 0;  // labeled UNK_ETYPE
  size_t skipped_unlocated = 0;    // no answer_location, not included

  nlohmann::ordered_json DistributionJson() const;
};

// Label = type of the entity whose span equals the answer location, else
// UNK_ETYPE.
EtypeDataset BuildEtypeDataset(const std::vector<QAInstance>& instances,
                               const EntityIndex& entities);

// Supplies the expected answer type for an instance.
class EtypeBackend {
 public:
  virtual ~EtypeBackend() = default;
  virtual EtypeGuess Guess(const QAInstance& instance) const = 0;
};

class UnsupervisedEtypeBackend : public EtypeBackend {
 public:
  EtypeGuess Guess(const QAInstance& instance) const override;
};

// Looks the type name up in a prediction file keyed by instance id; missing
// or unparseable predictions read as UNK_ETYPE.
class ExternalEtypeBackend : public EtypeBackend {
 public:
  explicit ExternalEtypeBackend(PredictionSet predictions)
      : predictions_(std::move(predictions)) {}
  EtypeGuess Guess(const QAInstance& instance) const override;

 private:
  PredictionSet predictions_;
};

// ---- sentence selection ---------------------------------------------------

const std::unordered_set<std::string>& DefaultStopwords();

// |multiset intersection| of lowercased tokens, stopwords removed.
size_t TokenOverlap(std::span<const std::string> question,
                    std::span<const std::string> sentence,
                    const std::unordered_set<std::string>& stopwords);

// Index of the sentence with the highest overlap; earliest on ties.
size_t SelectSentenceOverlap(std::span<const std::string> question,
                             const std::vector<TokenizedSentence>& context,
                             const std::unordered_set<std::string>& stopwords =
                                 DefaultStopwords());

// ---- verdicts -------------------------------------------------------------

enum class FilterReason { kEtypeShortcut, kOcclusionAnswerable };

std::string_view FilterReasonName(FilterReason reason);

struct FilterVerdict {
  std::string instance_id;
  bool filtered = false;
  std::optional<FilterReason> reason;  // present iff filtered
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
};

std::string FormatVerdict(const FilterVerdict& verdict);
void WriteVerdicts(const std::string& path, const std::vector<FilterVerdict>& verdicts);
std::vector<FilterVerdict> LoadVerdicts(const std::string& path);

// ---- model-agnostic filter ------------------------------------------------

enum class MafMode {
  // Fires iff exactly one entity in the selected sentence has a candidate
  // type and its text equals an answer.
  kStrict,
  // Draws one candidate type, shuffles the sentence's entities and fires iff
  // the first has that type and its text equals an answer.
  kStochastic,
};

FilterVerdict MafFilter(const QAInstance& instance, const EntityAnnotation* entities,
                        const EtypeBackend& backend, MafMode mode, Rng& rng);

// ---- pronoun occlusion + model-dependent filter ---------------------------

const std::vector<std::string>& DefaultPronouns();

struct Replacement {
  std::string instance_id;
  long sentence = 0;  // -1 for question tokens
  size_t index = 0;
  std::string original;
  std::string replacement;
};

struct OcclusionResult {
  QAInstance instance;
  std::vector<Replacement> log;
  // Set when a replaced token lay inside the answer span; the occluded
  // instance then carries no answer_location.
  bool dropped_answer_location = false;
};

// Replaces each context token whose lowercase form is a pronoun with a random
// lowercase string of the same character length.
OcclusionResult OccludePronouns(const QAInstance& instance, Rng& rng,
                                const std::unordered_set<std::string>& pronouns,
                                bool include_question = false);
OcclusionResult OccludePronouns(const QAInstance& instance, Rng& rng);

nlohmann::ordered_json ReplacementToJson(const Replacement& r);

struct NamedPredictionSet {
  std::string name;
  PredictionSet predictions;
};

// Fires iff any model's prediction on the occluded input exactly matches a
// gold answer. `covered` is false when no model has a prediction.
FilterVerdict MdfFilter(const QAInstance& gold,
                        const std::vector<NamedPredictionSet>& occluded_predictions,
                        bool* covered = nullptr);

// ---- combination ----------------------------------------------------------

struct NamedVerdicts {
  std::string name;
  std::vector<FilterVerdict> verdicts;
};

struct FilterApplication {
  std::vector<QAInstance> retained;
  std::vector<std::string> removed_ids;
  std::vector<size_t> removed_by_filter;  // per verdict set

  nlohmann::ordered_json Report(const std::vector<NamedVerdicts>& sets) const;
};

// Removes an instance if any verdict set fired for it. Throws
// ValidationError unless every set covers exactly the instance ids.
FilterApplication ApplyFilters(const std::vector<QAInstance>& instances,
                               const std::vector<NamedVerdicts>& verdict_sets);

// ---- gazetteer tagger -----------------------------------------------------

// Exact, case-sensitive token-sequence lexicon; longest match wins.
class Gazetteer {
 public:
  // Lines: "<space separated phrase>\t<TYPE>". Blank lines and '#' comments
  // are skipped.
  static Gazetteer Load(const std::string& path);
  void Add(const std::string& phrase, const std::string& type);

  EntityAnnotation Tag(const QAInstance& instance) const;

 private:
  std::vector<std::pair<std::vector<std::string>, std::string>> entries_;
};

}  // namespace probekit

#endif  // PROBEKIT_FILTERS_H_
