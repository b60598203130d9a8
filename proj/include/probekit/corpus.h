#ifndef PROBEKIT_CORPUS_H_
#define PROBEKIT_CORPUS_H_

// JSONL dataset formats (UTF-8, one object per line, spans 0-based
// half-open):
//
//   edge:        {"id","tokens":[tok],"targets":[{"span1":[s,e],
//                 "span2":[s,e]|null,"label"}]}
//   qa:          {"id","question":[tok],"context_sentences":[[tok]],
//                 "answers":[str],"answer_location":{"sent","start","end"}|null}
//   entities:    {"id","entities":[{"sent","start","end","type"}]}
//   predictions: {"id","pred","score"}
//
// Loaders validate every record and report the offending line number.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "probekit/types.h"

namespace probekit {

struct EdgeDataset {
  std::vector<EdgeExample> examples;
  LabelVocab vocab;  // labels in order of first appearance
  bool pairwise = false;

  size_t num_targets() const;
};

EdgeDataset LoadEdgeDataset(const std::string& path);
EdgeDataset ParseEdgeDataset(std::istream& in, const std::string& source);
std::string FormatEdgeExample(const EdgeExample& example);
void WriteEdgeDataset(const std::string& path,
                      const std::vector<EdgeExample>& examples);

std::vector<QAInstance> LoadQADataset(const std::string& path);
std::vector<QAInstance> ParseQADataset(std::istream& in,
                                       const std::string& source);
std::string FormatQAInstance(const QAInstance& instance);
void WriteQADataset(const std::string& path,
                    const std::vector<QAInstance>& instances);

struct EntitySet {
  std::vector<EntityAnnotation> records;  // file order
  EntityIndex by_id;
};

EntitySet LoadEntities(const std::string& path);
EntitySet ParseEntities(std::istream& in, const std::string& source);
std::string FormatEntityAnnotation(const EntityAnnotation& annotation);
void WriteEntities(const std::string& path,
                   const std::vector<EntityAnnotation>& annotations);
// Throws ValidationError if an entity addresses a sentence or span outside
// the instance's context.
void ValidateEntities(const EntityAnnotation& annotation,
                      const QAInstance& instance);

struct PredictionSet {
  std::unordered_map<std::string, PredictionRecord> by_id;
  std::vector<std::string> order;  // ids in order of first appearance
  size_t duplicate_warnings = 0;

  const PredictionRecord* Find(const std::string& id) const;
  std::vector<PredictionRecord> Records() const;
};

// Duplicate ids: the last record wins and a warning is counted. A null score
// reads as -inf.
PredictionSet LoadPredictions(const std::string& path);
PredictionSet ParsePredictions(std::istream& in, const std::string& source);
std::string FormatPrediction(const PredictionRecord& record);
void WritePredictions(const std::string& path,
                      const std::vector<PredictionRecord>& records);

struct RandomizeResult {
  std::vector<QAInstance> instances;
  size_t passed_through = 0;  // instances with no candidate spans
};

// Replaces each answer with the text and location of a uniformly drawn
// candidate entity span from the instance's context, avoiding the gold span
// whenever another candidate exists.
RandomizeResult RandomizeAnswers(const std::vector<QAInstance>& instances,
                                 const EntityIndex& candidates, uint64_t seed);

}  // namespace probekit

#endif  // PROBEKIT_CORPUS_H_
