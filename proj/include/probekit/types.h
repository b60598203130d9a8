#ifndef PROBEKIT_TYPES_H_
#define PROBEKIT_TYPES_H_

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace probekit {

// Token range [start, end), 0-based.
struct Span {
  size_t start = 0;
  size_t end = 0;

  size_t length() const { return end - start; }
  bool ValidFor(size_t n_tokens) const { return start < end && end <= n_tokens; }
  bool operator==(const Span&) const = default;
};

struct TokenizedSentence {
  std::string id;
  std::vector<std::string> tokens;

  bool operator==(const TokenizedSentence&) const = default;
};

// Tokens of `span` joined by single spaces.
std::string SpanText(const std::vector<std::string>& tokens, Span span);

struct EdgeTarget {
  Span span1;
  std::optional<Span> span2;
  std::string label;

  bool operator==(const EdgeTarget&) const = default;
};

struct EdgeExample {
  TokenizedSentence sentence;
  std::vector<EdgeTarget> targets;

  bool operator==(const EdgeExample&) const = default;
};

struct AnswerLocation {
  size_t sentence = 0;
  Span span;

  bool operator==(const AnswerLocation&) const = default;
};

struct QAInstance {
  std::string id;
  std::vector<std::string> question;
  std::vector<TokenizedSentence> context;
  std::vector<std::string> answers;
  std::optional<AnswerLocation> answer_location;

  bool operator==(const QAInstance&) const = default;
};

struct Entity {
  size_t sentence = 0;
  Span span;
  std::string type;

  bool operator==(const Entity&) const = default;
};

struct EntityAnnotation {
  std::string instance_id;
  std::vector<Entity> entities;

  bool operator==(const EntityAnnotation&) const = default;
};

using EntityIndex = std::unordered_map<std::string, EntityAnnotation>;

struct PredictionRecord {
  std::string instance_id;
  std::string prediction;
  double score = 0.0;

  bool operator==(const PredictionRecord&) const = default;
};

// Bijection between label strings and 0..K-1, in order of first appearance.
class LabelVocab {
 public:
  LabelVocab() = default;
  explicit LabelVocab(std::vector<std::string> labels);

  // Returns the index of `label`, adding it if new.
  size_t Add(const std::string& label);
  std::optional<size_t> Find(const std::string& label) const;
  // Throws ValidationError for unknown labels.
  size_t IndexOf(const std::string& label) const;
  const std::string& Label(size_t index) const { return labels_.at(index); }

  size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const LabelVocab& other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, size_t> index_;
};

// Stable key for target `ordinal` of sentence `sentence_id`, used to join
// prediction files against gold data.
std::string InstanceKey(const std::string& sentence_id, size_t ordinal);

}  // namespace probekit

#endif  // PROBEKIT_TYPES_H_
