#include "probekit/corpus.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "probekit/error.h"
#include "probekit/etype.h"
#include "probekit/rng.h"

namespace probekit {

using Json = nlohmann::ordered_json;

// ---- shared types ---------------------------------------------------------

std::string SpanText(const std::vector<std::string>& tokens, Span span) {
  std::string out;
  for (size_t i = span.start; i < span.end && i < tokens.size(); ++i) {
    if (i > span.start) out += ' ';
    out += tokens[i];
  }
  return out;
}

LabelVocab::LabelVocab(std::vector<std::string> labels) {
  for (auto& l : labels) {
    if (Find(l)) throw ValidationError("duplicate label in vocabulary: " + l);
    Add(l);
  }
}

size_t LabelVocab::Add(const std::string& label) {
  auto [it, inserted] = index_.emplace(label, labels_.size());
  if (inserted) labels_.push_back(label);
  return it->second;
}

std::optional<size_t> LabelVocab::Find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

size_t LabelVocab::IndexOf(const std::string& label) const {
  auto idx = Find(label);
  if (!idx) throw ValidationError("unknown label: " + label);
  return *idx;
}

std::string InstanceKey(const std::string& sentence_id, size_t ordinal) {
  return sentence_id + "#" + std::to_string(ordinal);
}

std::optional<EtypeLabel> ParseEtype(std::string_view name) {
  for (size_t i = 0; i < kNumEtypes; ++i) {
    if (kEtypeNames[i] == name) return static_cast<EtypeLabel>(i);
  }
  return std::nullopt;
}

// ---- parsing helpers ------------------------------------------------------

namespace {

class LineError {
 public:
  LineError(const std::string& source, size_t line)
      : prefix_(source + ":" + std::to_string(line) + ": ") {}
  [[noreturn]] void Fail(const std::string& msg) const {
    throw ValidationError(prefix_ + msg);
  }

 private:
  std::string prefix_;
};

// Calls `fn(json, line_error)` for each non-blank line.
template <typename Fn>
void ForEachJsonLine(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    LineError err(source, lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      err.Fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) err.Fail("expected a JSON object");
    try {
      fn(j, err);
    } catch (const nlohmann::json::exception& e) {
      err.Fail(std::string("schema error: ") + e.what());
    }
  }
}

std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

void WriteLines(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  out << body;
  if (!out) throw ValidationError("write failed: " + path);
}

const Json& Field(const Json& j, const char* name, const LineError& err) {
  auto it = j.find(name);
  if (it == j.end()) err.Fail(std::string("missing field \"") + name + "\"");
  return *it;
}

std::string StringField(const Json& j, const char* name, const LineError& err) {
  const Json& v = Field(j, name, err);
  if (!v.is_string()) err.Fail(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

size_t IndexValue(const Json& v, const std::string& what, const LineError& err) {
  if (!v.is_number_unsigned()) err.Fail(what + " must be a non-negative integer");
  return v.get<size_t>();
}

std::vector<std::string> TokenList(const Json& v, const std::string& what,
                                   const LineError& err) {
  if (!v.is_array()) err.Fail(what + " must be an array of strings");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const Json& t : v) {
    if (!t.is_string()) err.Fail(what + " must be an array of strings");
    out.push_back(t.get<std::string>());
    if (out.back().empty()) err.Fail(what + " contains an empty token");
  }
  if (out.empty()) err.Fail("empty tokens in " + what);
  return out;
}

Span SpanPair(const Json& v, const std::string& what, const LineError& err) {
  if (!v.is_array() || v.size() != 2) err.Fail(what + " must be [start, end]");
  return Span{IndexValue(v[0], what + " start", err),
              IndexValue(v[1], what + " end", err)};
}

void CheckSpan(Span s, size_t n, const std::string& what, const LineError& err) {
  if (!s.ValidFor(n)) {
    err.Fail("span out of bounds: " + what + " [" + std::to_string(s.start) +
             "," + std::to_string(s.end) + ") with " + std::to_string(n) +
             " tokens");
  }
}

Json SpanJson(Span s) { return Json::array({s.start, s.end}); }

}  // namespace

// ---- edge datasets --------------------------------------------------------

size_t EdgeDataset::num_targets() const {
  size_t n = 0;
  for (const auto& ex : examples) n += ex.targets.size();
  return n;
}

EdgeDataset ParseEdgeDataset(std::istream& in, const std::string& source) {
  EdgeDataset ds;
  std::unordered_set<std::string> ids;
  std::optional<bool> pairwise;
  ForEachJsonLine(in, source, [&](const Json& j, const LineError& err) {
    EdgeExample ex;
    ex.sentence.id = StringField(j, "id", err);
    if (ex.sentence.id.empty()) err.Fail("empty id");
    if (!ids.insert(ex.sentence.id).second) {
      err.Fail("duplicate id \"" + ex.sentence.id + "\"");
    }
    ex.sentence.tokens = TokenList(Field(j, "tokens", err), "tokens", err);
    const Json& targets = Field(j, "targets", err);
    if (!targets.is_array() || targets.empty()) err.Fail("targets must be a non-empty array");
    const size_t n = ex.sentence.tokens.size();
    for (const Json& t : targets) {
      EdgeTarget target;
      target.span1 = SpanPair(Field(t, "span1", err), "span1", err);
      CheckSpan(target.span1, n, "span1", err);
      auto s2 = t.find("span2");
      if (s2 != t.end() && !s2->is_null()) {
        target.span2 = SpanPair(*s2, "span2", err);
        CheckSpan(*target.span2, n, "span2", err);
      }
      if (!pairwise) pairwise = target.span2.has_value();
      if (*pairwise != target.span2.has_value()) {
        err.Fail("mixed unary and pairwise targets in one dataset");
      }
      target.label = StringField(t, "label", err);
      ds.vocab.Add(target.label);
      ex.targets.push_back(std::move(target));
    }
    ds.examples.push_back(std::move(ex));
  });
  ds.pairwise = pairwise.value_or(false);
  return ds;
}

EdgeDataset LoadEdgeDataset(const std::string& path) {
  auto in = OpenInput(path);
  return ParseEdgeDataset(in, path);
}

std::string FormatEdgeExample(const EdgeExample& example) {
  Json j;
  j["id"] = example.sentence.id;
  j["tokens"] = example.sentence.tokens;
  j["targets"] = Json::array();
  for (const auto& t : example.targets) {
    j["targets"].push_back({{"span1", SpanJson(t.span1)},
                            {"span2", t.span2 ? SpanJson(*t.span2) : Json()},
                            {"label", t.label}});
  }
  return j.dump();
}

void WriteEdgeDataset(const std::string& path,
                      const std::vector<EdgeExample>& examples) {
  std::string body;
  for (const auto& ex : examples) body += FormatEdgeExample(ex) + "\n";
  WriteLines(path, body);
}

// ---- QA datasets ----------------------------------------------------------

std::vector<QAInstance> ParseQADataset(std::istream& in,
                                       const std::string& source) {
  std::vector<QAInstance> out;
  std::unordered_set<std::string> ids;
  ForEachJsonLine(in, source, [&](const Json& j, const LineError& err) {
    QAInstance qa;
    qa.id = StringField(j, "id", err);
    if (qa.id.empty()) err.Fail("empty id");
    if (!ids.insert(qa.id).second) err.Fail("duplicate id \"" + qa.id + "\"");
    qa.question = TokenList(Field(j, "question", err), "question", err);
    const Json& ctx = Field(j, "context_sentences", err);
    if (!ctx.is_array() || ctx.empty()) {
      err.Fail("context_sentences must be a non-empty array");
    }
    for (size_t i = 0; i < ctx.size(); ++i) {
      qa.context.push_back(
          {qa.id + ":" + std::to_string(i),
           TokenList(ctx[i], "context sentence " + std::to_string(i), err)});
    }
    const Json& answers = Field(j, "answers", err);
    if (!answers.is_array()) err.Fail("answers must be an array of strings");
    for (const Json& a : answers) {
      if (!a.is_string()) err.Fail("answers must be an array of strings");
      qa.answers.push_back(a.get<std::string>());
    }
    auto loc = j.find("answer_location");
    if (loc != j.end() && !loc->is_null()) {
      if (!loc->is_object()) err.Fail("answer_location must be an object or null");
      AnswerLocation al;
      al.sentence = IndexValue(Field(*loc, "sent", err), "answer_location.sent", err);
      al.span = {IndexValue(Field(*loc, "start", err), "answer_location.start", err),
                 IndexValue(Field(*loc, "end", err), "answer_location.end", err)};
      if (al.sentence >= qa.context.size()) {
        err.Fail("answer_location sentence " + std::to_string(al.sentence) +
                 " out of range");
      }
      CheckSpan(al.span, qa.context[al.sentence].tokens.size(), "answer_location", err);
      const std::string text = SpanText(qa.context[al.sentence].tokens, al.span);
      bool matched = false;
      for (const auto& a : qa.answers) matched = matched || a == text;
      if (!matched) {
        err.Fail("answer_location text \"" + text + "\" matches no answer string");
      }
      qa.answer_location = al;
    }
    out.push_back(std::move(qa));
  });
  return out;
}

std::vector<QAInstance> LoadQADataset(const std::string& path) {
  auto in = OpenInput(path);
  return ParseQADataset(in, path);
}

std::string FormatQAInstance(const QAInstance& qa) {
  Json j;
  j["id"] = qa.id;
  j["question"] = qa.question;
  j["context_sentences"] = Json::array();
  for (const auto& s : qa.context) j["context_sentences"].push_back(s.tokens);
  j["answers"] = qa.answers;
  if (qa.answer_location) {
    j["answer_location"] = {{"sent", qa.answer_location->sentence},
                            {"start", qa.answer_location->span.start},
                            {"end", qa.answer_location->span.end}};
  } else {
    j["answer_location"] = nullptr;
  }
  return j.dump();
}

void WriteQADataset(const std::string& path,
                    const std::vector<QAInstance>& instances) {
  std::string body;
  for (const auto& qa : instances) body += FormatQAInstance(qa) + "\n";
  WriteLines(path, body);
}

// ---- entity annotations ---------------------------------------------------

EntitySet ParseEntities(std::istream& in, const std::string& source) {
  EntitySet set;
  ForEachJsonLine(in, source, [&](const Json& j, const LineError& err) {
    EntityAnnotation ann;
    ann.instance_id = StringField(j, "id", err);
    if (set.by_id.count(ann.instance_id)) {
      err.Fail("duplicate id \"" + ann.instance_id + "\"");
    }
    const Json& ents = Field(j, "entities", err);
    if (!ents.is_array()) err.Fail("entities must be an array");
    for (const Json& e : ents) {
      Entity ent;
      ent.sentence = IndexValue(Field(e, "sent", err), "sent", err);
      ent.span = {IndexValue(Field(e, "start", err), "start", err),
                  IndexValue(Field(e, "end", err), "end", err)};
      if (ent.span.start >= ent.span.end) err.Fail("empty entity span");
      ent.type = StringField(e, "type", err);
      if (!IsEntityType(ent.type)) err.Fail("unknown entity type \"" + ent.type + "\"");
      ann.entities.push_back(std::move(ent));
    }
    set.by_id.emplace(ann.instance_id, ann);
    set.records.push_back(std::move(ann));
  });
  return set;
}

EntitySet LoadEntities(const std::string& path) {
  auto in = OpenInput(path);
  return ParseEntities(in, path);
}

std::string FormatEntityAnnotation(const EntityAnnotation& ann) {
  Json j;
  j["id"] = ann.instance_id;
  j["entities"] = Json::array();
  for (const auto& e : ann.entities) {
    j["entities"].push_back({{"sent", e.sentence},
                             {"start", e.span.start},
                             {"end", e.span.end},
                             {"type", e.type}});
  }
  return j.dump();
}

void WriteEntities(const std::string& path,
                   const std::vector<EntityAnnotation>& annotations) {
  std::string body;
  for (const auto& a : annotations) body += FormatEntityAnnotation(a) + "\n";
  WriteLines(path, body);
}

void ValidateEntities(const EntityAnnotation& ann, const QAInstance& qa) {
  for (const auto& e : ann.entities) {
    if (e.sentence >= qa.context.size() ||
        !e.span.ValidFor(qa.context[e.sentence].tokens.size())) {
      throw ValidationError("entity for instance " + qa.id +
                            " addresses an invalid sentence or span");
    }
  }
}

// ---- predictions ----------------------------------------------------------

const PredictionRecord* PredictionSet::Find(const std::string& id) const {
  auto it = by_id.find(id);
  return it == by_id.end() ? nullptr : &it->second;
}

std::vector<PredictionRecord> PredictionSet::Records() const {
  std::vector<PredictionRecord> out;
  out.reserve(order.size());
  for (const auto& id : order) out.push_back(by_id.at(id));
  return out;
}

PredictionSet ParsePredictions(std::istream& in, const std::string& source) {
  PredictionSet set;
  ForEachJsonLine(in, source, [&](const Json& j, const LineError& err) {
    PredictionRecord rec;
    rec.instance_id = StringField(j, "id", err);
    rec.prediction = StringField(j, "pred", err);
    auto score = j.find("score");
    if (score == j.end() || score->is_null()) {
      rec.score = -std::numeric_limits<double>::infinity();
    } else if (score->is_number()) {
      rec.score = score->get<double>();
    } else {
      err.Fail("score must be a number or null");
    }
    auto [it, inserted] = set.by_id.insert_or_assign(rec.instance_id, rec);
    if (inserted) {
      set.order.push_back(rec.instance_id);
    } else {
      ++set.duplicate_warnings;
    }
  });
  return set;
}

PredictionSet LoadPredictions(const std::string& path) {
  auto in = OpenInput(path);
  return ParsePredictions(in, path);
}

std::string FormatPrediction(const PredictionRecord& rec) {
  Json j;
  j["id"] = rec.instance_id;
  j["pred"] = rec.prediction;
  if (std::isfinite(rec.score)) {
    j["score"] = rec.score;
  } else {
    j["score"] = nullptr;
  }
  return j.dump();
}

void WritePredictions(const std::string& path,
                      const std::vector<PredictionRecord>& records) {
  std::string body;
  for (const auto& r : records) body += FormatPrediction(r) + "\n";
  WriteLines(path, body);
}

// ---- answer randomization -------------------------------------------------

RandomizeResult RandomizeAnswers(const std::vector<QAInstance>& instances,
                                 const EntityIndex& candidates, uint64_t seed) {
  RandomizeResult result;
  Rng rng(seed);
  result.instances.reserve(instances.size());
  for (const QAInstance& qa : instances) {
    std::vector<const Entity*> pool;
    if (auto it = candidates.find(qa.id); it != candidates.end()) {
      for (const Entity& e : it->second.entities) {
        if (e.sentence < qa.context.size() &&
            e.span.ValidFor(qa.context[e.sentence].tokens.size())) {
          pool.push_back(&e);
        }
      }
    }
    if (pool.empty()) {
      ++result.passed_through;
      result.instances.push_back(qa);
      continue;
    }
    if (qa.answer_location) {
      std::vector<const Entity*> others;
      for (const Entity* e : pool) {
        if (e->sentence != qa.answer_location->sentence ||
            e->span != qa.answer_location->span) {
          others.push_back(e);
        }
      }
      if (!others.empty()) pool = std::move(others);
    }
    const Entity* pick = pool[UniformIndex(rng, pool.size())];
    if (qa.answer_location && pick->sentence == qa.answer_location->sentence &&
        pick->span == qa.answer_location->span) {
      result.instances.push_back(qa);  // the gold span is the only candidate
      continue;
    }
    QAInstance out = qa;
    out.answers = {SpanText(qa.context[pick->sentence].tokens, pick->span)};
    out.answer_location = AnswerLocation{pick->sentence, pick->span};
    result.instances.push_back(std::move(out));
  }
  return result;
}

}  // namespace probekit
