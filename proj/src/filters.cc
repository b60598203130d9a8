#include "probekit/filters.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "probekit/error.h"
#include "probekit/metrics.h"

namespace probekit {

using Json = nlohmann::ordered_json;

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

size_t Utf8Length(std::string_view s) {
  size_t n = 0;
  for (char c : s) n += (static_cast<unsigned char>(c) & 0xc0) != 0x80 ? 1 : 0;
  return n;
}

bool MatchesAnswer(const std::string& text, const std::vector<std::string>& answers) {
  return std::find(answers.begin(), answers.end(), text) != answers.end();
}

}  // namespace

// ---- sentence selection ---------------------------------------------------

const std::unordered_set<std::string>& DefaultStopwords() {
  // Function words plus bare punctuation tokens.
  static const std::unordered_set<std::string> words = {
      "a", "an", "the", "and", "or", "but", "if", "of", "at", "by", "for",
      "with", "about", "to", "from", "in", "on", "into", "onto", "over",
      "under", "up", "down", "out", "off", "as", "than", "then", "so", "too",
      "very", "is", "are", "was", "were", "be", "been", "being", "am", "do",
      "does", "did", "doing", "have", "has", "had", "having", "can", "could",
      "will", "would", "shall", "should", "may", "might", "must", "not", "no",
      "nor", "only", "own", "same", "such", "all", "any", "both", "each",
      "few", "more", "most", "other", "some", "there", "here", "again",
      "further", "once", "also", "just", "what", "which", "who", "whom",
      "whose", "when", "where", "why", "how", "this", "that", "these",
      "those", "it", "its", "he", "him", "his", "she", "her", "hers", "they",
      "them", "their", "theirs", "i", "me", "my", "we", "us", "our", "you",
      "your", "name", "s", "'s", "'", "\"", ",", ".", "?", "!", ";", ":", "-",
      "--", "(", ")", "[", "]", "``", "''", "`"};
  return words;
}

size_t TokenOverlap(std::span<const std::string> question,
                    std::span<const std::string> sentence,
                    const std::unordered_set<std::string>& stopwords) {
  std::unordered_map<std::string, size_t> counts;
  for (const auto& t : question) {
    std::string l = Lower(t);
    if (!stopwords.count(l)) ++counts[l];
  }
  size_t overlap = 0;
  for (const auto& t : sentence) {
    auto it = counts.find(Lower(t));
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return overlap;
}

size_t SelectSentenceOverlap(std::span<const std::string> question,
                             const std::vector<TokenizedSentence>& context,
                             const std::unordered_set<std::string>& stopwords) {
  size_t best = 0;
  size_t best_score = 0;
  for (size_t i = 0; i < context.size(); ++i) {
    const size_t score = TokenOverlap(question, context[i].tokens, stopwords);
    if (score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

// ---- verdicts -------------------------------------------------------------

std::string_view FilterReasonName(FilterReason reason) {
  return reason == FilterReason::kEtypeShortcut ? "etype_shortcut"
                                                : "occlusion_answerable";
}

std::string FormatVerdict(const FilterVerdict& v) {
  Json j;
  j["id"] = v.instance_id;
  j["filtered"] = v.filtered;
  j["reason"] = v.reason ? Json(std::string(FilterReasonName(*v.reason))) : Json();
  j["diagnostics"] = v.diagnostics;
  return j.dump();
}

void WriteVerdicts(const std::string& path, const std::vector<FilterVerdict>& verdicts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  for (const auto& v : verdicts) out << FormatVerdict(v) << "\n";
}

std::vector<FilterVerdict> LoadVerdicts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<FilterVerdict> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      FilterVerdict v;
      v.instance_id = j.at("id").get<std::string>();
      v.filtered = j.at("filtered").get<bool>();
      const Json& reason = j.at("reason");
      if (!reason.is_null()) {
        const auto name = reason.get<std::string>();
        if (name == "etype_shortcut") {
          v.reason = FilterReason::kEtypeShortcut;
        } else if (name == "occlusion_answerable") {
          v.reason = FilterReason::kOcclusionAnswerable;
        } else {
          throw ValidationError("unknown reason " + name);
        }
      }
      if (v.reason.has_value() != v.filtered) {
        throw ValidationError("reason must be present iff filtered");
      }
      v.diagnostics = j.value("diagnostics", Json::object());
      out.push_back(std::move(v));
    } catch (const std::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---- model-agnostic filter ------------------------------------------------

FilterVerdict MafFilter(const QAInstance& instance, const EntityAnnotation* entities,
                        const EtypeBackend& backend, MafMode mode, Rng& rng) {
  FilterVerdict v;
  v.instance_id = instance.id;
  const EtypeGuess guess = backend.Guess(instance);
  Json candidates = Json::array();
  for (EtypeLabel t : guess.candidates) candidates.push_back(EtypeName(t));
  v.diagnostics["candidates"] = candidates;
  if (guess.label == EtypeLabel::kUnknown) {
    v.diagnostics["etype"] = EtypeName(EtypeLabel::kUnknown);
    return v;
  }

  const size_t sent = SelectSentenceOverlap(instance.question, instance.context);
  v.diagnostics["sentence"] = sent;
  std::vector<const Entity*> in_sentence;
  if (entities != nullptr) {
    for (const Entity& e : entities->entities) {
      if (e.sentence == sent && e.span.ValidFor(instance.context[sent].tokens.size())) {
        in_sentence.push_back(&e);
      }
    }
  }
  v.diagnostics["entities_in_sentence"] = in_sentence.size();
  const auto& tokens = instance.context[sent].tokens;

  if (mode == MafMode::kStrict) {
    v.diagnostics["etype"] = EtypeName(guess.label);
    const Entity* only = nullptr;
    size_t typed = 0;
    for (const Entity* e : in_sentence) {
      const auto type = ParseEtype(e->type);
      if (type && std::find(guess.candidates.begin(), guess.candidates.end(), *type) !=
                      guess.candidates.end()) {
        ++typed;
        only = e;
      }
    }
    v.diagnostics["typed_entities"] = typed;
    if (typed == 1 && MatchesAnswer(SpanText(tokens, only->span), instance.answers)) {
      v.filtered = true;
      v.reason = FilterReason::kEtypeShortcut;
      v.diagnostics["matched_entity"] = SpanText(tokens, only->span);
    }
    return v;
  }

  EtypeLabel type = guess.label;
  if (guess.candidates.size() > 1) {
    type = guess.candidates[UniformIndex(rng, guess.candidates.size())];
  }
  v.diagnostics["etype"] = EtypeName(type);
  if (in_sentence.empty()) return v;
  std::shuffle(in_sentence.begin(), in_sentence.end(), rng);
  const Entity* first = in_sentence.front();
  if (ParseEtype(first->type) == type &&
      MatchesAnswer(SpanText(tokens, first->span), instance.answers)) {
    v.filtered = true;
    v.reason = FilterReason::kEtypeShortcut;
    v.diagnostics["matched_entity"] = SpanText(tokens, first->span);
  }
  return v;
}

// ---- occlusion --------------------------------------------------------------

const std::vector<std::string>& DefaultPronouns() {
  static const std::vector<std::string> pronouns = {
      "he",   "she",   "it",    "they",   "him",     "her",     "them",
      "his",  "hers",  "its",   "their",  "theirs",  "himself", "herself",
      "itself", "themselves", "who", "whom", "whose", "this",   "that",
      "these", "those", "i",    "we",     "you",     "me",      "us",
      "your", "yours", "our",   "ours",   "my",      "mine"};
  return pronouns;
}

OcclusionResult OccludePronouns(const QAInstance& instance, Rng& rng) {
  static const std::unordered_set<std::string> set(DefaultPronouns().begin(),
                                                   DefaultPronouns().end());
  return OccludePronouns(instance, rng, set, false);
}

OcclusionResult OccludePronouns(const QAInstance& instance, Rng& rng,
                                const std::unordered_set<std::string>& pronouns,
                                bool include_question) {
  OcclusionResult out;
  out.instance = instance;
  std::uniform_int_distribution<int> letter('a', 'z');
  auto occlude = [&](std::string& token, long sentence, size_t index) {
    if (!pronouns.count(Lower(token))) return false;
    std::string repl(Utf8Length(token), 'a');
    for (char& c : repl) c = static_cast<char>(letter(rng));
    out.log.push_back({instance.id, sentence, index, token, repl});
    token = std::move(repl);
    return true;
  };
  if (include_question) {
    for (size_t i = 0; i < out.instance.question.size(); ++i) {
      occlude(out.instance.question[i], -1, i);
    }
  }
  const auto& loc = instance.answer_location;
  for (size_t s = 0; s < out.instance.context.size(); ++s) {
    auto& tokens = out.instance.context[s].tokens;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (occlude(tokens[i], static_cast<long>(s), i) && loc && loc->sentence == s &&
          i >= loc->span.start && i < loc->span.end) {
        out.dropped_answer_location = true;
      }
    }
  }
  if (out.dropped_answer_location) out.instance.answer_location.reset();
  return out;
}

Json ReplacementToJson(const Replacement& r) {
  return {{"id", r.instance_id},
          {"sent", r.sentence},
          {"index", r.index},
          {"original", r.original},
          {"replacement", r.replacement}};
}

// ---- model-dependent filter -----------------------------------------------

FilterVerdict MdfFilter(const QAInstance& gold,
                        const std::vector<NamedPredictionSet>& occluded_predictions,
                        bool* covered) {
  FilterVerdict v;
  v.instance_id = gold.id;
  Json answered = Json::array();
  size_t available = 0;
  for (const auto& model : occluded_predictions) {
    const PredictionRecord* rec = model.predictions.Find(gold.id);
    if (rec == nullptr) continue;
    ++available;
    if (SpanF1Em(rec->prediction, gold.answers).em == 1.0) answered.push_back(model.name);
  }
  if (covered != nullptr) *covered = available > 0;
  v.diagnostics["models_with_predictions"] = available;
  v.diagnostics["answered_by"] = answered;
  if (!answered.empty()) {
    v.filtered = true;
    v.reason = FilterReason::kOcclusionAnswerable;
  }
  return v;
}

// ---- combination ----------------------------------------------------------

FilterApplication ApplyFilters(const std::vector<QAInstance>& instances,
                               const std::vector<NamedVerdicts>& verdict_sets) {
  std::unordered_map<std::string, size_t> position;
  for (size_t i = 0; i < instances.size(); ++i) position[instances[i].id] = i;
  std::vector<bool> removed(instances.size(), false);
  FilterApplication app;
  for (const NamedVerdicts& set : verdict_sets) {
    std::vector<bool> seen(instances.size(), false);
    size_t fired = 0;
    for (const FilterVerdict& v : set.verdicts) {
      auto it = position.find(v.instance_id);
      if (it == position.end()) {
        throw ValidationError("verdict set " + set.name + " has unknown instance " +
                              v.instance_id);
      }
      if (seen[it->second]) {
        throw ValidationError("verdict set " + set.name + " repeats instance " +
                              v.instance_id);
      }
      seen[it->second] = true;
      if (v.filtered) {
        ++fired;
        removed[it->second] = true;
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw ValidationError("verdict set " + set.name + " does not cover every instance");
    }
    app.removed_by_filter.push_back(fired);
  }
  for (size_t i = 0; i < instances.size(); ++i) {
    if (removed[i]) {
      app.removed_ids.push_back(instances[i].id);
    } else {
      app.retained.push_back(instances[i]);
    }
  }
  return app;
}

Json FilterApplication::Report(const std::vector<NamedVerdicts>& sets) const {
  const size_t total = retained.size() + removed_ids.size();
  auto rate = [&](size_t n) {
    return total == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total);
  };
  Json j;
  j["total"] = total;
  j["retained"] = retained.size();
  j["removed"] = removed_ids.size();
  j["removed_rate"] = rate(removed_ids.size());
  auto& per = j["per_filter"] = Json::object();
  for (size_t i = 0; i < sets.size() && i < removed_by_filter.size(); ++i) {
    per[sets[i].name] = {{"removed", removed_by_filter[i]},
                         {"removed_rate", rate(removed_by_filter[i])}};
  }
  return j;
}

// ---- gazetteer ------------------------------------------------------------

Gazetteer Gazetteer::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  Gazetteer g;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": expected <phrase>\\t<TYPE>");
    }
    try {
      g.Add(line.substr(0, tab), line.substr(tab + 1));
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

void Gazetteer::Add(const std::string& phrase, const std::string& type) {
  if (!IsEntityType(type)) throw ValidationError("unknown entity type " + type);
  std::vector<std::string> tokens;
  std::istringstream ss(phrase);
  for (std::string t; ss >> t;) tokens.push_back(t);
  if (tokens.empty()) throw ValidationError("empty gazetteer phrase");
  entries_.emplace_back(std::move(tokens), type);
}

EntityAnnotation Gazetteer::Tag(const QAInstance& instance) const {
  EntityAnnotation ann;
  ann.instance_id = instance.id;
  for (size_t s = 0; s < instance.context.size(); ++s) {
    const auto& tokens = instance.context[s].tokens;
    size_t i = 0;
    while (i < tokens.size()) {
      const std::pair<std::vector<std::string>, std::string>* best = nullptr;
      for (const auto& entry : entries_) {
        const auto& phrase = entry.first;
        if (i + phrase.size() > tokens.size()) continue;
        if (!std::equal(phrase.begin(), phrase.end(),
                        tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
          continue;
        }
        if (best == nullptr || phrase.size() > best->first.size()) best = &entry;
      }
      if (best == nullptr) {
        ++i;
        continue;
      }
      ann.entities.push_back({s, Span{i, i + best->first.size()}, best->second});
      i += best->first.size();
    }
  }
  return ann;
}

}  // namespace probekit
