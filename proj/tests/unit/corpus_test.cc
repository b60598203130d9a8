#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "gtest/gtest.h"
#include "probekit/corpus.h"
#include "probekit/error.h"
#include "support/synth.h"
#include "support/temp_dir.h"

namespace probekit {
namespace {

using testing::MakeQA;

EdgeDataset ParseEdge(const std::string& text) {
  std::istringstream in(text);
  return ParseEdgeDataset(in, "mem");
}

std::vector<QAInstance> ParseQA(const std::string& text) {
  std::istringstream in(text);
  return ParseQADataset(in, "mem");
}

std::string ErrorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST(EdgeLoader, MinimalRecord) {
  const auto ds = ParseEdge(
      R"({"id":"s1","tokens":["He","ran"],"targets":[{"span1":[0,1],"span2":null,"label":"PRP"}]})");
  ASSERT_EQ(ds.examples.size(), 1u);
  EXPECT_EQ(ds.vocab.labels(), std::vector<std::string>{"PRP"});
  EXPECT_FALSE(ds.pairwise);
}

TEST(EdgeLoader, SpanOutOfBounds) {
  const auto msg = ErrorOf([] {
    ParseEdge(R"({"id":"s1","tokens":["He","ran"],"targets":[{"span1":[0,3],"span2":null,"label":"PRP"}]})");
  });
  EXPECT_NE(msg.find("span out of bounds"), std::string::npos) << msg;
  EXPECT_NE(msg.find("mem:1:"), std::string::npos) << msg;
}

TEST(EdgeLoader, RejectsBadRecords) {
  EXPECT_FALSE(ErrorOf([] { ParseEdge("{not json"); }).empty());
  EXPECT_FALSE(ErrorOf([] {
                 ParseEdge(R"({"id":"s1","tokens":["a",""],"targets":[{"span1":[0,1],"label":"X"}]})");
               }).empty());
  EXPECT_FALSE(ErrorOf([] {
                 ParseEdge(R"({"id":"s1","tokens":[],"targets":[{"span1":[0,1],"label":"X"}]})");
               }).empty());
  EXPECT_FALSE(ErrorOf([] {
                 ParseEdge(
                     "{\"id\":\"s1\",\"tokens\":[\"a\"],\"targets\":[{\"span1\":[0,1],\"label\":\"X\"}]}\n"
                     "{\"id\":\"s1\",\"tokens\":[\"a\"],\"targets\":[{\"span1\":[0,1],\"label\":\"X\"}]}");
               }).empty());
  const auto mixed = ErrorOf([] {
    ParseEdge(R"({"id":"s1","tokens":["a","b"],"targets":[{"span1":[0,1],"label":"X"},{"span1":[0,1],"span2":[1,2],"label":"Y"}]})");
  });
  EXPECT_FALSE(mixed.empty());
}

TEST(EdgeLoader, GeneratedVocabCount) {
  testing::EdgeSpec spec;
  spec.examples = 100;
  spec.labels = 7;
  const auto examples = testing::SeparableEdgeExamples(spec);
  std::set<std::string> labels;
  for (const auto& ex : examples) labels.insert(ex.targets[0].label);
  const auto ds = testing::ToDataset(examples);
  EXPECT_EQ(ds.examples.size(), 100u);
  EXPECT_EQ(ds.vocab.size(), labels.size());
  EXPECT_EQ(ds.vocab.size(), 7u);
  EXPECT_EQ(ds.vocab.labels().front(), examples.front().targets[0].label);
}

TEST(EdgeLoader, RoundTripIsByteIdentical) {
  testing::TempDir dir;
  testing::EdgeSpec spec;
  spec.pairwise = true;
  const auto examples = testing::SeparableEdgeExamples(spec);
  WriteEdgeDataset(dir.File("a.jsonl"), examples);
  const auto ds = LoadEdgeDataset(dir.File("a.jsonl"));
  EXPECT_EQ(ds.examples, examples);
  EXPECT_TRUE(ds.pairwise);
  WriteEdgeDataset(dir.File("b.jsonl"), ds.examples);
  EXPECT_EQ(testing::Slurp(dir.File("a.jsonl")), testing::Slurp(dir.File("b.jsonl")));
}

constexpr const char* kGermany =
    R"({"id":"q1","question":["Where","was","he","born","?"],)"
    R"("context_sentences":[["Kafka","wrote","."],["The","author","was","born","in","a","small","town","Germany","."]],)"
    R"("answers":["Germany"],"answer_location":{"sent":1,"start":8,"end":9}})";

TEST(QaLoader, LocatedAnswerAccepted) {
  const auto qa = ParseQA(kGermany);
  ASSERT_EQ(qa.size(), 1u);
  ASSERT_TRUE(qa[0].answer_location.has_value());
  EXPECT_EQ(qa[0].context[1].id, "q1:1");
  EXPECT_EQ(SpanText(qa[0].context[1].tokens, qa[0].answer_location->span), "Germany");
}

TEST(QaLoader, MissingLocationAccepted) {
  const auto qa = ParseQA(R"({"id":"q1","question":["Who","?"],"context_sentences":[["Ann","ran"]],"answers":["Ann"]})");
  ASSERT_EQ(qa.size(), 1u);
  EXPECT_FALSE(qa[0].answer_location.has_value());
}

TEST(QaLoader, MismatchedLocationRejected) {
  std::string bad = kGermany;
  bad.replace(bad.find("[\"Germany\"]"), 11, "[\"Berlin\"]");
  const auto msg = ErrorOf([&] { ParseQA(bad); });
  EXPECT_NE(msg.find("matches no answer string"), std::string::npos) << msg;
}

TEST(QaLoader, DuplicateIdRejected) {
  const std::string line = kGermany;
  EXPECT_NE(ErrorOf([&] { ParseQA(line + "\n" + line); }).find("duplicate id"), std::string::npos);
}

TEST(QaLoader, RoundTripIsByteIdentical) {
  testing::TempDir dir;
  auto corpus = testing::RandomQaCorpus(30, 3, 9, 5);
  corpus[1].answer_location.reset();
  WriteQADataset(dir.File("a.jsonl"), corpus);
  const auto loaded = LoadQADataset(dir.File("a.jsonl"));
  EXPECT_EQ(loaded, corpus);
  WriteQADataset(dir.File("b.jsonl"), loaded);
  EXPECT_EQ(testing::Slurp(dir.File("a.jsonl")), testing::Slurp(dir.File("b.jsonl")));
}

TEST(Entities, UnknownTypeRejected) {
  std::istringstream in(R"({"id":"q1","entities":[{"sent":0,"start":0,"end":1,"type":"ANIMAL"}]})");
  EXPECT_THROW(ParseEntities(in, "mem"), ValidationError);
}

TEST(Entities, RoundTripAndValidation) {
  testing::TempDir dir;
  const std::vector<EntityAnnotation> anns = {
      {"q1", {{1, {8, 9}, "GPE"}, {0, {0, 1}, "PERSON"}}}, {"q2", {}}};
  WriteEntities(dir.File("e.jsonl"), anns);
  const EntitySet set = LoadEntities(dir.File("e.jsonl"));
  EXPECT_EQ(set.records, anns);
  EXPECT_EQ(set.by_id.size(), 2u);
  WriteEntities(dir.File("f.jsonl"), set.records);
  EXPECT_EQ(testing::Slurp(dir.File("e.jsonl")), testing::Slurp(dir.File("f.jsonl")));
  const auto qa = ParseQA(kGermany);
  EXPECT_NO_THROW(ValidateEntities(anns[0], qa[0]));
  EXPECT_THROW(ValidateEntities({"q1", {{1, {9, 11}, "GPE"}}}, qa[0]), ValidationError);
}

TEST(Predictions, DuplicateIdsLastWins) {
  std::istringstream in(
      "{\"id\":\"a\",\"pred\":\"x\",\"score\":1}\n{\"id\":\"a\",\"pred\":\"y\",\"score\":2}\n");
  const auto set = ParsePredictions(in, "mem");
  EXPECT_EQ(set.by_id.size(), 1u);
  EXPECT_EQ(set.duplicate_warnings, 1u);
  EXPECT_EQ(set.Find("a")->prediction, "y");
}

TEST(Predictions, EmptyAndDistinct) {
  std::istringstream empty("");
  EXPECT_TRUE(ParsePredictions(empty, "mem").by_id.empty());
  std::istringstream three(
      "{\"id\":\"a\",\"pred\":\"x\",\"score\":1}\n{\"id\":\"b\",\"pred\":\"x\",\"score\":null}\n"
      "{\"id\":\"c\",\"pred\":\"\",\"score\":-3.5}\n");
  const auto set = ParsePredictions(three, "mem");
  EXPECT_EQ(set.by_id.size(), 3u);
  EXPECT_EQ(set.duplicate_warnings, 0u);
  EXPECT_TRUE(std::isinf(set.Find("b")->score));
}

TEST(Predictions, MissingIdRejected) {
  std::istringstream in("{\"pred\":\"x\",\"score\":1}\n");
  EXPECT_THROW(ParsePredictions(in, "mem"), ValidationError);
}

TEST(Predictions, RoundTripIsByteIdentical) {
  testing::TempDir dir;
  const std::vector<PredictionRecord> recs = {
      {"a", "Germany", 0.125},
      {"b", "", -std::numeric_limits<double>::infinity()},
      {"c", "naïve \"quoted\"", 1e-300}};
  WritePredictions(dir.File("p.jsonl"), recs);
  const auto set = LoadPredictions(dir.File("p.jsonl"));
  EXPECT_EQ(set.Records(), recs);
  WritePredictions(dir.File("q.jsonl"), set.Records());
  EXPECT_EQ(testing::Slurp(dir.File("p.jsonl")), testing::Slurp(dir.File("q.jsonl")));
}

TEST(Randomize, SingleGoldCandidateUnchanged) {
  const auto qa = ParseQA(kGermany);
  EntityIndex idx{{"q1", {"q1", {{1, {8, 9}, "GPE"}}}}};
  const auto r = RandomizeAnswers(qa, idx, 13);
  EXPECT_EQ(r.instances[0], qa[0]);
  EXPECT_EQ(r.passed_through, 0u);
}

TEST(Randomize, TwoCandidatesPicksNonGold) {
  const auto qa = ParseQA(kGermany);
  EntityIndex idx{{"q1", {"q1", {{1, {8, 9}, "GPE"}, {0, {0, 1}, "PERSON"}}}}};
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = RandomizeAnswers(qa, idx, seed);
    EXPECT_EQ(r.instances[0].answers, std::vector<std::string>{"Kafka"});
    EXPECT_EQ(r.instances[0].answer_location->sentence, 0u);
  }
}

TEST(Randomize, NoCandidatesPassedThrough) {
  const auto qa = ParseQA(kGermany);
  const auto r = RandomizeAnswers(qa, {}, 1);
  EXPECT_EQ(r.passed_through, 1u);
  EXPECT_EQ(r.instances[0], qa[0]);
}

TEST(Randomize, DeterministicPerSeed) {
  const auto corpus = testing::RandomQaCorpus(50, 2, 6, 3);
  EntityIndex idx;
  for (const auto& q : corpus) idx[q.id] = {q.id, {{0, {1, 2}, "ORG"}, {1, {0, 2}, "GPE"}, {1, {3, 4}, "LOC"}}};
  EXPECT_EQ(RandomizeAnswers(corpus, idx, 9).instances, RandomizeAnswers(corpus, idx, 9).instances);
}

TEST(Randomize, SelectionIsUniform) {
  std::vector<QAInstance> qa;
  EntityIndex idx;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    auto q = MakeQA("q" + std::to_string(i), "who ?", {"a b c d e"}, {"e"},
                    AnswerLocation{0, {4, 5}});
    idx[q.id] = {q.id, {{0, {0, 1}, "ORG"}, {0, {1, 2}, "ORG"}, {0, {2, 3}, "ORG"}, {0, {3, 4}, "ORG"}}};
    qa.push_back(std::move(q));
  }
  const auto r = RandomizeAnswers(qa, idx, 2024);
  std::array<double, 4> counts{};
  for (const auto& q : r.instances) counts[q.answer_location->span.start] += 1;
  double chi2 = 0.0;
  const double expected = n / 4.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(3);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.001) << chi2;
}

}  // namespace
}  // namespace probekit
