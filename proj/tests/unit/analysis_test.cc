#include <cmath>

#include "gtest/gtest.h"
#include "probekit/analysis.h"
#include "probekit/error.h"
#include "support/synth.h"

namespace probekit {
namespace {

struct Scenario {
  SplitAssignment split;
  std::unordered_map<std::string, std::string> golds;
  NamedPredictions ref{"ref", {}}, model{"model", {}};
};

// 100 easy + 100 hard; both right on all easy items; the reference gets 60
// hard items right, the model 50.
Scenario Planted() {
  Scenario s;
  s.split.criterion = "memo";
  for (int i = 0; i < 200; ++i) {
    const std::string key = InstanceKey("s" + std::to_string(i), 0);
    const bool easy = i < 100;
    s.split.keys.push_back(key);
    s.split.part[key] = easy ? SplitPart::kEasy : SplitPart::kHard;
    s.golds[key] = "Y";
    const int h = i - 100;
    s.ref.labels[key] = easy || h < 60 ? "Y" : "N";
    s.model.labels[key] = easy || h < 50 ? "Y" : "N";
  }
  return s;
}

TEST(Delta, PlantedScenarioExact) {
  const Scenario s = Planted();
  const DeltaTable t = DeltaReport(s.ref, {s.ref, s.model}, s.golds, s.split);
  EXPECT_EQ(t.deltas[1][0], -5.0);
  EXPECT_EQ(t.deltas[1][1], 0.0);
  EXPECT_EQ(t.deltas[1][2], -10.0);
  EXPECT_EQ(t.deltas[0][0], 0.0);
  EXPECT_EQ(t.reference_accuracy[0], 80.0);
  EXPECT_EQ(t.counts, (std::array<size_t, 3>{200, 100, 100}));
  const auto j = t.ToJson();
  EXPECT_EQ(j["deltas"]["ref"], "ref");
  EXPECT_EQ(j["deltas"]["model"]["hard"], -10.0);
  const std::string text = t.RenderText();
  EXPECT_NE(text.find("-10.00"), std::string::npos);
  EXPECT_NE(text.find("ref"), std::string::npos);
}

TEST(Delta, AntisymmetricAndMixtureIdentity) {
  Rng rng(31);
  for (int c = 0; c < 300; ++c) {
    Scenario s;
    const size_t n = 1 + rng() % 80;
    for (size_t i = 0; i < n; ++i) {
      const std::string key = InstanceKey("x" + std::to_string(i), rng() % 3);
      if (s.split.part.count(key)) continue;
      s.split.keys.push_back(key);
      s.split.part[key] = rng() % 2 ? SplitPart::kEasy : SplitPart::kHard;
      s.golds[key] = std::string(1, static_cast<char>('a' + rng() % 3));
      s.ref.labels[key] = std::string(1, static_cast<char>('a' + rng() % 3));
      s.model.labels[key] = std::string(1, static_cast<char>('a' + rng() % 3));
    }
    const DeltaTable ab = DeltaReport(s.ref, {s.model}, s.golds, s.split);
    const DeltaTable ba = DeltaReport(s.model, {s.ref}, s.golds, s.split);
    const double total = static_cast<double>(s.split.keys.size());
    double mixture = 0.0;
    for (int r = 1; r < 3; ++r) {
      if (ab.counts[r] == 0) {
        EXPECT_TRUE(std::isnan(ab.deltas[0][r]));
        continue;
      }
      EXPECT_NEAR(ab.deltas[0][r], -ba.deltas[0][r], 1e-12);
      mixture += static_cast<double>(ab.counts[r]) / total * ab.deltas[0][r];
    }
    EXPECT_NEAR(mixture, ab.deltas[0][0], 1e-9);
    EXPECT_EQ(ab.counts[1] + ab.counts[2], ab.counts[0]);
  }
}

TEST(Delta, CoverageMismatchRejected) {
  Scenario s = Planted();
  s.model.labels.erase(s.split.keys[3]);
  EXPECT_THROW(DeltaReport(s.ref, {s.model}, s.golds, s.split), ValidationError);
  s.model.labels["stray#0"] = "Y";
  EXPECT_THROW(DeltaReport(s.ref, {s.model}, s.golds, s.split), ValidationError);
}

TEST(Split, MemoCriterionMatchesBruteForce) {
  const auto planted = testing::PlantMemo(0.5, {0.5, 0.5}, {0.5, 0.5}, 50, 300, 4);
  // Give one memorized key a conflicting test label to exercise the gold check.
  EdgeDataset test = planted.test;
  MemoTable memo = FitMemo(planted.train, "t");
  const auto items = TestItems(test, "t");
  const SplitAssignment split = SplitEasyHard(items, memo);
  ASSERT_EQ(split.keys.size(), 300u);
  for (const auto& ex : test.examples) {
    const std::string span = ex.sentence.tokens[1];
    std::string memorized;
    for (const auto& tr : planted.train.examples) {
      if (tr.sentence.tokens[1] == span) memorized = tr.targets[0].label;
    }
    const bool easy = !memorized.empty() && memorized == ex.targets[0].label;
    EXPECT_EQ(split.part.at(InstanceKey(ex.sentence.id, 0)),
              easy ? SplitPart::kEasy : SplitPart::kHard);
  }
  EXPECT_NEAR(static_cast<double>(split.Count(SplitPart::kEasy)) / 300.0, planted.realized_overlap,
              1e-12);
}

TEST(Split, MemorizedButWrongIsHard) {
  MemoTable memo;
  memo.Add({"t", "Paris", {}}, "GPE");
  std::vector<TestItem> items = {{"a#0", {"t", "Paris", {}}, "GPE"},
                                 {"b#0", {"t", "Paris", {}}, "LOC"},
                                 {"c#0", {"t", "Rome", {}}, "GPE"}};
  const SplitAssignment s = SplitEasyHard(items, memo);
  EXPECT_EQ(s.part.at("a#0"), SplitPart::kEasy);
  EXPECT_EQ(s.part.at("b#0"), SplitPart::kHard);
  EXPECT_EQ(s.part.at("c#0"), SplitPart::kHard);
}

TEST(Split, ByLabel) {
  const LabelVocab vocab({"A", "B", "C"});
  std::vector<TestItem> items = {{"a#0", {}, "A"}, {"b#0", {}, "B"}, {"c#0", {}, "C"}};
  const SplitAssignment s = SplitByLabel(items, {"B", "C"}, vocab);
  EXPECT_EQ(s.criterion, "label:B,C");
  EXPECT_EQ(s.Count(SplitPart::kHard), 2u);
  EXPECT_EQ(s.part.at("a#0"), SplitPart::kEasy);
  EXPECT_THROW(SplitByLabel(items, {"Z"}, vocab), ValidationError);
  EXPECT_THROW(SplitByLabel(items, {}, vocab), ValidationError);
}

TEST(Delta, EmptySubsetIsNaN) {
  Scenario s = Planted();
  for (auto& [k, p] : s.split.part) p = SplitPart::kHard;
  const DeltaTable t = DeltaReport(s.ref, {s.model}, s.golds, s.split);
  EXPECT_TRUE(std::isnan(t.deltas[0][1]));
  EXPECT_TRUE(t.ToJson()["deltas"]["model"]["easy"].is_null());
  EXPECT_EQ(t.deltas[0][0], t.deltas[0][2]);
}

}  // namespace
}  // namespace probekit
