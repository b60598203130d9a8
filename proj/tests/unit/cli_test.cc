#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "gtest/gtest.h"
#include "json.hpp"
#include "probekit/cli.h"
#include "probekit/corpus.h"
#include "probekit/manifest.h"
#include "probekit/reprstore.h"
#include "support/synth.h"
#include "support/temp_dir.h"

namespace probekit {
namespace {

using Json = nlohmann::ordered_json;
using testing::TempDir;

struct CliRun {
  int code;
  std::string out, err;
  Json doc() const { return Json::parse(out); }
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Suggest, EditDistance) {
  EXPECT_EQ(SuggestName("trian-probe", {"train-probe", "eval-probe"}), "train-probe");
  EXPECT_EQ(SuggestName("sed", {"seed", "out"}), "seed");
  EXPECT_EQ(SuggestName("zzzzzz", {"seed", "out"}), "");
}

TEST(Usage, UnknownCommandAndFlag) {
  CliRun r = Cli({"trian-probe"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("did you mean 'train-probe'"), std::string::npos) << r.err;
  r = Cli({"occlude", "--qa", "x", "--out", "y", "--sead", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--seed"), std::string::npos) << r.err;
  EXPECT_EQ(Cli({}).code, 2);
  EXPECT_EQ(Cli({"occlude", "--qa", "x"}).code, 2);
  EXPECT_EQ(Cli({"--help"}).code, 0);
  EXPECT_EQ(Cli({"maf", "--qa", "x", "--entities", "e", "--mode", "random"}).code, 2);
}

TEST(Usage, ValidationErrorsExitOne) {
  TempDir dir;
  testing::Spit(dir.File("bad.jsonl"), "{\"id\": 1}\n");
  const CliRun r = Cli({"occlude", "--qa", dir.File("bad.jsonl"), "--out", dir.File("o.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(":1"), std::string::npos) << r.err;
  EXPECT_EQ(Cli({"occlude", "--qa", dir.File("missing.jsonl"), "--out", dir.File("o.jsonl")}).code, 1);
}

TEST(Binary, ExitCodes) {
  const std::string bin = PROBEKIT_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("bogus"), 2);
  EXPECT_EQ(status("report --preds /nonexistent/p.jsonl --qa /nonexistent/q.jsonl"), 1);
}

class Pipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::EdgeSpec spec;
    spec.examples = 120;
    WriteEdgeDataset(dir_.File("train.jsonl"), testing::SeparableEdgeExamples(spec));
    spec.examples = 40;
    spec.seed = 7;
    spec.id_prefix = "d";
    WriteEdgeDataset(dir_.File("dev.jsonl"), testing::SeparableEdgeExamples(spec));
    for (const char* split : {"train", "dev"}) {
      const CliRun r = Cli({"embed", "--data", F(std::string(split) + ".jsonl"), "--dim", "8",
                         "--layers", "2", "--out", F(std::string(split) + ".epr")});
      ASSERT_EQ(r.code, 0) << r.err;
    }
  }
  std::string F(const std::string& name) const { return dir_.File(name); }
  TempDir dir_;
};

TEST_F(Pipeline, EmbedTrainEval) {
  const Json embed = Cli({"embed", "--data", F("dev.jsonl"), "--dim", "8", "--layers", "2",
                          "--out", F("dev2.epr")})
                         .doc();
  EXPECT_EQ(embed["command"], "embed");
  EXPECT_EQ(embed["result"]["sentences"], 40);
  EXPECT_EQ(embed["manifest"]["inputs"][0]["sha256"], Sha256File(F("dev.jsonl")));
  EXPECT_EQ(testing::Slurp(F("dev.epr")), testing::Slurp(F("dev2.epr")));

  CliRun r = Cli({"train-probe", "--train", F("train.jsonl"), "--train-repr", F("train.epr"),
               "--dev", F("dev.jsonl"), "--dev-repr", F("dev.epr"), "--view", "cat:1",
               "--projection-dim", "8", "--hidden-dim", "8", "--lr", "0.003", "--eval-every", "10",
               "--epochs", "2", "--batch-size", "8", "--out", F("probe.ckpt"), "--log", F("log.jsonl"),
               "--runs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json train = r.doc();
  EXPECT_EQ(train["result"]["runs"].size(), 2u);
  EXPECT_EQ(train["result"]["dev_micro_f1"]["n"], 2);
  EXPECT_EQ(train["manifest"]["seeds"]["run1"], 14);
  ASSERT_TRUE(std::ifstream(F("probe.ckpt.run1")).good());

  r = Cli({"eval-probe", "--model", F("probe.ckpt.run0"), "--data", F("dev.jsonl"), "--repr",
           F("dev.epr"), "--preds", F("preds.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const double micro = r.doc()["result"]["micro_f1"];
  EXPECT_DOUBLE_EQ(micro, train["result"]["runs"][0]["dev"]["micro_f1"].get<double>());
  EXPECT_EQ(LoadPredictions(F("preds.jsonl")).by_id.size(), 40u);

  r = Cli({"report", "--preds", F("preds.jsonl"), "--data", F("dev.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(r.doc()["result"]["micro_f1"].get<double>(), micro);
}

TEST_F(Pipeline, BaselinesAndSplits) {
  auto baseline = [&](const std::string& method, const std::string& preds) {
    return Cli({"baseline", "--train", F("train.jsonl"), "--test", F("dev.jsonl"), "--method",
                method, "--preds", F(preds), "--metrics-out", F(method + ".json")});
  };
  CliRun r = baseline("mem_freq", "memo.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string first = testing::Slurp(F("mem_freq.json"));
  ASSERT_EQ(baseline("mem_freq", "memo.jsonl").code, 0);
  EXPECT_EQ(testing::Slurp(F("mem_freq.json")), first);
  ASSERT_EQ(baseline("majority", "major.jsonl").code, 0);
  const Json res = r.doc()["result"];
  EXPECT_GE(res["key_overlap"].get<double>(), 0.0);
  EXPECT_EQ(res["test_targets"], 40);

  r = Cli({"splits", "--train", F("train.jsonl"), "--test", F("dev.jsonl"), "--reference",
           "memo=" + F("memo.jsonl"), "--models", "major=" + F("major.jsonl") + ",memo=" + F("memo.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json t = r.doc()["result"];
  EXPECT_EQ(t["deltas"]["memo"], "ref");
  r = Cli({"splits", "--train", F("train.jsonl"), "--test", F("dev.jsonl"), "--reference",
           F("memo.jsonl"), "--models", F("major.jsonl"), "--table"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("overall"), std::string::npos);
  EXPECT_NE(r.out.find("manifest: "), std::string::npos);
}

TEST(QaPipeline, OccludeMafMdfApply) {
  TempDir dir;
  auto F = [&](const std::string& n) { return dir.File(n); };
  auto corpus = testing::RandomQaCorpus(30, 3, 8, 4);
  WriteQADataset(F("qa.jsonl"), corpus);
  std::vector<EntityAnnotation> ents;
  std::vector<PredictionRecord> preds;
  for (size_t i = 0; i < corpus.size(); ++i) {
    ents.push_back({corpus[i].id, {{0, {0, 1}, "PERSON"}}});
    preds.push_back({corpus[i].id, i % 3 == 0 ? corpus[i].answers[0] : "nobody", 0.5});
  }
  WriteEntities(F("ents.jsonl"), ents);
  WritePredictions(F("occ_preds.jsonl"), preds);

  CliRun r = Cli({"occlude", "--qa", F("qa.jsonl"), "--out", F("occ.jsonl"), "--log", F("log.jsonl"),
               "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string occ = testing::Slurp(F("occ.jsonl"));
  ASSERT_EQ(Cli({"occlude", "--qa", F("qa.jsonl"), "--out", F("occ.jsonl"), "--seed", "5"}).code, 0);
  EXPECT_EQ(testing::Slurp(F("occ.jsonl")), occ);
  EXPECT_EQ(LoadQADataset(F("occ.jsonl")).size(), 30u);

  r = Cli({"maf", "--qa", F("qa.jsonl"), "--entities", F("ents.jsonl"), "--out", F("maf.jsonl"),
           "--mode", "stochastic", "--trials", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.doc()["result"]["stochastic_rate"]["n"], 5);
  ASSERT_EQ(Cli({"maf", "--qa", F("qa.jsonl"), "--entities", F("ents.jsonl"), "--out", F("maf.jsonl")}).code, 0);

  r = Cli({"mdf", "--qa", F("qa.jsonl"), "--occluded-preds", "m1=" + F("occ_preds.jsonl"), "--out",
           F("mdf.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;

  r = Cli({"apply-filters", "--qa", F("qa.jsonl"), "--verdicts",
           "maf=" + F("maf.jsonl") + ",mdf=" + F("mdf.jsonl"), "--out", F("kept.jsonl"),
           "--removed-out", F("removed.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = r.doc()["result"];
  EXPECT_EQ(rep["total"], 30);
  EXPECT_EQ(rep["per_filter"]["mdf"]["removed"], 10);
  EXPECT_GE(rep["removed"].get<int>(), 10);
  EXPECT_EQ(LoadQADataset(F("kept.jsonl")).size(), rep["retained"].get<size_t>());
}

}  // namespace
}  // namespace probekit
