#include "gtest/gtest.h"
#include "probekit/error.h"
#include "probekit/gradcheck.h"
#include "probekit/wordconv.h"
#include "support/synth.h"
#include "support/temp_dir.h"

namespace probekit {
namespace {

using testing::Split;

WordConvConfig Small() {
  WordConvConfig c;
  c.embedding_dim = 8;
  c.widths = {2, 3};
  c.filters_per_width = 5;
  c.max_len = 12;
  c.epochs = 12;
  c.batch_size = 8;
  c.lr = 1.0;
  return c;
}

// "who ..." questions are PERSON, "when ..." questions DATE; the remaining
// words are shared noise.
EtypeDataset WhoWhen(size_t n, uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> noise = {"did", "the", "king", "visit", "Rome", "write",
                                          "this", "book", "first", "arrive", "there", "win"};
  EtypeDataset ds;
  for (size_t i = 0; i < n; ++i) {
    const bool who = rng() % 2;
    std::vector<std::string> q = {who ? "Who" : "When"};
    for (size_t k = 0; k < 2 + rng() % 5; ++k) q.push_back(noise[rng() % noise.size()]);
    q.push_back("?");
    const EtypeLabel l = who ? EtypeLabel::kPerson : EtypeLabel::kDate;
    ds.items.push_back({"q" + std::to_string(i), q, l});
    ++ds.distribution[static_cast<size_t>(l)];
  }
  return ds;
}

TEST(WordConv, GradCheck) {
  WordConvConfig cfg = Small();
  cfg.init_scale = 0.5;
  WordConvClassifier model = WordConvClassifier::Build(cfg, {"who", "wrote", "the", "book", "?"});
  Rng rng(2);
  std::normal_distribution<double> n(0.0, 0.3);
  for (Parameter* p : model.Params()) {
    for (double& v : p->value.values()) v += n(rng);
  }
  std::vector<WordConvClassifier::Item> batch = {
      {model.Encode(Split("who wrote the book ?")), 0},
      {model.Encode(Split("the book ?")), 11},
      {model.Encode(Split("who ?")), 3},
      {model.Encode(Split("unseen words wrote the book here")), 18}};
  auto loss = [&](bool grads) {
    if (!grads) return model.Loss(batch);
    for (Parameter* p : model.Params()) p->ZeroGrad();
    return model.LossAndGrad(batch);
  };
  const auto report = nn::GradCheck(loss, model.Params());
  EXPECT_LT(report.max_rel_error, 1e-4) << report.worst_param << "[" << report.worst_index << "]";
}

TEST(WordConv, EncodeLowercasesAndTruncates) {
  WordConvConfig cfg = Small();
  cfg.max_len = 3;
  const auto m = WordConvClassifier::Build(cfg, {"Who", "wrote"});
  EXPECT_EQ(m.vocab_size(), 3u);
  const auto ids = m.Encode(Split("WHO wrote it again"));
  EXPECT_EQ(ids, (std::vector<size_t>{1, 2, 0}));
}

TEST(WordConv, LearnsSeparableQuestions) {
  const auto result = TrainWordConvEtype(WhoWhen(300, 1), Small());
  EXPECT_GE(result.best_dev_accuracy, 0.95);
  EXPECT_EQ(result.train_size + result.dev_size, 300u);
  EXPECT_EQ(result.dev_size, 30u);
  const EtypeDataset test = WhoWhen(100, 2);
  EXPECT_GE(WordConvAccuracy(result.classifier, test.items), 0.95);
  const WordConvEtypeBackend backend(result.classifier);
  const auto g = backend.Guess(testing::MakeQA("x", "who won the cup ?", {"y"}, {"y"}));
  EXPECT_EQ(g.label, EtypeLabel::kPerson);
  EXPECT_EQ(g.candidates, std::vector<EtypeLabel>{EtypeLabel::kPerson});
}

TEST(WordConv, DeterministicAndPersistent) {
  WordConvConfig cfg = Small();
  cfg.epochs = 3;
  const auto a = TrainWordConvEtype(WhoWhen(80, 3), cfg);
  const auto b = TrainWordConvEtype(WhoWhen(80, 3), cfg);
  const auto pa = a.classifier.ConstParams(), pb = b.classifier.ConstParams();
  ASSERT_EQ(pa.size(), pb.size());
  for (size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
  testing::TempDir dir;
  a.classifier.Save(dir.File("w.ckpt"));
  const auto back = WordConvClassifier::Load(dir.File("w.ckpt"));
  const auto ids = back.Encode(Split("when did the king win ?"));
  EXPECT_EQ(back.Logits(ids), a.classifier.Logits(ids));
  back.Save(dir.File("x.ckpt"));
  EXPECT_EQ(testing::Slurp(dir.File("w.ckpt")), testing::Slurp(dir.File("x.ckpt")));
}

TEST(WordConv, EmbeddingInitIndependentOfVocabOrder) {
  const auto a = WordConvClassifier::Build(Small(), {"alpha", "beta"});
  const auto b = WordConvClassifier::Build(Small(), {"beta", "alpha"});
  const std::vector<size_t> ia = a.Encode(Split("alpha beta")), ib = b.Encode(Split("alpha beta"));
  EXPECT_EQ(a.Logits(ia), b.Logits(ib));
}

TEST(WordConv, Validation) {
  WordConvConfig c = Small();
  c.widths = {};
  EXPECT_THROW(c.Validate(), ValidationError);
  c = Small();
  c.dev_fraction = 1.0;
  EXPECT_THROW(c.Validate(), ValidationError);
  c = Small();
  c.widths = {20};
  EXPECT_THROW(c.Validate(), ValidationError);
  EXPECT_EQ(WordConvConfig::FromJson(Small().ToJson()).ToJson(), Small().ToJson());
  EtypeDataset one;
  one.items.push_back({"a", {"who"}, EtypeLabel::kPerson});
  one.items.push_back({"b", {"who"}, EtypeLabel::kPerson});
  EXPECT_THROW(TrainWordConvEtype(one, Small()), ValidationError);
  EXPECT_THROW(TrainWordConvEtype({}, Small()), ValidationError);
}

}  // namespace
}  // namespace probekit
