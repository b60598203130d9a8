#include "probekit/cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "probekit/analysis.h"
#include "probekit/baselines.h"
#include "probekit/corpus.h"
#include "probekit/error.h"
#include "probekit/filters.h"
#include "probekit/manifest.h"
#include "probekit/metrics.h"
#include "probekit/nncore.h"
#include "probekit/probe.h"
#include "probekit/reprstore.h"
#include "probekit/rng.h"
#include "probekit/wordconv.h"

namespace probekit {

using Json = nlohmann::ordered_json;

namespace {

size_t EditDistance(const std::string& a, const std::string& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct Output {
  Json result;
  std::string table;  // preformatted text for --table; generic when empty
};

struct Common {
  bool table = false;
  std::string metrics_out;
  std::string manifest_out;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<Output(RunManifest&)> run;
};

Json MeanStd(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd =
      values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
  return {{"mean", mean}, {"std", sd}, {"n", values.size()}};
}

// "name=path" or "path" (name = file stem).
std::pair<std::string, std::string> NamedPath(const std::string& text) {
  const auto eq = text.find('=');
  if (eq != std::string::npos) return {text.substr(0, eq), text.substr(eq + 1)};
  return {std::filesystem::path(text).stem().string(), text};
}

std::string RunPath(const std::string& path, size_t run, size_t runs) {
  if (runs <= 1 || path.empty()) return path;
  return path + ".run" + std::to_string(run);
}

KeyNormalization ParseNorm(const std::string& s) {
  if (s == "exact") return KeyNormalization::kExact;
  if (s == "lowercase") return KeyNormalization::kLowercase;
  throw UsageError("--norm must be exact or lowercase");
}

void WriteJsonl(const std::string& path, const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path);
  for (const auto& r : rows) out << r.dump() << "\n";
}

void Flatten(const Json& j, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      Flatten(v, prefix.empty() ? k : prefix + "." + k, rows);
    }
  } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
    for (size_t i = 0; i < j.size(); ++i) {
      Flatten(j[i], prefix + "[" + std::to_string(i) + "]", rows);
    }
  } else if (j.is_number_float()) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << j.get<double>();
    rows.emplace_back(prefix, ss.str());
  } else if (j.is_string()) {
    rows.emplace_back(prefix, j.get<std::string>());
  } else {
    rows.emplace_back(prefix, j.dump());
  }
}

std::string RenderTable(const Json& result) {
  std::vector<std::pair<std::string, std::string>> rows;
  Flatten(result, "", rows);
  size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::ostringstream out;
  for (const auto& [k, v] : rows) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << "\n";
  }
  return out.str();
}

std::vector<std::string> OptionNames(const CLI::App& app) {
  std::vector<std::string> names;
  for (const CLI::Option* opt : app.get_options()) {
    for (const auto& n : opt->get_lnames()) names.push_back("--" + n);
    for (const auto& n : opt->get_snames()) names.push_back("-" + n);
  }
  return names;
}

void RecordFlags(const CLI::App& app, RunManifest& manifest) {
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help") continue;
    const std::string name = opt->get_lnames()[0];
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) {
        manifest.SetFlag(name, true);
      } else if (res.size() == 1) {
        manifest.SetFlag(name, res[0]);
      } else {
        manifest.SetFlag(name, res);
      }
    } else if (!opt->get_default_str().empty()) {
      manifest.SetFlag(name, opt->get_default_str());
    }
  }
}

// ---- embed ----------------------------------------------------------------

struct EmbedArgs {
  std::string data, qa, embedder = "gaussian_token_type", out;
  size_t dim = 64, layers = 4;
  uint64_t seed = 13;
};

Output RunEmbed(const EmbedArgs& a, RunManifest& m) {
  if (a.data.empty() == a.qa.empty()) throw UsageError("give exactly one of --data or --qa");
  SyntheticEmbedder embedder{SyntheticEmbedder::ParseKind(a.embedder), a.dim, a.seed};
  if (a.dim == 0 || a.layers == 0) throw UsageError("--dim and --layers must be >= 1");
  m.AddSeed("seed", a.seed);
  std::vector<TokenizedSentence> sentences;
  if (!a.data.empty()) {
    m.AddInput(a.data);
    for (auto& ex : LoadEdgeDataset(a.data).examples) sentences.push_back(ex.sentence);
  } else {
    m.AddInput(a.qa);
    for (auto& inst : LoadQADataset(a.qa)) {
      for (auto& s : inst.context) sentences.push_back(s);
    }
  }
  const ReprFile file = EmbedSentences(embedder, sentences, a.layers);
  file.Write(a.out);
  m.AddOutput(a.out);
  size_t tokens = 0;
  for (const auto& s : sentences) tokens += s.tokens.size();
  return {{{"embedder", std::string(EmbedderKindName(embedder.kind))},
           {"dim", a.dim},
           {"layers", a.layers},
           {"sentences", sentences.size()},
           {"tokens", tokens},
           {"out", a.out}},
          ""};
}

// ---- train-probe / eval-probe --------------------------------------------

struct TrainProbeArgs {
  std::string train, train_repr, dev, dev_repr, view = "only:0", out, log;
  std::string nonlinearity = "relu";
  ProbeConfig config;
  size_t runs = 1;
};

Output RunTrainProbe(TrainProbeArgs a, RunManifest& m) {
  if (a.runs == 0) throw UsageError("--runs must be >= 1");
  if (a.nonlinearity != "relu" && a.nonlinearity != "tanh") {
    throw UsageError("--nonlinearity must be relu or tanh");
  }
  a.config.nonlinearity =
      a.nonlinearity == "tanh" ? nn::Activation::kTanh : nn::Activation::kRelu;
  for (const auto* p : {&a.train, &a.train_repr, &a.dev, &a.dev_repr}) m.AddInput(*p);
  const EdgeDataset train = LoadEdgeDataset(a.train);
  const EdgeDataset dev = LoadEdgeDataset(a.dev);
  const ReprFile train_reprs = ReprFile::Read(a.train_repr);
  const ReprFile dev_reprs = ReprFile::Read(a.dev_repr);
  if (train_reprs.dim() != dev_reprs.dim()) {
    throw ValidationError("train and dev representations differ in width");
  }
  const LayerView view = LayerView::Parse(a.view);
  a.config.input_dim = view.EffectiveDim(train_reprs.dim());
  a.config.pairwise = train.pairwise;

  Json runs = Json::array();
  std::vector<double> micro, macro;
  std::vector<Json> log_rows;
  for (size_t k = 0; k < a.runs; ++k) {
    ProbeConfig cfg = a.config;
    cfg.seed = a.config.seed + k;
    m.AddSeed("run" + std::to_string(k), cfg.seed);
    TrainResult tr =
        TrainProbe(ProbeModel::Build(cfg, train.vocab, view), train, dev, train_reprs, dev_reprs);
    const ProbeEvaluation full = EvaluateProbe(tr.best, dev, dev_reprs);
    for (const auto& entry : tr.log) {
      Json row = LogEntryToJson(entry, train.vocab);
      if (a.runs > 1) row["run"] = k;
      log_rows.push_back(std::move(row));
    }
    if (!a.out.empty()) {
      const std::string path = RunPath(a.out, k, a.runs);
      tr.best.Save(path);
      m.AddOutput(path);
    }
    micro.push_back(full.report.micro_f1);
    macro.push_back(full.report.macro_f1);
    runs.push_back({{"seed", cfg.seed},
                    {"steps", tr.steps},
                    {"best_step", tr.best_step},
                    {"stop_reason", tr.stop_reason},
                    {"dev", ReportToJson(full.report, train.vocab)}});
  }
  if (!a.log.empty()) {
    WriteJsonl(a.log, log_rows);
    m.AddOutput(a.log);
  }
  return {{{"view", view.ToString()},
           {"config", a.config.ToJson()},
           {"runs", runs},
           {"dev_micro_f1", MeanStd(micro)},
           {"dev_macro_f1", MeanStd(macro)}},
          ""};
}

struct EvalProbeArgs {
  std::string model, data, repr, preds;
};

Output RunEvalProbe(const EvalProbeArgs& a, RunManifest& m) {
  for (const auto* p : {&a.model, &a.data, &a.repr}) m.AddInput(*p);
  const ProbeModel model = ProbeModel::Load(a.model);
  const EdgeDataset data = LoadEdgeDataset(a.data);
  const ReprFile reprs = ReprFile::Read(a.repr);
  const ProbeEvaluation eval = EvaluateProbe(model, data, reprs);
  if (!a.preds.empty()) {
    std::vector<PredictionRecord> records;
    for (const EdgeExample& ex : data.examples) {
      const Matrix view = model.View(reprs.At(ex.sentence.id));
      for (size_t k = 0; k < ex.targets.size(); ++k) {
        const auto probs = nn::Softmax(model.Logits(view, ex.targets[k]));
        const size_t pred = Argmax(probs);
        records.push_back({InstanceKey(ex.sentence.id, k), model.vocab().Label(pred), probs[pred]});
      }
    }
    WritePredictions(a.preds, records);
    m.AddOutput(a.preds);
  }
  Json result = ReportToJson(eval.report, model.vocab());
  result["view"] = model.view().ToString();
  return {result, ""};
}

// ---- baseline -------------------------------------------------------------

struct BaselineArgs {
  std::string train, test, task = "task", method = "mem_freq", norm = "exact", preds;
  std::string positive = "1", negative = "0";
  uint64_t seed = 13;
  size_t runs = 1;
};

Output RunBaseline(const BaselineArgs& a, RunManifest& m) {
  static const std::set<std::string> kMethods = {"mem_uniform", "mem_freq", "majority",
                                                 "identity", "identity+mem_freq"};
  if (!kMethods.count(a.method)) {
    throw UsageError("unknown --method " + a.method +
                     " (mem_uniform, mem_freq, majority, identity, identity+mem_freq)");
  }
  if (a.runs == 0) throw UsageError("--runs must be >= 1");
  const KeyNormalization norm = ParseNorm(a.norm);
  m.AddInput(a.train);
  m.AddInput(a.test);
  const EdgeDataset train = LoadEdgeDataset(a.train);
  const EdgeDataset test = LoadEdgeDataset(a.test);
  const bool identity = a.method.rfind("identity", 0) == 0;
  if (identity && !test.pairwise) {
    throw ValidationError("identity baselines need pairwise targets");
  }
  const MemoTable table = FitMemo(train, a.task, norm);

  LabelVocab vocab = test.vocab;
  for (const auto& l : table.Labels()) vocab.Add(l);
  if (identity) {
    vocab.Add(a.positive);
    vocab.Add(a.negative);
  }
  size_t seen_keys = 0;
  for (const auto& ex : test.examples) {
    for (const auto& t : ex.targets) {
      if (table.Find(KeyForTarget(ex, t, a.task, norm))) ++seen_keys;
    }
  }

  Json runs = Json::array();
  std::vector<double> acc, macro;
  for (size_t k = 0; k < a.runs; ++k) {
    const uint64_t seed = a.seed + k;
    m.AddSeed("run" + std::to_string(k), seed);
    Rng rng(seed);
    std::vector<size_t> preds, golds;
    std::vector<PredictionRecord> records;
    for (const auto& ex : test.examples) {
      for (size_t i = 0; i < ex.targets.size(); ++i) {
        const EdgeTarget& t = ex.targets[i];
        const MemoKey key = KeyForTarget(ex, t, a.task, norm);
        std::string label;
        if (identity) {
          const bool same = PredictIdentityCoref(SpanText(ex.sentence.tokens, t.span1),
                                                 SpanText(ex.sentence.tokens, *t.span2), norm);
          if (same) {
            label = a.positive;
          } else if (a.method == "identity") {
            label = a.negative;
          } else {
            label = PredictMemFreq(table, key, rng);
          }
        } else if (a.method == "mem_uniform") {
          label = PredictMemUniform(table, key, rng);
        } else if (a.method == "mem_freq") {
          label = PredictMemFreq(table, key, rng);
        } else {
          label = PredictMajority(table);
        }
        preds.push_back(vocab.IndexOf(label));
        golds.push_back(vocab.IndexOf(t.label));
        records.push_back({InstanceKey(ex.sentence.id, i), label, 1.0});
      }
    }
    const EvalReport report = ClassificationMetrics(preds, golds, vocab.size());
    if (!a.preds.empty()) {
      const std::string path = RunPath(a.preds, k, a.runs);
      WritePredictions(path, records);
      m.AddOutput(path);
    }
    acc.push_back(report.accuracy);
    macro.push_back(report.macro_f1);
    Json run = ReportToJson(report, vocab);
    run["seed"] = seed;
    runs.push_back(std::move(run));
  }
  const size_t n = test.num_targets();
  return {{{"method", a.method},
           {"task", a.task},
           {"norm", a.norm},
           {"memo_keys", table.num_keys()},
           {"test_targets", n},
           {"key_overlap", n == 0 ? 0.0 : static_cast<double>(seen_keys) / static_cast<double>(n)},
           {"runs", runs},
           {"accuracy", MeanStd(acc)},
           {"macro_f1", MeanStd(macro)}},
          ""};
}

// ---- splits ---------------------------------------------------------------

struct SplitsArgs {
  std::string train, test, task = "task", norm = "exact", criterion = "memo", reference;
  std::vector<std::string> models;
};

Output RunSplits(const SplitsArgs& a, RunManifest& m) {
  const KeyNormalization norm = ParseNorm(a.norm);
  m.AddInput(a.test);
  const EdgeDataset test = LoadEdgeDataset(a.test);
  const auto items = TestItems(test, a.task, norm);
  SplitAssignment split;
  if (a.criterion == "memo") {
    if (a.train.empty()) throw UsageError("--criterion memo needs --train");
    m.AddInput(a.train);
    split = SplitEasyHard(items, FitMemo(LoadEdgeDataset(a.train), a.task, norm));
  } else if (a.criterion.rfind("label:", 0) == 0) {
    std::set<std::string> hard;
    std::stringstream ss(a.criterion.substr(6));
    for (std::string l; std::getline(ss, l, ',');) {
      if (!l.empty()) hard.insert(l);
    }
    split = SplitByLabel(items, hard, test.vocab);
  } else {
    throw UsageError("--criterion must be memo or label:NAME[,NAME]");
  }
  std::unordered_map<std::string, std::string> golds;
  for (const auto& it : items) golds[it.key] = it.gold;

  auto load = [&](const std::string& spec) {
    const auto [name, path] = NamedPath(spec);
    m.AddInput(path);
    return PredictionsFromSet(name, LoadPredictions(path));
  };
  const NamedPredictions reference = load(a.reference);
  std::vector<NamedPredictions> models;
  for (const auto& spec : a.models) models.push_back(load(spec));
  const DeltaTable table = DeltaReport(reference, models, golds, split);
  Json result = table.ToJson();
  result["criterion"] = split.criterion;
  return {result, table.RenderText()};
}

// ---- occlude --------------------------------------------------------------

struct OccludeArgs {
  std::string qa, out, log, pronouns;
  uint64_t seed = 13;
  bool include_question = false;
};

Rng InstanceRng(uint64_t seed, const std::string& id) {
  return Rng(HashCombine(seed, Fnv1a64(id)));
}

Output RunOcclude(const OccludeArgs& a, RunManifest& m) {
  m.AddInput(a.qa);
  m.AddSeed("seed", a.seed);
  std::unordered_set<std::string> pronouns(DefaultPronouns().begin(), DefaultPronouns().end());
  if (!a.pronouns.empty()) {
    m.AddInput(a.pronouns);
    std::ifstream in(a.pronouns);
    if (!in) throw ValidationError("cannot open " + a.pronouns);
    pronouns.clear();
    for (std::string w; in >> w;) {
      for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      pronouns.insert(w);
    }
  }
  const auto instances = LoadQADataset(a.qa);
  std::vector<QAInstance> occluded;
  std::vector<Json> log;
  size_t tokens = 0, dropped = 0;
  for (const auto& inst : instances) {
    Rng rng = InstanceRng(a.seed, inst.id);
    OcclusionResult r = OccludePronouns(inst, rng, pronouns, a.include_question);
    for (const auto& s : inst.context) tokens += s.tokens.size();
    for (const auto& rep : r.log) log.push_back(ReplacementToJson(rep));
    dropped += r.dropped_answer_location ? 1 : 0;
    occluded.push_back(std::move(r.instance));
  }
  WriteQADataset(a.out, occluded);
  m.AddOutput(a.out);
  if (!a.log.empty()) {
    WriteJsonl(a.log, log);
    m.AddOutput(a.log);
  }
  return {{{"instances", instances.size()},
           {"context_tokens", tokens},
           {"replacements", log.size()},
           {"dropped_answer_locations", dropped},
           {"include_question", a.include_question}},
          ""};
}

// ---- maf ------------------------------------------------------------------

struct MafArgs {
  std::string qa, entities, gazetteer, etype = "unsupervised", mode = "strict", out;
  uint64_t seed = 13;
  size_t trials = 1;
};

std::unique_ptr<EtypeBackend> MakeBackend(const std::string& spec, RunManifest& m) {
  if (spec == "unsupervised") return std::make_unique<UnsupervisedEtypeBackend>();
  if (spec.rfind("wordconv:", 0) == 0) {
    const std::string path = spec.substr(9);
    m.AddInput(path);
    return std::make_unique<WordConvEtypeBackend>(WordConvClassifier::Load(path));
  }
  if (spec.rfind("preds:", 0) == 0) {
    const std::string path = spec.substr(6);
    m.AddInput(path);
    return std::make_unique<ExternalEtypeBackend>(LoadPredictions(path));
  }
  throw UsageError("--etype must be unsupervised, wordconv:MODEL or preds:FILE");
}

Output RunMaf(const MafArgs& a, RunManifest& m) {
  if (a.mode != "strict" && a.mode != "stochastic") {
    throw UsageError("--mode must be strict or stochastic");
  }
  if (a.entities.empty() == a.gazetteer.empty()) {
    throw UsageError("give exactly one of --entities or --gazetteer");
  }
  if (a.trials == 0) throw UsageError("--trials must be >= 1");
  m.AddInput(a.qa);
  m.AddSeed("seed", a.seed);
  const auto instances = LoadQADataset(a.qa);
  EntityIndex entities;
  if (!a.entities.empty()) {
    m.AddInput(a.entities);
    entities = LoadEntities(a.entities).by_id;
  } else {
    m.AddInput(a.gazetteer);
    const Gazetteer g = Gazetteer::Load(a.gazetteer);
    for (const auto& inst : instances) entities[inst.id] = g.Tag(inst);
  }
  size_t missing = 0;
  std::vector<const EntityAnnotation*> ann(instances.size(), nullptr);
  for (size_t i = 0; i < instances.size(); ++i) {
    auto it = entities.find(instances[i].id);
    if (it == entities.end()) {
      ++missing;
      continue;
    }
    ValidateEntities(it->second, instances[i]);
    ann[i] = &it->second;
  }
  const auto backend = MakeBackend(a.etype, m);

  auto run_mode = [&](MafMode mode, uint64_t trial, std::vector<FilterVerdict>* keep) {
    size_t fired = 0;
    for (size_t i = 0; i < instances.size(); ++i) {
      Rng rng = InstanceRng(HashCombine(a.seed, trial), instances[i].id);
      FilterVerdict v = MafFilter(instances[i], ann[i], *backend, mode, rng);
      fired += v.filtered ? 1 : 0;
      if (keep) keep->push_back(std::move(v));
    }
    return fired;
  };
  const double n = static_cast<double>(instances.size());
  auto rate = [&](size_t fired) { return instances.empty() ? 0.0 : fired / n; };

  std::vector<FilterVerdict> verdicts;
  const MafMode mode = a.mode == "strict" ? MafMode::kStrict : MafMode::kStochastic;
  const size_t fired = run_mode(mode, 0, &verdicts);
  std::map<std::string, size_t> etypes;
  for (const auto& v : verdicts) ++etypes[v.diagnostics.value("etype", "UNK_ETYPE")];
  Json result = {{"instances", instances.size()},
                 {"mode", a.mode},
                 {"etype_backend", a.etype},
                 {"missing_annotations", missing},
                 {"filtered", fired},
                 {"filtered_rate", rate(fired)},
                 {"etype_distribution", etypes}};
  if (mode == MafMode::kStochastic && a.trials > 1) {
    std::vector<double> rates{rate(fired)};
    for (size_t t = 1; t < a.trials; ++t) rates.push_back(rate(run_mode(mode, t, nullptr)));
    result["stochastic_rate"] = MeanStd(rates);
    result["strict_rate"] = rate(run_mode(MafMode::kStrict, 0, nullptr));
  }
  if (!a.out.empty()) {
    WriteVerdicts(a.out, verdicts);
    m.AddOutput(a.out);
  }
  return {result, ""};
}

// ---- mdf ------------------------------------------------------------------

struct MdfArgs {
  std::string qa, out;
  std::vector<std::string> preds;
};

Output RunMdf(const MdfArgs& a, RunManifest& m) {
  m.AddInput(a.qa);
  const auto instances = LoadQADataset(a.qa);
  std::vector<NamedPredictionSet> sets;
  Json warnings = Json::object();
  for (const auto& spec : a.preds) {
    const auto [name, path] = NamedPath(spec);
    m.AddInput(path);
    sets.push_back({name, LoadPredictions(path)});
    warnings[name] = sets.back().predictions.duplicate_warnings;
  }
  std::vector<FilterVerdict> verdicts;
  size_t fired = 0, uncovered = 0;
  for (const auto& inst : instances) {
    bool covered = false;
    verdicts.push_back(MdfFilter(inst, sets, &covered));
    fired += verdicts.back().filtered ? 1 : 0;
    uncovered += covered ? 0 : 1;
  }
  if (!a.out.empty()) {
    WriteVerdicts(a.out, verdicts);
    m.AddOutput(a.out);
  }
  return {{{"instances", instances.size()},
           {"models", sets.size()},
           {"filtered", fired},
           {"filtered_rate", instances.empty() ? 0.0
                                               : static_cast<double>(fired) /
                                                     static_cast<double>(instances.size())},
           {"uncovered", uncovered},
           {"duplicate_prediction_warnings", warnings}},
          ""};
}

// ---- apply-filters --------------------------------------------------------

struct ApplyArgs {
  std::string qa, out, removed_out;
  std::vector<std::string> verdicts;
};

Output RunApply(const ApplyArgs& a, RunManifest& m) {
  m.AddInput(a.qa);
  const auto instances = LoadQADataset(a.qa);
  std::vector<NamedVerdicts> sets;
  for (const auto& spec : a.verdicts) {
    const auto [name, path] = NamedPath(spec);
    m.AddInput(path);
    sets.push_back({name, LoadVerdicts(path)});
  }
  const FilterApplication app = ApplyFilters(instances, sets);
  if (!a.out.empty()) {
    WriteQADataset(a.out, app.retained);
    m.AddOutput(a.out);
  }
  if (!a.removed_out.empty()) {
    std::ofstream out(a.removed_out, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + a.removed_out);
    for (const auto& id : app.removed_ids) out << id << "\n";
    m.AddOutput(a.removed_out);
  }
  return {app.Report(sets), ""};
}

// ---- randomize ------------------------------------------------------------

struct RandomizeArgs {
  std::string qa, entities, out;
  uint64_t seed = 13;
};

Output RunRandomize(const RandomizeArgs& a, RunManifest& m) {
  m.AddInput(a.qa);
  m.AddInput(a.entities);
  m.AddSeed("seed", a.seed);
  const auto instances = LoadQADataset(a.qa);
  const EntitySet entities = LoadEntities(a.entities);
  const RandomizeResult r = RandomizeAnswers(instances, entities.by_id, a.seed);
  size_t changed = 0;
  for (size_t i = 0; i < instances.size(); ++i) {
    changed += r.instances[i].answers != instances[i].answers ? 1 : 0;
  }
  WriteQADataset(a.out, r.instances);
  m.AddOutput(a.out);
  return {{{"instances", instances.size()},
           {"changed", changed},
           {"passed_through", r.passed_through}},
          ""};
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::string preds, qa, data;
};

Output RunReport(const ReportArgs& a, RunManifest& m) {
  if (a.qa.empty() == a.data.empty()) throw UsageError("give exactly one of --qa or --data");
  m.AddInput(a.preds);
  const PredictionSet preds = LoadPredictions(a.preds);
  Json result;
  result["duplicate_prediction_warnings"] = preds.duplicate_warnings;
  if (!a.qa.empty()) {
    m.AddInput(a.qa);
    std::vector<SpanScore> scores;
    size_t missing = 0;
    for (const auto& inst : LoadQADataset(a.qa)) {
      const PredictionRecord* rec = preds.Find(inst.id);
      missing += rec == nullptr ? 1 : 0;
      scores.push_back(SpanF1Em(rec ? rec->prediction : std::string(), inst.answers));
    }
    const QaScore agg = AggregateQA(scores);
    result["instances"] = scores.size();
    result["missing_predictions"] = missing;
    result["f1"] = agg.f1;
    result["em"] = agg.em;
    return {result, ""};
  }
  m.AddInput(a.data);
  const EdgeDataset data = LoadEdgeDataset(a.data);
  LabelVocab vocab = data.vocab;
  std::vector<size_t> p, g;
  for (const auto& ex : data.examples) {
    for (size_t k = 0; k < ex.targets.size(); ++k) {
      const std::string key = InstanceKey(ex.sentence.id, k);
      const PredictionRecord* rec = preds.Find(key);
      if (rec == nullptr) throw ValidationError("no prediction for " + key);
      p.push_back(vocab.Add(rec->prediction));
      g.push_back(vocab.IndexOf(ex.targets[k].label));
    }
  }
  Json metrics = ReportToJson(ClassificationMetrics(p, g, vocab.size()), vocab);
  for (auto& [k, v] : metrics.items()) result[k] = v;
  return {result, ""};
}

// ---- train-etype ----------------------------------------------------------

struct TrainEtypeArgs {
  std::string qa, entities, out, dataset_out;
  WordConvConfig config;
  size_t runs = 1;
};

Output RunTrainEtype(const TrainEtypeArgs& a, RunManifest& m) {
  if (a.runs == 0) throw UsageError("--runs must be >= 1");
  m.AddInput(a.qa);
  m.AddInput(a.entities);
  const auto instances = LoadQADataset(a.qa);
  const EntitySet entities = LoadEntities(a.entities);
  const EtypeDataset dataset = BuildEtypeDataset(instances, entities.by_id);
  if (!a.dataset_out.empty()) {
    std::vector<Json> rows;
    for (const auto& item : dataset.items) {
      rows.push_back({{"id", item.instance_id},
                      {"question", item.question},
                      {"label", std::string(EtypeName(item.label))}});
    }
    WriteJsonl(a.dataset_out, rows);
    m.AddOutput(a.dataset_out);
  }
  Json runs = Json::array();
  std::vector<double> accs;
  for (size_t k = 0; k < a.runs; ++k) {
    WordConvConfig cfg = a.config;
    cfg.seed = a.config.seed + k;
    m.AddSeed("run" + std::to_string(k), cfg.seed);
    const WordConvTrainResult r = TrainWordConvEtype(dataset, cfg);
    if (!a.out.empty()) {
      const std::string path = RunPath(a.out, k, a.runs);
      r.classifier.Save(path);
      m.AddOutput(path);
    }
    Json epochs = Json::array();
    for (const auto& e : r.log) {
      epochs.push_back(
          {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_accuracy", e.dev_accuracy}});
    }
    accs.push_back(r.best_dev_accuracy);
    runs.push_back({{"seed", cfg.seed},
                    {"train", r.train_size},
                    {"dev", r.dev_size},
                    {"best_epoch", r.best_epoch},
                    {"best_dev_accuracy", r.best_dev_accuracy},
                    {"log", epochs}});
  }
  return {{{"dataset",
            {{"items", dataset.items.size()},
             {"missing_annotations", dataset.missing_annotations},
             {"skipped_unlocated", dataset.skipped_unlocated},
             {"distribution", dataset.DistributionJson()}}},
           {"config", a.config.ToJson()},
           {"runs", runs},
           {"dev_accuracy", MeanStd(accs)}},
          ""};
}

// ---- dispatch -------------------------------------------------------------

void AddCommon(CLI::App* sub, Common& c) {
  sub->add_flag("--table", c.table, "Print an aligned text table instead of JSON");
  sub->add_option("--metrics-out", c.metrics_out, "Also write the result JSON here");
  sub->add_option("--manifest-out", c.manifest_out, "Also write the run manifest here");
}

void CheckFlags(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return;
  const std::string& first = args[0];
  if (first.rfind("-", 0) == 0) return;  // top-level flags (--help) go to CLI11
  std::vector<std::string> names;
  for (const CLI::App* sub : app.get_subcommands({})) names.push_back(sub->get_name());
  CLI::App* sub = app.get_subcommand_no_throw(first);
  if (sub == nullptr) {
    const std::string hint = SuggestName(first, names);
    throw UsageError("unknown command '" + first + "'" +
                     (hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
  }
  const auto known = OptionNames(*sub);
  for (size_t i = 1; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg.rfind("--", 0) != 0 || arg == "--") continue;
    const std::string flag = arg.substr(0, arg.find('='));
    if (std::find(known.begin(), known.end(), flag) != known.end()) continue;
    const std::string hint = SuggestName(flag, known);
    throw UsageError("unknown flag " + flag + " for '" + first + "'" +
                     (hint.empty() ? "" : " (did you mean " + hint + "?)"));
  }
}

}  // namespace

std::string SuggestName(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  size_t best_d = std::max<size_t>(2, word.size() / 3) + 1;
  for (const auto& c : candidates) {
    const size_t d = EditDistance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("probekit: edge probing and dataset-bias audit toolkit", "probekit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));
  Common common;
  std::vector<Command> commands;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    AddCommon(sub, common);
    return sub;
  };

  EmbedArgs embed;
  {
    auto* s = add("embed", "Write synthetic per-layer token representations (EPR1)");
    s->add_option("--data", embed.data, "Edge dataset JSONL");
    s->add_option("--qa", embed.qa, "QA dataset JSONL (context sentences)");
    s->add_option("--embedder", embed.embedder, "gaussian_token_type | hashed_ngram")
        ->capture_default_str();
    s->add_option("--dim", embed.dim)->capture_default_str();
    s->add_option("--layers", embed.layers)->capture_default_str();
    s->add_option("--seed", embed.seed)->capture_default_str();
    s->add_option("--out", embed.out)->required();
    commands.push_back({s, [&](RunManifest& m) { return RunEmbed(embed, m); }});
  }
  TrainProbeArgs tp;
  {
    auto* s = add("train-probe", "Train an edge probe with periodic dev evaluation");
    s->add_option("--train", tp.train)->required();
    s->add_option("--train-repr", tp.train_repr)->required();
    s->add_option("--dev", tp.dev)->required();
    s->add_option("--dev-repr", tp.dev_repr)->required();
    s->add_option("--view", tp.view, "only:i | cat:i | mix:i")->capture_default_str();
    s->add_option("--out", tp.out, "Best checkpoint");
    s->add_option("--log", tp.log, "Training log JSONL");
    s->add_option("--projection-dim", tp.config.projection_dim)->capture_default_str();
    s->add_option("--hidden-dim", tp.config.hidden_dim)->capture_default_str();
    s->add_option("--nonlinearity", tp.nonlinearity, "relu | tanh")->capture_default_str();
    s->add_option("--batch-size", tp.config.batch_size)->capture_default_str();
    s->add_option("--lr", tp.config.lr)->capture_default_str();
    s->add_option("--eval-every", tp.config.eval_every)->capture_default_str();
    s->add_option("--max-evals", tp.config.max_evals)->capture_default_str();
    s->add_option("--patience", tp.config.patience)->capture_default_str();
    s->add_option("--epochs", tp.config.max_epochs)->capture_default_str();
    s->add_option("--dev-subset", tp.config.dev_subset)->capture_default_str();
    s->add_option("--seed", tp.config.seed)->capture_default_str();
    s->add_option("--runs", tp.runs, "Independent runs with seeds seed+k")->capture_default_str();
    commands.push_back({s, [&](RunManifest& m) { return RunTrainProbe(tp, m); }});
  }
  EvalProbeArgs ep;
  {
    auto* s = add("eval-probe", "Score a trained probe");
    s->add_option("--model", ep.model)->required();
    s->add_option("--data", ep.data)->required();
    s->add_option("--repr", ep.repr)->required();
    s->add_option("--preds", ep.preds, "Write per-target predictions JSONL");
    commands.push_back({s, [&](RunManifest& m) { return RunEvalProbe(ep, m); }});
  }
  BaselineArgs bl;
  {
    auto* s = add("baseline", "Memorization, majority and identity baselines");
    s->add_option("--train", bl.train)->required();
    s->add_option("--test", bl.test)->required();
    s->add_option("--task", bl.task)->capture_default_str();
    s->add_option("--method", bl.method,
                  "mem_uniform | mem_freq | majority | identity | identity+mem_freq")
        ->capture_default_str();
    s->add_option("--norm", bl.norm, "exact | lowercase")->capture_default_str();
    s->add_option("--positive-label", bl.positive)->capture_default_str();
    s->add_option("--negative-label", bl.negative)->capture_default_str();
    s->add_option("--preds", bl.preds, "Write predictions JSONL");
    s->add_option("--seed", bl.seed)->capture_default_str();
    s->add_option("--runs", bl.runs)->capture_default_str();
    commands.push_back({s, [&](RunManifest& m) { return RunBaseline(bl, m); }});
  }
  SplitsArgs sp;
  {
    auto* s = add("splits", "Accuracy deltas over easy/hard test splits");
    s->add_option("--train", sp.train, "Training set for the memo criterion");
    s->add_option("--test", sp.test)->required();
    s->add_option("--task", sp.task)->capture_default_str();
    s->add_option("--norm", sp.norm)->capture_default_str();
    s->add_option("--criterion", sp.criterion, "memo | label:NAME[,NAME]")->capture_default_str();
    s->add_option("--reference", sp.reference, "[NAME=]preds.jsonl")->required();
    s->add_option("--models", sp.models, "[NAME=]preds.jsonl,...")->delimiter(',')->required();
    commands.push_back({s, [&](RunManifest& m) { return RunSplits(sp, m); }});
  }
  OccludeArgs oc;
  {
    auto* s = add("occlude", "Replace context pronouns with random same-length strings");
    s->add_option("--qa", oc.qa)->required();
    s->add_option("--out", oc.out)->required();
    s->add_option("--log", oc.log, "Replacement log JSONL");
    s->add_option("--pronouns", oc.pronouns, "Whitespace-separated pronoun list");
    s->add_flag("--include-question", oc.include_question, "Also occlude question tokens");
    s->add_option("--seed", oc.seed)->capture_default_str();
    commands.push_back({s, [&](RunManifest& m) { return RunOcclude(oc, m); }});
  }
  MafArgs maf;
  {
    auto* s = add("maf", "Model-agnostic entity-type shortcut filter");
    s->add_option("--qa", maf.qa)->required();
    s->add_option("--entities", maf.entities, "Entity annotations JSONL");
    s->add_option("--gazetteer", maf.gazetteer, "Phrase<TAB>TYPE lexicon instead of --entities");
    s->add_option("--etype", maf.etype, "unsupervised | wordconv:MODEL | preds:FILE")
        ->capture_default_str();
    s->add_option("--mode", maf.mode, "strict | stochastic")->capture_default_str();
    s->add_option("--trials", maf.trials, "Stochastic trials for the mean rate")
        ->capture_default_str();
    s->add_option("--seed", maf.seed)->capture_default_str();
    s->add_option("--out", maf.out, "Verdicts JSONL");
    commands.push_back({s, [&](RunManifest& m) { return RunMaf(maf, m); }});
  }
  MdfArgs mdf;
  {
    auto* s = add("mdf", "Model-dependent filter over predictions on occluded input");
    s->add_option("--qa", mdf.qa, "Original (unoccluded) QA set")->required();
    s->add_option("--occluded-preds", mdf.preds, "[NAME=]preds.jsonl,...")
        ->delimiter(',')
        ->required();
    s->add_option("--out", mdf.out, "Verdicts JSONL");
    commands.push_back({s, [&](RunManifest& m) { return RunMdf(mdf, m); }});
  }
  ApplyArgs ap;
  {
    auto* s = add("apply-filters", "Remove instances flagged by any verdict set");
    s->add_option("--qa", ap.qa)->required();
    s->add_option("--verdicts", ap.verdicts, "[NAME=]verdicts.jsonl,...")
        ->delimiter(',')
        ->required();
    s->add_option("--out", ap.out, "Retained QA JSONL");
    s->add_option("--removed-out", ap.removed_out, "Removed ids, one per line");
    commands.push_back({s, [&](RunManifest& m) { return RunApply(ap, m); }});
  }
  RandomizeArgs rz;
  {
    auto* s = add("randomize", "Move each answer to a random entity span");
    s->add_option("--qa", rz.qa)->required();
    s->add_option("--entities", rz.entities)->required();
    s->add_option("--out", rz.out)->required();
    s->add_option("--seed", rz.seed)->capture_default_str();
    commands.push_back({s, [&](RunManifest& m) { return RunRandomize(rz, m); }});
  }
  ReportArgs rp;
  {
    auto* s = add("report", "Score a predictions file against QA or edge gold data");
    s->add_option("--preds", rp.preds)->required();
    s->add_option("--qa", rp.qa);
    s->add_option("--data", rp.data);
    commands.push_back({s, [&](RunManifest& m) { return RunReport(rp, m); }});
  }
  TrainEtypeArgs te;
  {
    auto* s = add("train-etype", "Train the WordConv answer-type classifier");
    s->add_option("--qa", te.qa)->required();
    s->add_option("--entities", te.entities)->required();
    s->add_option("--out", te.out, "Model checkpoint");
    s->add_option("--dataset-out", te.dataset_out, "Write the typed question set JSONL");
    s->add_option("--embedding-dim", te.config.embedding_dim)->capture_default_str();
    s->add_option("--widths", te.config.widths)->delimiter(',')->capture_default_str();
    s->add_option("--filters", te.config.filters_per_width)->capture_default_str();
    s->add_option("--max-len", te.config.max_len)->capture_default_str();
    s->add_option("--epochs", te.config.epochs)->capture_default_str();
    s->add_option("--batch-size", te.config.batch_size)->capture_default_str();
    s->add_option("--lr", te.config.lr)->capture_default_str();
    s->add_option("--rho", te.config.rho)->capture_default_str();
    s->add_option("--eps", te.config.eps)->capture_default_str();
    s->add_option("--dev-fraction", te.config.dev_fraction)->capture_default_str();
    s->add_option("--seed", te.config.seed)->capture_default_str();
    s->add_option("--runs", te.runs)->capture_default_str();
    commands.push_back({s, [&](RunManifest& m) { return RunTrainEtype(te, m); }});
  }

  try {
    CheckFlags(args, app);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (const Command& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      RunManifest manifest(cmd.app->get_name());
      RecordFlags(*cmd.app, manifest);
      const Output output = cmd.run(manifest);
      const Json man = manifest.ToJson();
      if (!common.metrics_out.empty()) {
        std::ofstream f(common.metrics_out, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot write " + common.metrics_out);
        f << output.result.dump(2) << "\n";
      }
      if (!common.manifest_out.empty()) {
        std::ofstream f(common.manifest_out, std::ios::binary | std::ios::trunc);
        if (!f) throw ValidationError("cannot write " + common.manifest_out);
        f << man.dump(2) << "\n";
      }
      if (common.table) {
        out << (output.table.empty() ? RenderTable(output.result) : output.table);
        out << "manifest: " << man.dump() << "\n";
      } else {
        Json doc;
        doc["command"] = cmd.app->get_name();
        doc["result"] = output.result;
        doc["manifest"] = man;
        out << doc.dump(2) << "\n";
      }
      return 0;
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << "\n";
      return 2;
    } catch (const ValidationError& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace probekit
