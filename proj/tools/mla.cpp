// Copyright 2026 The MLA Fact Verification Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// mla: command-line driver for corpus generation, selector and verifier
// training, prediction, scoring, and the ablation grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mla/corpus.hpp"
#include "mla/errors.hpp"
#include "mla/evaluation.hpp"
#include "mla/params.hpp"
#include "mla/selection.hpp"
#include "mla/training.hpp"
#include "mla/veracity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitDivergence = 2;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string claims_path;

  mla::TrainConfig config() const {
    mla::TrainConfig c = config_path.empty() ? mla::TrainConfig{} : mla::load_config(config_path);
    if (seed) c.seed = *seed;
    c.validate();
    return c;
  }
  mla::Corpus corpus() const { return mla::load_corpus(data_dir); }
  std::vector<mla::Claim> claims(const mla::Corpus& corpus) const {
    if (claims_path.empty()) return corpus.claims();
    auto claims = mla::load_claims(claims_path);
    std::vector<std::string> missing;
    for (const auto& c : claims) {
      if (corpus.find_claim(c.id) == nullptr) missing.push_back(std::to_string(c.id));
    }
    if (!missing.empty()) {
      throw mla::ValidationError("claims absent from the corpus", std::move(missing));
    }
    return claims;
  }
};

void add_common(CLI::App* cmd, Common& common, bool with_config) {
  cmd->add_option("--data", common.data_dir, "corpus directory")->required();
  cmd->add_option("--claims", common.claims_path, "claims subset (JSONL)");
  if (with_config) {
    cmd->add_option("--config", common.config_path, "training configuration (JSON)");
    cmd->add_option("--seed", common.seed, "overrides the configured seed");
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw mla::ParseError(path.string(), 0, e.what());
  }
}

// A saved model directory: model.json, vocab.txt, params.ckpt.
void save_model_dir(const fs::path& dir, const std::string& kind,
                    const mla::TrainConfig& config, const mla::Vocabulary& vocab,
                    const mla::ParamSet& params, const mla::RunRecord& record) {
  fs::create_directories(dir);
  write_json(dir / "model.json", {{"kind", kind}, {"config", mla::to_json(config)}});
  vocab.save(dir / "vocab.txt");
  mla::save_params(params, dir / "params.ckpt");
  write_json(dir / "run_record.json", mla::to_json(record));
}

struct LoadedModel {
  mla::TrainConfig config;
  std::shared_ptr<const mla::Vocabulary> vocab;
};

LoadedModel read_model_dir(const fs::path& dir, const std::string& kind) {
  const json meta = read_json(dir / "model.json");
  if (meta.value("kind", "") != kind) {
    throw mla::ValidationError("wrong model kind in " + dir.string(),
                               {meta.value("kind", "?") + " != " + kind});
  }
  return {mla::config_from_json(meta.at("config")),
          std::make_shared<const mla::Vocabulary>(mla::Vocabulary::load(dir / "vocab.txt"))};
}

mla::TrainedSelector load_selector(const fs::path& dir) {
  auto [config, vocab] = read_model_dir(dir, "selector");
  auto run = mla::make_selector(config, vocab);
  mla::load_params(run.params, dir / "params.ckpt");
  return run;
}

mla::TrainedVerifier load_verifier(const fs::path& dir) {
  auto [config, vocab] = read_model_dir(dir, "mla");
  auto run = mla::make_verifier(config, vocab);
  mla::load_params(run.params, dir / "params.ckpt");
  return run;
}

int cmd_gen(std::size_t n_claims, std::uint64_t seed, const std::string& out,
            std::size_t n_docs, const std::string& pattern, const std::string& refute,
            double heldout) {
  mla::SyntheticSpec spec;
  spec.n_claims = n_claims;
  spec.seed = seed;
  spec.n_docs = n_docs;
  const auto ep = mla::parse_evidence_pattern(pattern);
  if (!ep) throw mla::ValidationError("unknown evidence pattern", {pattern});
  spec.evidence_pattern = *ep;
  if (refute == "negation") {
    spec.refute_style = mla::RefuteStyle::Negation;
  } else if (refute == "substitution") {
    spec.refute_style = mla::RefuteStyle::Substitution;
  } else if (refute == "mixed") {
    spec.refute_style = mla::RefuteStyle::Mixed;
  } else {
    throw mla::ValidationError("unknown refute style", {refute});
  }
  const mla::Corpus corpus = mla::generate_synthetic(spec);
  mla::save_corpus(corpus, out);
  const auto split = mla::split_claims(corpus.claims(), heldout, seed);
  mla::save_claims(fs::path(out) / "train.jsonl", split.train);
  mla::save_claims(fs::path(out) / "dev.jsonl", split.heldout);
  const auto stats = mla::corpus_stats(corpus.claims());
  std::printf("%zu documents, %zu claims (S %zu / R %zu / N %zu), train %zu, dev %zu\n",
              corpus.documents().size(), corpus.claims().size(), stats.label_counts[0],
              stats.label_counts[1], stats.label_counts[2], split.train.size(),
              split.heldout.size());
  return 0;
}

int cmd_train_selector(const Common& common, const std::string& out) {
  const auto config = common.config();
  const auto corpus = common.corpus();
  const auto claims = common.claims(corpus);
  auto vocab = std::make_shared<const mla::Vocabulary>(mla::build_corpus_vocabulary(corpus));
  auto run = mla::train_selector(corpus, claims, config, vocab);
  save_model_dir(out, "selector", config, *vocab, run.params, run.record);
  std::printf("selector: %zu steps, %.1f s, final loss %.4f\n", run.record.steps,
              run.record.seconds,
              run.record.epoch_losses.empty() ? 0.0 : run.record.epoch_losses.back());
  return 0;
}

int cmd_select(const Common& common, const std::string& model, std::size_t m,
               const std::string& out) {
  const auto corpus = common.corpus();
  const auto claims = common.claims(corpus);
  const auto selector = load_selector(model);
  const auto predictions = mla::predict_selection(corpus, claims, *selector.model, m);
  mla::save_selection_predictions(out, predictions);
  std::printf("ranked evidence for %zu claims -> %s\n", predictions.size(), out.c_str());
  return 0;
}

std::vector<mla::SelectionPrediction> selection_for(const mla::Corpus& corpus,
                                                    const std::vector<mla::Claim>& claims,
                                                    const std::string& predictions,
                                                    const std::string& selector_dir,
                                                    std::size_t m) {
  if (!predictions.empty()) return mla::load_selection_predictions(predictions, corpus);
  if (selector_dir.empty()) {
    throw mla::ValidationError("need --predictions or --selector", {});
  }
  return mla::predict_selection(corpus, claims, *load_selector(selector_dir).model, m);
}

int cmd_train_verifier(const Common& common, const std::string& selector_dir,
                       const std::string& predictions, const std::string& out) {
  auto config = common.config();
  const auto corpus = common.corpus();
  const auto claims = common.claims(corpus);
  const auto ranked = selection_for(corpus, claims, predictions, selector_dir, config.m);
  const auto sets = mla::build_evidence_sets(corpus, claims, ranked, config.m, true);
  auto vocab = std::make_shared<const mla::Vocabulary>(mla::build_corpus_vocabulary(corpus));
  std::optional<mla::TrainedSelector> selector;
  if (config.warm_start && !selector_dir.empty()) {
    selector = load_selector(selector_dir);
    vocab = selector->model->encoder().shared_vocab();
  }
  auto run = mla::train_verifier(sets, config, vocab, selector ? &selector->params : nullptr);
  save_model_dir(out, "mla", config, *vocab, run.params, run.record);
  std::printf("verifier: %zu steps, %.1f s, final loss %.4f\n", run.record.steps,
              run.record.seconds,
              run.record.epoch_losses.empty() ? 0.0 : run.record.epoch_losses.back());
  return 0;
}

int cmd_predict(const Common& common, const std::string& model, const std::string& selector_dir,
                const std::string& predictions, const std::string& out) {
  const auto verifier = load_verifier(model);
  const auto& config = read_model_dir(model, "mla").config;
  const auto corpus = common.corpus();
  const auto claims = common.claims(corpus);
  const auto ranked = selection_for(corpus, claims, predictions, selector_dir, config.m);
  const auto sets = mla::build_evidence_sets(corpus, claims, ranked, config.m, false);
  const auto verdicts = mla::predict_verdicts(*verifier.model, sets);
  mla::save_verdicts(out, verdicts);
  std::printf("verdicts for %zu claims -> %s\n", verdicts.size(), out.c_str());
  return 0;
}

int cmd_score(const std::string& gold, const std::string& pred, std::size_t m,
              bool per_claim) {
  const auto claims = mla::load_claims(gold);
  const auto verdicts = mla::load_verdicts(pred);
  const auto report = mla::evaluate(claims, verdicts, m);
  std::cout << mla::report_to_json(report, per_claim).dump(2) << '\n';
  std::cout << mla::format_report_table(report);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int cmd_ablate(const Common& common, const std::string& out) {
  const auto config = common.config();
  const auto corpus = common.corpus();
  fs::create_directories(out);
  json cells = json::array();
  std::printf("%-22s %7s %7s %9s\n", "configuration", "LA", "FEVER", "seconds");
  mla::run_ablation(corpus, config, [&](const mla::AblationCell& cell) {
    const auto& r = *cell.record.report;
    std::printf("%-22s %7.2f %7.2f %9.1f\n", cell.name.c_str(), 100.0 * r.la,
                100.0 * r.fever, cell.record.seconds);
    std::fflush(stdout);
    cells.push_back({{"name", cell.name}, {"record", mla::to_json(cell.record)}});
    write_json(fs::path(out) / "ablation.json", cells);
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-level attention fact verification"};
  app.require_subcommand(1);

  std::size_t n_claims = 1000, n_docs = 0;
  std::uint64_t gen_seed = 2021;
  double heldout = 0.2;
  std::string out, pattern = "single", refute = "negation";
  auto* gen = app.add_subcommand("gen-synthetic", "write a synthetic corpus");
  gen->add_option("--claims", n_claims, "number of claims")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--docs", n_docs, "number of documents (0 = automatic)");
  gen->add_option("--pattern", pattern, "single | two-sentence | mixed")->capture_default_str();
  gen->add_option("--refute", refute, "negation | substitution | mixed")->capture_default_str();
  gen->add_option("--heldout", heldout, "dev fraction for train/dev files")->capture_default_str();

  Common common;
  std::string model, selector_dir, predictions, gold, pred;
  std::size_t m = 5;
  bool per_claim = false;

  auto* train_sel = app.add_subcommand("train-selector", "train the sentence selector");
  add_common(train_sel, common, true);
  train_sel->add_option("--out", out, "model directory")->required();

  auto* select = app.add_subcommand("select", "rank evidence sentences");
  add_common(select, common, false);
  select->add_option("--model", model, "selector model directory")->required();
  select->add_option("--m", m, "sentences kept per claim")->capture_default_str();
  select->add_option("--out", out, "predictions (JSONL)")->required();

  auto* train_ver = app.add_subcommand("train-verifier", "train the veracity model");
  add_common(train_ver, common, true);
  train_ver->add_option("--selector", selector_dir, "selector model directory");
  train_ver->add_option("--predictions", predictions, "selector predictions (JSONL)");
  train_ver->add_option("--out", out, "model directory")->required();

  auto* predict = app.add_subcommand("predict", "write verdicts");
  add_common(predict, common, false);
  predict->add_option("--model", model, "verifier model directory")->required();
  predict->add_option("--selector", selector_dir, "selector model directory");
  predict->add_option("--predictions", predictions, "selector predictions (JSONL)");
  predict->add_option("--out", out, "verdicts (JSONL)")->required();

  auto* score = app.add_subcommand("score", "score verdicts against gold claims");
  score->add_option("--gold", gold, "gold claims (JSONL)")->required();
  score->add_option("--pred", pred, "verdicts (JSONL)")->required();
  score->add_option("--m", m, "evidence sentences scored")->capture_default_str();
  score->add_flag("--per-claim", per_claim, "include per-claim results");

  auto* ablate = app.add_subcommand("ablate", "run the ablation grid");
  add_common(ablate, common, true);
  ablate->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_gen(n_claims, gen_seed, out, n_docs, pattern, refute, heldout);
    if (*train_sel) return cmd_train_selector(common, out);
    if (*select) return cmd_select(common, model, m, out);
    if (*train_ver) return cmd_train_verifier(common, selector_dir, predictions, out);
    if (*predict) return cmd_predict(common, model, selector_dir, predictions, out);
    if (*score) return cmd_score(gold, pred, m, per_claim);
    if (*ablate) return cmd_ablate(common, out);
  } catch (const mla::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
