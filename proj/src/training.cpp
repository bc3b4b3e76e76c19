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

#include "mla/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>

#include "mla/errors.hpp"

namespace mla {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void TrainConfig::validate() const {
  std::vector<std::string> bad;
  if (width == 0 || heads == 0 || width % heads != 0) bad.push_back("width/heads");
  if (depth == 0) bad.push_back("depth");
  if (max_len < 4) bad.push_back("max_len");
  if (m == 0) bad.push_back("m");
  if (batch_size == 0) bad.push_back("batch_size");
  if (selector_batch_size == 0) bad.push_back("selector_batch_size");
  if (grad_accumulation == 0) bad.push_back("grad_accumulation");
  if (!(lr > 0.0)) bad.push_back("lr");
  if (!(selector_lr > 0.0)) bad.push_back("selector_lr");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) bad.push_back("warmup_ratio");
  if (!(grad_clip > 0.0)) bad.push_back("grad_clip");
  if (!(lambda >= 0.0)) bad.push_back("lambda");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad.push_back("dropout");
  if (!(init_stddev >= 0.0)) bad.push_back("init_stddev");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) bad.push_back("heldout_fraction");
  if (!bad.empty()) throw ValidationError("invalid training configuration", std::move(bad));
}

EncoderConfig TrainConfig::encoder_config(std::size_t vocab_size) const {
  EncoderConfig e;
  e.vocab_size = vocab_size;
  e.width = width;
  e.heads = heads;
  e.depth = depth;
  e.max_len = max_len;
  e.pad_to_max_len = pad_to_max_len;
  return e;
}

MlaConfig TrainConfig::mla_config(std::size_t vocab_size) const {
  MlaConfig c;
  c.encoder = encoder_config(vocab_size);
  c.gate = gate;
  c.use_token_attn = use_token_attn;
  c.use_sent_attn = use_sent_attn;
  c.detach_gate = detach_gate;
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"width", c.width},
          {"heads", c.heads},
          {"depth", c.depth},
          {"max_len", c.max_len},
          {"pad_to_max_len", c.pad_to_max_len},
          {"m", c.m},
          {"batch_size", c.batch_size},
          {"selector_batch_size", c.selector_batch_size},
          {"grad_accumulation", c.grad_accumulation},
          {"lr", c.lr},
          {"selector_lr", c.selector_lr},
          {"warmup_ratio", c.warmup_ratio},
          {"grad_clip", c.grad_clip},
          {"epochs", c.epochs},
          {"selector_epochs", c.selector_epochs},
          {"lambda", c.lambda},
          {"dropout", c.dropout},
          {"init_stddev", c.init_stddev},
          {"seed", c.seed},
          {"heldout_fraction", c.heldout_fraction},
          {"gate_strategy", std::string(to_string(c.gate))},
          {"use_token_attn", c.use_token_attn},
          {"use_sent_attn", c.use_sent_attn},
          {"use_class_weights", c.use_class_weights},
          {"joint", c.joint},
          {"warm_start", c.warm_start},
          {"detach_gate", c.detach_gate},
          {"optimizer", "adam"}};
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object", {});
  TrainConfig c;
  const json defaults = to_json(c);
  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) throw ValidationError("unknown configuration keys", std::move(unknown));
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception& e) {
      throw ValidationError("bad configuration value", {std::string(key) + ": " + e.what()});
    }
  };
  get("width", c.width);
  get("heads", c.heads);
  get("depth", c.depth);
  get("max_len", c.max_len);
  get("pad_to_max_len", c.pad_to_max_len);
  get("m", c.m);
  get("batch_size", c.batch_size);
  get("selector_batch_size", c.selector_batch_size);
  get("grad_accumulation", c.grad_accumulation);
  get("lr", c.lr);
  get("selector_lr", c.selector_lr);
  get("warmup_ratio", c.warmup_ratio);
  get("grad_clip", c.grad_clip);
  get("epochs", c.epochs);
  get("selector_epochs", c.selector_epochs);
  get("lambda", c.lambda);
  get("dropout", c.dropout);
  get("init_stddev", c.init_stddev);
  get("seed", c.seed);
  get("heldout_fraction", c.heldout_fraction);
  get("use_token_attn", c.use_token_attn);
  get("use_sent_attn", c.use_sent_attn);
  get("use_class_weights", c.use_class_weights);
  get("joint", c.joint);
  get("warm_start", c.warm_start);
  get("detach_gate", c.detach_gate);
  if (j.contains("gate_strategy")) {
    std::string name;
    get("gate_strategy", name);
    const auto gate = parse_gate_strategy(name);
    if (!gate) throw ValidationError("unknown gate strategy", {name});
    c.gate = *gate;
  }
  if (j.contains("optimizer") && j["optimizer"] != "adam") {
    throw ValidationError("unsupported optimizer", {j["optimizer"].dump()});
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Optimization primitives

double lr_schedule(std::size_t step, std::size_t total, double lr, double warmup_ratio) {
  if (step > total) throw ContractError("lr_schedule: step beyond total_steps");
  if (total == 0) return 0.0;
  const auto warmup = static_cast<std::size_t>(
      std::ceil(warmup_ratio * static_cast<double>(total)));
  if (step < warmup) return lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total == warmup) return lr;
  return lr * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

double clip_grad_norm(std::span<Tensor> tensors, double max_norm) {
  double sq = 0.0;
  for (const auto& t : tensors) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& t : tensors) {
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

AdamOptimizer::AdamOptimizer(std::vector<Tensor> tensors, double beta1, double beta2,
                             double eps)
    : tensors_(std::move(tensors)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& t : tensors_) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void AdamOptimizer::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto w = tensors_[i].mutable_data();
    const auto g = tensors_[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g.empty() ? 0.0 : g[j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
    }
  }
}

std::vector<Tensor> trainable_tensors(ParamSet& params) {
  std::vector<Tensor> out;
  for (auto& p : params.entries()) {
    p.value.set_requires_grad(p.trainable);
    if (p.trainable) out.push_back(p.value);
  }
  return out;
}

json to_json(const RunRecord& r) {
  json j = {{"kind", r.kind},
            {"config", r.config},
            {"epoch_losses", r.epoch_losses},
            {"steps", r.steps},
            {"seconds", r.seconds}};
  if (r.report) j["report"] = report_to_json(*r.report);
  return j;
}

std::size_t steps_for(std::size_t n_examples, std::size_t epochs, const TrainConfig& config) {
  const std::size_t chunk = config.batch_size * config.grad_accumulation;
  return epochs * ((n_examples + chunk - 1) / chunk);
}

Trainer::Trainer(ParamSet& params, const TrainConfig& config, double lr,
                 std::size_t total_steps)
    : config_(config), lr_(lr), total_steps_(total_steps),
      optimizer_(trainable_tensors(params)) {}

double Trainer::run_epoch(
    std::size_t n, const std::function<Tensor(std::size_t, const DropoutContext&)>& loss_fn,
    Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const DropoutContext ctx{config_.dropout, &rng, true};
  const std::size_t chunk = config_.batch_size * config_.grad_accumulation;
  double total_loss = 0.0;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (auto& t : optimizer_.tensors()) t.zero_grad();
    for (std::size_t i = begin; i < end; ++i) {
      const Tensor loss = loss_fn(order[i], ctx);
      const double value = loss.item();
      if (!std::isfinite(value)) throw DivergenceError(optimizer_.steps());
      total_loss += value;
      scale(loss, inv).backward();
    }
    const double norm = clip_grad_norm(optimizer_.tensors(), config_.grad_clip);
    if (!std::isfinite(norm)) throw DivergenceError(optimizer_.steps());
    const std::size_t step = std::min(optimizer_.steps(), total_steps_);
    if (on_step) {
      double sq = 0.0;
      for (const auto& t : optimizer_.tensors()) {
        for (double g : t.grad()) sq += g * g;
      }
      on_step(optimizer_.steps(), norm, std::sqrt(sq));
    }
    optimizer_.step(lr_schedule(step, total_steps_, lr_, config_.warmup_ratio));
  }
  return n == 0 ? 0.0 : total_loss / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Models

Vocabulary build_corpus_vocabulary(const Corpus& corpus) {
  std::vector<std::string> texts;
  for (const auto& doc : corpus.documents()) {
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      texts.push_back(prefixed_sentence(doc, i));
    }
  }
  for (const auto& c : corpus.claims()) texts.push_back(c.text);
  return Vocabulary::build(texts);
}

TrainedSelector make_selector(const TrainConfig& config,
                              std::shared_ptr<const Vocabulary> vocab) {
  config.validate();
  TrainedSelector out;
  const std::size_t vocab_size = vocab->size();
  out.model = std::make_shared<SentenceSelector>(out.params, "selector",
                                                 config.encoder_config(vocab_size),
                                                 std::move(vocab));
  Rng rng(config.seed);
  initialize_parameters(out.params, rng, config.init_stddev);
  out.record.kind = "selector";
  out.record.config = to_json(config);
  return out;
}

TrainedVerifier make_verifier(const TrainConfig& config,
                              std::shared_ptr<const Vocabulary> vocab) {
  config.validate();
  TrainedVerifier out;
  const std::size_t vocab_size = vocab->size();
  out.model = std::make_shared<MlaModel>(out.params, "mla", config.mla_config(vocab_size),
                                         std::move(vocab));
  Rng rng(config.seed);
  initialize_parameters(out.params, rng, config.init_stddev);
  out.params.set_trainable(out.model->aux_prefix(), config.aux_trainable());
  out.record.kind = "mla";
  out.record.config = to_json(config);
  return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TrainedSelector train_selector(const Corpus& corpus, std::span<const Claim> claims,
                               const TrainConfig& config,
                               std::shared_ptr<const Vocabulary> vocab) {
  const auto start = std::chrono::steady_clock::now();
  TrainedSelector run = make_selector(config, std::move(vocab));
  Rng rng(config.seed + 1);
  std::vector<const std::string*> claim_text;
  std::vector<SelectionExample> examples;
  auto resample = [&] {
    claim_text.clear();
    examples.clear();
    for (const auto& c : claims) {
      for (auto& ex : sample_training_set(c, corpus, rng)) {
        claim_text.push_back(&c.text);
        examples.push_back(std::move(ex));
      }
    }
  };
  resample();
  TrainConfig loop = config;
  loop.batch_size = config.selector_batch_size;
  Trainer trainer(run.params, loop, config.selector_lr,
                  steps_for(examples.size(), config.selector_epochs, loop));
  const SentenceSelector& model = *run.model;
  for (std::size_t epoch = 0; epoch < config.selector_epochs; ++epoch) {
    if (epoch > 0) resample();
    run.record.epoch_losses.push_back(trainer.run_epoch(
        examples.size(),
        [&](std::size_t i, const DropoutContext& ctx) {
          return selection_loss(*claim_text[i], examples[i], model, ctx);
        },
        rng));
  }
  run.record.steps = trainer.steps();
  run.record.seconds = seconds_since(start);
  return run;
}

std::vector<SelectionPrediction> predict_selection(const Corpus& corpus,
                                                   std::span<const Claim> claims,
                                                   const SentenceSelector& selector,
                                                   std::size_t m) {
  std::vector<SelectionPrediction> out;
  for (const auto& c : claims) {
    const auto candidates = retrieved_candidates(corpus, c.id);
    out.push_back({c.id, select_top_m(c.text, candidates, m, selector)});
  }
  return out;
}

std::vector<EvidenceSet> build_evidence_sets(const Corpus& corpus,
                                             std::span<const Claim> claims,
                                             std::span<const SelectionPrediction> predictions,
                                             std::size_t m, bool training) {
  std::map<std::int64_t, const SelectionPrediction*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.claim_id, &p);
  std::vector<EvidenceSet> out;
  for (const auto& c : claims) {
    auto it = by_id.find(c.id);
    const std::span<const ScoredSentence> ranked =
        it == by_id.end() ? std::span<const ScoredSentence>() : it->second->ranked;
    const auto gold = training ? true_evidence(c, corpus) : std::vector<Candidate>{};
    out.push_back(build_evidence_set(c, gold, ranked, m, training));
  }
  return out;
}

void warm_start_from_selector(ParamSet& verifier, const ParamSet& selector) {
  std::vector<std::string> bad;
  const std::pair<std::string, std::string> maps[] = {{"selector.encoder.", "mla.encoder."},
                                                      {"selector.head.", "mla.aux_head."}};
  for (auto& p : verifier.entries()) {
    for (const auto& [from, to] : maps) {
      if (!p.name.starts_with(to)) continue;
      const Parameter* src = selector.find(from + p.name.substr(to.size()));
      if (src == nullptr || src->value.shape() != p.value.shape()) {
        bad.push_back(p.name);
        continue;
      }
      std::copy(src->value.data().begin(), src->value.data().end(),
                p.value.mutable_data().begin());
    }
  }
  if (!bad.empty()) throw ValidationError("warm start: no matching selector tensor", std::move(bad));
}

TrainedVerifier train_verifier(std::span<const EvidenceSet> train_sets,
                               const TrainConfig& config,
                               std::shared_ptr<const Vocabulary> vocab,
                               const ParamSet* warm_start) {
  const auto start = std::chrono::steady_clock::now();
  TrainedVerifier run = make_verifier(config, std::move(vocab));
  if (config.warm_start && warm_start != nullptr) warm_start_from_selector(run.params, *warm_start);
  ClassWeights weights;
  if (config.use_class_weights) {
    std::array<std::size_t, kNumLabels> counts{};
    for (const auto& ev : train_sets) {
      if (!ev.y) throw ContractError("train_verifier: unlabeled training claim");
      ++counts[label_index(*ev.y)];
    }
    weights = compute_class_weights(counts);
  }
  Rng rng(config.seed + 2);
  Trainer trainer(run.params, config, config.lr,
                  steps_for(train_sets.size(), config.epochs, config));
  const MlaModel& model = *run.model;
  const double lambda = config.effective_lambda();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    run.record.epoch_losses.push_back(trainer.run_epoch(
        train_sets.size(),
        [&](std::size_t i, const DropoutContext& ctx) {
          return joint_loss(model.forward(train_sets[i], ctx), train_sets[i], weights, lambda);
        },
        rng));
  }
  run.record.steps = trainer.steps();
  run.record.seconds = seconds_since(start);
  return run;
}

std::vector<Verdict> predict_verdicts(const MlaModel& model,
                                      std::span<const EvidenceSet> sets) {
  std::vector<Verdict> out;
  out.reserve(sets.size());
  for (const auto& ev : sets) out.push_back(verify(model, ev));
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentData prepare_experiment(const Corpus& corpus, const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentData data;
  data.split = split_claims(corpus.claims(), config.heldout_fraction, config.seed);
  data.vocab = std::make_shared<const Vocabulary>(build_corpus_vocabulary(corpus));
  data.selector = train_selector(corpus, data.split.train, config, data.vocab);
  const auto train_pred =
      predict_selection(corpus, data.split.train, *data.selector.model, config.m);
  data.train_sets = build_evidence_sets(corpus, data.split.train, train_pred, config.m, true);
  const auto test_pred =
      predict_selection(corpus, data.split.heldout, *data.selector.model, config.m);
  data.test_sets = build_evidence_sets(corpus, data.split.heldout, test_pred, config.m, false);
  data.seconds = seconds_since(start);
  return data;
}

TrainedVerifier train_and_score(const ExperimentData& data, const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  TrainedVerifier verifier =
      train_verifier(data.train_sets, config, data.vocab, &data.selector.params);
  const auto verdicts = predict_verdicts(*verifier.model, data.test_sets);
  verifier.record.report = evaluate(data.split.heldout, verdicts, config.m);
  verifier.record.seconds = seconds_since(start);
  return verifier;
}

PipelineResult run_pipeline(const Corpus& corpus, const TrainConfig& config) {
  ExperimentData data = prepare_experiment(corpus, config);
  PipelineResult result;
  result.verifier = train_and_score(data, config);
  result.report = *result.verifier.record.report;
  result.selector = std::move(data.selector);
  return result;
}

std::vector<std::pair<std::string, TrainConfig>> ablation_grid(const TrainConfig& base) {
  std::vector<std::pair<std::string, TrainConfig>> grid;
  TrainConfig full = base;
  full.gate = GateStrategy::ValueOnly;
  full.use_token_attn = full.use_sent_attn = full.use_class_weights = full.joint = true;
  grid.emplace_back("full", full);
  auto variant = [&](const std::string& name, auto&& edit) {
    TrainConfig c = full;
    edit(c);
    grid.emplace_back(name, c);
  };
  variant("w/o token attn", [](TrainConfig& c) { c.use_token_attn = false; });
  variant("w/o sentence attn", [](TrainConfig& c) { c.use_sent_attn = false; });
  variant("w/o class weights", [](TrainConfig& c) { c.use_class_weights = false; });
  variant("w/o joint training", [](TrainConfig& c) { c.joint = false; });
  for (GateStrategy g : {GateStrategy::KeyOnly, GateStrategy::KeyAndValue,
                         GateStrategy::DotProductBias, GateStrategy::NoGate}) {
    variant("gate " + std::string(to_string(g)), [g](TrainConfig& c) { c.gate = g; });
  }
  return grid;
}

std::vector<AblationCell> run_ablation(const Corpus& corpus, const TrainConfig& base,
                                       const std::function<void(const AblationCell&)>& on_cell) {
  const ExperimentData data = prepare_experiment(corpus, base);
  std::vector<AblationCell> cells;
  for (auto& [name, config] : ablation_grid(base)) {
    AblationCell cell{name, config, train_and_score(data, config).record};
    if (on_cell) on_cell(cell);
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace mla
