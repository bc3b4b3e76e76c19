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

// Optimization regimen and experiment drivers: configuration, learning-rate
// schedule, adaptive-moment optimizer, global-norm clipping, the selector and
// verifier training loops, the end-to-end pipeline, and the ablation grid.

#ifndef MLA_TRAINING_HPP_
#define MLA_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mla/attention.hpp"
#include "mla/corpus.hpp"
#include "mla/encoder.hpp"
#include "mla/evaluation.hpp"
#include "mla/params.hpp"
#include "mla/selection.hpp"
#include "mla/veracity.hpp"

namespace mla {

struct TrainConfig {
  // Model shape.
  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t depth = 2;
  std::size_t max_len = 32;
  bool pad_to_max_len = false;
  std::size_t m = 5;

  // Optimization.
  std::size_t batch_size = 32;
  std::size_t selector_batch_size = 32;
  // Mini-batches whose gradients are summed before one update.
  std::size_t grad_accumulation = 1;
  double lr = 1e-3;
  double selector_lr = 1e-3;
  double warmup_ratio = 0.06;
  double grad_clip = 1.0;
  std::size_t epochs = 3;
  std::size_t selector_epochs = 2;
  double lambda = 1.0;
  double dropout = 0.1;
  double init_stddev = 0.02;
  std::uint64_t seed = 2021;
  double heldout_fraction = 0.2;

  // Ablation switches.
  GateStrategy gate = GateStrategy::ValueOnly;
  bool use_token_attn = true;
  bool use_sent_attn = true;
  bool use_class_weights = true;
  bool joint = true;
  bool detach_gate = false;

  // Copy the trained selector's encoder and head into the verifier's encoder
  // and auxiliary head before verifier training.
  bool warm_start = false;

  // Throws ValidationError naming every out-of-range field.
  void validate() const;
  // The auxiliary head only learns when its loss term is on.
  bool aux_trainable() const { return joint && lambda > 0.0; }
  double effective_lambda() const { return joint ? lambda : 0.0; }

  EncoderConfig encoder_config(std::size_t vocab_size) const;
  MlaConfig mla_config(std::size_t vocab_size) const;
};

nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j);
TrainConfig load_config(const std::filesystem::path& path);

// Linear ramp from 0 to lr over W = ceil(warmup_ratio * total) steps, then
// linear decay to 0 at total.
double lr_schedule(std::size_t step, std::size_t total, double lr, double warmup_ratio);

// Scales every gradient so the global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(std::span<Tensor> tensors, double max_norm);

// Per-parameter first/second moment estimates with bias correction.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Tensor> tensors, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  void step(double lr);
  std::size_t steps() const { return t_; }
  std::span<Tensor> tensors() { return tensors_; }

 private:
  std::vector<Tensor> tensors_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// Only parameters marked trainable take part in differentiation.
std::vector<Tensor> trainable_tensors(ParamSet& params);

struct RunRecord {
  std::string kind;  // "selector" or "mla"
  nlohmann::json config;
  std::vector<double> epoch_losses;
  std::optional<EvalReport> report;
  std::size_t steps = 0;
  double seconds = 0.0;
};
nlohmann::json to_json(const RunRecord& record);

// Generic mini-batch loop. loss_fn(i, dropout) returns the loss of example i.
// Each step averages the batch loss, clips, and applies one optimizer update.
// Throws DivergenceError at the first non-finite loss.
class Trainer {
 public:
  Trainer(ParamSet& params, const TrainConfig& config, double lr,
          std::size_t total_steps);
  // One pass over n examples in a shuffled order. Returns the mean loss.
  double run_epoch(std::size_t n,
                   const std::function<Tensor(std::size_t, const DropoutContext&)>& loss_fn,
                   Rng& rng);
  std::size_t steps() const { return optimizer_.steps(); }
  // Optional per-step observer: (step, pre-clip norm, post-clip norm).
  std::function<void(std::size_t, double, double)> on_step;

 private:
  TrainConfig config_;
  double lr_;
  std::size_t total_steps_;
  AdamOptimizer optimizer_;
};

std::size_t steps_for(std::size_t n_examples, std::size_t epochs, const TrainConfig& config);

Vocabulary build_corpus_vocabulary(const Corpus& corpus);

struct TrainedSelector {
  ParamSet params;
  std::shared_ptr<SentenceSelector> model;
  RunRecord record;
};

struct TrainedVerifier {
  ParamSet params;
  std::shared_ptr<MlaModel> model;
  RunRecord record;
};

// Fresh, initialized models.
TrainedSelector make_selector(const TrainConfig& config,
                              std::shared_ptr<const Vocabulary> vocab);
TrainedVerifier make_verifier(const TrainConfig& config,
                              std::shared_ptr<const Vocabulary> vocab);

TrainedSelector train_selector(const Corpus& corpus, std::span<const Claim> claims,
                               const TrainConfig& config,
                               std::shared_ptr<const Vocabulary> vocab);

// Top-M selector output for each claim, over its retrieved documents.
std::vector<SelectionPrediction> predict_selection(const Corpus& corpus,
                                                   std::span<const Claim> claims,
                                                   const SentenceSelector& selector,
                                                   std::size_t m);

// One evidence set per claim, aligned with predictions by claim id.
std::vector<EvidenceSet> build_evidence_sets(const Corpus& corpus,
                                             std::span<const Claim> claims,
                                             std::span<const SelectionPrediction> predictions,
                                             std::size_t m, bool training);

// warm_start, if given, is a trained selector's parameter set; it is used
// only when config.warm_start is set.
TrainedVerifier train_verifier(std::span<const EvidenceSet> train_sets,
                               const TrainConfig& config,
                               std::shared_ptr<const Vocabulary> vocab,
                               const ParamSet* warm_start = nullptr);

// Copies selector.encoder.* and selector.head.* into mla.encoder.* and the
// auxiliary head. Throws ValidationError on a missing or misshapen tensor.
void warm_start_from_selector(ParamSet& verifier, const ParamSet& selector);

std::vector<Verdict> predict_verdicts(const MlaModel& model,
                                      std::span<const EvidenceSet> sets);

// Held-out split, trained selector, and the evidence sets built from its
// rankings. Verifier variants trained on the same data share all of it.
struct ExperimentData {
  TrainedSelector selector;
  ClaimSplit split;
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<EvidenceSet> train_sets;
  std::vector<EvidenceSet> test_sets;
  double seconds = 0.0;
};

ExperimentData prepare_experiment(const Corpus& corpus, const TrainConfig& config);
// Trains a verifier on data.train_sets and scores data.test_sets; the report
// is stored in the returned run record.
TrainedVerifier train_and_score(const ExperimentData& data, const TrainConfig& config);

struct PipelineResult {
  TrainedSelector selector;
  TrainedVerifier verifier;
  EvalReport report;
};

// Splits claims, trains the selector, selects evidence, trains the verifier,
// and scores the held-out claims.
PipelineResult run_pipeline(const Corpus& corpus, const TrainConfig& config);

struct AblationCell {
  std::string name;
  TrainConfig config;
  RunRecord record;
};

// The nine-run grid: full model, each component removed in turn, and the
// four alternative gate strategies. All cells share one trained selector.
std::vector<std::pair<std::string, TrainConfig>> ablation_grid(const TrainConfig& base);
std::vector<AblationCell> run_ablation(
    const Corpus& corpus, const TrainConfig& base,
    const std::function<void(const AblationCell&)>& on_cell = {});

}  // namespace mla

#endif  // MLA_TRAINING_HPP_
