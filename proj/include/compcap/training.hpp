// Copyright 2026 The Compcap Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "compcap/lexicon.hpp"
#include "compcap/model.hpp"
#include "compcap/optim.hpp"
#include "compcap/scenes.hpp"
#include "compcap/splits.hpp"
#include "compcap/vocab.hpp"

namespace compcap {

struct TrainConfig {
  std::size_t batch_size = 100;
  double lr = 1e-4;
  double clip_norm = 10.0;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  double margin = 0.2;
  double gradnorm_lr = 0.01;
  double gamma = 2.5;
  /// false keeps w_gen = w_rank = 1.
  bool gradnorm = true;
  /// Epochs at the start that average the ranking hinge over all negatives
  /// before switching to the hardest one.
  std::size_t rank_warmup_epochs = 0;
  /// Captions drawn (without replacement) per training scene and epoch;
  /// 0 uses all of them.
  std::size_t captions_per_epoch = 0;
  /// Validation scenes decoded for early stopping; 0 uses all.
  std::size_t val_scenes = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One (image, caption) training pair. `tokens` holds word ids without BOS/EOS.
struct Example {
  std::int64_t scene = 0;
  const Tensor* regions = nullptr;
  std::vector<std::size_t> tokens;
  /// Content words of the caption as lexicon concepts; see content_key.
  std::string content;
};

/// Lexicon concepts of a caption in order ("n3 a1 v2"), so that synonyms and
/// function words do not distinguish captions. Empty when nothing is known.
std::string content_key(std::string_view caption, const Lexicon& lex);

struct JointLoss {
  ad::Var gen;   // mean over the batch of summed token cross-entropy
  ad::Var rank;  // hard-negative hinge; invalid when ranking is off
};

/// Teacher-forced forward pass of a batch: the decoder reads [BOS, w1..wn]
/// and predicts [w1..wn, EOS]; s* is the encoder state after w_n. Captions
/// longer than max_len are cut to max_len words. In the ranking loss, pairs
/// that share a scene or a nonempty content key are not negatives of each
/// other.
enum class NegativeMode { kHardest, kMean };

JointLoss joint_loss(ad::Tape& t, const Bound& b, const ModelConfig& c, std::span<const Example> batch,
                     double margin, bool ranking, NegativeMode negatives = NegativeMode::kHardest);

/// Mean over the batch of -sum_t log p_t(target_t), skipping PAD targets.
/// probs[b] is [T_b x V] and targets[b] has T_b entries.
double loss_gen(const std::vector<Tensor>& probs, const std::vector<std::vector<std::size_t>>& targets);

/// Hard-negative hinge between rows of `images` and `captions` (pair i is
/// row i of both), using cosine similarity.
double loss_rank(const Tensor& images, const Tensor& captions, double margin);

struct LossWeights {
  double w_gen = 1.0;
  double w_rank = 1.0;
  double initial_gen = 0.0;
  double initial_rank = 0.0;
  bool initialized = false;
};

/// Adaptive loss weighting on the gradient norms at one shared layer.
/// Weights are updated by Adam on |G_i - target_i| with G_i = w_i * norm_i.
class GradNorm {
 public:
  GradNorm(double lr, double gamma);
  GradNorm(const GradNorm&) = delete;
  GradNorm& operator=(const GradNorm&) = delete;

  /// `norm_gen` and `norm_rank` are the unweighted gradient norms of each loss
  /// at the shared layer. The first call records the initial losses.
  void step(double loss_gen, double loss_rank, double norm_gen, double norm_rank);
  /// The next step records the initial losses again; used when the ranking
  /// objective changes form after warm-up. Weights are kept.
  void rebase() { weights_.initialized = false; }

  const LossWeights& weights() const { return weights_; }
  void set_weights(const LossWeights& w);

 private:
  LossWeights weights_;
  Parameter w_;
  optim::Adam adam_;
  double gamma_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_gen = 0.0;
  std::optional<double> loss_rank;
  double w_gen = 1.0;
  double w_rank = 0.0;
  double grad_norm_pre_clip = 0.0;
  double val_bleu = 0.0;
  double seconds = 0.0;
};

std::string epoch_record_json(const EpochRecord& r, bool include_seconds = true);

struct TrainResult {
  ModelParams best;
  std::size_t best_epoch = 0;
  double best_val_bleu = 0.0;
  std::vector<EpochRecord> log;
  bool diverged = false;
  std::string divergence;
};

struct TrainHooks {
  /// Replaces validation BLEU (greedy decoding of the val scenes).
  std::function<double(ModelParams&, std::size_t epoch)> validate;
  /// Receives every batch's post-clip gradient norm and loss weights.
  std::function<void(double post_clip_norm, const LossWeights&)> on_batch;
  /// One JSON line per epoch.
  std::ostream* log = nullptr;
  /// Status lines (epoch summaries) for humans.
  std::ostream* progress = nullptr;
};

/// Builds training examples from the captions of `scene_ids`; content keys
/// are filled when a lexicon is given.
std::vector<Example> make_examples(const std::vector<SceneInstance>& dataset, const std::vector<std::int64_t>& scene_ids,
                                   const Vocabulary& vocab, const Lexicon* lex = nullptr);

/// Trains `init` on the train split, early-stopping on validation BLEU, and
/// returns the best parameters seen.
TrainResult train(ModelParams init, const std::vector<SceneInstance>& dataset, const DatasetSplits& splits,
                  const Vocabulary& vocab, const Lexicon& lex, const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace compcap
