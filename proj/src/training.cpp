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

#include "compcap/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "compcap/decoding.hpp"
#include "compcap/error.hpp"
#include "compcap/evaluation.hpp"
#include "json.hpp"

namespace compcap {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(margin >= 0.0)) throw ConfigError("margin must be >= 0");
  if (!(gradnorm_lr > 0.0)) throw ConfigError("gradnorm_lr must be positive");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
}

std::string content_key(std::string_view caption, const Lexicon& lex) {
  static constexpr char kPrefix[] = {'o', 'n', 'a', 'v', 'f'};
  std::string key;
  const TaggedCaption tc = tag_caption(caption, lex);
  for (const auto& tag : tc.tags) {
    const auto kind = tag.kind;
    if (kind != TaggedCaption::Kind::kNoun && kind != TaggedCaption::Kind::kAdjective &&
        kind != TaggedCaption::Kind::kVerb) {
      continue;
    }
    if (!key.empty()) key += ' ';
    key += kPrefix[static_cast<int>(kind)];
    key += std::to_string(tag.index);
  }
  return key;
}

namespace {

// Class ids of the closure of "same scene or same nonempty content key".
std::vector<int> negative_groups(std::span<const Example> batch) {
  std::vector<std::size_t> parent(batch.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const bool same = batch[i].scene == batch[j].scene ||
                        (!batch[i].content.empty() && batch[i].content == batch[j].content);
      if (same) parent[find(i)] = find(j);
    }
  }
  std::vector<int> group(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) group[i] = static_cast<int>(find(i));
  return group;
}

}  // namespace

JointLoss joint_loss(ad::Tape& t, const Bound& b, const ModelConfig& c, std::span<const Example> batch, double margin,
                     bool ranking, NegativeMode negatives) {
  const std::size_t n = batch.size();
  if (n == 0) throw DimensionError("joint_loss: empty batch");
  Tensor regions({n * c.R, c.I});
  std::vector<std::size_t> len(n);
  std::size_t longest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& r = *batch[i].regions;
    if (r.rows() != c.R || r.cols() != c.I) throw DimensionError("joint_loss: regions " + r.shape_string());
    std::copy(r.span().begin(), r.span().end(), regions.data() + i * c.R * c.I);
    len[i] = std::min(batch[i].tokens.size(), c.max_len);
    longest = std::max(longest, len[i]);
  }

  const ImageEncoding img = encode_images(t, b, c, t.constant(std::move(regions)), n, ranking);
  DecoderState state = zero_state(t, c, n);
  std::vector<ad::Var> h_steps;
  std::vector<std::size_t> ids(n), targets(n);
  std::vector<double> mask(n);
  ad::Var total;
  for (std::size_t s = 0; s <= longest; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& tok = batch[i].tokens;
      ids[i] = s == 0 ? kBos : (s <= len[i] ? tok[s - 1] : kPad);
      targets[i] = s < len[i] ? tok[s] : (s == len[i] ? kEos : kPad);
      mask[i] = s <= len[i] ? 1.0 : 0.0;
    }
    const StepOutput out = decoder_step(t, b, c, img, ids, state);
    h_steps.push_back(state.enc.h);
    const ad::Var nll = ad::neg_log_pick(t, out.probs, targets, mask);
    total = total.valid() ? ad::add(t, total, nll) : nll;
  }

  JointLoss loss;
  loss.gen = ad::scale(t, total, 1.0 / static_cast<double>(n));
  if (ranking) {
    const ad::Var s_star = ad::linear(t, ad::gather_steps(t, h_steps, len), b.W2);
    const ad::Var sims =
        ad::matmul(t, ad::l2_normalize_rows(t, img.v_star), ad::transpose(t, ad::l2_normalize_rows(t, s_star)));
    const std::vector<int> groups = negative_groups(batch);
    loss.rank = negatives == NegativeMode::kHardest ? ad::hard_negative_hinge(t, sims, margin, groups)
                                                    : ad::mean_negative_hinge(t, sims, margin, groups);
  }
  return loss;
}

double loss_gen(const std::vector<Tensor>& probs, const std::vector<std::vector<std::size_t>>& targets) {
  if (probs.size() != targets.size()) {
    throw DimensionError("loss_gen: " + std::to_string(probs.size()) + " probability sequences for " +
                         std::to_string(targets.size()) + " targets");
  }
  if (probs.empty()) throw DimensionError("loss_gen: empty batch");
  double total = 0.0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    if (probs[b].rows() != targets[b].size()) {
      throw DimensionError("loss_gen: sequence " + std::to_string(b) + " has " + std::to_string(probs[b].rows()) +
                           " steps but " + std::to_string(targets[b].size()) + " targets");
    }
    for (std::size_t s = 0; s < targets[b].size(); ++s) {
      if (targets[b][s] == kPad) continue;
      total += cross_entropy_step(probs[b].row(s), targets[b][s]);
    }
  }
  return total / static_cast<double>(probs.size());
}

double loss_rank(const Tensor& images, const Tensor& captions, double margin) {
  if (images.shape() != captions.shape()) {
    throw DimensionError("loss_rank: " + images.shape_string() + " images vs " + captions.shape_string() + " captions");
  }
  ad::Tape t;
  const ad::Var sims = ad::matmul(t, ad::l2_normalize_rows(t, t.constant(images)),
                                  ad::transpose(t, ad::l2_normalize_rows(t, t.constant(captions))));
  std::vector<int> group(images.rows());
  std::iota(group.begin(), group.end(), 0);
  return t.value(ad::hard_negative_hinge(t, sims, margin, group))[0];
}

GradNorm::GradNorm(double lr, double gamma)
    : w_("loss_weights", Tensor::vector({1.0, 1.0})), adam_({&w_}, optim::AdamConfig{lr}), gamma_(gamma) {}

void GradNorm::set_weights(const LossWeights& w) {
  weights_ = w;
  w_.value[0] = w.w_gen;
  w_.value[1] = w.w_rank;
}

void GradNorm::step(double loss_gen, double loss_rank, double norm_gen, double norm_rank) {
  if (loss_gen == 0.0 && loss_rank == 0.0) return;
  if (!weights_.initialized) {
    weights_.initial_gen = loss_gen;
    weights_.initial_rank = loss_rank;
    weights_.initialized = true;
  }
  if (!(weights_.initial_gen > 0.0) || !(weights_.initial_rank > 0.0)) return;

  const double w[2] = {w_.value[0], w_.value[1]};
  const double norm[2] = {norm_gen, norm_rank};
  const double ratio[2] = {loss_gen / weights_.initial_gen, loss_rank / weights_.initial_rank};
  const double mean_ratio = 0.5 * (ratio[0] + ratio[1]);
  if (!(mean_ratio > 0.0)) return;
  const double g_mean = 0.5 * (w[0] * norm[0] + w[1] * norm[1]);
  for (int i = 0; i < 2; ++i) {
    const double target = g_mean * std::pow(ratio[i] / mean_ratio, gamma_);
    const double diff = w[i] * norm[i] - target;
    const double sign = (diff > 0.0) - (diff < 0.0);
    w_.grad[i] = sign * norm[i];
  }
  adam_.step();
  w_.value[0] = std::max(w_.value[0], 1e-4);
  w_.value[1] = std::max(w_.value[1], 1e-4);
  const double scale = 2.0 / (w_.value[0] + w_.value[1]);
  w_.value[0] *= scale;
  w_.value[1] = 2.0 - w_.value[0];
  weights_.w_gen = w_.value[0];
  weights_.w_rank = w_.value[1];
}

std::string epoch_record_json(const EpochRecord& r, bool include_seconds) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["loss_gen"] = r.loss_gen;
  if (r.loss_rank) j["loss_rank"] = *r.loss_rank;
  j["w_gen"] = r.w_gen;
  j["w_rank"] = r.w_rank;
  j["grad_norm_pre_clip"] = r.grad_norm_pre_clip;
  j["val_bleu"] = r.val_bleu;
  if (include_seconds) j["seconds"] = r.seconds;
  return j.dump();
}

std::vector<Example> make_examples(const std::vector<SceneInstance>& dataset, const std::vector<std::int64_t>& scene_ids,
                                   const Vocabulary& vocab, const Lexicon* lex) {
  std::unordered_map<std::int64_t, const SceneInstance*> by_id;
  for (const auto& s : dataset) by_id[s.id] = &s;
  std::vector<Example> out;
  for (std::int64_t id : scene_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw SplitError("scene " + std::to_string(id) + " is not in the dataset");
    for (const auto& cap : it->second->captions) {
      out.push_back({id, &it->second->regions, vocab.encode(cap), lex ? content_key(cap, *lex) : std::string()});
    }
  }
  return out;
}

namespace {

double validation_bleu(ModelParams& p, const std::vector<const SceneInstance*>& scenes, const Vocabulary& vocab) {
  std::map<std::int64_t, std::string> candidates;
  CaptionSets references;
  constexpr std::size_t kChunk = 128;
  for (std::size_t at = 0; at < scenes.size(); at += kChunk) {
    std::vector<const Tensor*> regions;
    const std::size_t end = std::min(scenes.size(), at + kChunk);
    for (std::size_t i = at; i < end; ++i) regions.push_back(&scenes[i]->regions);
    const auto decoded = greedy_decode(regions, p, p.config.max_len);
    for (std::size_t i = at; i < end; ++i) {
      candidates[scenes[i]->id] = vocab.decode(decoded[i - at]);
      references[scenes[i]->id] = scenes[i]->captions;
    }
  }
  return bleu(candidates, references);
}

}  // namespace

TrainResult train(ModelParams init, const std::vector<SceneInstance>& dataset, const DatasetSplits& splits,
                  const Vocabulary& vocab, const Lexicon& lex, const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (splits.train.empty()) throw SplitError("cannot train on an empty train split");
  if (splits.val.empty() && !hooks.validate) throw SplitError("cannot early-stop without validation scenes");

  std::unordered_map<std::int64_t, const SceneInstance*> by_id;
  for (const auto& s : dataset) by_id[s.id] = &s;
  struct SceneExamples {
    std::vector<Example> captions;
  };
  std::vector<SceneExamples> train_scenes;
  for (std::int64_t id : splits.train) {
    train_scenes.push_back({make_examples(dataset, {id}, vocab, &lex)});
    if (train_scenes.back().captions.empty()) train_scenes.pop_back();
  }
  std::vector<const SceneInstance*> val_scenes;
  for (std::int64_t id : splits.val) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw SplitError("val scene " + std::to_string(id) + " is not in the dataset");
    val_scenes.push_back(it->second);
  }
  if (config.val_scenes > 0 && val_scenes.size() > config.val_scenes) val_scenes.resize(config.val_scenes);

  const bool ranking = init.config.ranking_enabled;
  TrainResult result;
  result.best = init;
  ModelParams params = std::move(init);
  std::vector<Parameter*> plist = params.parameters();
  optim::Adam adam(plist, optim::AdamConfig{config.lr});
  GradNorm gradnorm(config.gradnorm_lr, config.gamma);
  LossWeights fixed;
  fixed.w_gen = 1.0;
  fixed.w_rank = 0.0;

  std::mt19937_64 rng(config.seed);
  double best_bleu = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const std::size_t min_batch = ranking ? 2 : 1;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<Example> examples;
    for (auto& scene : train_scenes) {
      auto& caps = scene.captions;
      std::size_t take = caps.size();
      if (config.captions_per_epoch > 0 && config.captions_per_epoch < caps.size()) {
        take = config.captions_per_epoch;
        for (std::size_t i = 0; i < take; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, caps.size() - 1);
          std::swap(caps[i], caps[pick(rng)]);
        }
      }
      examples.insert(examples.end(), caps.begin(), caps.begin() + static_cast<std::ptrdiff_t>(take));
    }
    for (std::size_t i = examples.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(examples[i - 1], examples[pick(rng)]);
    }

    if (ranking && config.rank_warmup_epochs > 0 && epoch == config.rank_warmup_epochs + 1) gradnorm.rebase();

    EpochRecord rec;
    rec.epoch = epoch;
    double sum_gen = 0.0, sum_rank = 0.0, sum_norm = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t at = 0; at < examples.size();) {
        std::size_t end = std::min(examples.size(), at + config.batch_size);
        if (examples.size() - end < min_batch) end = examples.size();
        if (end - at < min_batch) break;
        const std::span<const Example> batch(examples.data() + at, end - at);
        at = end;

        optim::zero_grads(plist);
        ad::Tape tape;
        const Bound b = bind(tape, params);
        const NegativeMode mode =
            epoch <= config.rank_warmup_epochs ? NegativeMode::kMean : NegativeMode::kHardest;
        const JointLoss loss = joint_loss(tape, b, params.config, batch, config.margin, ranking, mode);
        const double lg = tape.value(loss.gen)[0];
        double lr_val = 0.0, pre = 0.0;
        if (ranking) {
          const LossWeights& w = gradnorm.weights();
          lr_val = tape.value(loss.rank)[0];
          tape.backward(loss.gen, w.w_gen);
          const Tensor gen_part = params.W1.grad;
          tape.backward(loss.rank, w.w_rank);
          double ng = 0.0, nr = 0.0;
          for (std::size_t i = 0; i < gen_part.size(); ++i) {
            const double r = params.W1.grad[i] - gen_part[i];
            ng += gen_part[i] * gen_part[i];
            nr += r * r;
          }
          ng = std::sqrt(ng) / w.w_gen;
          nr = std::sqrt(nr) / w.w_rank;
          pre = optim::clip_global_norm(plist, config.clip_norm);
          adam.step();
          if (config.gradnorm) gradnorm.step(lg, lr_val, ng, nr);
        } else {
          tape.backward(loss.gen);
          pre = optim::clip_global_norm(plist, config.clip_norm);
          adam.step();
        }
        if (!std::isfinite(pre)) throw NumericError("non-finite gradient norm");
        if (hooks.on_batch) {
          hooks.on_batch(optim::global_norm(plist), ranking ? gradnorm.weights() : fixed);
        }
        sum_gen += lg;
        sum_rank += lr_val;
        sum_norm += pre;
        ++batches;
      }
    } catch (const NumericError& e) {
      result.diverged = true;
      result.divergence = "epoch " + std::to_string(epoch) + ": " + e.what();
      if (hooks.progress) *hooks.progress << "training diverged (" << result.divergence << "), keeping epoch "
                                          << result.best_epoch << '\n';
      break;
    }
    if (batches == 0) throw SplitError("train split yields no batch");

    const double inv = 1.0 / static_cast<double>(batches);
    rec.loss_gen = sum_gen * inv;
    if (ranking) rec.loss_rank = sum_rank * inv;
    const LossWeights& w = ranking ? gradnorm.weights() : fixed;
    rec.w_gen = w.w_gen;
    rec.w_rank = w.w_rank;
    rec.grad_norm_pre_clip = sum_norm * inv;
    rec.val_bleu = hooks.validate ? hooks.validate(params, epoch) : validation_bleu(params, val_scenes, vocab);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(rec);
    if (hooks.log) *hooks.log << epoch_record_json(rec) << '\n';
    if (hooks.progress) {
      *hooks.progress << "epoch " << epoch << " loss_gen " << rec.loss_gen;
      if (rec.loss_rank) *hooks.progress << " loss_rank " << *rec.loss_rank;
      *hooks.progress << " w " << rec.w_gen << "/" << rec.w_rank << " gn " << rec.grad_norm_pre_clip << " val_bleu " << rec.val_bleu << " (" << rec.seconds << " s)\n";
    }

    if (rec.val_bleu > best_bleu) {
      best_bleu = rec.val_bleu;
      result.best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.best_val_bleu = std::isfinite(best_bleu) ? best_bleu : 0.0;
  return result;
}

}  // namespace compcap
