#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "brepmatch/model_params.hpp"
#include "brepmatch/rng.hpp"
#include "brepmatch/scorer.hpp"
#include "brepmatch/synth/dataset.hpp"

namespace brepmatch {

struct TrainConfig {
  double w = 2.0;
  int epochs = 200;
  double partial_fraction = 0.5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  std::uint64_t seed = 0;
  std::optional<std::size_t> negative_cap;
  ModelConfig model;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"w", w}, {"epochs", epochs}, {"partial_fraction", partial_fraction},
                        {"learning_rate", learning_rate}, {"beta1", beta1}, {"beta2", beta2},
                        {"batch_size", batch_size}, {"seed", seed}, {"model", model.to_json()}};
    j["negative_cap"] = negative_cap ? nlohmann::json(*negative_cap) : nlohmann::json(nullptr);
    return j;
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  int best_epoch = -1;  // -1: the initial parameters were never beaten
  double best_val_loss = 0.0;
  std::vector<EpochStats> history;
};

// A (original, updated, truth) triple with its parameter-independent cache.
struct TrainItem {
  const PairSample* sample = nullptr;
  PairContext ctx;
};

inline std::vector<TrainItem> make_items(const std::vector<const PairSample*>& samples) {
  std::vector<TrainItem> items;
  items.reserve(samples.size());
  for (const PairSample* s : samples) items.push_back({s, make_context(*s->orig, *s->upd)});
  return items;
}

// Random subset of round-down(fraction * |truth|) ground-truth pairs.
inline Matching partial_prior(const Matching& truth, double fraction, std::uint64_t seed) {
  std::vector<MatchPair> pairs = truth.sorted_pairs();
  Rng rng(seed);
  rng.shuffle(pairs);
  const auto keep = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(pairs.size())));
  pairs.resize(keep);
  std::sort(pairs.begin(), pairs.end(), [](const MatchPair& a, const MatchPair& b) { return a.orig < b.orig; });
  Matching m;
  for (const auto& p : pairs) m.add(p.orig, p.upd, Provenance::GroundTruth);
  return m;
}

// Candidates for training: all unmatched same-kind pairs, optionally capped by
// keeping every positive and a seeded subsample of negatives.
inline std::vector<Candidate> training_candidates(const PairContext& ctx, const Matching& truth, const Matching& prior,
                                                  std::optional<std::size_t> cap, std::uint64_t seed) {
  std::vector<Candidate> all = unmatched_candidates(*ctx.bo, *ctx.bu, prior);
  if (!cap || all.size() <= *cap) return all;
  std::vector<Candidate> pos, neg;
  for (const auto& c : all) {
    const auto u = truth.upd_of(c.first);
    (u && *u == c.second ? pos : neg).push_back(c);
  }
  Rng rng(seed);
  rng.shuffle(neg);
  neg.resize(std::min(neg.size(), *cap > pos.size() ? *cap - pos.size() : std::size_t{0}));
  pos.insert(pos.end(), neg.begin(), neg.end());
  std::sort(pos.begin(), pos.end());
  return pos;
}

// Mean weighted cross-entropy of one item over `cand`, recorded on `t`.
inline std::optional<ad::Var> item_loss(ad::Tape& t, const TrainItem& it, const std::vector<Candidate>& cand, const ad::EdgeList& edges,
                                        const TapeParams& P, double w, double scale) {
  if (cand.empty()) return std::nullopt;
  std::vector<double> labels(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const auto u = it.sample->truth.upd_of(cand[i].first);
    labels[i] = u && *u == cand[i].second ? 1.0 : 0.0;
  }
  const EmbeddingVars eo = encode(t, it.ctx.to, it.ctx.fo, P);
  const EmbeddingVars eu = encode(t, it.ctx.tu, it.ctx.fu, P);
  const ad::Var z = joint_logits(t, it.ctx, eo, eu, edges, cand, P);
  return t.weighted_bce(z, std::move(labels), w, scale / static_cast<double>(cand.size()));
}

// Loss of one item under a fixed prior; adds gradients into `grads` if given.
inline double item_value(const TrainItem& it, const Matching& prior, const std::vector<Candidate>& cand,
                         const ModelParams& p, ModelParams* grads, double w, double scale) {
  ad::Tape t;
  TapeParams P(t, p, grads);
  const ad::EdgeList edges = joint_edges(it.ctx, prior);
  const auto l = item_loss(t, it, cand, edges, P, w, scale);
  if (!l) return 0.0;
  const double v = t.value(*l)(0, 0);
  if (!std::isfinite(v)) throw NonFiniteLoss("loss is not finite on " + it.sample->upd_id);
  if (grads) t.backward(*l);
  return v;
}

// Validation priors are drawn once per item from a seed that ignores epochs.
struct ValidationSet {
  std::vector<TrainItem> items;
  std::vector<Matching> priors;
  std::vector<std::vector<Candidate>> candidates;
};

inline ValidationSet make_validation(const std::vector<const PairSample*>& samples, const TrainConfig& cfg) {
  ValidationSet v;
  v.items = make_items(samples);
  for (std::size_t i = 0; i < v.items.size(); ++i) {
    const std::uint64_t s = mix_seed(mix_seed(cfg.seed, 0x7a11d), i);
    v.priors.push_back(partial_prior(v.items[i].sample->truth, cfg.partial_fraction, s));
    v.candidates.push_back(training_candidates(v.items[i].ctx, v.items[i].sample->truth, v.priors.back(), cfg.negative_cap, mix_seed(s, 1)));
  }
  return v;
}

inline double validation_loss(const ValidationSet& v, const ModelParams& p, double w) {
  if (v.items.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < v.items.size(); ++i) total += item_value(v.items[i], v.priors[i], v.candidates[i], p, nullptr, w, 1.0);
  return total / static_cast<double>(v.items.size());
}

class Adam {
public:
  Adam(const ModelParams& p, const TrainConfig& cfg) : cfg_(cfg), m_(p.zeros_like()), v_(p.zeros_like()) {}

  void step(ModelParams& p, const ModelParams& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
      auto m = m_.tensors[i].array();
      auto v = v_.tensors[i].array();
      const auto gi = g.tensors[i].array();
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gi;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gi.square();
      p.tensors[i].array() -= cfg_.learning_rate * (m / c1) / ((v / c2).sqrt() + cfg_.adam_eps);
    }
  }

private:
  TrainConfig cfg_;
  ModelParams m_, v_;
  int t_ = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Minibatch training with fresh partial priors every epoch; returns the
// parameters with the lowest validation loss (the initial parameters count
// as epoch -1). Without a validation set the final parameters are returned.
inline TrainResult train(const std::vector<const PairSample*>& train_set, const std::vector<const PairSample*>& val_set,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  if (train_set.empty()) throw EmptyDataset("no training samples");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw ValidationError("bad training configuration");
  const std::vector<TrainItem> items = make_items(train_set);
  const ValidationSet val = make_validation(val_set, cfg);
  ModelParams p = init_params(cfg.model, cfg.seed);
  Adam opt(p, cfg);
  TrainResult r;
  r.params = p;
  r.best_val_loss = validation_loss(val, p, cfg.w);
  std::vector<std::size_t> order(items.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(mix_seed(cfg.seed, 0x5bff), static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const double scale = 1.0 / static_cast<double>(e - b);
      ModelParams g = p.zeros_like();
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t idx = order[k];
        const TrainItem& it = items[idx];
        const std::uint64_t s = mix_seed(mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)), idx), 0xe90c);
        const Matching prior = partial_prior(it.sample->truth, cfg.partial_fraction, s);
        const auto cand = training_candidates(it.ctx, it.sample->truth, prior, cfg.negative_cap, mix_seed(s, 1));
        epoch_loss += item_value(it, prior, cand, p, &g, cfg.w, scale) / scale;
      }
      opt.step(p, g);
      if (!p.all_finite()) throw NonFiniteLoss("parameters diverged in epoch " + std::to_string(epoch));
    }
    EpochStats st{epoch, epoch_loss / static_cast<double>(items.size()), validation_loss(val, p, cfg.w)};
    r.history.push_back(st);
    if (val.items.empty() || st.val_loss < r.best_val_loss) {
      r.best_val_loss = st.val_loss;
      r.best_epoch = epoch;
      r.params = p;
    }
    if (on_epoch) on_epoch(st);
  }
  return r;
}

// Largest relative discrepancy between reverse-mode and central-difference
// gradients of one sample's loss over `n_checks` seeded parameter entries.
inline double grad_check(const ModelParams& p, const PairSample& sample, double epsilon, std::uint64_t seed = 0,
                         std::size_t n_checks = 200, double w = 2.0) {
  const TrainItem it{&sample, make_context(*sample.orig, *sample.upd)};
  const Matching prior = partial_prior(sample.truth, 0.5, mix_seed(seed, 0x9c));
  const auto cand = unmatched_candidates(*sample.orig, *sample.upd, prior);
  ModelParams g = p.zeros_like();
  item_value(it, prior, cand, p, &g, w, 1.0);
  std::vector<std::pair<std::size_t, Eigen::Index>> slots;
  for (std::size_t i = 0; i < p.tensors.size(); ++i)
    for (Eigen::Index k = 0; k < p.tensors[i].size(); ++k) slots.emplace_back(i, k);
  Rng rng(seed);
  rng.shuffle(slots);
  slots.resize(std::min(slots.size(), n_checks));
  ModelParams q = p;
  double worst = 0.0;
  for (const auto& [i, k] : slots) {
    double& x = q.tensors[i].data()[k];
    const double x0 = x;
    x = x0 + epsilon;
    const double up = item_value(it, prior, cand, q, nullptr, w, 1.0);
    x = x0 - epsilon;
    const double down = item_value(it, prior, cand, q, nullptr, w, 1.0);
    x = x0;
    const double fd = (up - down) / (2.0 * epsilon);
    const double ad = g.tensors[i].data()[k];
    worst = std::max(worst, std::abs(ad - fd) / std::max(1e-8, std::abs(ad) + std::abs(fd)));
  }
  return worst;
}

}  // namespace brepmatch
