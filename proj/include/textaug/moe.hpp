#pragma once

#include <string>
#include <vector>

#include "textaug/decode.hpp"
#include "textaug/errors.hpp"
#include "textaug/seq2seq.hpp"

namespace textaug {

/// Hard-assignment mixture of experts over a shared transformer. Each
/// expert is a learned embedding added to the decoder's start-of-sequence
/// input, so the K experts condition generation differently while sharing
/// every other weight.
struct MoEConfig {
  int num_experts = 10;
  int expert_embedding_dim = 0;  // 0 means "use model_dim"

  void validate(int model_dim = 0) const {
    if (num_experts < 1) throw ConfigError("moe: num_experts must be >= 1");
    if (expert_embedding_dim != 0 && model_dim != 0 &&
        expert_embedding_dim != model_dim)
      throw ConfigError("moe: expert_embedding_dim must match model_dim");
  }
};

inline const char* kExpertTensor = "moe.experts";

struct MoEModel {
  Seq2SeqModel seq2seq;
  MoEConfig config;

  Mat expert_row(int k) const {
    const Mat& table = seq2seq.params.tensors.at(kExpertTensor);
    if (k < 0 || k >= table.rows()) throw InputError("moe: expert index out of range");
    return table.row(k);
  }
};

/// Mean negative log-likelihood of (tgt | src) under expert k.
inline double expert_nll(const MoEModel& model, const ParallelPair& pair, int k) {
  auto enc = detail::encode_pair(model.seq2seq.codec, pair,
                                 model.seq2seq.params.config.max_len);
  Tape tape;
  auto vars = leaf_all(tape, model.seq2seq.params.tensors);
  TransformerRunOpts opts;
  opts.expert_row = tape.slice_rows(vars.at(kExpertTensor), k, 1);
  Var loss = seq2seq_loss(tape, vars, model.seq2seq.params.config, enc.src,
                          enc.tgt_in, enc.tgt_out, opts);
  return tape.value(loss)(0, 0);
}

/// Hard E-step: the expert with minimal loss on the pair; ties go to the
/// lowest index. Deterministic for fixed parameters.
inline int moe_estep(const MoEModel& model, const ParallelPair& pair) {
  int best = 0;
  double best_nll = expert_nll(model, pair, 0);
  for (int k = 1; k < model.config.num_experts; ++k) {
    const double nll = expert_nll(model, pair, k);
    if (nll < best_nll) {
      best_nll = nll;
      best = k;
    }
  }
  return best;
}

struct MoETrainConfig : SeqTrainConfig {
  /// Epochs with round-robin expert assignment before hard EM takes over,
  /// so every expert sees gradient before the first argmin step.
  int burn_in_epochs = 1;
  double expert_init_scale = 0.5;
};

struct TrainedMoE {
  MoEModel model;
  SeqTrainHistory history;
};

/// Hard-EM training: E-step picks the best expert per pair, M-step runs a
/// gradient step on that expert's conditioning (and the shared weights).
inline TrainedMoE train_moe(const std::vector<ParallelPair>& pairs,
                            TransformerConfig config, const MoEConfig& moe_config,
                            const BpeCodec& codec, const MoETrainConfig& hyper) {
  if (pairs.empty()) throw InputError("train_moe: empty corpus");
  hyper.validate();
  moe_config.validate(config.model_dim);
  config.src_vocab = codec.vocab.size();
  config.tgt_vocab = codec.vocab.size();
  config.validate();

  TrainedMoE result;
  result.model.config = moe_config;
  result.model.seq2seq.codec = codec;
  result.model.seq2seq.params = init_params(config, derive_seed(hyper.seed, 1));
  {
    Rng expert_rng(derive_seed(hyper.seed, 3));
    result.model.seq2seq.params.tensors[kExpertTensor] = detail::normal_init(
        expert_rng, moe_config.num_experts, config.model_dim, hyper.expert_init_scale);
  }
  TransformerParams& params = result.model.seq2seq.params;

  std::vector<detail::EncodedPair> encoded;
  for (const auto& p : pairs)
    encoded.push_back(detail::encode_pair(codec, p, config.max_len));

  Rng rng(derive_seed(hyper.seed, 0x40e));
  std::vector<std::size_t> order(encoded.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t holdout_n = static_cast<std::size_t>(
      std::floor(hyper.holdout_fraction * static_cast<double>(encoded.size())));
  if (encoded.size() < 2) holdout_n = 0;
  std::vector<detail::EncodedPair> holdout, train;
  std::vector<ParallelPair> train_pairs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < holdout_n) {
      holdout.push_back(encoded[order[i]]);
    } else {
      train.push_back(encoded[order[i]]);
      train_pairs.push_back(pairs[order[i]]);
    }
  }
  if (train.empty()) {
    std::swap(train, holdout);
    for (const auto& p : pairs) train_pairs.push_back(p);
  }

  result.history.holdout_ce.push_back(detail::mean_holdout_ce(params, holdout));

  Adam adam({.lr = hyper.lr, .clip_norm = hyper.clip_norm});
  Rng dropout_rng(derive_seed(hyper.seed, 2));
  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(idx);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < idx.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t stop =
          std::min(idx.size(), start + static_cast<std::size_t>(hyper.batch_size));

      // E-step (or round-robin during burn-in)
      std::vector<int> assignment(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        if (epoch < hyper.burn_in_epochs)
          assignment[i - start] =
              static_cast<int>(idx[i] % static_cast<std::size_t>(moe_config.num_experts));
        else
          assignment[i - start] = moe_estep(result.model, train_pairs[idx[i]]);
      }

      // M-step on the assigned experts
      Tape tape;
      auto vars = leaf_all(tape, params.tensors);
      TransformerRunOpts opts;
      opts.training = true;
      opts.dropout_rng = &dropout_rng;
      std::vector<Var> losses;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& pair = train[idx[i]];
        TransformerRunOpts pair_opts = opts;
        pair_opts.expert_row =
            tape.slice_rows(vars.at(kExpertTensor), assignment[i - start], 1);
        losses.push_back(seq2seq_loss(tape, vars, config, pair.src, pair.tgt_in,
                                      pair.tgt_out, pair_opts));
      }
      Var batch_loss = tape.mean_scalars(losses);
      const double loss_value = tape.value(batch_loss)(0, 0);
      if (!std::isfinite(loss_value))
        throw TrainingError("moe training diverged at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches));
      tape.backward(batch_loss);
      adam.step(params.tensors, collect_grads(tape, vars));
      epoch_loss += loss_value;
      ++batches;
    }
    result.history.train_ce.push_back(epoch_loss / std::max<std::size_t>(1, batches));
    result.history.holdout_ce.push_back(detail::mean_holdout_ce(params, holdout));
  }
  return result;
}

/// One output per expert, in expert order. Duplicates are kept here; the
/// augmentation layer decides whether to deduplicate.
inline std::vector<TokenSeq> moe_generate(const MoEModel& model, const TokenSeq& sentence,
                                          const DecodeStrategy& strategy) {
  std::vector<TokenSeq> outputs;
  outputs.reserve(static_cast<std::size_t>(model.config.num_experts));
  for (int k = 0; k < model.config.num_experts; ++k) {
    const Mat row = model.expert_row(k);
    outputs.push_back(translate(model.seq2seq, sentence, strategy, &row));
  }
  return outputs;
}

/// Round-trip paraphrasing: pivot translation followed by the K-expert
/// reverse model. Returns exactly K candidates (possibly with duplicates).
inline std::vector<TokenSeq> paraphrase(const Seq2SeqModel& fwd, const MoEModel& moe_bwd,
                                        const TokenSeq& sentence,
                                        const DecodeStrategy& fwd_strategy,
                                        const DecodeStrategy& bwd_strategy) {
  if (sentence.empty())
    return std::vector<TokenSeq>(static_cast<std::size_t>(moe_bwd.config.num_experts));
  TokenSeq pivot = translate(fwd, sentence, fwd_strategy);
  return moe_generate(moe_bwd, pivot, bwd_strategy);
}

}  // namespace textaug
