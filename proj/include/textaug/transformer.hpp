#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "textaug/autodiff.hpp"
#include "textaug/errors.hpp"
#include "textaug/rng.hpp"

namespace textaug {

/// Encoder-decoder transformer configuration. The paper-shaped setup uses
/// six blocks on each side; tests run two-block miniatures.
struct TransformerConfig {
  int num_blocks = 6;
  int model_dim = 64;
  int num_heads = 4;
  int ff_dim = 128;
  int src_vocab = 0;
  int tgt_vocab = 0;
  int max_len = 64;
  double dropout = 0.0;

  int head_dim() const { return model_dim / num_heads; }

  void validate() const {
    if (num_blocks <= 0 || model_dim <= 0 || num_heads <= 0 || ff_dim <= 0 ||
        src_vocab <= 0 || tgt_vocab <= 0 || max_len <= 0)
      throw ConfigError("transformer config: all dimensions must be > 0");
    if (model_dim % num_heads != 0)
      throw ConfigError("transformer config: model_dim must be divisible by num_heads");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("transformer config: dropout must be in [0,1)");
  }
};

/// Weights live in a flat named-tensor map so the optimizer, checkpoints,
/// and the finite-difference harness can treat every model uniformly.
struct TransformerParams {
  TransformerConfig config;
  ParamMap tensors;
};

inline Mat positional_encoding(int max_len, int dim) {
  Mat pe(max_len, dim);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double angle = pos / std::pow(10000.0, double(i) / double(dim));
      pe(pos, i) = std::sin(angle);
      if (i + 1 < dim) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

namespace detail {

inline Mat xavier_uniform(Rng& rng, int rows, int cols) {
  const double limit = std::sqrt(6.0 / double(rows + cols));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

inline Mat normal_init(Rng& rng, int rows, int cols, double stddev) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal(0.0, stddev);
  return m;
}

inline void add_attention_params(ParamMap& t, Rng& rng, const std::string& prefix,
                                 const TransformerConfig& cfg) {
  const int d = cfg.model_dim, dk = cfg.head_dim();
  for (int h = 0; h < cfg.num_heads; ++h) {
    const std::string hs = std::to_string(h);
    t[prefix + ".q" + hs] = xavier_uniform(rng, d, dk);
    t[prefix + ".k" + hs] = xavier_uniform(rng, d, dk);
    t[prefix + ".v" + hs] = xavier_uniform(rng, d, dk);
  }
  t[prefix + ".out.w"] = xavier_uniform(rng, d, d);
  t[prefix + ".out.b"] = Mat::Zero(1, d);
}

inline void add_norm_params(ParamMap& t, const std::string& prefix, int dim) {
  t[prefix + ".g"] = Mat::Ones(1, dim);
  t[prefix + ".b"] = Mat::Zero(1, dim);
}

inline void add_ff_params(ParamMap& t, Rng& rng, const std::string& prefix,
                          const TransformerConfig& cfg) {
  t[prefix + ".w1"] = xavier_uniform(rng, cfg.model_dim, cfg.ff_dim);
  t[prefix + ".b1"] = Mat::Zero(1, cfg.ff_dim);
  t[prefix + ".w2"] = xavier_uniform(rng, cfg.ff_dim, cfg.model_dim);
  t[prefix + ".b2"] = Mat::Zero(1, cfg.model_dim);
}

}  // namespace detail

/// Deterministic initialization: embeddings ~ N(0, 1/sqrt(model_dim)),
/// linear weights uniform with Glorot scale, biases zero, norm gains one.
inline TransformerParams init_params(const TransformerConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  TransformerParams p;
  p.config = config;
  ParamMap& t = p.tensors;
  const double emb_std = 1.0 / std::sqrt(double(config.model_dim));
  t["src_embed"] = detail::normal_init(rng, config.src_vocab, config.model_dim, emb_std);
  t["tgt_embed"] = detail::normal_init(rng, config.tgt_vocab, config.model_dim, emb_std);
  t["out.w"] = detail::xavier_uniform(rng, config.model_dim, config.tgt_vocab);
  t["out.b"] = Mat::Zero(1, config.tgt_vocab);
  for (int b = 0; b < config.num_blocks; ++b) {
    const std::string eb = "enc" + std::to_string(b);
    detail::add_attention_params(t, rng, eb + ".attn", config);
    detail::add_norm_params(t, eb + ".norm1", config.model_dim);
    detail::add_ff_params(t, rng, eb + ".ff", config);
    detail::add_norm_params(t, eb + ".norm2", config.model_dim);
  }
  for (int b = 0; b < config.num_blocks; ++b) {
    const std::string db = "dec" + std::to_string(b);
    detail::add_attention_params(t, rng, db + ".self", config);
    detail::add_norm_params(t, db + ".norm1", config.model_dim);
    detail::add_attention_params(t, rng, db + ".cross", config);
    detail::add_norm_params(t, db + ".norm2", config.model_dim);
    detail::add_ff_params(t, rng, db + ".ff", config);
    detail::add_norm_params(t, db + ".norm3", config.model_dim);
  }
  return p;
}

/// Per-run options for building the transformer graph.
struct TransformerRunOpts {
  bool training = false;
  Rng* dropout_rng = nullptr;       // used when training and dropout > 0
  Var expert_row;                   // optional 1 x model_dim bias added to the
                                    // decoder's start-of-sequence input
  std::vector<Mat>* attention_sink = nullptr;  // collects attention rows if set
};

namespace detail {

inline Var maybe_dropout(Tape& tape, Var x, const TransformerConfig& cfg,
                         const TransformerRunOpts& opts) {
  if (!opts.training || cfg.dropout <= 0.0) return x;
  if (!opts.dropout_rng)
    throw InputError("transformer: dropout requires an rng during training");
  const Mat& v = tape.value(x);
  Mat mask(v.rows(), v.cols());
  const double keep = 1.0 - cfg.dropout;
  for (Eigen::Index r = 0; r < v.rows(); ++r)
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      mask(r, c) = (opts.dropout_rng->uniform() < keep) ? 1.0 / keep : 0.0;
  return tape.mul_const(x, mask);
}

/// Multi-head scaled dot-product attention, queries from `q_input`, keys and
/// values from `kv_input`.
inline Var attention(Tape& tape, const std::map<std::string, Var>& p,
                     const std::string& prefix, const TransformerConfig& cfg,
                     Var q_input, Var kv_input, const Mat* additive_mask,
                     const TransformerRunOpts& opts) {
  const double inv_sqrt_dk = 1.0 / std::sqrt(double(cfg.head_dim()));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(cfg.num_heads));
  for (int h = 0; h < cfg.num_heads; ++h) {
    const std::string hs = std::to_string(h);
    Var q = tape.matmul(q_input, p.at(prefix + ".q" + hs));
    Var k = tape.matmul(kv_input, p.at(prefix + ".k" + hs));
    Var v = tape.matmul(kv_input, p.at(prefix + ".v" + hs));
    Var scores = tape.scale(tape.matmul_nt(q, k), inv_sqrt_dk);
    Var attn = tape.softmax_rows(scores, additive_mask);
    if (opts.attention_sink) opts.attention_sink->push_back(tape.value(attn));
    heads.push_back(tape.matmul(attn, v));
  }
  Var concat = cfg.num_heads == 1 ? heads[0] : tape.concat_cols(heads);
  Var out = tape.add_rowvec(tape.matmul(concat, p.at(prefix + ".out.w")),
                            p.at(prefix + ".out.b"));
  return maybe_dropout(tape, out, cfg, opts);
}

inline Var feed_forward(Tape& tape, const std::map<std::string, Var>& p,
                        const std::string& prefix, const TransformerConfig& cfg,
                        Var x, const TransformerRunOpts& opts) {
  Var h = tape.relu(tape.add_rowvec(tape.matmul(x, p.at(prefix + ".w1")),
                                    p.at(prefix + ".b1")));
  Var out = tape.add_rowvec(tape.matmul(h, p.at(prefix + ".w2")), p.at(prefix + ".b2"));
  return maybe_dropout(tape, out, cfg, opts);
}

inline Var add_norm(Tape& tape, const std::map<std::string, Var>& p,
                    const std::string& prefix, Var residual, Var sublayer) {
  return tape.layer_norm(tape.add(residual, sublayer), p.at(prefix + ".g"),
                         p.at(prefix + ".b"));
}

inline void check_ids(const std::vector<int>& ids, int vocab, int max_len,
                      const char* which) {
  if (ids.empty()) throw InputError(std::string(which) + ": empty id sequence");
  if (static_cast<int>(ids.size()) > max_len)
    throw InputError(std::string(which) + ": sequence longer than max_len");
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw InputError(std::string(which) + ": token id out of range");
}

inline Mat causal_mask(int n) {
  Mat m = Mat::Zero(n, n);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = neg_inf;
  return m;
}

}  // namespace detail

/// Builds the full encoder-decoder graph on the tape and returns the
/// decoder logits node ([tgt_len x tgt_vocab]). Decoder self-attention is
/// causally masked, so position t only sees positions <= t.
inline Var transformer_logits(Tape& tape, const std::map<std::string, Var>& p,
                              const TransformerConfig& cfg,
                              const std::vector<int>& src_ids,
                              const std::vector<int>& tgt_ids,
                              const TransformerRunOpts& opts = {}) {
  detail::check_ids(src_ids, cfg.src_vocab, cfg.max_len, "src");
  detail::check_ids(tgt_ids, cfg.tgt_vocab, cfg.max_len, "tgt");
  const double emb_scale = std::sqrt(double(cfg.model_dim));
  const Mat pe = positional_encoding(cfg.max_len, cfg.model_dim);

  // Encoder
  Var x = tape.scale(tape.gather_rows(p.at("src_embed"), src_ids), emb_scale);
  x = tape.add_const(x, pe.topRows(static_cast<Eigen::Index>(src_ids.size())));
  x = detail::maybe_dropout(tape, x, cfg, opts);
  for (int b = 0; b < cfg.num_blocks; ++b) {
    const std::string eb = "enc" + std::to_string(b);
    Var attn = detail::attention(tape, p, eb + ".attn", cfg, x, x, nullptr, opts);
    x = detail::add_norm(tape, p, eb + ".norm1", x, attn);
    Var ff = detail::feed_forward(tape, p, eb + ".ff", cfg, x, opts);
    x = detail::add_norm(tape, p, eb + ".norm2", x, ff);
  }
  Var memory = x;

  // Decoder
  Var y = tape.scale(tape.gather_rows(p.at("tgt_embed"), tgt_ids), emb_scale);
  if (opts.expert_row.valid()) y = tape.add_to_row(y, opts.expert_row, 0);
  y = tape.add_const(y, pe.topRows(static_cast<Eigen::Index>(tgt_ids.size())));
  y = detail::maybe_dropout(tape, y, cfg, opts);
  const Mat mask = detail::causal_mask(static_cast<int>(tgt_ids.size()));
  for (int b = 0; b < cfg.num_blocks; ++b) {
    const std::string db = "dec" + std::to_string(b);
    Var self = detail::attention(tape, p, db + ".self", cfg, y, y, &mask, opts);
    y = detail::add_norm(tape, p, db + ".norm1", y, self);
    Var cross = detail::attention(tape, p, db + ".cross", cfg, y, memory, nullptr, opts);
    y = detail::add_norm(tape, p, db + ".norm2", y, cross);
    Var ff = detail::feed_forward(tape, p, db + ".ff", cfg, y, opts);
    y = detail::add_norm(tape, p, db + ".norm3", y, ff);
  }
  return tape.add_rowvec(tape.matmul(y, p.at("out.w")), p.at("out.b"));
}

/// Inference-mode forward pass: logits over the target vocabulary for each
/// decoder input position.
inline Mat forward(const TransformerParams& params, const std::vector<int>& src_ids,
                   const std::vector<int>& tgt_ids, const Mat* expert_row = nullptr) {
  Tape tape;
  auto vars = leaf_all(tape, params.tensors);
  TransformerRunOpts opts;
  if (expert_row) opts.expert_row = tape.leaf(*expert_row);
  Var logits = transformer_logits(tape, vars, params.config, src_ids, tgt_ids, opts);
  return tape.value(logits);
}

/// Teacher-forced mean token cross entropy of (tgt_out | src, tgt_in).
inline Var seq2seq_loss(Tape& tape, const std::map<std::string, Var>& p,
                        const TransformerConfig& cfg, const std::vector<int>& src_ids,
                        const std::vector<int>& tgt_in, const std::vector<int>& tgt_out,
                        const TransformerRunOpts& opts = {}) {
  if (tgt_in.size() != tgt_out.size())
    throw InputError("seq2seq_loss: tgt_in/tgt_out length mismatch");
  Var logits = transformer_logits(tape, p, cfg, src_ids, tgt_in, opts);
  return tape.cross_entropy_mean(logits, tgt_out);
}

}  // namespace textaug
