#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "textaug/errors.hpp"
#include "textaug/rng.hpp"
#include "textaug/seq2seq.hpp"
#include "textaug/transformer.hpp"

namespace textaug {

/// Decoding strategy: greedy, beam, temperature sampling, or noised beam
/// (Gaussian noise added to candidate log-probabilities before ranking).
struct DecodeStrategy {
  enum class Kind { kGreedy, kBeam, kSampling, kNoisedBeam };

  Kind kind = Kind::kGreedy;
  int width = 1;
  double temperature = 1.0;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;

  static DecodeStrategy greedy() { return {}; }
  static DecodeStrategy beam(int width) {
    DecodeStrategy s;
    s.kind = Kind::kBeam;
    s.width = width;
    return s;
  }
  static DecodeStrategy sampling(double temperature, std::uint64_t seed) {
    DecodeStrategy s;
    s.kind = Kind::kSampling;
    s.temperature = temperature;
    s.seed = seed;
    return s;
  }
  static DecodeStrategy noised_beam(int width, double noise_scale, std::uint64_t seed) {
    DecodeStrategy s;
    s.kind = Kind::kNoisedBeam;
    s.width = width;
    s.noise_scale = noise_scale;
    s.seed = seed;
    return s;
  }

  void validate() const {
    if (width < 1) throw ConfigError("decode: beam width must be >= 1");
    if (temperature <= 0.0) throw ConfigError("decode: temperature must be > 0");
    if (noise_scale < 0.0) throw ConfigError("decode: noise_scale must be >= 0");
  }
};

namespace detail {

inline Eigen::RowVectorXd log_softmax_row(const Eigen::RowVectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = std::log((logits.array() - m).exp().sum()) + m;
  return (logits.array() - lse).matrix();
}

/// Last-position next-token logits for the current prefix. The prefix is
/// recomputed from scratch each step; fine at toy scale.
inline Eigen::RowVectorXd next_logits(const TransformerParams& params,
                                      const std::vector<int>& src_ids,
                                      const std::vector<int>& prefix,
                                      const Mat* expert_row) {
  Mat logits = forward(params, src_ids, prefix, expert_row);
  return logits.row(logits.rows() - 1);
}

struct Hypothesis {
  std::vector<int> ids;  // includes the leading bos
  double logp = 0.0;
  bool finished = false;
};

/// Deterministic ordering: higher log-probability first, then
/// lexicographically smaller id sequence.
inline bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  return a.ids < b.ids;
}

inline std::vector<int> beam_decode(const TransformerParams& params,
                                    const std::vector<int>& src_ids,
                                    const DecodeStrategy& strategy, int max_steps,
                                    const Mat* expert_row) {
  const bool noised = strategy.kind == DecodeStrategy::Kind::kNoisedBeam;
  Rng rng(strategy.seed);
  std::vector<Hypothesis> live = {{{Vocab::kBos}, 0.0, false}};
  std::vector<Hypothesis> done;

  for (int step = 0; step < max_steps && !live.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    for (const auto& hyp : live) {
      Eigen::RowVectorXd lp =
          log_softmax_row(next_logits(params, src_ids, hyp.ids, expert_row));
      for (int tok = 0; tok < lp.size(); ++tok) {
        double token_lp = lp(tok);
        if (noised) token_lp += strategy.noise_scale * rng.normal();
        Hypothesis child;
        child.ids = hyp.ids;
        child.ids.push_back(tok);
        child.logp = hyp.logp + token_lp;
        child.finished = (tok == Vocab::kEos);
        candidates.push_back(std::move(child));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better);
    if (static_cast<int>(candidates.size()) > strategy.width)
      candidates.resize(static_cast<std::size_t>(strategy.width));
    live.clear();
    for (auto& c : candidates)
      (c.finished ? done : live).push_back(std::move(c));
  }
  for (auto& h : live) done.push_back(std::move(h));  // ran out of steps
  std::sort(done.begin(), done.end(), better);
  if (done.empty()) return {};
  std::vector<int> out(done.front().ids.begin() + 1, done.front().ids.end());
  if (!out.empty() && out.back() == Vocab::kEos) out.pop_back();
  return out;
}

inline std::vector<int> sampling_decode(const TransformerParams& params,
                                        const std::vector<int>& src_ids,
                                        const DecodeStrategy& strategy, int max_steps,
                                        const Mat* expert_row) {
  Rng rng(strategy.seed);
  std::vector<int> prefix = {Vocab::kBos};
  std::vector<int> out;
  for (int step = 0; step < max_steps; ++step) {
    Eigen::RowVectorXd logits = next_logits(params, src_ids, prefix, expert_row);
    Eigen::RowVectorXd lp = log_softmax_row(logits / strategy.temperature);
    Eigen::ArrayXd probs = lp.array().exp();
    probs /= probs.sum();
    const double r = rng.uniform();
    double cum = 0.0;
    int tok = static_cast<int>(probs.size()) - 1;
    for (int i = 0; i < probs.size(); ++i) {
      cum += probs(i);
      if (r < cum) {
        tok = i;
        break;
      }
    }
    if (tok == Vocab::kEos) break;
    out.push_back(tok);
    prefix.push_back(tok);
  }
  return out;
}

}  // namespace detail

/// Decodes target subword ids for one source sequence. Terminates at the
/// end-of-sequence token or when the model's max_len is hit.
inline std::vector<int> decode_ids(const TransformerParams& params,
                                   const std::vector<int>& src_ids,
                                   const DecodeStrategy& strategy,
                                   const Mat* expert_row = nullptr) {
  strategy.validate();
  const int max_steps = params.config.max_len - 1;
  switch (strategy.kind) {
    case DecodeStrategy::Kind::kGreedy: {
      DecodeStrategy g = strategy;
      g.kind = DecodeStrategy::Kind::kBeam;
      g.width = 1;
      return detail::beam_decode(params, src_ids, g, max_steps, expert_row);
    }
    case DecodeStrategy::Kind::kBeam:
    case DecodeStrategy::Kind::kNoisedBeam:
      return detail::beam_decode(params, src_ids, strategy, max_steps, expert_row);
    case DecodeStrategy::Kind::kSampling:
      return detail::sampling_decode(params, src_ids, strategy, max_steps, expert_row);
  }
  throw ConfigError("decode: unknown strategy");
}

/// Translates one tokenized sentence. Unknown tokens pass through the
/// unknown id; an empty sentence translates to an empty sentence.
inline TokenSeq translate(const Seq2SeqModel& model, const TokenSeq& sentence,
                          const DecodeStrategy& strategy,
                          const Mat* expert_row = nullptr) {
  if (sentence.empty()) return {};
  std::vector<int> src = model.codec.encode(sentence);
  const int max_len = model.params.config.max_len;
  if (static_cast<int>(src.size()) > max_len - 1)
    src.resize(static_cast<std::size_t>(max_len - 1));
  src.push_back(Vocab::kEos);
  return model.codec.decode(decode_ids(model.params, src, strategy, expert_row));
}

/// Both halves of a round trip may use different strategies (the noised /
/// sampled half is what creates wording variety).
struct BackTranslateStrategies {
  DecodeStrategy forward = DecodeStrategy::greedy();
  DecodeStrategy backward = DecodeStrategy::greedy();
};

/// Source -> pivot -> source round trip through two translation models.
inline TokenSeq back_translate(const Seq2SeqModel& fwd, const Seq2SeqModel& bwd,
                               const TokenSeq& sentence,
                               const BackTranslateStrategies& strategies = {}) {
  if (sentence.empty()) return {};
  TokenSeq pivot = translate(fwd, sentence, strategies.forward);
  return translate(bwd, pivot, strategies.backward);
}

}  // namespace textaug
