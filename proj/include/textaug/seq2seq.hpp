#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "textaug/bpe.hpp"
#include "textaug/csv.hpp"
#include "textaug/errors.hpp"
#include "textaug/optim.hpp"
#include "textaug/rng.hpp"
#include "textaug/textprep.hpp"
#include "textaug/transformer.hpp"

namespace textaug {

/// Subword-symbol vocabulary with the reserved control ids up front.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  std::vector<std::string> id_to_symbol;
  std::unordered_map<std::string, int> symbol_to_id;

  static Vocab from_symbols(const std::set<std::string>& symbols) {
    Vocab v;
    v.id_to_symbol = {"<pad>", "<bos>", "<eos>", "<unk>"};
    for (const auto& s : symbols) v.id_to_symbol.push_back(s);
    for (std::size_t i = 0; i < v.id_to_symbol.size(); ++i)
      v.symbol_to_id[v.id_to_symbol[i]] = static_cast<int>(i);
    return v;
  }

  int size() const { return static_cast<int>(id_to_symbol.size()); }

  int id(const std::string& symbol) const {
    auto it = symbol_to_id.find(symbol);
    return it == symbol_to_id.end() ? kUnk : it->second;
  }

  const std::string& symbol(int id) const {
    if (id < 0 || id >= size()) throw InputError("vocab: id out of range");
    return id_to_symbol[static_cast<std::size_t>(id)];
  }
};

/// Joint source/target BPE text pipeline: word tokens <-> subword ids.
struct BpeCodec {
  BpeModel bpe;
  Vocab vocab;

  static BpeCodec learn(const std::vector<TokenSeq>& joint_corpus, int num_merges) {
    BpeCodec codec;
    codec.bpe = learn_bpe(joint_corpus, num_merges);
    codec.vocab = Vocab::from_symbols(codec.bpe.vocab);
    return codec;
  }

  /// Word tokens -> subword ids. Unknown symbols map to the unknown id.
  std::vector<int> encode(const TokenSeq& tokens) const {
    std::vector<int> ids;
    for (const auto& tok : tokens)
      for (const auto& sym : apply_bpe(bpe, tok)) ids.push_back(vocab.id(sym));
    return ids;
  }

  /// Subword ids -> word tokens. Word boundaries come from the end-of-word
  /// marker; control symbols are dropped, unknowns surface as "<unk>".
  TokenSeq decode(const std::vector<int>& ids) const {
    TokenSeq tokens;
    std::string current;
    const std::string marker = kBpeEndOfWord;
    auto flush = [&] {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    };
    for (int id : ids) {
      if (id == Vocab::kPad || id == Vocab::kBos || id == Vocab::kEos) continue;
      if (id == Vocab::kUnk) {
        flush();
        tokens.push_back("<unk>");
        continue;
      }
      const std::string& sym = vocab.symbol(id);
      if (sym.size() >= marker.size() &&
          sym.compare(sym.size() - marker.size(), marker.size(), marker) == 0) {
        current += sym.substr(0, sym.size() - marker.size());
        flush();
      } else {
        current += sym;
      }
    }
    flush();
    return tokens;
  }
};

/// A trained (or initialized) translation model: transformer weights plus
/// the joint BPE text pipeline both directions share.
struct Seq2SeqModel {
  TransformerParams params;
  BpeCodec codec;
};

struct SeqTrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-3;
  /// Steps of linear learning-rate warmup up to `lr`. The add-norm blocks
  /// train poorly from a cold start without it.
  int warmup_steps = 200;
  double clip_norm = 5.0;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 0) throw ConfigError("seq2seq train: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("seq2seq train: batch_size must be >= 1");
    if (warmup_steps < 0) throw ConfigError("seq2seq train: warmup_steps must be >= 0");
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
      throw ConfigError("seq2seq train: holdout_fraction must be in [0,1)");
  }
};

struct SeqTrainHistory {
  std::vector<double> train_ce;    // one entry per trained epoch
  std::vector<double> holdout_ce;  // entry 0 is the pre-training loss
};

struct TrainedSeq2Seq {
  Seq2SeqModel model;
  SeqTrainHistory history;
};

/// Tokenized parallel sentence pair.
using ParallelPair = std::pair<TokenSeq, TokenSeq>;

/// TSV loader: `source<TAB>target` per line, whitespace-tokenized.
inline std::vector<ParallelPair> load_parallel_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open parallel corpus: " + path);
  std::vector<ParallelPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected source<TAB>target");
    pairs.emplace_back(tokenize(line.substr(0, tab)), tokenize(line.substr(tab + 1)));
  }
  if (pairs.empty()) throw ParseError(path + ": no pairs");
  return pairs;
}

namespace detail {

struct EncodedPair {
  std::vector<int> src;     // subword ids + eos
  std::vector<int> tgt_in;  // bos + subword ids
  std::vector<int> tgt_out; // subword ids + eos
};

/// Encodes and frames one pair, truncating to the model's max_len.
inline EncodedPair encode_pair(const BpeCodec& codec, const ParallelPair& pair,
                               int max_len) {
  EncodedPair e;
  e.src = codec.encode(pair.first);
  if (static_cast<int>(e.src.size()) > max_len - 1)
    e.src.resize(static_cast<std::size_t>(max_len - 1));
  e.src.push_back(Vocab::kEos);

  std::vector<int> tgt = codec.encode(pair.second);
  if (static_cast<int>(tgt.size()) > max_len - 1)
    tgt.resize(static_cast<std::size_t>(max_len - 1));
  e.tgt_in.push_back(Vocab::kBos);
  e.tgt_in.insert(e.tgt_in.end(), tgt.begin(), tgt.end());
  e.tgt_out = tgt;
  e.tgt_out.push_back(Vocab::kEos);
  return e;
}

inline double mean_holdout_ce(const TransformerParams& params,
                              const std::vector<EncodedPair>& holdout,
                              const Mat* expert_row = nullptr) {
  if (holdout.empty()) return 0.0;
  double total = 0.0;
  for (const auto& pair : holdout) {
    Tape tape;
    auto vars = leaf_all(tape, params.tensors);
    TransformerRunOpts opts;
    if (expert_row) opts.expert_row = tape.leaf(*expert_row);
    Var loss = seq2seq_loss(tape, vars, params.config, pair.src, pair.tgt_in,
                            pair.tgt_out, opts);
    total += tape.value(loss)(0, 0);
  }
  return total / static_cast<double>(holdout.size());
}

}  // namespace detail

/// Trains the transformer with teacher forcing, Adam, and global-norm
/// clipping. Deterministic for a fixed seed; the held-out cross entropy is
/// recorded before training (entry 0) and after every epoch.
inline TrainedSeq2Seq train_seq2seq(const std::vector<ParallelPair>& pairs,
                                    TransformerConfig config, const BpeCodec& codec,
                                    const SeqTrainConfig& hyper) {
  if (pairs.empty()) throw InputError("train_seq2seq: empty corpus");
  hyper.validate();
  config.src_vocab = codec.vocab.size();
  config.tgt_vocab = codec.vocab.size();
  config.validate();

  std::vector<detail::EncodedPair> encoded;
  encoded.reserve(pairs.size());
  for (const auto& p : pairs)
    encoded.push_back(detail::encode_pair(codec, p, config.max_len));

  Rng rng(derive_seed(hyper.seed, 0x5e42));
  TrainedSeq2Seq result;
  result.model.codec = codec;
  result.model.params = init_params(config, derive_seed(hyper.seed, 1));

  // Seeded holdout split.
  std::vector<std::size_t> order(encoded.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t holdout_n = static_cast<std::size_t>(
      std::floor(hyper.holdout_fraction * static_cast<double>(encoded.size())));
  if (encoded.size() < 2) holdout_n = 0;
  std::vector<detail::EncodedPair> holdout, train;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < holdout_n ? holdout : train).push_back(encoded[order[i]]);
  if (train.empty()) std::swap(train, holdout);

  result.history.holdout_ce.push_back(
      detail::mean_holdout_ce(result.model.params, holdout));

  Adam adam({.lr = hyper.lr, .clip_norm = hyper.clip_norm});
  Rng dropout_rng(derive_seed(hyper.seed, 2));
  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  long step = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(idx);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < idx.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t stop =
          std::min(idx.size(), start + static_cast<std::size_t>(hyper.batch_size));
      ++step;
      if (hyper.warmup_steps > 0)
        adam.set_lr(hyper.lr * std::min(1.0, double(step) / double(hyper.warmup_steps)));
      Tape tape;
      auto vars = leaf_all(tape, result.model.params.tensors);
      TransformerRunOpts opts;
      opts.training = true;
      opts.dropout_rng = &dropout_rng;
      std::vector<Var> losses;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& pair = train[idx[i]];
        losses.push_back(seq2seq_loss(tape, vars, config, pair.src, pair.tgt_in,
                                      pair.tgt_out, opts));
      }
      Var batch_loss = tape.mean_scalars(losses);
      const double loss_value = tape.value(batch_loss)(0, 0);
      if (!std::isfinite(loss_value))
        throw TrainingError("seq2seq training diverged at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(batches));
      tape.backward(batch_loss);
      adam.step(result.model.params.tensors, collect_grads(tape, vars));
      epoch_loss += loss_value;
      ++batches;
    }
    result.history.train_ce.push_back(epoch_loss / std::max<std::size_t>(1, batches));
    result.history.holdout_ce.push_back(
        detail::mean_holdout_ce(result.model.params, holdout));
  }
  return result;
}

}  // namespace textaug
