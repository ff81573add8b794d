#include <catch2/catch_amalgamated.hpp>

#include "support/fd_check.hpp"
#include "textaug/transformer.hpp"

using namespace textaug;

namespace {

TransformerConfig mini_config() {
  TransformerConfig cfg;
  cfg.num_blocks = 2;
  cfg.model_dim = 8;
  cfg.num_heads = 2;
  cfg.ff_dim = 16;
  cfg.src_vocab = 11;
  cfg.tgt_vocab = 11;
  cfg.max_len = 12;
  return cfg;
}

}  // namespace

TEST_CASE("init_params determinism and shape", "[transformer]") {
  auto cfg = mini_config();

  SECTION("same seed twice is bitwise identical") {
    auto a = init_params(cfg, 5);
    auto b = init_params(cfg, 5);
    REQUIRE(a.tensors.size() == b.tensors.size());
    for (const auto& [name, tensor] : a.tensors)
      CHECK(tensor == b.tensors.at(name));
    auto c = init_params(cfg, 6);
    CHECK(a.tensors.at("src_embed") != c.tensors.at("src_embed"));
  }

  SECTION("invalid head split rejected") {
    auto bad = cfg;
    bad.num_heads = 3;  // does not divide 8
    CHECK_THROWS_AS(init_params(bad, 0), ConfigError);
  }

  SECTION("paper-shaped config allocates 6 encoder and 6 decoder blocks") {
    auto six = cfg;
    six.num_blocks = 6;
    auto p = init_params(six, 0);
    for (int b = 0; b < 6; ++b) {
      CHECK(p.tensors.count("enc" + std::to_string(b) + ".ff.w1"));
      CHECK(p.tensors.count("dec" + std::to_string(b) + ".ff.w1"));
    }
    CHECK_FALSE(p.tensors.count("enc6.ff.w1"));
  }
}

TEST_CASE("forward contracts", "[transformer]") {
  auto cfg = mini_config();
  auto params = init_params(cfg, 17);
  const std::vector<int> src = {4, 5, 6, 2};
  const std::vector<int> tgt = {1, 7, 8, 9};

  SECTION("logit rows softmax to 1") {
    Mat logits = forward(params, src, tgt);
    REQUIRE(logits.rows() == 4);
    REQUIRE(logits.cols() == cfg.tgt_vocab);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      Eigen::ArrayXd e = (logits.row(r).array() - logits.row(r).maxCoeff()).exp();
      CHECK((e / e.sum()).sum() == Catch::Approx(1.0).margin(1e-9));
    }
  }

  SECTION("attention rows are probability distributions") {
    Tape tape;
    auto vars = leaf_all(tape, params.tensors);
    std::vector<Mat> attention;
    TransformerRunOpts opts;
    opts.attention_sink = &attention;
    transformer_logits(tape, vars, cfg, src, tgt, opts);
    REQUIRE_FALSE(attention.empty());
    for (const Mat& a : attention)
      for (Eigen::Index r = 0; r < a.rows(); ++r)
        CHECK(a.row(r).sum() == Catch::Approx(1.0).margin(1e-9));
  }

  SECTION("decoder causality: future target tokens cannot leak backwards") {
    Mat base = forward(params, src, tgt);
    for (std::size_t pos = 1; pos < tgt.size(); ++pos) {
      auto mutated = tgt;
      mutated[pos] = (mutated[pos] + 3) % cfg.tgt_vocab;
      Mat changed = forward(params, src, mutated);
      for (std::size_t earlier = 0; earlier < pos; ++earlier) {
        CHECK((base.row(static_cast<Eigen::Index>(earlier)) -
               changed.row(static_cast<Eigen::Index>(earlier)))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
      }
    }
  }

  SECTION("id out of range is an input error") {
    CHECK_THROWS_AS(forward(params, {4, 11}, tgt), InputError);
    CHECK_THROWS_AS(forward(params, src, {-1}), InputError);
  }

  SECTION("over-long sequence is an input error") {
    std::vector<int> too_long(cfg.max_len + 1, 1);
    CHECK_THROWS_AS(forward(params, too_long, tgt), InputError);
  }

  SECTION("outputs are finite") {
    CHECK(forward(params, src, tgt).allFinite());
  }
}

TEST_CASE("seq2seq loss gradient matches finite differences", "[transformer][slow]") {
  auto cfg = mini_config();
  auto params = init_params(cfg, 23);
  const std::vector<int> src = {4, 5, 6, 2};
  const std::vector<int> tgt_in = {1, 7, 8};
  const std::vector<int> tgt_out = {7, 8, 2};

  auto loss_and_grads = [&](ParamMap& p, ParamMap* grads) {
    Tape tape;
    auto vars = leaf_all(tape, p);
    Var loss = seq2seq_loss(tape, vars, cfg, src, tgt_in, tgt_out);
    if (grads) {
      tape.backward(loss);
      *grads = collect_grads(tape, vars);
    }
    return tape.value(loss)(0, 0);
  };

  ParamMap grads;
  loss_and_grads(params.tensors, &grads);
  auto result = fdcheck::check_gradients(
      params.tensors, [&] { return loss_and_grads(params.tensors, nullptr); }, grads,
      1e-4, 24, 99);
  INFO("worst tensor: " << result.worst_tensor
                        << " rel err: " << result.max_rel_err
                        << " entries: " << result.entries_checked);
  CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("expert row conditioning shifts the distribution", "[transformer]") {
  auto cfg = mini_config();
  auto params = init_params(cfg, 31);
  const std::vector<int> src = {4, 5, 2};
  const std::vector<int> tgt = {1, 6};

  Mat expert = Mat::Ones(1, cfg.model_dim) * 0.5;
  Mat plain = forward(params, src, tgt);
  Mat biased = forward(params, src, tgt, &expert);
  CHECK((plain - biased).cwiseAbs().maxCoeff() > 1e-9);

  Mat zero = Mat::Zero(1, cfg.model_dim);
  Mat unbiased = forward(params, src, tgt, &zero);
  CHECK((plain - unbiased).cwiseAbs().maxCoeff() < 1e-12);
}
