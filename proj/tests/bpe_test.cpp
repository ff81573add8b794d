#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <numeric>

#include "textaug/bpe.hpp"
#include "textaug/rng.hpp"

using namespace textaug;

namespace {

// The classic word-frequency corpus: low x5, lower x2, newest x6, widest x3.
std::vector<TokenSeq> classic_corpus() {
  std::vector<TokenSeq> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back({"low"});
  for (int i = 0; i < 2; ++i) corpus.push_back({"lower"});
  for (int i = 0; i < 6; ++i) corpus.push_back({"newest"});
  for (int i = 0; i < 3; ++i) corpus.push_back({"widest"});
  return corpus;
}

std::string concat(const std::vector<std::string>& parts) {
  return std::accumulate(parts.begin(), parts.end(), std::string());
}

}  // namespace

TEST_CASE("learn_bpe greedy merge order", "[bpe]") {
  SECTION("zero merges leaves a character vocabulary") {
    BpeModel m = learn_bpe({{"abc"}}, 0);
    CHECK(m.merges.empty());
    CHECK(m.num_merges == 0);
    CHECK(m.vocab.count("a"));
    CHECK(m.vocab.count("b"));
    CHECK(m.vocab.count(std::string("c") + kBpeEndOfWord));
  }

  SECTION("first merge on the classic corpus is (e,s)") {
    // Pair counts by hand: (e,s) appears in newest x6 and widest x3 = 9,
    // tied with (s,t</w>); the lexicographically smaller pair wins.
    BpeModel m = learn_bpe(classic_corpus(), 1);
    REQUIRE(m.merges.size() == 1);
    CHECK(m.merges[0] == std::make_pair(std::string("e"), std::string("s")));
  }

  SECTION("second merge fuses (es, t</w>)") {
    BpeModel m = learn_bpe(classic_corpus(), 2);
    REQUIRE(m.merges.size() == 2);
    CHECK(m.merges[1] ==
          std::make_pair(std::string("es"), std::string("t") + kBpeEndOfWord));
  }

  SECTION("two runs produce identical merge lists") {
    BpeModel a = learn_bpe(classic_corpus(), 8);
    BpeModel b = learn_bpe(classic_corpus(), 8);
    CHECK(a.merges == b.merges);
  }

  SECTION("merge count saturates at what is possible") {
    BpeModel m = learn_bpe({{"ab"}}, 50);
    CHECK(m.num_merges == 1);  // only (a, b</w>) can ever merge
  }

  SECTION("empty corpus rejected") {
    CHECK_THROWS_AS(learn_bpe({}, 3), InputError);
  }
}

TEST_CASE("apply_bpe segments by replaying merges", "[bpe]") {
  SECTION("learned merges give [n, e, w, est] for 'newest'") {
    BpeModel m = learn_bpe(classic_corpus(), 2);
    auto sub = apply_bpe(m, "newest");
    auto plain = strip_bpe_markers(sub);
    CHECK(plain == std::vector<std::string>{"n", "e", "w", "est"});
    CHECK(concat(plain) == "newest");
  }

  SECTION("single symbol token") {
    BpeModel m = learn_bpe(classic_corpus(), 2);
    auto plain = strip_bpe_markers(apply_bpe(m, "a"));
    CHECK(plain == std::vector<std::string>{"a"});
  }

  SECTION("empty token rejected") {
    BpeModel m;
    CHECK_THROWS_AS(apply_bpe(m, ""), InputError);
  }

  SECTION("round trip property: stripping markers reproduces the token") {
    BpeModel m = learn_bpe(classic_corpus(), 10);
    Rng rng(17);
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz'0123456789";
    for (int trial = 0; trial < 300; ++trial) {
      std::string token;
      const std::size_t len = 1 + rng.uniform_int(12);
      for (std::size_t i = 0; i < len; ++i)
        token.push_back(alphabet[rng.uniform_int(alphabet.size())]);
      CHECK(concat(strip_bpe_markers(apply_bpe(m, token))) == token);
    }
  }

  SECTION("utf-8 tokens survive the round trip") {
    BpeModel m = learn_bpe({{"na\xc3\xafve"}}, 2);
    CHECK(concat(strip_bpe_markers(apply_bpe(m, "na\xc3\xafve"))) == "na\xc3\xafve");
  }
}

TEST_CASE("bpe text serialization", "[bpe]") {
  BpeModel m = learn_bpe(classic_corpus(), 6);
  auto path = (std::filesystem::temp_directory_path() / "bpe_model.txt").string();
  save_bpe(m, path);
  BpeModel back = load_bpe(path);

  CHECK(back.merges == m.merges);
  CHECK(back.num_merges == m.num_merges);
  // Segmentation behavior is fully determined by the merges.
  CHECK(apply_bpe(back, "lowest") == apply_bpe(m, "lowest"));
}
