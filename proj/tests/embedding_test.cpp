#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "textaug/embedding.hpp"
#include "textaug/rng.hpp"

using namespace textaug;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load_vec parses the text format", "[embedding]") {
  SECTION("tiny well-formed file") {
    auto path = write_temp("emb_ok.vec", "2 3\na 1 0 0\nb 0 1 0\n");
    EmbeddingTable t = load_vec(path);
    CHECK(t.dim == 3);
    CHECK(t.vectors.size() == 2);
    CHECK(t.lookup("a") == Eigen::RowVector3d(1, 0, 0));
  }

  SECTION("row with wrong arity reports line number") {
    auto path = write_temp("emb_short.vec", "2 3\na 1 0 0\nc 1 2\n");
    try {
      load_vec(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }

  SECTION("malformed float") {
    auto path = write_temp("emb_badfloat.vec", "1 2\na 1 oops\n");
    CHECK_THROWS_AS(load_vec(path), ParseError);
  }

  SECTION("declared dim 300 yields table dim 300") {
    std::string content = "1 300\nword";
    for (int i = 0; i < 300; ++i) content += " 0.5";
    content += "\n";
    auto path = write_temp("emb_300.vec", content);
    CHECK(load_vec(path).dim == 300);
  }

  SECTION("duplicate words keep the first occurrence") {
    auto path = write_temp("emb_dup.vec", "2 2\nw 1 1\nw 2 2\n");
    EmbeddingTable t = load_vec(path);
    CHECK(t.lookup("w") == Eigen::RowVector2d(1, 1));
  }
}

TEST_CASE("lookup composes OOV words from character n-grams", "[embedding]") {
  EmbeddingTable t;
  t.dim = 3;
  t.subword_ngram_range = {3, 6};

  SECTION("in-vocabulary word returns the stored vector exactly") {
    t.vectors["hello"] = Eigen::RowVector3d(0.25, -1, 2);
    CHECK(t.lookup("hello") == Eigen::RowVector3d(0.25, -1, 2));
  }

  SECTION("fully unknown word maps to the zero vector") {
    CHECK(t.lookup("zzz") == Eigen::RowVector3d(0, 0, 0));
  }

  SECTION("two matching n-grams average") {
    // n-grams of "<ab>": <ab, ab>, <ab> — stock the table with two of them
    t.vectors["<ab"] = Eigen::RowVector3d(1, 0, 0);
    t.vectors["ab>"] = Eigen::RowVector3d(0, 1, 0);
    CHECK(t.lookup("ab") == Eigen::RowVector3d(0.5, 0.5, 0));
  }

  SECTION("empty word rejected") {
    CHECK_THROWS_AS(t.lookup(""), InputError);
  }
}

TEST_CASE("save_vec/load_vec round trip", "[embedding]") {
  EmbeddingTable t;
  t.dim = 4;
  Rng rng(23);
  for (int w = 0; w < 40; ++w) {
    Eigen::RowVectorXd v(4);
    for (int i = 0; i < 4; ++i) v(i) = rng.normal();
    t.vectors["word" + std::to_string(w)] = v;
  }
  auto path = (std::filesystem::temp_directory_path() / "emb_roundtrip.vec").string();
  save_vec(t, path);
  EmbeddingTable back = load_vec(path);

  REQUIRE(back.dim == t.dim);
  REQUIRE(back.vectors.size() == t.vectors.size());
  for (const auto& [word, vec] : t.vectors) {
    REQUIRE(back.contains(word));
    CHECK(back.vectors.at(word) == vec);  // exact, via round-trippable formatting
  }
}

TEST_CASE("encode_sample pads, truncates, and masks", "[embedding]") {
  EmbeddingTable t;
  t.dim = 3;
  t.vectors["one"] = Eigen::RowVector3d(1, 0, 0);
  t.vectors["two"] = Eigen::RowVector3d(0, 2, 0);

  SECTION("2 tokens into seq_len 4") {
    EncodedSample e = encode_sample(t, {"one", "two"}, 4);
    CHECK(e.matrix.rows() == 4);
    CHECK(e.matrix.cols() == 3);
    CHECK(e.matrix.row(0) == Eigen::RowVector3d(1, 0, 0));
    CHECK(e.matrix.row(1) == Eigen::RowVector3d(0, 2, 0));
    CHECK(e.matrix.row(2).isZero());
    CHECK(e.matrix.row(3).isZero());
    CHECK(e.mask == std::vector<std::uint8_t>{1, 1, 0, 0});
    CHECK(e.valid_len == 2);
  }

  SECTION("over-length input truncates") {
    TokenSeq long_seq(80, "one");
    EncodedSample e = encode_sample(t, long_seq, 70);
    CHECK(e.matrix.rows() == 70);
    CHECK(e.valid_len == 70);
  }

  SECTION("no tokens gives an all-zero matrix") {
    EncodedSample e = encode_sample(t, {}, 5);
    CHECK(e.matrix.isZero());
    CHECK(e.valid_len == 0);
  }

  SECTION("shape is [seq_len x dim] regardless of input length") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      TokenSeq toks(rng.uniform_int(20), "two");
      EncodedSample e = encode_sample(t, toks, 7);
      CHECK(e.matrix.rows() == 7);
      CHECK(e.matrix.cols() == 3);
    }
  }
}
