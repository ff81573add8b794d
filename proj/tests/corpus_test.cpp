#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "textaug/corpus.hpp"

using namespace textaug;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

ColumnMapping basic_mapping() {
  ColumnMapping m;
  m.text_column = "text";
  m.label_column = "label";
  return m;
}

Dataset make_dataset(const std::vector<int>& labels) {
  Dataset ds;
  ds.name = "synthetic";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Sample s;
    s.id = static_cast<std::int64_t>(i);
    s.text = "sample number " + std::to_string(i);
    s.label = labels[i];
    ds.samples.push_back(s);
  }
  return ds;
}

std::set<std::int64_t> ids_of(const Dataset& ds) {
  std::set<std::int64_t> ids;
  for (const auto& s : ds.samples) ids.insert(s.id);
  return ids;
}

}  // namespace

TEST_CASE("load_dataset basic counting", "[corpus]") {
  auto path = write_temp("corpus_basic.csv",
                         "text,label\nyou are awful,1\nnice day,0\nsee you soon,0\n");
  Dataset ds = load_dataset(path, basic_mapping(), "fixture");

  REQUIRE(ds.size() == 3);
  auto counts = ds.class_counts();
  CHECK(counts[1] == 1);
  CHECK(counts[0] == 2);
  for (const auto& s : ds.samples) {
    CHECK(s.origin == Origin::kOriginal);
    CHECK_FALSE(s.parent_id.has_value());
  }
  ds.validate();

  SECTION("ids are assigned by row order and stable across reloads") {
    Dataset again = load_dataset(path, basic_mapping(), "fixture");
    REQUIRE(again.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(again.samples[i].id == ds.samples[i].id);
      CHECK(again.samples[i].text == ds.samples[i].text);
    }
    CHECK(ds.samples[0].id == 0);
    CHECK(ds.samples[2].id == 2);
  }
}

TEST_CASE("load_dataset error paths", "[corpus]") {
  SECTION("missing column") {
    auto path = write_temp("corpus_badcol.csv", "text,tag\nhello,1\n");
    CHECK_THROWS_AS(load_dataset(path, basic_mapping()), ParseError);
  }
  SECTION("unparseable label reports the line") {
    auto path = write_temp("corpus_badlabel.csv", "text,label\nok,0\nbad,2\n");
    try {
      load_dataset(path, basic_mapping());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SECTION("empty file") {
    auto path = write_temp("corpus_empty.csv", "");
    CHECK_THROWS_AS(load_dataset(path, basic_mapping()), ParseError);
  }
  SECTION("header only") {
    auto path = write_temp("corpus_headeronly.csv", "text,label\n");
    CHECK_THROWS_AS(load_dataset(path, basic_mapping()), ParseError);
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/nope.csv", basic_mapping()), IoError);
  }
}

TEST_CASE("load_dataset label mapping and row cap", "[corpus]") {
  auto path = write_temp("corpus_olid.csv",
                         "tweet,subtask_a\nfoo,OFF\nbar,NOT\nbaz,OFF\nqux,NOT\n");
  ColumnMapping m;
  m.text_column = "tweet";
  m.label_column = "subtask_a";
  m.label_map = {{"OFF", 1}, {"NOT", 0}};

  Dataset ds = load_dataset(path, m);
  CHECK(ds.count_label(1) == 2);

  m.max_rows = 3;
  Dataset capped = load_dataset(path, m);
  CHECK(capped.size() == 3);
}

TEST_CASE("split sizes and determinism", "[corpus]") {
  SECTION("N=10 at 0.7 gives (7,3)") {
    auto ds = make_dataset({1, 0, 0, 1, 0, 1, 0, 0, 1, 0});
    auto [train, eval] = split(ds, {0.7, 42});
    CHECK(train.size() == 7);
    CHECK(eval.size() == 3);
  }

  SECTION("partition: disjoint and complete by id") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.uniform_int(60);
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(rng.uniform_int(2));
      auto ds = make_dataset(labels);
      SplitSpec spec{0.05 + 0.9 * rng.uniform(), rng.next_u64()};
      auto [train, eval] = split(ds, spec);
      auto train_ids = ids_of(train), eval_ids = ids_of(eval);
      CHECK(train.size() + eval.size() == n);
      for (auto id : train_ids) CHECK_FALSE(eval_ids.count(id));
      std::set<std::int64_t> all = train_ids;
      all.insert(eval_ids.begin(), eval_ids.end());
      CHECK(all == ids_of(ds));
    }
  }

  SECTION("same seed twice gives identical member sets") {
    auto ds = make_dataset({1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0});
    auto [t1, e1] = split(ds, {0.7, 99});
    auto [t2, e2] = split(ds, {0.7, 99});
    CHECK(ids_of(t1) == ids_of(t2));
    CHECK(ids_of(e1) == ids_of(e2));
    auto [t3, e3] = split(ds, {0.7, 100});
    CHECK(ids_of(t1) != ids_of(t3));  // different seed, different membership
  }

  SECTION("round-half-up rule at the AskFm size") {
    std::vector<int> labels(9998, 0);
    auto ds = make_dataset(labels);
    auto [train, eval] = split(ds, {0.7, 1});
    CHECK(train.size() == 6999);
    CHECK(eval.size() == 2999);
  }

  SECTION("N<2 cannot split") {
    auto ds = make_dataset({1});
    CHECK_THROWS_AS(split(ds, {0.7, 0}), InputError);
  }

  SECTION("bad fraction") {
    auto ds = make_dataset({1, 0});
    CHECK_THROWS_AS(split(ds, {1.0, 0}), ConfigError);
  }
}

TEST_CASE("filter_by_label", "[corpus]") {
  auto ds = make_dataset({1, 0, 0, 1});

  SECTION("label 1 keeps 2 samples in order") {
    Dataset hate = filter_by_label(ds, 1);
    REQUIRE(hate.size() == 2);
    CHECK(hate.samples[0].id == 0);
    CHECK(hate.samples[1].id == 3);
  }
  SECTION("empty result allowed") {
    Dataset all_hate = make_dataset({1, 1, 1});
    CHECK(filter_by_label(all_hate, 0).empty());
  }
}

TEST_CASE("canonical CSV round trip", "[corpus]") {
  Dataset ds = make_dataset({1, 0});
  Sample aug;
  aug.id = 2;
  aug.text = "augmented copy, with a comma and \"quotes\"";
  aug.label = 1;
  aug.origin = Origin::kBacktranslated;
  aug.parent_id = 0;
  ds.samples.push_back(aug);
  ds.validate();

  auto path = write_temp("corpus_canonical.csv", "");
  save_canonical(ds, path);
  Dataset back = load_canonical(path, ds.name);

  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].id == ds.samples[i].id);
    CHECK(back.samples[i].text == ds.samples[i].text);
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].origin == ds.samples[i].origin);
    CHECK(back.samples[i].parent_id == ds.samples[i].parent_id);
  }
}

TEST_CASE("dataset validation catches broken invariants", "[corpus]") {
  SECTION("augmented label must match parent") {
    Dataset ds = make_dataset({1, 0});
    Sample bad;
    bad.id = 5;
    bad.text = "flipped";
    bad.label = 0;
    bad.origin = Origin::kParaphrase;
    bad.parent_id = 0;  // parent has label 1
    ds.samples.push_back(bad);
    CHECK_THROWS_AS(ds.validate(), InputError);
  }
  SECTION("duplicate ids rejected") {
    Dataset ds = make_dataset({1, 0});
    ds.samples[1].id = ds.samples[0].id;
    CHECK_THROWS_AS(ds.validate(), InputError);
  }
  SECTION("original with parent rejected") {
    Dataset ds = make_dataset({1});
    ds.samples[0].parent_id = 0;
    CHECK_THROWS_AS(ds.validate(), InputError);
  }
}
