#include <stdexcept>
#include <algorithm>
#include <map>

#include "doctest.h"
#include "polyglot/corpus.hpp"
#include "polyglot/rng.hpp"
#include "support/fixtures.hpp"

using namespace polyglot;
using polyglot::testing::TempDir;
using polyglot::testing::write_file;

TEST_CASE("load_dictionary parses and wraps phone sequences") {
  TempDir dir("dict");
  write_file(dir.file("en.tsv"),
             "# comment line\n"
             "cats\tk \xc3\xa6 t s\n"
             "dog\td o g\n"
             "\n"
             "dog\td o g\n");
  const Corpus c = load_dictionary(dir.file("en.tsv"), "en");
  REQUIRE(c.size() == 3);
  CHECK(c.entries[0].word == "cats");
  CHECK(c.entries[0].phones ==
        std::vector<std::string>{"<s>", "k", "\xc3\xa6", "t", "s", "</s>"});
  CHECK(c.entries[0].language == "en");
  // duplicate words stay distinct entries
  CHECK(c.entries[1] == c.entries[2]);
  // 4 + 3 + 3 phones plus two controls per entry
  CHECK(c.token_count() == 10 + 6);
}

TEST_CASE("load_dictionary rejects malformed lines with their line number") {
  TempDir dir("dict_bad");
  write_file(dir.file("a.tsv"), "ok\tp a\nbroken line without tab\n");
  CHECK_THROWS_WITH_AS(load_dictionary(dir.file("a.tsv"), "x"), doctest::Contains(":2:"),
                       std::runtime_error);

  write_file(dir.file("b.tsv"), "ok\tp a\nword\t\n");
  CHECK_THROWS_WITH_AS(load_dictionary(dir.file("b.tsv"), "x"),
                       doctest::Contains("empty phone field"), std::runtime_error);

  write_file(dir.file("c.tsv"), "# only comments\n");
  CHECK_THROWS_WITH_AS(load_dictionary(dir.file("c.tsv"), "x"), doctest::Contains("no entries"),
                       std::runtime_error);

  CHECK_THROWS_AS(load_dictionary(dir.file("missing.tsv"), "x"), std::runtime_error);
}

TEST_CASE("dictionary round trip is the identity") {
  TempDir dir("dict_rt");
  write_file(dir.file("in.tsv"), "cats\tk a t s\nword\tw o r d\na\ta\n");
  const Corpus first = load_dictionary(dir.file("in.tsv"), "xy");
  save_dictionary(first, dir.file("out.tsv"));
  const Corpus second = load_dictionary(dir.file("out.tsv"), "xy");
  CHECK(first == second);
}

TEST_CASE("build_vocab takes the union of phones and adds symbols") {
  const Corpus a = testing::corpus_from("A", {"p a", "a p"});
  const Corpus b = testing::corpus_from("B", {"p o"});
  const std::vector<Corpus> corpora{a, b};
  const Vocab v = build_vocab(corpora);
  CHECK(v.size() == 7);  // {a, o, p} + <s> + </s> + two language symbols
  CHECK(v.phones() == std::vector<std::string>{"a", "o", "p"});
  CHECK(v.languages() == std::vector<std::string>{"A", "B"});
  CHECK(v.symbol(v.bos()) == "<s>");
  CHECK(v.symbol(v.eos()) == "</s>");
  CHECK(v.symbol(v.language_symbol_index(0)) == "<lang:A>");
  CHECK_FALSE(v.unk().has_value());

  const std::vector<Corpus> single{a};
  CHECK(build_vocab(single).size() == 2 + 3);
}

TEST_CASE("build_vocab is order independent") {
  const Corpus a = testing::corpus_from("A", {"p a", "k o"});
  const Corpus b = testing::corpus_from("B", {"p o", "t s"});
  const Corpus c = testing::corpus_from("C", {"x y z"});
  const std::vector<Corpus> abc{a, b, c};
  const std::vector<Corpus> cba{c, b, a};
  CHECK(build_vocab(abc) == build_vocab(cba));
}

TEST_CASE("vocab with unk maps unknown symbols under the allow policy") {
  const Corpus a = testing::corpus_from("A", {"p a"});
  const std::vector<Corpus> corpora{a};
  const Vocab v = build_vocab(corpora, true);
  REQUIRE(v.unk().has_value());
  CHECK(index_symbol(v, "zz", UnknownPolicy::kMapToUnk) == *v.unk());
  CHECK_THROWS_WITH_AS(index_symbol(v, "zz", UnknownPolicy::kReject), doctest::Contains("zz"),
                       std::runtime_error);

  const Vocab no_unk = build_vocab(corpora, false);
  CHECK_THROWS_AS(index_symbol(no_unk, "zz", UnknownPolicy::kMapToUnk), std::runtime_error);
}

TEST_CASE("split produces the 75/15/10 partition of 100 entries") {
  std::vector<std::string> words;
  for (int i = 0; i < 100; ++i) words.push_back("a b c");
  const Corpus c = testing::corpus_from("A", words);
  const SplitResult s = split(c, 0.15, 0.10, 7);
  CHECK(s.train.size() == 75);
  CHECK(s.dev.size() == 15);
  CHECK(s.test.size() == 10);
}

TEST_CASE("split with zero fractions keeps everything in train") {
  const Corpus c = testing::corpus_from("A", {"a", "b", "c", "a b"});
  const SplitResult s = split(c, 0.0, 0.0, 3);
  CHECK(s.train.size() == 4);
  CHECK(s.dev.empty());
  CHECK(s.test.empty());
}

TEST_CASE("split is deterministic in the seed and covers the corpus") {
  std::vector<std::string> words;
  for (int i = 0; i < 37; ++i) words.push_back("a b");
  Corpus c = testing::corpus_from("A", words);
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    c.entries[i].word = "w" + std::to_string(i);  // distinguishable entries
  }
  const SplitResult s1 = split(c, 0.15, 0.10, 11);
  const SplitResult s2 = split(c, 0.15, 0.10, 11);
  CHECK(s1.train == s2.train);
  CHECK(s1.dev == s2.dev);
  CHECK(s1.test == s2.test);

  const SplitResult s3 = split(c, 0.15, 0.10, 12);
  CHECK(s3.train.size() == s1.train.size());
  CHECK(s3.dev.size() == s1.dev.size());
  CHECK(s3.test.size() == s1.test.size());
  CHECK(s3.train != s1.train);  // different order for a different seed

  // partition: pairwise disjoint words, union equals the corpus
  std::vector<std::string> seen;
  for (const Corpus* part : {&s1.train, &s1.dev, &s1.test}) {
    for (const Entry& e : part->entries) seen.push_back(e.word);
  }
  std::sort(seen.begin(), seen.end());
  std::vector<std::string> all;
  for (const Entry& e : c.entries) all.push_back(e.word);
  std::sort(all.begin(), all.end());
  CHECK(seen == all);
}

TEST_CASE("split refuses corpora smaller than 3 entries") {
  const Corpus c = testing::corpus_from("A", {"a", "b"});
  CHECK_THROWS_AS(split(c, 0.15, 0.1, 1), std::invalid_argument);
  const Corpus c3 = testing::corpus_from("A", {"a", "b", "c"});
  CHECK_THROWS_AS(split(c3, 0.5, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(c3, -0.1, 0.1, 1), std::invalid_argument);
}

TEST_CASE("make_batches groups 7 sequences into 3+3+1") {
  const Corpus c =
      testing::corpus_from("A", {"a", "a b", "b", "a a", "b b", "a b a", "b a"});
  const std::vector<Corpus> corpora{c};
  const Vocab v = build_vocab(corpora);
  const std::vector<Batch> batches = make_batches(c, v, 3, 3, 5);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].sequences.size() == 3);
  CHECK(batches[1].sequences.size() == 3);
  CHECK(batches[2].sequences.size() == 1);
  CHECK(batches[0].context_width == 3);
  CHECK(batches[0].vocab_size == v.size());
}

TEST_CASE("context windows left-pad with <s>") {
  const Corpus c = testing::corpus_from("A", {"a b"});
  const std::vector<Corpus> corpora{c};
  const Vocab v = build_vocab(corpora);
  const std::vector<std::size_t> seq = index_sequence(v, c.entries[0].phones,
                                                      UnknownPolicy::kReject);
  const std::size_t bos = v.bos();
  const std::size_t a = v.index_of("a");
  const std::size_t b = v.index_of("b");
  // targets a, b, </s> with contexts (<s>,<s>,<s>), (<s>,<s>,a), (<s>,a,b)
  CHECK(context_window(seq, 1, 3, bos) == std::vector<std::size_t>{bos, bos, bos});
  CHECK(context_window(seq, 2, 3, bos) == std::vector<std::size_t>{bos, bos, a});
  CHECK(context_window(seq, 3, 3, bos) == std::vector<std::size_t>{bos, a, b});
  CHECK_THROWS_AS(context_window(seq, 0, 3, bos), std::out_of_range);
}

TEST_CASE("masks cover every non-<s> token exactly once") {
  const Corpus c = testing::corpus_from(
      "A", {"a", "a b", "b a a", "a b a b", "b", "b b a", "a a a a a"});
  const std::vector<Corpus> corpora{c};
  const Vocab v = build_vocab(corpora);
  const std::vector<Batch> batches = make_batches(c, v, 3, 2, 9);

  std::size_t unmasked = 0;
  std::map<std::size_t, std::size_t> target_counts;
  for (const Batch& b : batches) {
    for (std::size_t s = 0; s < b.sequences.size(); ++s) {
      for (std::size_t t = 0; t < b.max_len; ++t) {
        if (b.target_mask[s][t]) {
          ++unmasked;
          ++target_counts[b.sequences[s][t]];
        }
      }
    }
  }
  CHECK(unmasked == c.token_count() - c.size());

  std::map<std::size_t, std::size_t> token_counts;
  for (const Entry& e : c.entries) {
    for (std::size_t i = 1; i < e.phones.size(); ++i) {
      ++token_counts[v.index_of(e.phones[i])];
    }
  }
  CHECK(target_counts == token_counts);
}

TEST_CASE("loaders survive arbitrary byte soup") {
  TempDir dir("fuzzish");
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    std::string blob;
    const std::size_t len = rng.below(400);
    for (std::size_t i = 0; i < len; ++i) {
      const char pool[] = "ab\t\n 01#\xc3\xa6,x.-";
      blob += pool[rng.below(sizeof(pool) - 1)];
    }
    write_file(dir.file("f.txt"), blob);
    try {
      (void)load_dictionary(dir.file("f.txt"), "L");
    } catch (const std::runtime_error&) {
    }
  }
}

TEST_CASE("make_batches is deterministic in the seed") {
  const Corpus c = testing::corpus_from("A", {"a b", "b a", "a", "b", "a a b"});
  const std::vector<Corpus> corpora{c};
  const Vocab v = build_vocab(corpora);
  const std::vector<Batch> b1 = make_batches(c, v, 2, 2, 123);
  const std::vector<Batch> b2 = make_batches(c, v, 2, 2, 123);
  REQUIRE(b1.size() == b2.size());
  for (std::size_t i = 0; i < b1.size(); ++i) {
    CHECK(b1[i].sequences == b2[i].sequences);
    CHECK(b1[i].languages == b2[i].languages);
  }
}
