#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "chronolm/common.hpp"
#include "chronolm/rng.hpp"
#include "chronolm/sha256.hpp"
#include "chronolm/vocab.hpp"

using namespace chronolm;

namespace {

CorpusSlice slice_of(int year, std::vector<std::string> sentences) {
  CorpusSlice s;
  s.year = year;
  for (auto& t : sentences) s.sentences.push_back({"d", year, std::move(t)});
  return s;
}

}  // namespace

TEST_CASE("count_words: direct counts") {
  std::map<int, CorpusSlice> slices;
  slices[2009] = slice_of(2009, {"the cat", "the dog"});
  auto counts = count_words(slices);
  CHECK(counts.at("the") == 2);
  CHECK(counts.at("cat") == 1);
  CHECK(counts.at("dog") == 1);
}

TEST_CASE("count_words: bracketed specials are single tokens") {
  std::map<int, CorpusSlice> slices;
  slices[2009] = slice_of(2009, {"see [CITE] here"});
  auto counts = count_words(slices);
  CHECK(counts.at("[CITE]") == 1);
  CHECK(counts.count("[") == 0);
  CHECK(counts.count("cite") == 0);

  std::map<int, CorpusSlice> empty;
  CHECK(count_words(empty).empty());
}

TEST_CASE("tokenize splits at punctuation") {
  auto toks = tokenize_words("state-of-the-art results.");
  REQUIRE(toks.size() == 9);
  CHECK(toks[0] == "state");
  CHECK(toks[1] == "-");
  CHECK(toks[8] == ".");
}

TEST_CASE("build_vocab: frequency threshold boundary") {
  std::map<std::string, std::int64_t> counts{{"a", 100}, {"b", 49}};
  Vocabulary v = build_vocab(counts, 50);
  REQUIRE(v.size() == kNumSpecials + 1);
  CHECK(v.token(kNumSpecials) == "a");
  CHECK_FALSE(v.id_of("b").has_value());
}

TEST_CASE("build_vocab: all below threshold leaves only specials") {
  std::map<std::string, std::int64_t> counts{{"a", 1}, {"b", 2}};
  Vocabulary v = build_vocab(counts, 50);
  CHECK(v.size() == kNumSpecials);
}

TEST_CASE("build_vocab: ties break lexicographically, truncation respected") {
  std::map<std::string, std::int64_t> counts{
      {"zeta", 60}, {"beta", 60}, {"alpha", 60}, {"top", 100}};
  Vocabulary v = build_vocab(counts, 50);
  CHECK(v.token(kNumSpecials + 0) == "top");
  CHECK(v.token(kNumSpecials + 1) == "alpha");
  CHECK(v.token(kNumSpecials + 2) == "beta");
  CHECK(v.token(kNumSpecials + 3) == "zeta");

  Vocabulary capped = build_vocab(counts, 50, kNumSpecials + 2);
  CHECK(capped.size() == kNumSpecials + 2);
  CHECK(capped.token(kNumSpecials + 1) == "alpha");

  CHECK_THROWS_AS(build_vocab(counts, 50, kNumSpecials - 1), ConfigError);
}

TEST_CASE("build_vocab monotone in min_count") {
  Rng rng(7);
  std::map<std::string, std::int64_t> counts;
  for (int i = 0; i < 200; ++i)
    counts["w" + std::to_string(i)] = std::int64_t(rng.uniform_int(120));
  int prev_size = 1 << 30;
  for (std::int64_t mc : {1, 10, 40, 80, 200}) {
    Vocabulary v = build_vocab(counts, mc);
    CHECK(v.size() <= prev_size);
    prev_size = v.size();
  }
}

TEST_CASE("specials always present with fixed ids") {
  Vocabulary v = build_vocab({}, 1);
  CHECK(v.id_of("[PAD]") == 0);
  CHECK(v.id_of("[UNK]") == 1);
  CHECK(v.id_of("[CLS]") == 2);
  CHECK(v.id_of("[SEP]") == 3);
  CHECK(v.id_of("[MASK]") == 4);
  CHECK(v.id_of("[CITE]").has_value());
  CHECK(v.id_of("[EQU]").has_value());
  CHECK(v.id_of("[FIG]").has_value());
  CHECK(v.id_of("[REF]").has_value());
  CHECK(v.id_of("[SEC]").has_value());
}

TEST_CASE("encode: layout, unk, truncation") {
  std::map<std::string, std::int64_t> counts{{"w1", 9}, {"w2", 8}, {"w3", 7}};
  Vocabulary v = build_vocab(counts, 1);
  EncodedSequence seq = encode("w1 w2 w3", v, 8);
  CHECK(seq.ids == std::vector<int>{kClsId, *v.id_of("w1"), *v.id_of("w2"),
                                    *v.id_of("w3"), kSepId, kPadId, kPadId,
                                    kPadId});
  CHECK(seq.attention_mask ==
        std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0, 0, 0});
  CHECK(seq.length == 5);

  EncodedSequence with_unk = encode("w1 zzz", v, 8);
  CHECK(with_unk.ids[2] == kUnkId);

  EncodedSequence truncated = encode("w1 w2 w3 w1 w2 w3 w1 w2", v, 5);
  CHECK(truncated.ids.size() == 5);
  CHECK(truncated.ids[0] == kClsId);
  CHECK(truncated.ids[4] == kSepId);
  CHECK(truncated.ids[1] == *v.id_of("w1"));
  CHECK(truncated.ids[3] == *v.id_of("w3"));
}

TEST_CASE("encode/decode round-trip for in-vocabulary sentences") {
  std::map<std::string, std::int64_t> counts{
      {"alpha", 5}, {"beta", 5}, {"gamma", 5}, {"delta", 5}};
  Vocabulary v = build_vocab(counts, 1);
  Rng rng(17);
  std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> sent;
    const int n = 1 + int(rng.uniform_int(10));
    for (int i = 0; i < n; ++i) sent.push_back(words[rng.uniform_int(4)]);
    std::string text;
    for (const auto& w : sent) text += w + " ";
    EncodedSequence seq = encode(text, v, 16);
    CHECK(decode(seq.ids, v) == sent);
  }
}

TEST_CASE("vocab_jaccard") {
  auto make = [](std::map<std::string, std::int64_t> counts) {
    return build_vocab(counts, 1);
  };
  Vocabulary v1 = make({{"a", 2}, {"b", 3}});
  Vocabulary v2 = make({{"b", 1}, {"c", 9}});
  Vocabulary same = make({{"a", 7}, {"b", 1}});
  Vocabulary empty = make({});
  CHECK(vocab_jaccard(v1, same) == 1.0);
  CHECK(vocab_jaccard(v1, v2) == doctest::Approx(1.0 / 3.0));
  CHECK(vocab_jaccard(v1, make({{"x", 1}, {"y", 1}})) == 0.0);
  CHECK(vocab_jaccard(empty, empty) == 1.0);
  CHECK(vocab_jaccard(v1, v2) == vocab_jaccard(v2, v1));
}

TEST_CASE("vocab tsv round-trip") {
  namespace fs = std::filesystem;
  std::map<std::string, std::int64_t> counts{{"alpha", 51}, {"beta", 50}};
  Vocabulary v = build_vocab(counts, 50);
  const std::string path =
      (fs::temp_directory_path() / "chronolm_vocab_test.tsv").string();
  v.save_tsv(path);
  Vocabulary loaded = Vocabulary::load_tsv(path);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.id_of("alpha") == v.id_of("alpha"));
  CHECK(loaded.count_of("beta") == 50);
  fs::remove(path);
}

TEST_CASE("sha256 standard vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("rng streams are deterministic and well distributed") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += c.uniform();
  mean /= n;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
  Rng d(1);
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = d.normal();
    m2 += z * z;
  }
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.05));
}
