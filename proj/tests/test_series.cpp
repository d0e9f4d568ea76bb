#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "chronolm/io.hpp"
#include "chronolm/series.hpp"

using namespace chronolm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("chronolm_series_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Vocabulary small_vocab(const std::vector<std::string>& words) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& w : words) counts[w] = 100;
  return build_vocab(counts, 1);
}

ModelConfig small_config(int vocab) {
  ModelConfig c;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_model = 16;
  c.d_ff = 32;
  c.max_len = 12;
  c.vocab_size = vocab;
  c.seed = 3;
  return c;
}

CorpusSlice slice_of(int year, const std::vector<std::string>& sentences) {
  CorpusSlice s;
  s.year = year;
  int i = 0;
  for (const auto& t : sentences)
    s.sentences.push_back({"d" + std::to_string(i++), year, t});
  return s;
}

bool params_equal(const ModelParams<float>& a, const ModelParams<float>& b) {
  auto ra = a.tensor_refs();
  auto rb = b.tensor_refs();
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (!std::equal(ra[i].data, ra[i].data + ra[i].size(), rb[i].data))
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("checkpoint: save/load/save produces identical bytes") {
  TempDir tmp;
  ModelConfig cfg = small_config(30);
  Checkpoint ckpt(ModelParams<float>::init_random(cfg));
  ckpt.meta["trained_through_year"] = 2008;
  ckpt.meta["total_steps"] = 17;
  ckpt.meta["lr"] = 3e-4;

  const std::string p1 = (tmp.path / "a.clm").string();
  const std::string p2 = (tmp.path / "b.clm").string();
  save_checkpoint(ckpt, p1);
  Checkpoint loaded = load_checkpoint(p1);
  save_checkpoint(loaded, p2);
  CHECK(read_text_file(p1) == read_text_file(p2));
  CHECK(loaded.trained_through_year() == 2008);
  CHECK(loaded.config == cfg);
  CHECK(params_equal(loaded.params, ckpt.params));
}

TEST_CASE("checkpoint: truncated file is a typed error") {
  TempDir tmp;
  ModelConfig cfg = small_config(30);
  Checkpoint ckpt(ModelParams<float>::init_random(cfg));
  const std::string path = (tmp.path / "t.clm").string();
  save_checkpoint(ckpt, path);
  std::string bytes = read_text_file(path);
  write_text_file(path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  write_text_file(path, bytes.substr(0, 10));
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}

TEST_CASE("checkpoint: version and magic are enforced") {
  TempDir tmp;
  ModelConfig cfg = small_config(30);
  Checkpoint ckpt(ModelParams<float>::init_random(cfg));
  const std::string path = (tmp.path / "v.clm").string();
  save_checkpoint(ckpt, path);
  std::string bytes = read_text_file(path);

  std::string bumped = bytes;
  bumped[8] = 2;  // version u32 little-endian
  write_text_file(path, bumped);
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       doctest::Contains("unsupported checkpoint version"),
                       FormatError);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  write_text_file(path, bad_magic);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}

TEST_CASE("pretrain_base trains only on slices at or before the base year") {
  Vocabulary vocab = small_vocab({"aa", "bb", "cc", "dd"});
  std::map<int, CorpusSlice> slices;
  slices[2007] = slice_of(2007, {"aa bb cc dd aa bb"});
  slices[2008] = slice_of(2008, {"bb cc dd aa bb cc"});
  slices[2009] = slice_of(2009, {"cc dd aa bb cc dd"});

  ModelConfig cfg = small_config(vocab.size());
  TrainHp hp;
  hp.epochs = 1;
  hp.batch_size = 4;

  Checkpoint base = pretrain_base(slices, vocab, cfg, hp, 2008);
  CHECK(base.trained_through_year() == 2008);
  CHECK(base.meta["slice_years"][0] == 2007);
  CHECK(base.meta["slice_years"][1] == 2008);

  // removing the 2009 slice does not change the result
  std::map<int, CorpusSlice> trimmed(slices);
  trimmed.erase(2009);
  Checkpoint base2 = pretrain_base(trimmed, vocab, cfg, hp, 2008);
  CHECK(params_equal(base.params, base2.params));

  // determinism for a fixed seed
  Checkpoint base3 = pretrain_base(slices, vocab, cfg, hp, 2008);
  CHECK(params_equal(base.params, base3.params));

  std::map<int, CorpusSlice> empty;
  CHECK_THROWS_AS(pretrain_base(empty, vocab, cfg, hp, 2008), ConfigError);
}

TEST_CASE("continual_step: sequencing, metadata, unchanged embeddings") {
  Vocabulary vocab = small_vocab({"aa", "bb", "cc", "dd", "absent"});
  std::map<int, CorpusSlice> slices;
  slices[2008] = slice_of(2008, {"aa bb cc dd aa bb", "bb aa cc dd bb aa"});

  ModelConfig cfg = small_config(vocab.size());
  TrainHp hp;
  hp.epochs = 2;
  hp.batch_size = 4;
  Checkpoint base = pretrain_base(slices, vocab, cfg, hp, 2008);

  CorpusSlice s2009 = slice_of(2009, {"cc dd cc dd cc dd", "dd cc dd cc dd cc"});
  Checkpoint next = continual_step(base, s2009, vocab, hp);
  CHECK(next.trained_through_year() == 2009);
  CHECK(next.total_steps() > base.total_steps());

  // the token "absent" never appears in any slice: bit-identical row
  const int absent_id = *vocab.id_of("absent");
  CHECK(next.params.word_emb.row(absent_id) == base.params.word_emb.row(absent_id));
  // "aa" is absent from the 2009 slice specifically
  const int aa_id = *vocab.id_of("aa");
  CHECK(next.params.word_emb.row(aa_id) == base.params.word_emb.row(aa_id));
  // but trained tokens moved
  const int cc_id = *vocab.id_of("cc");
  CHECK(next.params.word_emb.row(cc_id) != base.params.word_emb.row(cc_id));

  // sequencing errors
  CorpusSlice wrong_year = slice_of(2011, {"cc dd cc dd cc dd"});
  CHECK_THROWS_AS(continual_step(base, wrong_year, vocab, hp), RuntimeError);

  // empty slice: tensors equal, metadata updated
  CorpusSlice empty;
  empty.year = 2009;
  Checkpoint same = continual_step(base, empty, vocab, hp);
  CHECK(same.trained_through_year() == 2009);
  CHECK(params_equal(same.params, base.params));
}

TEST_CASE("interpolate: identities and symmetry") {
  ModelConfig cfg = small_config(30);
  Checkpoint a(ModelParams<float>::init_random(cfg));
  ModelConfig cfg2 = cfg;
  cfg2.seed = 77;
  Checkpoint b(ModelParams<float>::init_random(cfg2));
  // interpolate requires identical configs
  CHECK_THROWS_AS(interpolate(a, b), ConfigError);
  b.config.seed = cfg.seed;
  b.params.config.seed = cfg.seed;

  Checkpoint mid_aa = interpolate(a, a, 0.5);
  CHECK(params_equal(mid_aa.params, a.params));

  Checkpoint at0 = interpolate(a, b, 0.0);
  CHECK(params_equal(at0.params, a.params));
  Checkpoint at1 = interpolate(a, b, 1.0);
  CHECK(params_equal(at1.params, b.params));

  Checkpoint ab = interpolate(a, b, 0.5);
  Checkpoint ba = interpolate(b, a, 0.5);
  CHECK(params_equal(ab.params, ba.params));

  // triangle identity: mix(a, mix(a,b,1), 0.5) == mix(a,b,0.5)
  Checkpoint tri = interpolate(a, interpolate(a, b, 1.0), 0.5);
  CHECK(params_equal(tri.params, ab.params));

  // elementwise arithmetic
  Checkpoint x{ModelParams<float>(cfg)};
  Checkpoint y{ModelParams<float>(cfg)};
  x.params.word_emb.setConstant(0.0f);
  x.params.word_emb.col(0).setConstant(0.0f);
  x.params.word_emb.col(1).setConstant(2.0f);
  y.params.word_emb.col(0).setConstant(2.0f);
  y.params.word_emb.col(1).setConstant(4.0f);
  Checkpoint m = interpolate(x, y, 0.5);
  CHECK(m.params.word_emb(0, 0) == 1.0f);
  CHECK(m.params.word_emb(0, 1) == 3.0f);
}

TEST_CASE("random_matched: moments, determinism, degenerate tensors") {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_model = 64;
  cfg.d_ff = 64;
  cfg.max_len = 16;
  cfg.vocab_size = 300;  // word_emb has 300*64 = 19200 elements
  cfg.seed = 12;
  Checkpoint ref(ModelParams<float>::init_random(cfg));
  ref.params.word_emb.array() += 0.5f;  // non-zero mean

  Checkpoint rnd = random_matched(ref, 42);
  const Index n = ref.params.word_emb.size();
  REQUIRE(n >= 10000);
  const double ref_mean = ref.params.word_emb.cast<double>().mean();
  const double rnd_mean = rnd.params.word_emb.cast<double>().mean();
  const double ref_var =
      (ref.params.word_emb.cast<double>().array() - ref_mean).square().mean();
  const double rnd_var =
      (rnd.params.word_emb.cast<double>().array() - rnd_mean).square().mean();
  CHECK(rnd_mean == doctest::Approx(ref_mean).epsilon(0.01));
  CHECK(rnd_var == doctest::Approx(ref_var).epsilon(0.01));

  Checkpoint rnd2 = random_matched(ref, 42);
  CHECK(params_equal(rnd.params, rnd2.params));
  Checkpoint rnd3 = random_matched(ref, 43);
  CHECK_FALSE(params_equal(rnd.params, rnd3.params));

  // layer-norm gains are all ones in ref: constant tensor equal to its mean
  CHECK((rnd.params.lnf_g.array() == 1.0f).all());
}

TEST_CASE("series registry: chain validation and round-trip") {
  TempDir tmp;
  SeriesRegistry reg;
  reg.base_year = 2008;
  reg.entries = {{2008, "a.clm", "00"}, {2009, "b.clm", "11"}};
  const std::string path = (tmp.path / "series.json").string();
  reg.save(path);
  SeriesRegistry loaded = SeriesRegistry::load(path);
  CHECK(loaded.base_year == 2008);
  REQUIRE(loaded.entries.size() == 2);
  CHECK(loaded.entry(2009).path == "b.clm");
  CHECK(loaded.has_year(2008));
  CHECK_FALSE(loaded.has_year(2010));

  SeriesRegistry gap;
  gap.base_year = 2008;
  gap.entries = {{2008, "a", ""}, {2010, "c", ""}};
  CHECK_THROWS_AS(gap.save((tmp.path / "bad.json").string()), FormatError);
}

TEST_CASE("build_series produces a loadable chain") {
  TempDir tmp;
  Vocabulary vocab = small_vocab({"aa", "bb", "cc", "dd"});
  std::map<int, CorpusSlice> slices;
  slices[2008] = slice_of(2008, {"aa bb cc dd aa bb"});
  slices[2009] = slice_of(2009, {"bb cc dd aa bb cc"});
  slices[2010] = slice_of(2010, {"cc dd aa bb cc dd"});

  ModelConfig cfg = small_config(vocab.size());
  TrainHp hp;
  hp.epochs = 1;
  hp.batch_size = 4;
  SeriesRegistry reg =
      build_series(slices, vocab, cfg, hp, 2008, 2010, tmp.path.string());
  REQUIRE(reg.entries.size() == 3);
  for (const auto& e : reg.entries) {
    Checkpoint c = load_checkpoint(reg.resolve(e));
    CHECK(c.trained_through_year() == e.year);
  }
  SeriesRegistry loaded =
      SeriesRegistry::load((tmp.path / "series.json").string());
  CHECK(loaded.entries.size() == 3);
}
