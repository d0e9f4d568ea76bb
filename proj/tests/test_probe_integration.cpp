#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "chronolm/probe.hpp"
#include "chronolm/series.hpp"
#include "chronolm/synth.hpp"

using namespace chronolm;

namespace {

struct Pipeline {
  std::vector<RawDocument> docs;
  std::map<int, CorpusSlice> slices;
  Vocabulary vocab;
  std::vector<Checkpoint> ckpts;

  Pipeline() {
    SynthCorpusOptions opt;
    opt.year_min = 2009;
    opt.year_max = 2011;
    opt.docs_per_year = 60;
    opt.era_switch_year = 2011;
    opt.seed = 77;
    docs = synth_corpus(opt);
    slices = build_slices(docs, CorpusBuildOptions{}).slices;
    vocab = build_vocab(count_words(slices), 1);

    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 16;
    cfg.d_ff = 32;
    cfg.max_len = 16;
    cfg.vocab_size = vocab.size();
    cfg.seed = 4;

    TrainHp hp;
    hp.epochs = 1;
    hp.batch_size = 16;
    hp.seed = 9;
    Checkpoint current = pretrain_base(slices, vocab, cfg, hp, 2009);
    ckpts.push_back(current);
    for (int year = 2010; year <= 2011; ++year) {
      current = continual_step(ckpts.back(), slices.at(year), vocab, hp);
      ckpts.push_back(current);
    }
  }

  std::vector<const Checkpoint*> ptrs() const {
    std::vector<const Checkpoint*> p;
    for (const auto& c : ckpts) p.push_back(&c);
    return p;
  }
};

}  // namespace

TEST_CASE("perf matrix: shape, determinism, zero diagonal, parallel equality") {
  Pipeline pipe;

  PerfMatrixOptions opt;
  opt.runs = 2;
  opt.master_seed = 5;
  opt.n_train = 40;
  opt.n_test = 12;
  PerformanceMatrix pm =
      build_perf_matrix(pipe.ptrs(), pipe.vocab, pipe.docs, ProbeTask::kMajor, opt);

  CHECK(pm.model_years == std::vector<int>{2009, 2010, 2011});
  CHECK(pm.data_years == pm.model_years);
  REQUIRE(pm.raw.size() == 2);
  CHECK(pm.raw[0].rows() == 3);
  CHECK(pm.raw[0].cols() == 3);
  for (Index i = 0; i < 3; ++i) CHECK(pm.summary(i, i) == 0.0);
  for (const auto& run : pm.raw) {
    CHECK(run.minCoeff() >= 0.0);
    CHECK(run.maxCoeff() <= 1.0);
  }

  PerformanceMatrix again =
      build_perf_matrix(pipe.ptrs(), pipe.vocab, pipe.docs, ProbeTask::kMajor, opt);
  CHECK((pm.summary - again.summary).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t r = 0; r < pm.raw.size(); ++r)
    CHECK((pm.raw[r] - again.raw[r]).cwiseAbs().maxCoeff() == 0.0);

  // 4 threads reproduce the serial bytes (per-cell seeding)
  PerfMatrixOptions par = opt;
  par.threads = 4;
  PerformanceMatrix parallel =
      build_perf_matrix(pipe.ptrs(), pipe.vocab, pipe.docs, ProbeTask::kMajor, par);
  for (std::size_t r = 0; r < pm.raw.size(); ++r)
    CHECK((pm.raw[r] - parallel.raw[r]).cwiseAbs().maxCoeff() == 0.0);

  // ablated variant also runs end to end
  PerfMatrixOptions ablate = opt;
  ablate.ablate_second_half = true;
  PerformanceMatrix pm2 = build_perf_matrix(pipe.ptrs(), pipe.vocab, pipe.docs,
                                            ProbeTask::kMajor, ablate);
  CHECK(pm2.raw.size() == 2);

  // crossfield task exercises the binary-F1 path
  PerformanceMatrix pm3 = build_perf_matrix(pipe.ptrs(), pipe.vocab, pipe.docs,
                                            ProbeTask::kCrossfield, opt);
  CHECK(pm3.summary.rows() == 3);
}

TEST_CASE("track_token_probability: values, flat curve, oov error") {
  Pipeline pipe;
  auto series = pipe.ptrs();

  auto probs = track_token_probability(series, pipe.vocab, kEraCarrier,
                                       kEraLateToken);
  REQUIRE(probs.size() == 3);
  for (const auto& [year, p] : probs) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }

  // constant series: identical checkpoints give a flat curve
  std::vector<const Checkpoint*> constant = {series[0], series[0], series[0]};
  // distinct years are required for the map keys; use copies with patched meta
  Checkpoint c1 = *series[0];
  Checkpoint c2 = *series[0];
  c2.meta["trained_through_year"] = 2010;
  Checkpoint c3 = *series[0];
  c3.meta["trained_through_year"] = 2011;
  auto flat = track_token_probability({&c1, &c2, &c3}, pipe.vocab, kEraCarrier,
                                      kEraLateToken);
  REQUIRE(flat.size() == 3);
  const double first = flat.begin()->second;
  for (const auto& [year, p] : flat) CHECK(p == first);

  CHECK_THROWS_WITH_AS(
      track_token_probability(series, pipe.vocab, kEraCarrier, "nosuchword"),
      doctest::Contains("whole-word"), RuntimeError);

  // interpolated midpoint yields a well-defined probability distribution
  Checkpoint mid = interpolate(*series[0], *series[2], 0.5);
  FillMaskResult fm = fill_mask(mid.params, pipe.vocab, kEraCarrier, 3);
  CHECK(fm.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-6));
}
