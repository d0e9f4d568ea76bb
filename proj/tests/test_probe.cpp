#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "chronolm/probe.hpp"
#include "chronolm/rng.hpp"
#include "oracles.hpp"

using namespace chronolm;

TEST_CASE("sample_split: defaults, disjointness, determinism, scaling") {
  SampleSplit s = sample_split(5000, 1600, 200, 9);
  CHECK(s.train.size() == 1600);
  CHECK(s.test.size() == 200);
  CHECK_FALSE(s.scaled_down);
  std::set<std::size_t> train(s.train.begin(), s.train.end());
  for (std::size_t i : s.test) CHECK(train.count(i) == 0);

  SampleSplit again = sample_split(5000, 1600, 200, 9);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);

  // proportional scale-down keeps the 8:1 ratio
  SampleSplit small = sample_split(90, 1600, 200, 9);
  CHECK(small.scaled_down);
  CHECK(small.train.size() + small.test.size() == 90);
  CHECK(small.train.size() == 80);
  CHECK(small.test.size() == 10);

  CHECK_THROWS_AS(sample_split(0, 10, 5, 1), RuntimeError);
}

TEST_CASE("derive_labels: major, sub, crossfield") {
  std::vector<RawDocument> docs(3);
  docs[0] = {"a", 2010, "", "", {"cs.AI", "math.CO"}, ""};
  docs[1] = {"b", 2010, "", "", {"cs.LG"}, ""};
  docs[2] = {"c", 2011, "", "", {"math.CO"}, ""};

  ProbeLabels major = derive_labels(docs, ProbeTask::kMajor);
  CHECK(major.class_names == std::vector<std::string>{"cs", "math"});
  CHECK(major.labels == std::vector<int>{0, 0, 1});

  ProbeLabels sub = derive_labels(docs, ProbeTask::kSub);
  CHECK(sub.labels[0] != sub.labels[1]);

  ProbeLabels cross = derive_labels(docs, ProbeTask::kCrossfield);
  CHECK(cross.labels == std::vector<int>{1, 0, 0});

  std::vector<RawDocument> bad(1);
  bad[0] = {"x", 2010, "", "", {}, ""};
  CHECK_THROWS_AS(derive_labels(bad, ProbeTask::kMajor), FormatError);
}

TEST_CASE("logistic regression: separable data reaches F1 = 1") {
  Rng rng(3);
  MatD x(60, 4);
  std::vector<int> y(60);
  for (Index i = 0; i < 60; ++i) {
    const int cls = int(i) % 2;
    y[std::size_t(i)] = cls;
    for (Index c = 0; c < 4; ++c)
      x(i, c) = rng.normal() + (cls == 1 ? 4.0 : -4.0);
  }
  LogisticRegression clf;
  clf.fit(x, y, 2);
  std::vector<int> pred = clf.predict(x);
  CHECK(binary_f1(y, pred) == 1.0);

  std::vector<int> single(60, 1);
  LogisticRegression degenerate;
  CHECK_THROWS_AS(degenerate.fit(x, single, 2), RuntimeError);
}

TEST_CASE("logistic regression: permuted labels give chance macro-F1") {
  Rng rng(14);
  const int k = 4;
  MatD x(400, 6);
  std::vector<int> y(400);
  for (Index i = 0; i < 400; ++i) {
    y[std::size_t(i)] = int(i) % k;  // balanced, independent of features
    for (Index c = 0; c < 6; ++c) x(i, c) = rng.normal();
  }
  LogisticRegression clf;
  clf.fit(x, y, k, {0.05, 120, 1e-6, true});
  MatD xt(200, 6);
  std::vector<int> yt(200);
  for (Index i = 0; i < 200; ++i) {
    yt[std::size_t(i)] = int(i) % k;
    for (Index c = 0; c < 6; ++c) xt(i, c) = rng.normal();
  }
  const double f1 = macro_f1(yt, clf.predict(xt));
  CHECK(f1 == doctest::Approx(1.0 / k).epsilon(0.45));  // 0.25 +- ~0.1
}

TEST_CASE("summarize_perf: hand-computed 3x3 case") {
  // data years 1..3, model years 1..3, two runs averaging to:
  //   col1: [2,4,6] -> minmax [0,0.5,1] -> subtract diag(0) -> [0,0.5,1]
  //   col2: [4,3,2] -> minmax [1,0.5,0] -> subtract diag(0.5) -> [0.5,0,-0.5]
  //   col3: [1,5,3] -> minmax [0,1,0.5] -> subtract diag(0.5) -> [-0.5,0.5,0]
  std::vector<int> years = {1, 2, 3};
  MatD run1(3, 3), run2(3, 3);
  run1 << 2, 4, 1, 4, 3, 5, 6, 2, 3;
  run2 = run1;
  run1.array() += 0.5;
  run2.array() -= 0.5;  // mean equals the intended matrix
  std::vector<int> flagged;
  MatD hat = summarize_perf({run1, run2}, years, years, &flagged);
  CHECK(flagged.empty());

  MatD want(3, 3);
  want << 0.0, 0.5, -0.5, 0.5, 0.0, 0.5, 1.0, -0.5, 0.0;
  CHECK((hat - want).cwiseAbs().maxCoeff() < 1e-12);
  for (Index i = 0; i < 3; ++i) CHECK(hat(i, i) == 0.0);
}

TEST_CASE("summarize_perf: constant column flagged as 0.5") {
  std::vector<int> years = {1, 2};
  MatD run(2, 2);
  run << 0.7, 0.3, 0.7, 0.9;
  std::vector<int> flagged;
  MatD hat = summarize_perf({run}, years, years, &flagged);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0] == 1);
  CHECK(hat(0, 0) == 0.0);
  CHECK(hat(1, 0) == 0.0);  // 0.5 - 0.5
}

TEST_CASE("summarize_perf: invariant to positive affine rescale of a column") {
  Rng rng(8);
  std::vector<int> years = {1, 2, 3, 4};
  MatD base(4, 4);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) base(r, c) = rng.uniform();
  MatD hat1 = summarize_perf({base}, years, years);

  MatD scaled = base;
  scaled.col(2) = (base.col(2).array() * 3.7 + 0.25).matrix();
  MatD hat2 = summarize_perf({scaled}, years, years);
  CHECK((hat1 - hat2).cwiseAbs().maxCoeff() < 1e-9);

  // entries live in [-1, 1]
  CHECK(hat1.maxCoeff() <= 1.0);
  CHECK(hat1.minCoeff() >= -1.0);
}

TEST_CASE("pca_weights: rank-1 series explains everything") {
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.max_len = 8;
  cfg.vocab_size = 20;
  std::vector<Checkpoint> ckpts;
  for (int i = 0; i < 5; ++i) {
    Checkpoint c{ModelParams<float>(cfg)};
    c.params.word_emb.setConstant(float(i));  // rank-1 direction
    ckpts.push_back(std::move(c));
  }
  std::vector<const Checkpoint*> ptrs;
  for (auto& c : ckpts) ptrs.push_back(&c);
  PcaResult r = pca_weights(ptrs, "embedding.word");
  CHECK(r.explained[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.explained[1] == doctest::Approx(0.0).epsilon(1e-9));
  // coordinates are collinear and ordered
  for (int i = 1; i < 5; ++i)
    CHECK(r.coords(i, 0) - r.coords(i - 1, 0) ==
          doctest::Approx(r.coords(1, 0) - r.coords(0, 0)).epsilon(1e-6));
}

TEST_CASE("pca_weights matches the full eigendecomposition oracle") {
  // 13 checkpoints, 40-dimensional selected tensor (word_emb 5 x 8)
  ModelConfig cfg;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.max_len = 8;
  cfg.vocab_size = kNumSpecials + 5;
  Rng rng(19);
  std::vector<Checkpoint> ckpts;
  MatD rows(13, (kNumSpecials + 5) * 8);
  for (int i = 0; i < 13; ++i) {
    Checkpoint c{ModelParams<float>(cfg)};
    for (Index r = 0; r < c.params.word_emb.rows(); ++r)
      for (Index cc = 0; cc < 8; ++cc)
        c.params.word_emb(r, cc) = float(rng.normal());
    ckpts.push_back(std::move(c));
  }
  std::vector<const Checkpoint*> ptrs;
  for (auto& c : ckpts) ptrs.push_back(&c);
  PcaResult got = pca_weights(ptrs, "embedding.word");

  // the oracle flattens the same way the library does (row of tensor_refs)
  for (int i = 0; i < 13; ++i) {
    auto refs = ptrs[std::size_t(i)]->params.tensor_refs();
    const auto& we = refs[0];
    for (Index k = 0; k < we.size(); ++k) rows(i, k) = double(we.data[k]);
  }
  oracle::PcaOracle want = oracle::pca_full(rows);
  CHECK(got.explained[0] == doctest::Approx(want.explained[0]).epsilon(1e-8));
  CHECK(got.explained[1] == doctest::Approx(want.explained[1]).epsilon(1e-8));
  CHECK((got.coords - want.coords).cwiseAbs().maxCoeff() < 1e-8);

  // components orthonormal
  const double n0 = got.components.col(0).norm();
  const double n1 = got.components.col(1).norm();
  const double dot = got.components.col(0).dot(got.components.col(1));
  CHECK(n0 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(n1 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(dot) < 1e-10);

  // explained variances non-increasing
  CHECK(got.explained[0] >= got.explained[1]);

  CHECK_THROWS_AS(pca_weights({ptrs[0], ptrs[1]}, "embedding.word"), ConfigError);
  CHECK_THROWS_AS(pca_weights(ptrs, "no.such.tensor"), ConfigError);
}

TEST_CASE("mann-whitney: exact enumeration on the spec fixture") {
  MwuResult r = mann_whitney_u({1, 2, 3}, {4, 5, 6});
  CHECK(r.exact);
  CHECK(r.u == 0.0);
  CHECK(r.p_one_sided_less == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(r.p_two_sided == doctest::Approx(0.10).epsilon(1e-12));
}

TEST_CASE("mann-whitney: identical samples give p = 1") {
  MwuResult r = mann_whitney_u({2, 2, 2}, {2, 2, 2});
  CHECK(r.exact);
  CHECK(r.p_two_sided == 1.0);
  CHECK(r.u == 4.5);  // all ties count half: nm/2
}

TEST_CASE("mann-whitney: U(x,y) + U(y,x) = nm") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x, y;
    const std::size_t n = 2 + rng.uniform_int(10);
    const std::size_t m = 2 + rng.uniform_int(10);
    for (std::size_t i = 0; i < n; ++i) x.push_back(double(rng.uniform_int(6)));
    for (std::size_t i = 0; i < m; ++i) y.push_back(double(rng.uniform_int(6)));
    MwuResult a = mann_whitney_u(x, y);
    MwuResult b = mann_whitney_u(y, x);
    CHECK(a.u + b.u == doctest::Approx(double(n * m)).epsilon(1e-12));
  }
}

TEST_CASE("mann-whitney: exact and normal modes agree within 0.05 at n=8") {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 8; ++i) {
      x.push_back(rng.normal());
      y.push_back(rng.normal() + 0.4);
    }
    MwuResult exact = mann_whitney_u(x, y, MwuMethod::kExact);
    MwuResult approx = mann_whitney_u(x, y, MwuMethod::kNormalApprox);
    REQUIRE(exact.exact);
    REQUIRE_FALSE(approx.exact);
    CHECK(std::abs(exact.p_two_sided - approx.p_two_sided) < 0.05);
    CHECK(std::abs(exact.p_one_sided_less - approx.p_one_sided_less) < 0.05);
  }
}

TEST_CASE("mann-whitney normal approximation is calibrated") {
  // large samples from the same distribution: p should be well above 0.05
  Rng rng(31);
  int rejections = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
      x.push_back(rng.normal());
      y.push_back(rng.normal());
    }
    MwuResult r = mann_whitney_u(x, y);
    CHECK_FALSE(r.exact);
    if (r.p_two_sided < 0.05) ++rejections;
  }
  CHECK(rejections <= 8);  // ~5% nominal rate
}
