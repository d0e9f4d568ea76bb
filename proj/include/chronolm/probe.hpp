#pragma once

#include <map>
#include <string>
#include <vector>

#include "chronolm/checkpoint.hpp"
#include "chronolm/corpus.hpp"
#include "chronolm/logreg.hpp"
#include "chronolm/vocab.hpp"

namespace chronolm {

enum class ProbeTask { kMajor, kSub, kCrossfield };

ProbeTask probe_task_from_name(const std::string& name);
const char* probe_task_name(ProbeTask task);

// major: first segment of the primary category ("cs.AI" -> "cs");
// sub: full primary category string;
// crossfield: 1 when categories span more than one major.
struct ProbeLabels {
  std::vector<int> labels;               // aligned with the input docs
  std::vector<std::string> class_names;  // index -> name ("0"/"1" for crossfield)
};
ProbeLabels derive_labels(const std::vector<RawDocument>& docs, ProbeTask task);

struct SampleSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  bool scaled_down = false;
};
// Disjoint seeded uniform samples of {0..n-1}; scales the requested sizes
// down proportionally when n < n_train + n_test.
SampleSplit sample_split(std::size_t n, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed);

struct PerfMatrixOptions {
  int runs = 50;
  std::uint64_t master_seed = 7;
  int n_train = 1600;
  int n_test = 200;
  bool ablate_second_half = false;  // keep only the back half of each abstract
  MarkupMode markup = MarkupMode::kLightweightLatex;
  int threads = 1;
};

struct PerformanceMatrix {
  std::vector<int> model_years;
  std::vector<int> data_years;
  std::vector<MatD> raw;           // one model_years x data_years matrix per run
  MatD summary;                    // P-hat
  std::vector<int> flagged_columns;  // constant columns mapped to 0.5
};

// Mean over runs, per-column min-max to [0,1], then column-wise subtraction
// of the diagonal entry. Constant columns normalize to 0.5 and are flagged.
MatD summarize_perf(const std::vector<MatD>& raw,
                    const std::vector<int>& model_years,
                    const std::vector<int>& data_years,
                    std::vector<int>* flagged_columns = nullptr);

// F1 of checkpoints x data years over `runs` seeded resamples. Cell (t, tau, r)
// derives its seed as hash(master_seed, t, tau, r), so any execution schedule
// produces identical matrices.
PerformanceMatrix build_perf_matrix(const std::vector<const Checkpoint*>& series,
                                    const Vocabulary& vocab,
                                    const std::vector<RawDocument>& docs,
                                    ProbeTask task,
                                    const PerfMatrixOptions& options);

// Per-year probability of `token` at the [MASK] position of the carrier
// sentence. Errors on out-of-vocabulary tokens.
std::map<int, double> track_token_probability(
    const std::vector<const Checkpoint*>& series, const Vocabulary& vocab,
    const std::string& carrier_sentence, const std::string& token);

struct PcaResult {
  MatD coords;               // n x 2 scores
  double explained[2];       // fractions of total variance
  MatD components;           // dim x 2 orthonormal loadings
  std::vector<std::string> tensor_names;
};

// PCA of flattened selected tensors via the n x n Gram matrix (n checkpoints
// << flattened dimension). Signs fixed by making each component's largest-
// magnitude loading positive.
PcaResult pca_weights(const std::vector<const Checkpoint*>& checkpoints,
                      const std::string& name_glob);

struct MwuResult {
  double u = 0.0;            // U statistic of x over y (ties count 1/2)
  double p_two_sided = 1.0;
  double p_one_sided_less = 1.0;  // P(U' <= U_obs)
  bool exact = false;
};

enum class MwuMethod { kAuto, kExact, kNormalApprox };

// Exact enumeration over C(n+m, n) assignments when min(n, m) <= 8 (kAuto);
// otherwise normal approximation with tie and continuity corrections.
MwuResult mann_whitney_u(const std::vector<double>& x,
                         const std::vector<double>& y,
                         MwuMethod method = MwuMethod::kAuto);

}  // namespace chronolm
