#pragma once

#include <map>
#include <string>
#include <vector>

#include "chronolm/checkpoint.hpp"
#include "chronolm/corpus.hpp"
#include "chronolm/train.hpp"
#include "chronolm/vocab.hpp"

namespace chronolm {

struct SeriesEntry {
  int year = 0;
  std::string path;  // relative to the registry file
  std::string sha256;
};

struct SeriesRegistry {
  int base_year = 0;
  std::vector<SeriesEntry> entries;  // years strictly increasing from base_year

  void validate() const;
  void save(const std::string& path) const;
  static SeriesRegistry load(const std::string& path);

  // directory of the registry file, used to resolve entry paths
  std::string root;
  std::string resolve(const SeriesEntry& e) const;
  const SeriesEntry& entry(int year) const;
  bool has_year(int year) const;
};

// From-scratch pretraining on every slice at or before base_year.
Checkpoint pretrain_base(const std::map<int, CorpusSlice>& slices,
                         const Vocabulary& vocab, const ModelConfig& config,
                         const TrainHp& hp, int base_year,
                         TrainResult* train_result = nullptr);

// One epoch on slice_t, optimizer state re-initialized, so the result is a
// pure function of (prev, slice_t, hp). slice_t.year must be prev year + 1.
Checkpoint continual_step(const Checkpoint& prev, const CorpusSlice& slice_t,
                          const Vocabulary& vocab, TrainHp hp,
                          TrainResult* train_result = nullptr);

// One pass over the union of all slices, globally shuffled: the one-time
// comparison model.
Checkpoint pretrain_one_pass(const std::map<int, CorpusSlice>& slices,
                             const Vocabulary& vocab, const ModelConfig& config,
                             TrainHp hp, TrainResult* train_result = nullptr);

// Elementwise (1-lambda)*a + lambda*b; exact at lambda 0 and 1.
Checkpoint interpolate(const Checkpoint& a, const Checkpoint& b,
                       double lambda = 0.5);

// Per-tensor i.i.d. normal draws matching the reference tensor's empirical
// mean and variance.
Checkpoint random_matched(const Checkpoint& ref, std::uint64_t seed);

// Builds base + yearly continual checkpoints under out_dir and writes
// series.json there.
SeriesRegistry build_series(const std::map<int, CorpusSlice>& slices,
                            const Vocabulary& vocab, const ModelConfig& config,
                            const TrainHp& hp, int base_year, int through_year,
                            const std::string& out_dir);

}  // namespace chronolm
