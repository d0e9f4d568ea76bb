#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "chronolm/adam.hpp"
#include "chronolm/corpus.hpp"
#include "chronolm/model.hpp"
#include "chronolm/rng.hpp"
#include "chronolm/vocab.hpp"

namespace chronolm {

struct TrainHp {
  double lr = 3e-4;
  int batch_size = 16;
  int epochs = 2;
  std::uint64_t seed = 1;
  double weight_decay = 0.01;
  // Replacement draws for the 10% random-token branch come from the ids seen
  // in the training corpus, keeping unseen embedding rows bit-identical.
  // Set false for uniform draws over the full non-special vocabulary.
  bool restrict_random_pool = true;
};

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per optimizer step
  long steps = 0;
  int skipped_batches = 0;  // batches with zero masked positions
};

// From-scratch or continued MLM training over the given slices. Sentences are
// re-shuffled per epoch and masking is re-drawn per (epoch, batch): dynamic
// masking in the RoBERTa sense.
template <class S>
TrainResult train_mlm(ModelParams<S>& params,
                      const std::vector<const CorpusSlice*>& slices,
                      const Vocabulary& vocab, const TrainHp& hp) {
  if (params.config.vocab_size != vocab.size())
    throw ConfigError("model vocab_size does not match the vocabulary");
  if (hp.batch_size <= 0) throw ConfigError("batch_size must be positive");

  std::vector<EncodedSequence> encoded;
  std::set<int> seen_ids;
  for (const CorpusSlice* slice : slices) {
    for (const auto& sentence : slice->sentences) {
      EncodedSequence seq = encode(sentence.text, vocab, params.config.max_len);
      for (int i = 0; i < seq.length; ++i) {
        const int id = seq.ids[std::size_t(i)];
        if (id >= kNumSpecials) seen_ids.insert(id);
      }
      encoded.push_back(std::move(seq));
    }
  }
  std::vector<int> random_pool(seen_ids.begin(), seen_ids.end());
  const std::vector<int>* pool =
      hp.restrict_random_pool ? &random_pool : nullptr;

  TrainResult result;
  if (encoded.empty() || hp.epochs == 0) return result;

  Adam<S> adam(params.tensor_refs(),
               AdamConfig{hp.lr, 0.9, 0.999, 1e-8, hp.weight_decay});
  ModelGrads<S> grads(params.config);
  auto grad_refs = grads.tensor_refs();

  std::vector<std::size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), std::size_t(0));

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(hp.seed, tag_seed("shuffle"), std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);

    const std::size_t n_batches =
        (encoded.size() + std::size_t(hp.batch_size) - 1) / std::size_t(hp.batch_size);
    for (std::size_t bi = 0; bi < n_batches; ++bi) {
      std::vector<EncodedSequence> batch;
      const std::size_t begin = bi * std::size_t(hp.batch_size);
      const std::size_t end = std::min(encoded.size(), begin + std::size_t(hp.batch_size));
      for (std::size_t i = begin; i < end; ++i)
        batch.push_back(encoded[order[i]]);

      MaskedBatch masked = apply_masking(
          batch, params.config.vocab_size,
          derive_seed(hp.seed, tag_seed("mask"), std::uint64_t(epoch), bi), pool);

      Rng dropout_rng(derive_seed(hp.seed, tag_seed("dropout"),
                                  std::uint64_t(epoch), bi));
      Rng* drop = params.config.dropout > 0.0 ? &dropout_rng : nullptr;

      for (auto& r : grad_refs) std::fill(r.data, r.data + r.size(), S(0));
      int masked_count = 0;
      const double loss =
          mlm_loss_and_grads(params, masked, &grads, drop, &masked_count);
      if (masked_count == 0) {
        ++result.skipped_batches;
        continue;
      }
      if (!std::isfinite(loss))
        throw RuntimeError("training diverged: non-finite loss at step " +
                           std::to_string(result.steps + 1) + " (epoch " +
                           std::to_string(epoch) + ")");
      adam.step(params.tensor_refs(), grad_refs);
      result.loss_curve.push_back(loss);
      ++result.steps;
    }
  }
  return result;
}

}  // namespace chronolm
