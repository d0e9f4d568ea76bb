#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chronolm/corpus.hpp"

namespace chronolm {

// Reserved ids 0..9, in this order.
inline constexpr const char* kSpecialTokens[] = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "[CITE]", "[EQU]", "[FIG]", "[REF]", "[SEC]"};
inline constexpr int kNumSpecials = 10;
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;

// Whole-word tokenizer shared by counting and encoding: bracketed special
// tokens (any case) come out as one canonical token, letter/digit runs as
// words, every other non-space character as a single token.
std::vector<std::string> tokenize_words(std::string_view text);

class Vocabulary {
 public:
  Vocabulary() = default;

  // tokens: non-special entries in final order; counts aligned with tokens
  static Vocabulary from_tokens(std::vector<std::string> tokens,
                                std::vector<std::int64_t> counts);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_[std::size_t(id)]; }
  std::optional<int> id_of(std::string_view token) const;
  int id_or_unk(std::string_view token) const;
  bool is_special(int id) const { return id < kNumSpecials; }
  std::int64_t count_of(std::string_view token) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

  void save_tsv(const std::string& path) const;
  static Vocabulary load_tsv(const std::string& path);

 private:
  std::vector<std::string> tokens_;            // specials first
  std::vector<std::int64_t> counts_;           // 0 for specials
  std::unordered_map<std::string, int> ids_;
};

std::map<std::string, std::int64_t> count_words(
    const std::vector<const CorpusSlice*>& slices);
std::map<std::string, std::int64_t> count_words(
    const std::map<int, CorpusSlice>& slices);

// Retains tokens with count >= min_count, ordered by (count desc, token asc),
// truncated to max_size - #specials when max_size > 0.
Vocabulary build_vocab(const std::map<std::string, std::int64_t>& counts,
                       std::int64_t min_count, int max_size = 0);

struct EncodedSequence {
  std::vector<int> ids;             // [CLS] w... [SEP] [PAD]...
  std::vector<std::uint8_t> attention_mask;
  int length = 0;                   // non-pad prefix length
};

EncodedSequence encode(std::string_view sentence, const Vocabulary& vocab,
                       int max_len);
std::vector<std::string> decode(const std::vector<int>& ids,
                                const Vocabulary& vocab);

// |T1 n T2| / |T1 u T2| over non-special token sets; both empty -> 1.0
double vocab_jaccard(const Vocabulary& v1, const Vocabulary& v2);

}  // namespace chronolm
