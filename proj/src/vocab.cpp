#include "chronolm/vocab.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "chronolm/common.hpp"
#include "chronolm/unicode.hpp"

namespace chronolm {

namespace {

bool special_bracket_at(std::string_view text, std::size_t i, std::string* canon,
                        std::size_t* end) {
  if (text[i] != '[') return false;
  std::size_t close = text.find(']', i);
  if (close == std::string_view::npos || close == i + 1 || close - i > 7)
    return false;
  std::string body;
  for (std::size_t k = i + 1; k < close; ++k) {
    char c = text[k];
    if (c >= 'a' && c <= 'z') c = char(c - 'a' + 'A');
    if (c < 'A' || c > 'Z') return false;
    body += c;
  }
  std::string candidate = "[" + body + "]";
  for (const char* s : kSpecialTokens) {
    if (candidate == s) {
      *canon = candidate;
      *end = close + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::string canon;
    std::size_t end;
    if (special_bracket_at(text, i, &canon, &end)) {
      out.push_back(std::move(canon));
      i = end;
      continue;
    }
    auto [cp, len] = decode_utf8(text, i);
    if (is_word_char(cp)) {
      std::string word;
      while (i < text.size()) {
        auto [wcp, wlen] = decode_utf8(text, i);
        if (!is_word_char(wcp)) break;
        append_utf8(word, wcp);
        i += std::size_t(wlen);
      }
      out.push_back(std::move(word));
    } else {
      std::string punct;
      append_utf8(punct, cp);
      out.push_back(std::move(punct));
      i += std::size_t(len);
    }
  }
  return out;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   std::vector<std::int64_t> counts) {
  Vocabulary v;
  v.tokens_.reserve(tokens.size() + kNumSpecials);
  v.counts_.reserve(tokens.size() + kNumSpecials);
  for (const char* s : kSpecialTokens) {
    v.tokens_.emplace_back(s);
    v.counts_.push_back(0);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    v.tokens_.push_back(std::move(tokens[i]));
    v.counts_.push_back(i < counts.size() ? counts[i] : 0);
  }
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    v.ids_.emplace(v.tokens_[i], static_cast<int>(i));
  }
  if (v.ids_.size() != v.tokens_.size())
    throw ConfigError("vocabulary contains duplicate tokens");
  return v;
}

std::optional<int> Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id_or_unk(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

std::int64_t Vocabulary::count_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? 0 : counts_[std::size_t(it->second)];
}

void Vocabulary::save_tsv(const std::string& path) const {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file: " + path);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << "\t" << counts_[i] << "\n";
  }
}

Vocabulary Vocabulary::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("vocab.tsv line " + std::to_string(line_no) +
                        ": missing tab separator");
    tokens.push_back(line.substr(0, tab));
    counts.push_back(std::stoll(line.substr(tab + 1)));
  }
  // verify specials prefix, then strip it (from_tokens re-adds)
  if (tokens.size() < kNumSpecials)
    throw FormatError("vocab.tsv: missing special-token prefix");
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens[std::size_t(i)] != kSpecialTokens[i])
      throw FormatError("vocab.tsv: special token mismatch at id " +
                        std::to_string(i));
  }
  tokens.erase(tokens.begin(), tokens.begin() + kNumSpecials);
  counts.erase(counts.begin(), counts.begin() + kNumSpecials);
  return from_tokens(std::move(tokens), std::move(counts));
}

std::map<std::string, std::int64_t> count_words(
    const std::vector<const CorpusSlice*>& slices) {
  std::map<std::string, std::int64_t> counts;
  for (const CorpusSlice* slice : slices) {
    for (const auto& sentence : slice->sentences) {
      for (auto& tok : tokenize_words(sentence.text)) ++counts[tok];
    }
  }
  return counts;
}

std::map<std::string, std::int64_t> count_words(
    const std::map<int, CorpusSlice>& slices) {
  std::vector<const CorpusSlice*> ptrs;
  ptrs.reserve(slices.size());
  for (const auto& [year, slice] : slices) ptrs.push_back(&slice);
  return count_words(ptrs);
}

Vocabulary build_vocab(const std::map<std::string, std::int64_t>& counts,
                       std::int64_t min_count, int max_size) {
  if (max_size > 0 && max_size < kNumSpecials)
    throw ConfigError("max_size smaller than the number of special tokens");

  std::set<std::string> special_names(std::begin(kSpecialTokens),
                                      std::end(kSpecialTokens));
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count < min_count) continue;
    if (special_names.count(token)) continue;  // specials are prepended below
    kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (max_size > 0 && kept.size() > std::size_t(max_size - kNumSpecials))
    kept.resize(std::size_t(max_size - kNumSpecials));

  std::vector<std::string> tokens;
  std::vector<std::int64_t> kept_counts;
  tokens.reserve(kept.size());
  kept_counts.reserve(kept.size());
  for (auto& [token, count] : kept) {
    tokens.push_back(std::move(token));
    kept_counts.push_back(count);
  }
  return Vocabulary::from_tokens(std::move(tokens), std::move(kept_counts));
}

EncodedSequence encode(std::string_view sentence, const Vocabulary& vocab,
                       int max_len) {
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  std::vector<std::string> words = tokenize_words(sentence);
  const std::size_t keep = std::min(words.size(), std::size_t(max_len - 2));

  EncodedSequence seq;
  seq.ids.reserve(std::size_t(max_len));
  seq.ids.push_back(kClsId);
  for (std::size_t i = 0; i < keep; ++i) seq.ids.push_back(vocab.id_or_unk(words[i]));
  seq.ids.push_back(kSepId);
  seq.length = static_cast<int>(seq.ids.size());
  seq.ids.resize(std::size_t(max_len), kPadId);
  seq.attention_mask.assign(std::size_t(max_len), 0);
  for (int i = 0; i < seq.length; ++i) seq.attention_mask[std::size_t(i)] = 1;
  return seq;
}

std::vector<std::string> decode(const std::vector<int>& ids,
                                const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id == kClsId || id == kSepId || id == kPadId) continue;
    words.push_back(vocab.token(id));
  }
  return words;
}

double vocab_jaccard(const Vocabulary& v1, const Vocabulary& v2) {
  std::set<std::string> t1(v1.tokens().begin() + kNumSpecials, v1.tokens().end());
  std::set<std::string> t2(v2.tokens().begin() + kNumSpecials, v2.tokens().end());
  if (t1.empty() && t2.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : t1) inter += t2.count(t);
  const std::size_t uni = t1.size() + t2.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace chronolm
