#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chronolm/corpus.hpp"
#include "chronolm/unicode.hpp"

namespace chronolm {

namespace {

// NLTK-style English stopword list, frozen here so the non-essential ratio is
// bit-reproducible.
const std::vector<std::string>& stopwords_internal() {
  static const std::vector<std::string> kWords = {
      "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
      "you're", "you've", "you'll", "you'd", "your", "yours", "yourself",
      "yourselves", "he", "him", "his", "himself", "she", "she's", "her",
      "hers", "herself", "it", "it's", "its", "itself", "they", "them",
      "their", "theirs", "themselves", "what", "which", "who", "whom", "this",
      "that", "that'll", "these", "those", "am", "is", "are", "was", "were",
      "be", "been", "being", "have", "has", "had", "having", "do", "does",
      "did", "doing", "a", "an", "the", "and", "but", "if", "or", "because",
      "as", "until", "while", "of", "at", "by", "for", "with", "about",
      "against", "between", "into", "through", "during", "before", "after",
      "above", "below", "to", "from", "up", "down", "in", "out", "on", "off",
      "over", "under", "again", "further", "then", "once", "here", "there",
      "when", "where", "why", "how", "all", "any", "both", "each", "few",
      "more", "most", "other", "some", "such", "no", "nor", "not", "only",
      "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
      "just", "don", "don't", "should", "should've", "now", "d", "ll", "m",
      "o", "re", "ve", "y", "ain", "aren", "aren't", "couldn", "couldn't",
      "didn", "didn't", "doesn", "doesn't", "hadn", "hadn't", "hasn",
      "hasn't", "haven", "haven't", "isn", "isn't", "ma", "mightn",
      "mightn't", "mustn", "mustn't", "needn", "needn't", "shan", "shan't",
      "shouldn", "shouldn't", "wasn", "wasn't", "weren", "weren't", "won",
      "won't", "wouldn", "wouldn't"};
  return kWords;
}

const std::unordered_set<std::string>& stopword_set() {
  static const std::unordered_set<std::string> kSet(stopwords_internal().begin(),
                                                    stopwords_internal().end());
  return kSet;
}

// Final token of each protected abbreviation ("et al." is covered by "al.").
const std::unordered_set<std::string>& abbreviation_set() {
  static const std::unordered_set<std::string> kSet = {
      "al.",   "fig.",  "figs.",  "eq.",    "eqs.",  "sec.",   "secs.",
      "ref.",  "refs.", "tab.",   "i.e.",   "e.g.",  "cf.",    "vs.",
      "etc.",  "resp.", "approx.", "dr.",   "prof.", "mr.",    "mrs.",
      "ms.",   "st.",   "no.",    "vol.",   "pp.",   "ca.",    "dept.",
      "univ.", "inst.", "conf.",  "proc.",  "jan.",  "feb.",   "mar.",
      "apr.",  "jun.",  "jul.",   "aug.",   "sep.",  "sept.",  "oct.",
      "nov.",  "dec."};
  return kSet;
}

bool is_space_cp(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
         cp == U'\f' || cp == U'\v' || cp == 0xa0 ||
         (cp >= 0x2000 && cp <= 0x200b) || cp == 0x3000;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    auto [cp, len] = decode_utf8(s, i);
    i += std::size_t(len);
    if (is_space_cp(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    append_utf8(out, cp);
  }
  return out;
}

bool is_ascii_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

struct LatexScanner {
  std::string_view s;
  int* warnings;
  bool plain_dollars = false;

  std::string run() {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (c == '\\') {
        i = command(out, i);
      } else if (c == '$') {
        i = math(out, i);
      } else if (c == '{' || c == '}') {
        ++i;
      } else if (c == '~') {
        out += ' ';
        ++i;
      } else {
        out += c;
        ++i;
      }
    }
    return out;
  }

  void warn() {
    if (warnings) ++*warnings;
  }

  // consume a balanced {...} group starting at i (s[i]=='{'); returns
  // {content, next index}; unbalanced -> content to end
  std::pair<std::string_view, std::size_t> brace_group(std::size_t i) const {
    std::size_t depth = 0;
    std::size_t start = i + 1;
    for (std::size_t j = i; j < s.size(); ++j) {
      if (s[j] == '\\') {
        ++j;
        continue;
      }
      if (s[j] == '{') ++depth;
      if (s[j] == '}') {
        if (--depth == 0) return {s.substr(start, j - start), j + 1};
      }
    }
    return {s.substr(start), s.size()};
  }

  std::size_t skip_optional_args(std::size_t i) const {
    while (i < s.size() && s[i] == '[') {
      std::size_t close = s.find(']', i);
      if (close == std::string_view::npos) return s.size();
      i = close + 1;
    }
    return i;
  }

  std::size_t command(std::string& out, std::size_t i) {
    std::size_t j = i + 1;
    if (j >= s.size()) return j;
    if (!is_ascii_letter(s[j])) {
      // escaped single character
      char c = s[j];
      if (c == '&' || c == '%' || c == '#' || c == '_' || c == '{' || c == '}') {
        out += c;
      } else if (c == '$') {
        // dropped: cleaned text carries no dollar signs
      } else {
        out += ' ';
      }
      return j + 1;
    }
    std::size_t k = j;
    while (k < s.size() && is_ascii_letter(s[k])) ++k;
    std::string name(s.substr(j, k - j));
    if (k < s.size() && s[k] == '*') ++k;

    if (name.rfind("cite", 0) == 0 || name.rfind("Cite", 0) == 0) {
      k = skip_optional_args(k);
      if (k < s.size() && s[k] == '{') k = brace_group(k).second;
      out += "[CITE]";
      return k;
    }
    static const std::unordered_set<std::string> kRef = {
        "ref", "eqref", "autoref", "cref", "Cref", "pageref", "secref",
        "figref", "tabref"};
    if (kRef.count(name)) {
      if (k < s.size() && s[k] == '{') k = brace_group(k).second;
      out += "[REF]";
      return k;
    }
    static const std::unordered_set<std::string> kSec = {
        "section", "subsection", "subsubsection", "paragraph", "chapter"};
    if (kSec.count(name)) {
      k = skip_optional_args(k);
      std::string_view heading;
      if (k < s.size() && s[k] == '{') {
        auto [content, next] = brace_group(k);
        heading = content;
        k = next;
      }
      out += "[SEC] ";
      LatexScanner inner{heading, warnings};
      out += inner.run();
      return k;
    }
    if (name == "begin" && k < s.size() && s[k] == '{') {
      auto [env, next] = brace_group(k);
      std::string env_name(env);
      auto skip_env = [&](std::size_t from) {
        std::string closing = "\\end{" + env_name + "}";
        std::size_t pos = s.find(closing, from);
        if (pos == std::string_view::npos) {
          warn();
          return s.size();
        }
        return pos + closing.size();
      };
      static const std::unordered_set<std::string> kFig = {"figure", "figure*",
                                                           "table", "table*"};
      static const std::unordered_set<std::string> kMath = {
          "equation", "equation*", "align",   "align*", "eqnarray",
          "eqnarray*", "displaymath", "gather", "gather*", "math",
          "multline", "multline*"};
      if (kFig.count(env_name)) {
        out += "[FIG]";
        return skip_env(next);
      }
      if (kMath.count(env_name)) {
        out += ' ';
        return skip_env(next);
      }
      return next;  // unknown environment: drop the marker, keep content
    }
    if (name == "end" && k < s.size() && s[k] == '{') {
      return brace_group(k).second;
    }
    return k;  // unknown command dropped, arguments kept via brace handling
  }

  std::size_t math(std::string& out, std::size_t i) {
    if (plain_dollars) return i + 1;
    if (i + 1 < s.size() && s[i + 1] == '$') {
      std::size_t close = s.find("$$", i + 2);
      if (close == std::string_view::npos) {
        warn();
        plain_dollars = true;
        return i + 2;
      }
      out += ' ';  // display math removed
      return close + 2;
    }
    std::size_t j = i + 1;
    while (j < s.size()) {
      if (s[j] == '\\' && j + 1 < s.size()) {
        j += 2;
        continue;
      }
      if (s[j] == '$') break;
      ++j;
    }
    if (j >= s.size()) {
      warn();
      plain_dollars = true;
      return i + 1;
    }
    out += "[EQU]";
    return j + 1;
  }
};

bool is_special_bracket_token(std::string_view tok) {
  if (tok.size() < 3 || tok.size() > 8 || tok.front() != '[' || tok.back() != ']')
    return false;
  for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
    if (tok[i] < 'A' || tok[i] > 'Z') return false;
  }
  return true;
}

bool is_url_token(std::string_view tok) {
  auto starts_with_ci = [&](std::string_view prefix) {
    if (tok.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(tok[i])) != prefix[i])
        return false;
    }
    return true;
  };
  return starts_with_ci("http://") || starts_with_ci("https://") ||
         starts_with_ci("www.") || tok.find("://") != std::string_view::npos;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

const std::vector<std::string>& stopword_list() { return stopwords_internal(); }

bool is_stopword(std::string_view lowercased_token) {
  return stopword_set().count(std::string(lowercased_token)) > 0;
}

bool is_protected_abbreviation(std::string_view token_with_dot) {
  if (token_with_dot.empty() || token_with_dot.back() != '.') return false;
  // strip leading brackets/quotes: "(e.g." -> "e.g."
  std::size_t start = 0;
  while (start < token_with_dot.size() &&
         !is_ascii_letter(token_with_dot[start]) &&
         !(token_with_dot[start] >= '0' && token_with_dot[start] <= '9')) {
    ++start;
  }
  std::string tok = ascii_lower(token_with_dot.substr(start));
  if (tok.size() == 2 && is_ascii_letter(tok[0])) return true;  // initials
  return abbreviation_set().count(tok) > 0;
}

std::string normalize_markup(std::string_view text, MarkupMode mode,
                             int* warnings) {
  std::string composed = nfc_latin(text);
  if (mode == MarkupMode::kPlain) return collapse_whitespace(composed);
  LatexScanner scanner{composed, warnings};
  return collapse_whitespace(scanner.run());
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto flush = [&](std::size_t begin, std::size_t end) {
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])))
      ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1])))
      --end;
    if (end > begin) out.emplace_back(text.substr(begin, end - begin));
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < text.size() &&
             std::isspace(static_cast<unsigned char>(text[j])))
        ++j;
      bool boundary =
          j > i + 1 && j < text.size() &&
          (std::isupper(static_cast<unsigned char>(text[j])) ||
           std::isdigit(static_cast<unsigned char>(text[j])));
      if (boundary && c == '.') {
        std::size_t tok_begin = i;
        while (tok_begin > 0 &&
               !std::isspace(static_cast<unsigned char>(text[tok_begin - 1])))
          --tok_begin;
        if (is_protected_abbreviation(text.substr(tok_begin, i - tok_begin + 1)))
          boundary = false;
      }
      if (boundary) {
        flush(start, i + 1);
        start = j;
        i = j;
        continue;
      }
    }
    ++i;
  }
  flush(start, text.size());
  return out;
}

double nonessential_ratio(std::string_view sentence) {
  std::size_t total = 0;
  std::size_t nonessential = 0;

  std::size_t i = 0;
  const std::size_t n = sentence.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    if (i >= n) break;
    std::size_t end = i;
    while (end < n && !std::isspace(static_cast<unsigned char>(sentence[end])))
      ++end;
    std::string_view tok = sentence.substr(i, end - i);
    i = end;

    if (is_special_bracket_token(tok)) {
      ++total;
      continue;
    }
    if (is_url_token(tok)) {
      ++total;
      ++nonessential;
      continue;
    }
    // split the token into word runs and single non-word characters
    std::size_t k = 0;
    while (k < tok.size()) {
      auto [cp, len] = decode_utf8(tok, k);
      if (is_word_char(cp)) {
        std::string word;
        while (k < tok.size()) {
          auto [wcp, wlen] = decode_utf8(tok, k);
          if (!is_word_char(wcp)) break;
          append_utf8(word, lower_cp(wcp));
          k += std::size_t(wlen);
        }
        ++total;
        if (stopword_set().count(word)) ++nonessential;
      } else {
        ++total;
        ++nonessential;  // punctuation, symbol, or emoji codepoint
        k += std::size_t(len);
      }
    }
  }
  if (total == 0) return 1.0;
  return static_cast<double>(nonessential) / static_cast<double>(total);
}

bool is_valid_sentence(std::string_view sentence) {
  if (count_codepoints(sentence) < 20) return false;
  std::size_t words = 0;
  bool in_word = false;
  for (char c : sentence) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++words;
    }
  }
  if (words < 3) return false;
  return nonessential_ratio(sentence) <= 0.40;
}

std::string ablate_abstract(std::string_view abstract) {
  std::vector<std::string> sentences = segment_sentences(abstract);
  if (sentences.empty()) return "";
  std::size_t keep = sentences.size() - sentences.size() / 2;  // ceil(s/2)
  std::string out;
  for (std::size_t i = sentences.size() - keep; i < sentences.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += sentences[i];
  }
  return out;
}

}  // namespace chronolm
