#include "chronolm/unicode.hpp"

#include <array>

namespace chronolm {

DecodedCp decode_utf8(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;
  };
  auto cbits = [&](std::size_t k) {
    return char32_t(static_cast<unsigned char>(s[i + k]) & 0x3f);
  };
  if ((b0 & 0xe0) == 0xc0 && cont(1)) {
    char32_t cp = (char32_t(b0 & 0x1f) << 6) | cbits(1);
    if (cp >= 0x80) return DecodedCp{cp, 2};
  } else if ((b0 & 0xf0) == 0xe0 && cont(1) && cont(2)) {
    char32_t cp = (char32_t(b0 & 0x0f) << 12) | (cbits(1) << 6) | cbits(2);
    if (cp >= 0x800 && !(cp >= 0xd800 && cp <= 0xdfff)) return DecodedCp{cp, 3};
  } else if ((b0 & 0xf8) == 0xf0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (char32_t(b0 & 0x07) << 18) | (cbits(1) << 12) |
                  (cbits(2) << 6) | cbits(3);
    if (cp >= 0x10000 && cp <= 0x10ffff) return DecodedCp{cp, 4};
  }
  return {0xfffd, 1};
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += char(cp);
  } else if (cp < 0x800) {
    out += char(0xc0 | (cp >> 6));
    out += char(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    out += char(0xe0 | (cp >> 12));
    out += char(0x80 | ((cp >> 6) & 0x3f));
    out += char(0x80 | (cp & 0x3f));
  } else {
    out += char(0xf0 | (cp >> 18));
    out += char(0x80 | ((cp >> 12) & 0x3f));
    out += char(0x80 | ((cp >> 6) & 0x3f));
    out += char(0x80 | (cp & 0x3f));
  }
}

std::size_t count_codepoints(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += decode_utf8(s, i).len) ++n;
  return n;
}

namespace {

struct Compose {
  char32_t base;
  char32_t comb;
  char32_t out;
};

// base + combining mark -> precomposed letter. Grave 0x300, acute 0x301,
// circumflex 0x302, tilde 0x303, macron 0x304, diaeresis 0x308, ring 0x30a,
// double acute 0x30b, caron 0x30c, cedilla 0x327.
constexpr std::array<Compose, 76> kCompose = {{
    {U'A', 0x300, 0xc0}, {U'A', 0x301, 0xc1}, {U'A', 0x302, 0xc2},
    {U'A', 0x303, 0xc3}, {U'A', 0x308, 0xc4}, {U'A', 0x30a, 0xc5},
    {U'C', 0x327, 0xc7}, {U'C', 0x30c, 0x10c},
    {U'E', 0x300, 0xc8}, {U'E', 0x301, 0xc9}, {U'E', 0x302, 0xca},
    {U'E', 0x308, 0xcb},
    {U'I', 0x300, 0xcc}, {U'I', 0x301, 0xcd}, {U'I', 0x302, 0xce},
    {U'I', 0x308, 0xcf},
    {U'N', 0x303, 0xd1},
    {U'O', 0x300, 0xd2}, {U'O', 0x301, 0xd3}, {U'O', 0x302, 0xd4},
    {U'O', 0x303, 0xd5}, {U'O', 0x308, 0xd6}, {U'O', 0x30b, 0x150},
    {U'S', 0x30c, 0x160},
    {U'U', 0x300, 0xd9}, {U'U', 0x301, 0xda}, {U'U', 0x302, 0xdb},
    {U'U', 0x308, 0xdc}, {U'U', 0x30b, 0x170},
    {U'Y', 0x301, 0xdd},
    {U'Z', 0x30c, 0x17d},
    {U'a', 0x300, 0xe0}, {U'a', 0x301, 0xe1}, {U'a', 0x302, 0xe2},
    {U'a', 0x303, 0xe3}, {U'a', 0x308, 0xe4}, {U'a', 0x30a, 0xe5},
    {U'c', 0x327, 0xe7}, {U'c', 0x30c, 0x10d}, {U'c', 0x301, 0x107},
    {U'e', 0x300, 0xe8}, {U'e', 0x301, 0xe9}, {U'e', 0x302, 0xea},
    {U'e', 0x308, 0xeb}, {U'e', 0x30c, 0x11b},
    {U'g', 0x306, 0x11f},
    {U'i', 0x300, 0xec}, {U'i', 0x301, 0xed}, {U'i', 0x302, 0xee},
    {U'i', 0x308, 0xef},
    {U'n', 0x303, 0xf1}, {U'n', 0x30c, 0x148},
    {U'o', 0x300, 0xf2}, {U'o', 0x301, 0xf3}, {U'o', 0x302, 0xf4},
    {U'o', 0x303, 0xf5}, {U'o', 0x308, 0xf6}, {U'o', 0x30b, 0x151},
    {U'r', 0x30c, 0x159},
    {U's', 0x30c, 0x161}, {U's', 0x301, 0x15b},
    {U't', 0x30c, 0x165},
    {U'u', 0x300, 0xf9}, {U'u', 0x301, 0xfa}, {U'u', 0x302, 0xfb},
    {U'u', 0x308, 0xfc}, {U'u', 0x30b, 0x171}, {U'u', 0x30a, 0x16f},
    {U'y', 0x301, 0xfd}, {U'y', 0x308, 0xff},
    {U'z', 0x30c, 0x17e}, {U'z', 0x301, 0x17a}, {U'z', 0x307, 0x17c},
    {U'd', 0x30c, 0x10f},
    {U'l', 0x301, 0x13a},
}};

char32_t compose(char32_t base, char32_t comb) {
  for (const auto& c : kCompose) {
    if (c.base == base && c.comb == comb) return c.out;
  }
  return 0;
}

}  // namespace

std::string nfc_latin(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  char32_t pending = 0;
  bool have_pending = false;
  for (std::size_t i = 0; i < s.size();) {
    auto [cp, len] = decode_utf8(s, i);
    i += std::size_t(len);
    if (have_pending && cp >= 0x300 && cp <= 0x36f) {
      if (char32_t composed = compose(pending, cp)) {
        pending = composed;
        continue;
      }
    }
    if (have_pending) append_utf8(out, pending);
    pending = cp;
    have_pending = true;
  }
  if (have_pending) append_utf8(out, pending);
  return out;
}

bool is_ascii_alnum(char32_t cp) {
  return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
         (cp >= U'A' && cp <= U'Z');
}

bool is_word_char(char32_t cp) {
  if (is_ascii_alnum(cp)) return true;
  if (cp >= 0xc0 && cp <= 0xff && cp != 0xd7 && cp != 0xf7) return true;  // Latin-1
  if (cp >= 0x100 && cp <= 0x24f) return true;                            // Latin Ext
  if (cp >= 0x370 && cp <= 0x3ff) return true;                            // Greek
  if (cp >= 0x400 && cp <= 0x4ff) return true;                            // Cyrillic
  return false;
}

bool is_emoji(char32_t cp) {
  return (cp >= 0x1f300 && cp <= 0x1faff) || (cp >= 0x2600 && cp <= 0x27bf) ||
         (cp >= 0x1f000 && cp <= 0x1f2ff) || cp == 0xfe0f || cp == 0x200d;
}

char32_t lower_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;  // Latin-1
  // Latin Extended-A: upper/lower interleaved pairs
  if (cp >= 0x100 && cp <= 0x177 && (cp % 2 == 0)) return cp + 1;
  if (cp >= 0x179 && cp <= 0x17d && (cp % 2 == 1)) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3a9 && cp != 0x3a2) return cp + 0x20;  // Greek
  if (cp >= 0x410 && cp <= 0x42f) return cp + 0x20;                 // Cyrillic
  return cp;
}

std::string lowercase_keep_specials(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '[') {
      // keep [CITE]-style tokens verbatim
      std::size_t close = s.find(']', i);
      if (close != std::string_view::npos && close - i <= 8) {
        bool all_upper = close > i + 1;
        for (std::size_t k = i + 1; k < close; ++k) {
          if (s[k] < 'A' || s[k] > 'Z') {
            all_upper = false;
            break;
          }
        }
        if (all_upper) {
          out.append(s.substr(i, close - i + 1));
          i = close + 1;
          continue;
        }
      }
    }
    auto [cp, len] = decode_utf8(s, i);
    append_utf8(out, lower_cp(cp));
    i += std::size_t(len);
  }
  return out;
}

}  // namespace chronolm
