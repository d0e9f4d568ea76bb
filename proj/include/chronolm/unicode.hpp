#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace chronolm {

// Minimal UTF-8 layer for the corpus pipeline. Invalid byte sequences decode
// as U+FFFD, one byte at a time.

struct DecodedCp {
  char32_t cp;
  int len;  // bytes consumed, >= 1
};

DecodedCp decode_utf8(std::string_view s, std::size_t i);
void append_utf8(std::string& out, char32_t cp);

std::size_t count_codepoints(std::string_view s);

// Canonical composition of base letter + combining diacritic (U+0300-U+0327
// subset covering Latin scientific text); other sequences pass through.
// This is the NFC subset the corpus rules rely on, not full Unicode NFC.
std::string nfc_latin(std::string_view s);

bool is_ascii_alnum(char32_t cp);
bool is_word_char(char32_t cp);   // letters/digits incl. common Latin/Greek/Cyrillic blocks
bool is_emoji(char32_t cp);
char32_t lower_cp(char32_t cp);   // ASCII + Latin-1 + Latin Extended-A subset

// Lowercases letters (see lower_cp) without touching bracketed special tokens
// such as [CITE].
std::string lowercase_keep_specials(std::string_view s);

}  // namespace chronolm
