#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chronolm {

struct RawDocument {
  std::string id;
  int year = 0;
  std::string abstract;
  std::string body;  // optional, empty when absent
  std::vector<std::string> categories;
  std::string title;
};

struct CleanSentence {
  std::string doc_id;
  int year = 0;
  std::string text;  // lowercased, markup-normalized
};

struct CorpusSlice {
  int year = 0;
  std::vector<CleanSentence> sentences;  // sorted by (doc_id, position)
};

enum class MarkupMode { kLightweightLatex, kPlain };
enum class CorpusFields { kAbstract, kAbstractAndBody };

// Markup substitution per the cleaning rules: \cite* -> [CITE], $...$ -> [EQU],
// \ref-family -> [REF], figure/table environments -> [FIG], \section{h} ->
// "[SEC] h". Display-math environments are removed. Plain mode only normalizes
// whitespace. Both modes canonically compose Latin diacritics first.
// Unbalanced math delimiters are recoverable: counted in *warnings, delimiter
// dropped, remainder kept as plain text.
std::string normalize_markup(std::string_view text, MarkupMode mode,
                             int* warnings = nullptr);

// Rule-based splitter: '.', '!' or '?' followed by whitespace and an ASCII
// uppercase letter or digit ends a sentence, unless the preceding token is a
// shipped abbreviation ("Fig.", "et al.", "i.e.", ...) or a single initial.
std::vector<std::string> segment_sentences(std::string_view text);

// Fraction of non-essential units: punctuation/symbol characters, URL-shaped
// tokens, emoji, and stopword tokens. Bracketed special tokens count as one
// essential unit. Empty input -> 1.0.
double nonessential_ratio(std::string_view sentence);

// length >= 20 codepoints, >= 3 whitespace-separated words, ratio <= 0.40
bool is_valid_sentence(std::string_view sentence);

// Keeps the last ceil(s/2) sentences of an abstract.
std::string ablate_abstract(std::string_view abstract);

bool is_stopword(std::string_view lowercased_token);
bool is_protected_abbreviation(std::string_view token_with_dot);
const std::vector<std::string>& stopword_list();

struct DocumentReject {
  std::string doc_id;
  std::string reason;
};

struct CorpusBuildOptions {
  MarkupMode mode = MarkupMode::kLightweightLatex;
  CorpusFields fields = CorpusFields::kAbstract;
  int min_year = 1900;
  int max_year = 2100;
};

struct CorpusBuildResult {
  std::map<int, CorpusSlice> slices;
  std::vector<DocumentReject> rejects;
};

CorpusBuildResult build_slices(const std::vector<RawDocument>& docs,
                               const CorpusBuildOptions& options);

// JSON-lines I/O. Malformed lines and documents without a usable id become
// rejects instead of aborting the run.
struct LoadedDocuments {
  std::vector<RawDocument> docs;
  std::vector<DocumentReject> rejects;
};
LoadedDocuments load_documents_jsonl(const std::string& path);
void write_documents_jsonl(const std::string& path,
                           const std::vector<RawDocument>& docs);

// sentences_<year>.txt, one sentence per line, LF endings
void write_slices(const std::string& dir, const std::map<int, CorpusSlice>& slices);
std::map<int, CorpusSlice> read_slices(const std::string& dir);
void write_rejects_jsonl(const std::string& path,
                         const std::vector<DocumentReject>& rejects);

}  // namespace chronolm
