#include "chronolm/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "chronolm/common.hpp"
#include "chronolm/unicode.hpp"

namespace chronolm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

CorpusBuildResult build_slices(const std::vector<RawDocument>& docs,
                               const CorpusBuildOptions& options) {
  CorpusBuildResult result;

  std::vector<const RawDocument*> ordered;
  ordered.reserve(docs.size());
  for (const auto& d : docs) ordered.push_back(&d);
  std::sort(ordered.begin(), ordered.end(),
            [](const RawDocument* a, const RawDocument* b) { return a->id < b->id; });

  std::unordered_set<std::string> seen_ids;
  for (const RawDocument* doc : ordered) {
    if (doc->id.empty()) {
      result.rejects.push_back({"", "missing id"});
      continue;
    }
    if (!seen_ids.insert(doc->id).second) {
      result.rejects.push_back({doc->id, "duplicate id"});
      continue;
    }
    if (doc->year == 0) {
      result.rejects.push_back({doc->id, "missing year"});
      continue;
    }
    if (doc->year < options.min_year || doc->year > options.max_year) {
      result.rejects.push_back(
          {doc->id, "year " + std::to_string(doc->year) + " out of range"});
      continue;
    }

    std::string text = doc->abstract;
    if (options.fields == CorpusFields::kAbstractAndBody && !doc->body.empty()) {
      text += "\n";
      text += doc->body;
    }
    std::string normalized = normalize_markup(text, options.mode);
    for (const std::string& sentence : segment_sentences(normalized)) {
      if (!is_valid_sentence(sentence)) continue;
      auto& slice = result.slices[doc->year];
      slice.year = doc->year;
      slice.sentences.push_back(
          {doc->id, doc->year, lowercase_keep_specials(sentence)});
    }
  }
  return result;
}

LoadedDocuments load_documents_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open documents file: " + path);

  LoadedDocuments out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      out.rejects.push_back({"line:" + std::to_string(line_no), "invalid json"});
      continue;
    }
    if (!j.is_object()) {
      out.rejects.push_back({"line:" + std::to_string(line_no), "not an object"});
      continue;
    }
    RawDocument doc;
    if (j.contains("id")) {
      if (j["id"].is_string())
        doc.id = j["id"].get<std::string>();
      else if (j["id"].is_number_integer())
        doc.id = std::to_string(j["id"].get<long long>());
    }
    if (doc.id.empty()) {
      out.rejects.push_back({"line:" + std::to_string(line_no), "missing id"});
      continue;
    }
    if (j.contains("year") && j["year"].is_number_integer())
      doc.year = j["year"].get<int>();
    if (j.contains("abstract") && j["abstract"].is_string())
      doc.abstract = j["abstract"].get<std::string>();
    if (j.contains("body") && j["body"].is_string())
      doc.body = j["body"].get<std::string>();
    if (j.contains("title") && j["title"].is_string())
      doc.title = j["title"].get<std::string>();
    if (j.contains("categories") && j["categories"].is_array()) {
      for (const auto& c : j["categories"]) {
        if (c.is_string()) doc.categories.push_back(c.get<std::string>());
      }
    }
    out.docs.push_back(std::move(doc));
  }
  return out;
}

void write_documents_jsonl(const std::string& path,
                           const std::vector<RawDocument>& docs) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write documents file: " + path);
  for (const auto& d : docs) {
    json j;
    j["id"] = d.id;
    j["year"] = d.year;
    j["abstract"] = d.abstract;
    if (!d.body.empty()) j["body"] = d.body;
    j["categories"] = d.categories;
    if (!d.title.empty()) j["title"] = d.title;
    out << j.dump() << "\n";
  }
}

void write_slices(const std::string& dir, const std::map<int, CorpusSlice>& slices) {
  fs::create_directories(dir);
  for (const auto& [year, slice] : slices) {
    fs::path p = fs::path(dir) / ("sentences_" + std::to_string(year) + ".txt");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write slice file: " + p.string());
    for (const auto& s : slice.sentences) out << s.text << "\n";
  }
}

std::map<int, CorpusSlice> read_slices(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("slice directory not found: " + dir);
  std::map<int, CorpusSlice> slices;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("sentences_", 0) == 0 && name.size() > 14 &&
        name.substr(name.size() - 4) == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const std::string name = p.filename().string();
    int year = 0;
    try {
      year = std::stoi(name.substr(10, name.size() - 14));
    } catch (...) {
      throw FormatError("cannot parse year from slice filename: " + name);
    }
    CorpusSlice slice;
    slice.year = year;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) slice.sentences.push_back({"", year, line});
    }
    slices[year] = std::move(slice);
  }
  return slices;
}

void write_rejects_jsonl(const std::string& path,
                         const std::vector<DocumentReject>& rejects) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write rejects file: " + path);
  for (const auto& r : rejects) {
    json j;
    j["doc_id"] = r.doc_id;
    j["reason"] = r.reason;
    out << j.dump() << "\n";
  }
}

}  // namespace chronolm
