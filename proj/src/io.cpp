#include "chronolm/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chronolm/common.hpp"
#include "chronolm/sha256.hpp"

namespace chronolm {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failure: " + path);
}

void write_manifest(const std::string& dir,
                    const std::vector<std::string>& relative_paths) {
  nlohmann::ordered_json j;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& rel : relative_paths) {
    nlohmann::ordered_json entry;
    entry["path"] = rel;
    entry["sha256"] = sha256_file_hex((fs::path(dir) / rel).string());
    j["outputs"].push_back(entry);
  }
  write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw FormatError("csv has no header row: " + path);
  return table;
}

}  // namespace chronolm
