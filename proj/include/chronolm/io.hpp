#pragma once

#include <string>
#include <vector>

namespace chronolm {

// shortest round-trip decimal representation
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// manifest.json next to run outputs: relative path -> sha256
void write_manifest(const std::string& dir,
                    const std::vector<std::string>& relative_paths);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

}  // namespace chronolm
