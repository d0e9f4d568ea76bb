#include "chronolm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "chronolm/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

namespace chronolm {

namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kAlign = 64;

std::size_t align_up(std::size_t x) { return (x + kAlign - 1) / kAlign * kAlign; }

json shape_of(const TensorRef<const float>& r) {
  json shape = json::array();
  shape.push_back(r.rows);
  if (!r.is_vector) shape.push_back(r.cols);
  return shape;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  auto refs = ckpt.params.tensor_refs();

  json directory = json::array();
  std::size_t offset = 0;
  for (const auto& r : refs) {
    json entry;
    entry["name"] = r.name;
    entry["shape"] = shape_of(r);
    entry["offset"] = offset;  // relative to payload start
    directory.push_back(entry);
    offset = align_up(offset + std::size_t(r.size()) * sizeof(float));
  }

  json header;
  header["config"] = ckpt.config.to_json();
  header["meta"] = ckpt.meta;
  header["tensors"] = directory;
  std::string header_str = header.dump();
  // pad with spaces so the payload starts 64-byte aligned
  const std::size_t total = align_up(20 + header_str.size());
  header_str.resize(total - 20, ' ');

  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), std::streamsize(header_str.size()));

  std::size_t written = 0;
  std::vector<float> row_major;
  for (const auto& r : refs) {
    row_major.resize(std::size_t(r.size()));
    for (Index row = 0; row < r.rows; ++row) {
      for (Index col = 0; col < r.cols; ++col) {
        // in-memory tensors are column-major
        row_major[std::size_t(row * r.cols + col)] =
            r.data[std::size_t(col * r.rows + row)];
      }
    }
    out.write(reinterpret_cast<const char*>(row_major.data()),
              std::streamsize(row_major.size() * sizeof(float)));
    written += row_major.size() * sizeof(float);
    const std::size_t padded = align_up(written);
    static const char zeros[kAlign] = {};
    out.write(zeros, std::streamsize(padded - written));
    written = padded;
  }
  if (!out) throw IoError("write failure on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  const std::size_t file_size = std::size_t(in.tellg());
  in.seekg(0);

  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  if (file_size < 20 || !in.read(magic, 8) ||
      !in.read(reinterpret_cast<char*>(&version), 4) ||
      !in.read(reinterpret_cast<char*>(&header_len), 8))
    throw FormatError("checkpoint header truncated: " + path);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw FormatError("bad checkpoint magic: " + path);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + ": " + path);
  if (20 + header_len > file_size)
    throw FormatError("checkpoint header truncated: " + path);

  std::string header_str(header_len, '\0');
  in.read(header_str.data(), std::streamsize(header_len));
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw FormatError("invalid checkpoint header json: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(header.at("config"));
  ckpt.meta = header.at("meta");
  ckpt.params = ModelParams<float>(ckpt.config);

  auto refs = ckpt.params.tensor_refs();
  const json& directory = header.at("tensors");
  if (directory.size() != refs.size())
    throw FormatError("tensor directory size mismatch vs config");

  const std::size_t payload_start = 20 + header_len;
  std::vector<float> row_major;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const json& entry = directory[i];
    auto& r = refs[i];
    if (entry.at("name").get<std::string>() != r.name)
      throw FormatError("tensor name mismatch vs config: expected " + r.name);
    json expected_shape = json::array();
    expected_shape.push_back(r.rows);
    if (!r.is_vector) expected_shape.push_back(r.cols);
    if (entry.at("shape") != expected_shape)
      throw FormatError("tensor shape mismatch vs config: " + r.name);

    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t nbytes = std::size_t(r.size()) * sizeof(float);
    if (payload_start + offset + nbytes > file_size)
      throw FormatError("checkpoint payload truncated at tensor " + r.name);

    in.seekg(std::streamoff(payload_start + offset));
    row_major.resize(std::size_t(r.size()));
    if (!in.read(reinterpret_cast<char*>(row_major.data()),
                 std::streamsize(nbytes)))
      throw FormatError("checkpoint payload truncated at tensor " + r.name);
    for (Index row = 0; row < r.rows; ++row) {
      for (Index col = 0; col < r.cols; ++col) {
        r.data[std::size_t(col * r.rows + row)] =
            row_major[std::size_t(row * r.cols + col)];
      }
    }
  }
  return ckpt;
}

nlohmann::ordered_json loss_digest(const std::vector<double>& curve) {
  json digest;
  digest["steps"] = curve.size();
  digest["first"] = curve.empty() ? 0.0 : curve.front();
  digest["last"] = curve.empty() ? 0.0 : curve.back();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : curve) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  digest["fnv64"] = std::string(buf);
  return digest;
}

}  // namespace chronolm
