#include "chronolm/series.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chronolm/rng.hpp"
#include "chronolm/sha256.hpp"

namespace chronolm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void SeriesRegistry::validate() const {
  int prev = base_year - 1;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int expected = (i == 0) ? base_year : prev + 1;
    if (entries[i].year != expected)
      throw FormatError("series registry: expected year " +
                        std::to_string(expected) + ", found " +
                        std::to_string(entries[i].year));
    prev = entries[i].year;
  }
}

void SeriesRegistry::save(const std::string& path) const {
  validate();
  json j;
  j["base_year"] = base_year;
  j["entries"] = json::array();
  for (const auto& e : entries) {
    json entry;
    entry["year"] = e.year;
    entry["path"] = e.path;
    entry["sha256"] = e.sha256;
    j["entries"].push_back(entry);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write series registry: " + path);
  out << j.dump(2) << "\n";
}

SeriesRegistry SeriesRegistry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open series registry: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("invalid series registry json: " + std::string(e.what()));
  }
  SeriesRegistry reg;
  reg.base_year = j.at("base_year").get<int>();
  for (const auto& entry : j.at("entries")) {
    reg.entries.push_back({entry.at("year").get<int>(),
                           entry.at("path").get<std::string>(),
                           entry.at("sha256").get<std::string>()});
  }
  reg.root = fs::path(path).parent_path().string();
  reg.validate();
  return reg;
}

std::string SeriesRegistry::resolve(const SeriesEntry& e) const {
  fs::path p(e.path);
  if (p.is_absolute() || root.empty()) return e.path;
  return (fs::path(root) / p).string();
}

const SeriesEntry& SeriesRegistry::entry(int year) const {
  for (const auto& e : entries)
    if (e.year == year) return e;
  throw RuntimeError("series registry has no entry for year " +
                     std::to_string(year));
}

bool SeriesRegistry::has_year(int year) const {
  for (const auto& e : entries)
    if (e.year == year) return true;
  return false;
}

namespace {

json hp_to_json(const TrainHp& hp, int epochs) {
  json j;
  j["lr"] = hp.lr;
  j["batch_size"] = hp.batch_size;
  j["epochs"] = epochs;
  j["seed"] = hp.seed;
  j["weight_decay"] = hp.weight_decay;
  j["optimizer"] = "adam(b1=0.9,b2=0.999,eps=1e-8), decoupled decay, none on embeddings";
  j["random_pool"] = hp.restrict_random_pool ? "corpus-tokens" : "uniform-vocab";
  return j;
}

}  // namespace

Checkpoint pretrain_base(const std::map<int, CorpusSlice>& slices,
                         const Vocabulary& vocab, const ModelConfig& config,
                         const TrainHp& hp, int base_year,
                         TrainResult* train_result) {
  std::vector<const CorpusSlice*> selected;
  int first_year = 0;
  for (const auto& [year, slice] : slices) {
    if (year > base_year) continue;
    if (first_year == 0) first_year = year;
    selected.push_back(&slice);
  }
  if (selected.empty())
    throw ConfigError("no corpus slices at or before base year " +
                      std::to_string(base_year));

  Checkpoint ckpt(ModelParams<float>::init_random(config));
  TrainResult tr = train_mlm(ckpt.params, selected, vocab, hp);
  if (train_result) *train_result = tr;

  ckpt.meta["trained_through_year"] = base_year;
  ckpt.meta["total_steps"] = tr.steps;
  ckpt.meta["loss_history"] = loss_digest(tr.loss_curve);
  ckpt.meta["slice_years"] = json::array({first_year, base_year});
  ckpt.meta["hp"] = hp_to_json(hp, hp.epochs);
  ckpt.meta["kind"] = "base";
  return ckpt;
}

Checkpoint continual_step(const Checkpoint& prev, const CorpusSlice& slice_t,
                          const Vocabulary& vocab, TrainHp hp,
                          TrainResult* train_result) {
  const int prev_year = prev.trained_through_year();
  if (slice_t.year != prev_year + 1)
    throw RuntimeError("continual_step sequencing error: previous checkpoint is " +
                       std::to_string(prev_year) + ", slice year is " +
                       std::to_string(slice_t.year));

  Checkpoint next;
  next.config = prev.config;
  next.params = prev.params;
  hp.epochs = 1;  // Continual-train(M_{t-1}, corpus_t) is one epoch by definition
  hp.seed = derive_seed(hp.seed, tag_seed("continual"), std::uint64_t(slice_t.year));

  std::vector<const CorpusSlice*> one{&slice_t};
  TrainResult tr = train_mlm(next.params, one, vocab, hp);
  if (train_result) *train_result = tr;

  next.meta = prev.meta;
  next.meta["trained_through_year"] = slice_t.year;
  next.meta["total_steps"] = prev.total_steps() + tr.steps;
  next.meta["loss_history"] = loss_digest(tr.loss_curve);
  next.meta["hp"] = hp_to_json(hp, 1);
  next.meta["kind"] = "continual";
  return next;
}

Checkpoint pretrain_one_pass(const std::map<int, CorpusSlice>& slices,
                             const Vocabulary& vocab, const ModelConfig& config,
                             TrainHp hp, TrainResult* train_result) {
  std::vector<const CorpusSlice*> all;
  for (const auto& [year, slice] : slices) all.push_back(&slice);
  if (all.empty()) throw ConfigError("empty corpus");
  hp.epochs = 1;
  Checkpoint ckpt(ModelParams<float>::init_random(config));
  TrainResult tr = train_mlm(ckpt.params, all, vocab, hp);
  if (train_result) *train_result = tr;
  ckpt.meta["trained_through_year"] = slices.rbegin()->first;
  ckpt.meta["total_steps"] = tr.steps;
  ckpt.meta["loss_history"] = loss_digest(tr.loss_curve);
  ckpt.meta["hp"] = hp_to_json(hp, 1);
  ckpt.meta["kind"] = "one-pass-shuffled";
  return ckpt;
}

Checkpoint interpolate(const Checkpoint& a, const Checkpoint& b, double lambda) {
  if (!(a.config == b.config))
    throw ConfigError("interpolate: checkpoint configs differ");
  if (lambda < 0.0 || lambda > 1.0)
    throw ConfigError("interpolate: lambda must lie in [0, 1]");

  Checkpoint out;
  out.config = a.config;
  if (lambda == 0.0) {
    out.params = a.params;
  } else if (lambda == 1.0) {
    out.params = b.params;
  } else {
    out.params = ModelParams<float>(a.config);
    auto ra = a.params.tensor_refs();
    auto rb = b.params.tensor_refs();
    auto ro = out.params.tensor_refs();
    const float la = float(1.0 - lambda);
    const float lb = float(lambda);
    for (std::size_t i = 0; i < ro.size(); ++i) {
      for (Index k = 0; k < ro[i].size(); ++k)
        ro[i].data[k] = la * ra[i].data[k] + lb * rb[i].data[k];
    }
  }
  out.meta["kind"] = "interpolated";
  out.meta["lambda"] = lambda;
  out.meta["a_year"] = a.trained_through_year();
  out.meta["b_year"] = b.trained_through_year();
  return out;
}

Checkpoint random_matched(const Checkpoint& ref, std::uint64_t seed) {
  Checkpoint out;
  out.config = ref.config;
  out.params = ModelParams<float>(ref.config);

  Rng rng(derive_seed(seed, tag_seed("random-matched")));
  auto rr = ref.params.tensor_refs();
  auto ro = out.params.tensor_refs();
  for (std::size_t i = 0; i < rr.size(); ++i) {
    const Index n = rr[i].size();
    double sum = 0.0, sumsq = 0.0;
    for (Index k = 0; k < n; ++k) {
      sum += rr[i].data[k];
      sumsq += double(rr[i].data[k]) * double(rr[i].data[k]);
    }
    const double mean = n > 0 ? sum / double(n) : 0.0;
    const double var = n > 0 ? std::max(0.0, sumsq / double(n) - mean * mean) : 0.0;
    const double sd = std::sqrt(var);
    for (Index k = 0; k < n; ++k)
      ro[i].data[k] = float(rng.normal(mean, sd));
  }
  out.meta["kind"] = "random-matched";
  out.meta["seed"] = seed;
  out.meta["source_year"] = ref.trained_through_year();
  return out;
}

SeriesRegistry build_series(const std::map<int, CorpusSlice>& slices,
                            const Vocabulary& vocab, const ModelConfig& config,
                            const TrainHp& hp, int base_year, int through_year,
                            const std::string& out_dir) {
  if (through_year < base_year)
    throw ConfigError("through_year must be >= base_year");
  fs::create_directories(out_dir);

  SeriesRegistry reg;
  reg.base_year = base_year;
  reg.root = out_dir;

  auto emit = [&](const Checkpoint& ckpt, int year) {
    const std::string name = "ckpt_" + std::to_string(year) + ".clm";
    const std::string full = (fs::path(out_dir) / name).string();
    save_checkpoint(ckpt, full);
    reg.entries.push_back({year, name, sha256_file_hex(full)});
  };

  Checkpoint current = pretrain_base(slices, vocab, config, hp, base_year);
  emit(current, base_year);
  for (int year = base_year + 1; year <= through_year; ++year) {
    auto it = slices.find(year);
    CorpusSlice empty;
    empty.year = year;
    const CorpusSlice& slice = it != slices.end() ? it->second : empty;
    current = continual_step(current, slice, vocab, hp);
    emit(current, year);
  }
  reg.save((fs::path(out_dir) / "series.json").string());
  return reg;
}

}  // namespace chronolm
