#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chronolm/common.hpp"
#include "chronolm/io.hpp"

namespace chronolm::cli {

// Per-run bookkeeping: resolved-config snapshot plus a manifest with content
// hashes, written next to the outputs.
struct RunContext {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out_dir = ".";
  std::vector<std::string> outputs;  // relative to out_dir

  void note(const std::string& relative_path) { outputs.push_back(relative_path); }

  std::string path(const std::string& relative) const {
    return (std::filesystem::path(out_dir) / relative).string();
  }

  void finish(CLI::App* leaf) {
    std::filesystem::create_directories(out_dir);
    // sectioned so that `chronolm --config <snapshot> <sub> <cmd>` re-runs it
    std::string section;
    for (const CLI::App* a = leaf; a != nullptr && !a->get_name().empty();
         a = a->get_parent()) {
      section = section.empty() ? a->get_name() : a->get_name() + "." + section;
    }
    write_text_file(path("run_config.txt"),
                    "[" + section + "]\n" + leaf->config_to_str(true, false));
    write_manifest(out_dir, outputs);
  }
};

// Options shared by every leaf command. The seed falls back to CHRONOLM_SEED.
inline void add_common_options(CLI::App* leaf, RunContext& ctx) {
  leaf->add_option("--seed", ctx.seed, "master random seed")
      ->envname("CHRONOLM_SEED")
      ->capture_default_str();
  leaf->add_option("--threads", ctx.threads,
                   "worker threads (1 = fully serial baseline)")
      ->capture_default_str();
}

void register_corpus(CLI::App& app);
void register_vocab(CLI::App& app);
void register_model(CLI::App& app);
void register_series(CLI::App& app);
void register_probe(CLI::App& app);
void register_linkpred(CLI::App& app);
void register_synth(CLI::App& app);
void register_plot(CLI::App& app);

int run_cli(std::vector<std::string> args);

}  // namespace chronolm::cli
