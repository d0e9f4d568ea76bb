#include <filesystem>
#include <memory>

#include "chronolm/corpus.hpp"
#include "chronolm/vocab.hpp"
#include "cli_common.hpp"

namespace chronolm::cli {

namespace fs = std::filesystem;

void register_corpus(CLI::App& app) {
  auto* corpus = app.add_subcommand("corpus", "corpus cleaning pipeline");
  corpus->require_subcommand(1);
  auto* clean = corpus->add_subcommand(
      "clean", "normalize markup, segment, filter, and slice by year");

  struct Args {
    RunContext ctx;
    std::string input;
    std::string mode = "lightweight-latex";
    std::string fields = "abstract";
    int min_year = 1900;
    int max_year = 2100;
  };
  auto args = std::make_shared<Args>();
  clean->add_option("--input", args->input, "JSON-lines documents file")
      ->required();
  clean->add_option("--out-dir", args->ctx.out_dir, "output directory")
      ->required();
  clean->add_option("--mode", args->mode, "lightweight-latex|plain")
      ->check(CLI::IsMember({"lightweight-latex", "plain"}))
      ->capture_default_str();
  clean->add_option("--fields", args->fields, "abstract|all")
      ->check(CLI::IsMember({"abstract", "all"}))
      ->capture_default_str();
  clean->add_option("--min-year", args->min_year)->capture_default_str();
  clean->add_option("--max-year", args->max_year)->capture_default_str();
  add_common_options(clean, args->ctx);

  clean->callback([args, clean]() {
    LoadedDocuments loaded = load_documents_jsonl(args->input);

    CorpusBuildOptions options;
    options.mode = args->mode == "plain" ? MarkupMode::kPlain
                                         : MarkupMode::kLightweightLatex;
    options.fields = args->fields == "all" ? CorpusFields::kAbstractAndBody
                                           : CorpusFields::kAbstract;
    options.min_year = args->min_year;
    options.max_year = args->max_year;

    CorpusBuildResult result = build_slices(loaded.docs, options);
    std::vector<DocumentReject> rejects = std::move(loaded.rejects);
    rejects.insert(rejects.end(), result.rejects.begin(), result.rejects.end());

    fs::create_directories(args->ctx.out_dir);
    write_slices(args->ctx.out_dir, result.slices);
    for (const auto& [year, slice] : result.slices)
      args->ctx.note("sentences_" + std::to_string(year) + ".txt");
    write_rejects_jsonl(args->ctx.path("rejects.jsonl"), rejects);
    args->ctx.note("rejects.jsonl");

    std::size_t kept = 0;
    for (const auto& [year, slice] : result.slices) kept += slice.sentences.size();
    std::printf("corpus clean: %zu slices, %zu sentences, %zu rejects\n",
                result.slices.size(), kept, rejects.size());
    args->ctx.finish(clean);
  });
}

void register_vocab(CLI::App& app) {
  auto* vocab = app.add_subcommand("vocab", "whole-word vocabulary");
  vocab->require_subcommand(1);
  auto* build = vocab->add_subcommand("build", "count words and build vocab.tsv");

  struct Args {
    RunContext ctx;
    std::string slices;
    std::string out = "vocab.tsv";
    std::int64_t min_count = 50;
    int max_size = 0;
  };
  auto args = std::make_shared<Args>();
  build->add_option("--slices", args->slices, "directory of sentences_<year>.txt")
      ->required();
  build->add_option("--min-count", args->min_count, "frequency threshold")
      ->capture_default_str();
  build->add_option("--max-size", args->max_size,
                    "cap on vocabulary size incl. specials (0 = unlimited)")
      ->capture_default_str();
  build->add_option("--out", args->out, "output TSV path")->capture_default_str();
  add_common_options(build, args->ctx);

  build->callback([args, build]() {
    auto slices = read_slices(args->slices);
    Vocabulary v = build_vocab(count_words(slices), args->min_count,
                               args->max_size);
    const fs::path out(args->out);
    args->ctx.out_dir =
        out.has_parent_path() ? out.parent_path().string() : ".";
    v.save_tsv(args->out);
    args->ctx.note(out.filename().string());
    std::printf("vocab build: %d tokens (incl. %d specials)\n", v.size(),
                kNumSpecials);
    args->ctx.finish(build);
  });
}

}  // namespace chronolm::cli
