#include <filesystem>
#include <memory>

#include "chronolm/io.hpp"
#include "chronolm/probe.hpp"
#include "chronolm/series.hpp"
#include "chronolm/svgplot.hpp"
#include "cli_common.hpp"

namespace chronolm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// loads every registry entry, keeping storage alive alongside the pointer view
struct LoadedSeries {
  std::vector<Checkpoint> storage;
  std::vector<const Checkpoint*> ptrs;
  Vocabulary vocab;
};

LoadedSeries load_series(const std::string& registry_path,
                         const std::string& vocab_path) {
  LoadedSeries out;
  SeriesRegistry reg = SeriesRegistry::load(registry_path);
  for (const auto& e : reg.entries)
    out.storage.push_back(load_checkpoint(reg.resolve(e)));
  for (const auto& c : out.storage) out.ptrs.push_back(&c);
  out.vocab = Vocabulary::load_tsv(vocab_path);
  return out;
}

std::vector<double> read_numbers(const std::string& path,
                                 const std::string& column_hint) {
  CsvTable table = read_csv(path);
  // pick the hinted column, else the last one
  std::size_t col = table.header.size() - 1;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == column_hint) col = i;
  std::vector<double> values;
  bool header_numeric = true;
  try {
    values.push_back(std::stod(table.header[col]));
  } catch (...) {
    header_numeric = false;
  }
  if (!header_numeric) values.clear();
  for (const auto& row : table.rows) {
    if (col >= row.size())
      throw FormatError("csv row with too few columns in " + path);
    try {
      values.push_back(std::stod(row[col]));
    } catch (...) {
      throw FormatError("non-numeric value '" + row[col] + "' in " + path);
    }
  }
  if (values.empty()) throw FormatError("no numeric values in " + path);
  return values;
}

}  // namespace

void register_probe(CLI::App& app) {
  auto* probe = app.add_subcommand("probe", "mine a checkpoint series");
  probe->require_subcommand(1);

  {
    auto* pm = probe->add_subcommand(
        "perf-matrix", "F1 of each model year on each data year");
    struct Args {
      RunContext ctx;
      std::string series, vocab, docs;
      std::string task = "major";
      int runs = 50;
      int n_train = 1600;
      int n_test = 200;
      bool ablate = false;
    };
    auto args = std::make_shared<Args>();
    pm->add_option("--series", args->series, "series.json")->required();
    pm->add_option("--vocab", args->vocab, "vocab.tsv")->required();
    pm->add_option("--docs", args->docs, "documents JSON-lines")->required();
    pm->add_option("--task", args->task, "major|sub|crossfield")
        ->check(CLI::IsMember({"major", "sub", "crossfield"}))
        ->capture_default_str();
    pm->add_option("--runs", args->runs)->capture_default_str();
    pm->add_option("--train-n", args->n_train)->capture_default_str();
    pm->add_option("--test-n", args->n_test)->capture_default_str();
    pm->add_flag("--ablate-second-half", args->ablate,
                 "probe on the back half of each abstract");
    pm->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(pm, args->ctx);

    pm->callback([args, pm]() {
      LoadedSeries series = load_series(args->series, args->vocab);
      LoadedDocuments docs = load_documents_jsonl(args->docs);

      PerfMatrixOptions options;
      options.runs = args->runs;
      options.master_seed = args->ctx.seed;
      options.n_train = args->n_train;
      options.n_test = args->n_test;
      options.ablate_second_half = args->ablate;
      options.threads = args->ctx.threads;
      ProbeTask task = probe_task_from_name(args->task);
      PerformanceMatrix result = build_perf_matrix(series.ptrs, series.vocab,
                                                   docs.docs, task, options);

      std::string raw = "t,tau,run,f1\n";
      for (std::size_t r = 0; r < result.raw.size(); ++r)
        for (std::size_t t = 0; t < result.model_years.size(); ++t)
          for (std::size_t d = 0; d < result.data_years.size(); ++d)
            raw += std::to_string(result.model_years[t]) + "," +
                   std::to_string(result.data_years[d]) + "," +
                   std::to_string(r) + "," +
                   format_double(result.raw[r](Index(t), Index(d))) + "\n";
      write_text_file(args->ctx.path("perf_matrix_raw.csv"), raw);
      args->ctx.note("perf_matrix_raw.csv");

      std::string summary = "t,tau,p_hat\n";
      for (std::size_t t = 0; t < result.model_years.size(); ++t)
        for (std::size_t d = 0; d < result.data_years.size(); ++d)
          summary += std::to_string(result.model_years[t]) + "," +
                     std::to_string(result.data_years[d]) + "," +
                     format_double(result.summary(Index(t), Index(d))) + "\n";
      write_text_file(args->ctx.path("perf_matrix_summary.csv"), summary);
      args->ctx.note("perf_matrix_summary.csv");

      json meta;
      meta["task"] = args->task;
      meta["runs"] = args->runs;
      meta["f1"] = task == ProbeTask::kCrossfield ? "binary" : "macro";
      meta["classifier"] =
          "multinomial logistic regression (full-batch adam, standardized "
          "features); substituted for the random-forest probe";
      meta["ablate_second_half"] = args->ablate;
      json flagged = json::array();
      for (int y : result.flagged_columns) flagged.push_back(y);
      meta["constant_columns_mapped_to_0.5"] = flagged;
      write_text_file(args->ctx.path("perf_matrix_meta.json"),
                      meta.dump(2) + "\n");
      args->ctx.note("perf_matrix_meta.json");

      std::printf("probe perf-matrix: %zu models x %zu years x %d runs\n",
                  result.model_years.size(), result.data_years.size(),
                  args->runs);
      args->ctx.finish(pm);
    });
  }

  {
    auto* fm = probe->add_subcommand(
        "fill-mask", "track a token's probability across the series");
    struct Args {
      RunContext ctx;
      std::string series, vocab, sentence, token;
      std::string ckpt;  // single-checkpoint top-k mode
      int k = 10;
    };
    auto args = std::make_shared<Args>();
    fm->add_option("--series", args->series, "series.json");
    fm->add_option("--ckpt", args->ckpt, "single checkpoint (top-k mode)");
    fm->add_option("--vocab", args->vocab)->required();
    fm->add_option("--sentence", args->sentence,
                   "carrier sentence with exactly one [MASK]")
        ->required();
    fm->add_option("--token", args->token, "token to track across years");
    fm->add_option("--k", args->k, "top-k for single-checkpoint mode")
        ->capture_default_str();
    fm->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(fm, args->ctx);

    fm->callback([args, fm]() {
      if (args->series.empty() == args->ckpt.empty())
        throw ConfigError("fill-mask needs exactly one of --series or --ckpt");
      if (!args->ckpt.empty()) {
        Checkpoint c = load_checkpoint(args->ckpt);
        Vocabulary vocab = Vocabulary::load_tsv(args->vocab);
        FillMaskResult r = fill_mask(c.params, vocab, args->sentence, args->k);
        std::string csv = "token,probability\n";
        for (const auto& [token, p] : r.top) {
          csv += token + "," + format_double(p) + "\n";
          std::printf("%-20s %s\n", token.c_str(), format_double(p).c_str());
        }
        write_text_file(args->ctx.path("fill_mask_topk.csv"), csv);
        args->ctx.note("fill_mask_topk.csv");
      } else {
        if (args->token.empty())
          throw ConfigError("--token is required with --series");
        LoadedSeries series = load_series(args->series, args->vocab);
        auto curve = track_token_probability(series.ptrs, series.vocab,
                                             args->sentence, args->token);
        std::string csv = "year,probability\n";
        for (const auto& [year, p] : curve)
          csv += std::to_string(year) + "," + format_double(p) + "\n";
        write_text_file(args->ctx.path("token_prob.csv"), csv);
        args->ctx.note("token_prob.csv");
        std::printf("probe fill-mask: tracked '%s' over %zu checkpoints\n",
                    args->token.c_str(), curve.size());
      }
      args->ctx.finish(fm);
    });
  }

  {
    auto* pca = probe->add_subcommand(
        "pca", "2-d PCA of flattened layer weights across the series");
    struct Args {
      RunContext ctx;
      std::string series, vocab;
      std::string layers = "embedding.word";
    };
    auto args = std::make_shared<Args>();
    pca->add_option("--series", args->series)->required();
    pca->add_option("--vocab", args->vocab)->required();
    pca->add_option("--layers", args->layers,
                    "tensor-name glob, e.g. 'layer.0.attention.*'")
        ->capture_default_str();
    pca->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(pca, args->ctx);

    pca->callback([args, pca]() {
      LoadedSeries series = load_series(args->series, args->vocab);
      PcaResult r = pca_weights(series.ptrs, args->layers);

      std::string coords = "year,pc1,pc2\n";
      for (std::size_t i = 0; i < series.ptrs.size(); ++i)
        coords += std::to_string(series.ptrs[i]->trained_through_year()) + "," +
                  format_double(r.coords(Index(i), 0)) + "," +
                  format_double(r.coords(Index(i), 1)) + "\n";
      write_text_file(args->ctx.path("pca_coords.csv"), coords);
      args->ctx.note("pca_coords.csv");

      std::string variance = "component,explained_fraction\n";
      variance += "1," + format_double(r.explained[0]) + "\n";
      variance += "2," + format_double(r.explained[1]) + "\n";
      write_text_file(args->ctx.path("pca_variance.csv"), variance);
      args->ctx.note("pca_variance.csv");

      std::printf("probe pca: %zu tensors, explained %.3f + %.3f\n",
                  r.tensor_names.size(), r.explained[0], r.explained[1]);
      args->ctx.finish(pca);
    });
  }

  {
    auto* mwu = probe->add_subcommand(
        "mwu", "Mann-Whitney U test between two samples");
    struct Args {
      RunContext ctx;
      std::string a, b;
      std::string column = "f1";
    };
    auto args = std::make_shared<Args>();
    mwu->add_option("--a", args->a, "csv with sample A")->required();
    mwu->add_option("--b", args->b, "csv with sample B")->required();
    mwu->add_option("--column", args->column, "column to read (default f1)")
        ->capture_default_str();
    mwu->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(mwu, args->ctx);

    mwu->callback([args, mwu]() {
      std::vector<double> a = read_numbers(args->a, args->column);
      std::vector<double> b = read_numbers(args->b, args->column);
      MwuResult r = mann_whitney_u(a, b);
      json out;
      out["n_a"] = a.size();
      out["n_b"] = b.size();
      out["u"] = r.u;
      out["p_two_sided"] = r.p_two_sided;
      out["p_one_sided_less"] = r.p_one_sided_less;
      out["method"] = r.exact ? "exact-enumeration" : "normal-approximation";
      write_text_file(args->ctx.path("mwu_result.json"), out.dump(2) + "\n");
      args->ctx.note("mwu_result.json");
      std::printf("mwu: U=%s p_two_sided=%s (%s)\n", format_double(r.u).c_str(),
                  format_double(r.p_two_sided).c_str(),
                  r.exact ? "exact" : "normal");
      args->ctx.finish(mwu);
    });
  }
}

void register_plot(CLI::App& app) {
  auto* plot = app.add_subcommand("plot", "render a CSV as a self-contained SVG");
  struct Args {
    RunContext ctx;
    std::string input;
    std::string out = "plot.svg";
    std::string kind = "auto";
    std::string title;
  };
  auto args = std::make_shared<Args>();
  plot->add_option("--input", args->input, "csv produced by probe/linkpred")
      ->required();
  plot->add_option("--out", args->out)->capture_default_str();
  plot->add_option("--kind", args->kind, "auto|heatmap|line")
      ->check(CLI::IsMember({"auto", "heatmap", "line"}))
      ->capture_default_str();
  plot->add_option("--title", args->title, "plot title (default: input name)");
  add_common_options(plot, args->ctx);

  plot->callback([args, plot]() {
    CsvTable table = read_csv(args->input);
    const std::string title =
        args->title.empty() ? fs::path(args->input).filename().string()
                            : args->title;
    std::string kind = args->kind;
    if (kind == "auto") {
      kind = (table.header.size() == 3 && table.header[0] == "t" &&
              table.header[1] == "tau")
                 ? "heatmap"
                 : "line";
    }

    std::string svg;
    if (kind == "heatmap") {
      if (table.header.size() != 3)
        throw FormatError("heatmap expects a t,tau,value csv");
      std::map<int, std::map<int, double>> cells;
      for (const auto& row : table.rows) {
        if (row.size() != 3) throw FormatError("malformed heatmap row");
        cells[std::stoi(row[0])][std::stoi(row[1])] = std::stod(row[2]);
      }
      std::vector<std::string> row_labels, col_labels;
      std::vector<int> cols;
      for (const auto& [t, by_tau] : cells)
        for (const auto& [tau, v] : by_tau)
          if (std::find(cols.begin(), cols.end(), tau) == cols.end())
            cols.push_back(tau);
      std::sort(cols.begin(), cols.end());
      MatD m(Index(cells.size()), Index(cols.size()));
      Index r = 0;
      for (const auto& [t, by_tau] : cells) {
        row_labels.push_back(std::to_string(t));
        for (std::size_t c = 0; c < cols.size(); ++c) {
          auto it = by_tau.find(cols[c]);
          m(r, Index(c)) = it == by_tau.end() ? 0.0 : it->second;
        }
        ++r;
      }
      for (int c : cols) col_labels.push_back(std::to_string(c));
      svg = svg_heatmap(m, row_labels, col_labels, title);
    } else {
      if (table.header.size() < 2)
        throw FormatError("line chart expects an x column plus series");
      std::vector<double> x;
      std::map<std::string, std::vector<double>> series;
      for (const auto& row : table.rows) {
        if (row.size() != table.header.size())
          throw FormatError("malformed line-chart row");
        x.push_back(std::stod(row[0]));
        for (std::size_t c = 1; c < row.size(); ++c)
          series[table.header[c]].push_back(std::stod(row[c]));
      }
      svg = svg_line_chart(x, series, title);
    }

    const fs::path out(args->out);
    args->ctx.out_dir = out.has_parent_path() ? out.parent_path().string() : ".";
    write_text_file(args->out, svg);
    args->ctx.note(out.filename().string());
    std::printf("plot: %s -> %s (%s)\n", args->input.c_str(), args->out.c_str(),
                kind.c_str());
    args->ctx.finish(plot);
  });
}

}  // namespace chronolm::cli
