#include <filesystem>
#include <memory>

#include "chronolm/checkpoint.hpp"
#include "chronolm/io.hpp"
#include "chronolm/linkpred.hpp"
#include "chronolm/parallel.hpp"
#include "chronolm/synth.hpp"
#include "chronolm/unicode.hpp"
#include "cli_common.hpp"

namespace chronolm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

CitationGraph load_graph_dir(const std::string& dir) {
  return load_graph((fs::path(dir) / "edges.tsv").string(),
                    (fs::path(dir) / "nodes.tsv").string());
}

// CLS features for every node; abstracts by node id from a documents file
FeatureMatrix build_model_features(const CitationGraph& g,
                                   const std::string& ckpt_path,
                                   const std::string& vocab_path,
                                   const std::string& docs_path, int threads) {
  if (ckpt_path.empty() || docs_path.empty())
    throw ConfigError("--features model requires --ckpt and --docs");
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Vocabulary vocab = Vocabulary::load_tsv(vocab_path);
  LoadedDocuments docs = load_documents_jsonl(docs_path);
  std::map<std::string, const RawDocument*> by_id;
  for (const auto& d : docs.docs) by_id[d.id] = &d;

  FeatureMatrix f;
  f.kind = FeatureKind::kModelEncoded;
  f.matrix.resize(Index(g.num_nodes()), ckpt.config.d_model);
  std::vector<std::string> prepared(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto it = by_id.find(g.node(i).id);
    if (it == by_id.end())
      throw FormatError("no document with id " + g.node(i).id +
                        " for model-encoded features");
    prepared[i] = lowercase_keep_specials(
        normalize_markup(it->second->abstract, MarkupMode::kLightweightLatex));
  }
  parallel_for(g.num_nodes(), threads, [&](std::size_t i) {
    VecF cls = encode_cls(ckpt.params, vocab, prepared[i]);
    f.matrix.row(Index(i)) = cls.cast<double>().transpose();
  });
  return f;
}

json metrics_json(const BinaryMetrics& mean, const BinaryMetrics& sd) {
  json j;
  auto cell = [&](double m, double s) {
    json c;
    c["mean"] = m;
    c["std"] = s;
    return c;
  };
  j["auc_roc"] = cell(mean.auc, sd.auc);
  j["accuracy"] = cell(mean.accuracy, sd.accuracy);
  j["precision"] = cell(mean.precision, sd.precision);
  j["recall"] = cell(mean.recall, sd.recall);
  j["f1"] = cell(mean.f1, sd.f1);
  return j;
}

// Table-3 style "mean (std)" row
std::string metrics_csv_row(const std::string& name, const BinaryMetrics& mean,
                            const BinaryMetrics& sd) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.3f (%.3f),%.3f (%.3f),%.3f (%.3f),%.3f (%.3f),%.3f (%.3f)\n",
                name.c_str(), mean.auc, sd.auc, mean.accuracy, sd.accuracy,
                mean.precision, sd.precision, mean.recall, sd.recall, mean.f1,
                sd.f1);
  return buf;
}

FeatureMatrix resolve_features(const std::string& kind_name,
                               const CitationGraph& g, Index random_dims,
                               std::uint64_t seed, const std::string& ckpt,
                               const std::string& vocab,
                               const std::string& docs, int threads) {
  const FeatureKind kind = feature_kind_from_name(kind_name);
  switch (kind) {
    case FeatureKind::kRandom:
      return build_random_features(g, random_dims, seed);
    case FeatureKind::kOnehotMajor:
      return build_onehot_features(g, false);
    case FeatureKind::kOnehotSub:
      return build_onehot_features(g, true);
    case FeatureKind::kModelEncoded:
      return build_model_features(g, ckpt, vocab, docs, threads);
  }
  throw ConfigError("unknown feature kind");
}

}  // namespace

void register_linkpred(CLI::App& app) {
  auto* lp = app.add_subcommand("linkpred", "citation link prediction");
  lp->require_subcommand(1);

  {
    auto* st = lp->add_subcommand("static", "5-fold evaluation on the static graph");
    struct Args {
      RunContext ctx;
      std::string graph;
      std::string predictor = "aa";
      std::string features = "random";
      std::string ckpt, vocab, docs;
      std::size_t sample_size = 100000;
      int random_dims = 768;
      double ppr_restart = 0.15;
      double ppr_tol = 1e-8;
      int ppr_max_iter = 10000;
      int gnn_epochs = 200;
      int gnn_hidden = 64;
    };
    auto args = std::make_shared<Args>();
    st->add_option("--graph", args->graph,
                   "directory holding nodes.tsv and edges.tsv")
        ->required();
    st->add_option("--predictor", args->predictor,
                   "aa|ra|cn|jc|pa|ppr|gnn")
        ->check(CLI::IsMember({"aa", "ra", "cn", "jc", "pa", "ppr", "gnn"}))
        ->capture_default_str();
    st->add_option("--features", args->features,
                   "gnn features: random|major|sub|model")
        ->check(CLI::IsMember({"random", "major", "sub", "model"}))
        ->capture_default_str();
    st->add_option("--ckpt", args->ckpt, "checkpoint for model features");
    st->add_option("--vocab", args->vocab, "vocab.tsv for model features");
    st->add_option("--docs", args->docs, "documents for model features");
    st->add_option("--sample-size", args->sample_size,
                   "positive edges to sample")
        ->capture_default_str();
    st->add_option("--random-dims", args->random_dims)->capture_default_str();
    st->add_option("--ppr-restart", args->ppr_restart)->capture_default_str();
    st->add_option("--ppr-tol", args->ppr_tol)->capture_default_str();
    st->add_option("--ppr-max-iter", args->ppr_max_iter)->capture_default_str();
    st->add_option("--gnn-epochs", args->gnn_epochs)->capture_default_str();
    st->add_option("--gnn-hidden", args->gnn_hidden)->capture_default_str();
    st->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(st, args->ctx);

    st->callback([args, st]() {
      CitationGraph g = load_graph_dir(args->graph);
      const std::size_t sample =
          std::min(args->sample_size, g.num_undirected_edges());
      LinkDataset ds = make_static_dataset(g, sample, args->ctx.seed);

      FoldMetrics fm;
      std::string method_name;
      if (args->predictor == "gnn") {
        FeatureMatrix features = resolve_features(
            args->features, g, args->random_dims, args->ctx.seed, args->ckpt,
            args->vocab, args->docs, args->ctx.threads);
        GnnHp hp;
        hp.epochs = args->gnn_epochs;
        hp.hidden = args->gnn_hidden;
        hp.out_dim = args->gnn_hidden;
        hp.mlp_hidden = args->gnn_hidden;
        hp.seed = args->ctx.seed;
        fm = eval_gnn_static(g, features, ds, hp);
        method_name = "graphsage+" + args->features;
      } else {
        PprOptions ppr{args->ppr_restart, args->ppr_tol, args->ppr_max_iter};
        fm = eval_topological(g, ds, predictor_from_name(args->predictor), ppr,
                              args->ctx.threads);
        method_name = args->predictor;
      }

      json out;
      out["method"] = method_name;
      out["sample_size"] = sample;
      out["folds"] = ds.n_folds;
      out["metrics"] = metrics_json(fm.mean, fm.stddev);
      json per_fold = json::array();
      for (const auto& f : fm.per_fold) {
        json one;
        one["auc_roc"] = f.auc;
        one["accuracy"] = f.accuracy;
        one["precision"] = f.precision;
        one["recall"] = f.recall;
        one["f1"] = f.f1;
        per_fold.push_back(one);
      }
      out["per_fold"] = per_fold;
      if (fm.constant_feature_flagged)
        out["note"] = "constant feature on at least one fold; raw-score threshold used";
      write_text_file(args->ctx.path("metrics.json"), out.dump(2) + "\n");
      args->ctx.note("metrics.json");

      std::string csv = "method,auc_roc,accuracy,precision,recall,f1\n";
      csv += metrics_csv_row(method_name, fm.mean, fm.stddev);
      write_text_file(args->ctx.path("metrics.csv"), csv);
      args->ctx.note("metrics.csv");

      std::printf("linkpred static [%s]: auc %.3f (%.3f), f1 %.3f (%.3f)\n",
                  method_name.c_str(), fm.mean.auc, fm.stddev.auc, fm.mean.f1,
                  fm.stddev.f1);
      args->ctx.finish(st);
    });
  }

  {
    auto* tp = lp->add_subcommand("temporal", "prospective link prediction");
    struct Args {
      RunContext ctx;
      std::string graph;
      std::string features = "sub";
      std::string ckpt, vocab, docs;
      int t0 = 0;
      std::string dt = "1..3";
      std::size_t train_sample = 0;
      int random_dims = 768;
      int gnn_epochs = 200;
      int gnn_hidden = 64;
    };
    auto args = std::make_shared<Args>();
    tp->add_option("--graph", args->graph)->required();
    tp->add_option("--t0", args->t0, "training cutoff year")->required();
    tp->add_option("--dt", args->dt, "horizon range, e.g. 1..6")
        ->capture_default_str();
    tp->add_option("--features", args->features, "random|major|sub|model")
        ->check(CLI::IsMember({"random", "major", "sub", "model"}))
        ->capture_default_str();
    tp->add_option("--ckpt", args->ckpt);
    tp->add_option("--vocab", args->vocab);
    tp->add_option("--docs", args->docs);
    tp->add_option("--train-sample", args->train_sample,
                   "edge sample for training (0 = all)")
        ->capture_default_str();
    tp->add_option("--random-dims", args->random_dims)->capture_default_str();
    tp->add_option("--gnn-epochs", args->gnn_epochs)->capture_default_str();
    tp->add_option("--gnn-hidden", args->gnn_hidden)->capture_default_str();
    tp->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(tp, args->ctx);

    tp->callback([args, tp]() {
      const std::size_t sep = args->dt.find("..");
      int dt_min, dt_max;
      try {
        if (sep == std::string::npos) {
          dt_min = dt_max = std::stoi(args->dt);
        } else {
          dt_min = std::stoi(args->dt.substr(0, sep));
          dt_max = std::stoi(args->dt.substr(sep + 2));
        }
      } catch (...) {
        throw ConfigError("cannot parse --dt range: " + args->dt);
      }
      if (dt_min < 1 || dt_max < dt_min)
        throw ConfigError("--dt must be an increasing range of years >= 1");

      CitationGraph g = load_graph_dir(args->graph);
      FeatureMatrix features = resolve_features(
          args->features, g, args->random_dims, args->ctx.seed, args->ckpt,
          args->vocab, args->docs, args->ctx.threads);

      TemporalOptions opt;
      opt.t0 = args->t0;
      opt.dt_min = dt_min;
      opt.dt_max = dt_max;
      opt.train_sample = args->train_sample;
      opt.seed = args->ctx.seed;
      opt.hp.epochs = args->gnn_epochs;
      opt.hp.hidden = args->gnn_hidden;
      opt.hp.out_dim = args->gnn_hidden;
      opt.hp.mlp_hidden = args->gnn_hidden;
      opt.hp.seed = args->ctx.seed;
      auto cells = temporal_protocol(g, features, opt);

      json out;
      out["t0"] = args->t0;
      out["features"] = args->features;
      out["negatives"] =
          "endpoint v' with t_{v'} < t0 and (u,v') not in B+; asymmetry vs "
          "positives (t_v < t0+dt) kept as in the protocol definition";
      out["embeddings"] = "adjacency frozen at t0 over the full node set";
      json cells_json = json::array();
      std::string csv = "dt,n_pos,auc_roc,accuracy,precision,recall,f1\n";
      for (const auto& c : cells) {
        json one;
        one["dt"] = c.dt;
        one["skipped"] = c.skipped;
        if (c.skipped) {
          one["note"] = c.note;
        } else {
          one["n_pos"] = c.n_pos;
          one["auc_roc"] = c.metrics.auc;
          one["accuracy"] = c.metrics.accuracy;
          one["precision"] = c.metrics.precision;
          one["recall"] = c.metrics.recall;
          one["f1"] = c.metrics.f1;
          csv += std::to_string(c.dt) + "," + std::to_string(c.n_pos) + "," +
                 format_double(c.metrics.auc) + "," +
                 format_double(c.metrics.accuracy) + "," +
                 format_double(c.metrics.precision) + "," +
                 format_double(c.metrics.recall) + "," +
                 format_double(c.metrics.f1) + "\n";
        }
        cells_json.push_back(one);
      }
      out["cells"] = cells_json;
      write_text_file(args->ctx.path("temporal_metrics.json"), out.dump(2) + "\n");
      args->ctx.note("temporal_metrics.json");
      write_text_file(args->ctx.path("temporal_metrics.csv"), csv);
      args->ctx.note("temporal_metrics.csv");

      std::printf("linkpred temporal: t0=%d, %zu horizons evaluated\n", args->t0,
                  cells.size());
      args->ctx.finish(tp);
    });
  }
}

void register_synth(CLI::App& app) {
  auto* synth = app.add_subcommand("synth", "synthetic fixtures");
  synth->require_subcommand(1);

  {
    auto* corpus = synth->add_subcommand("corpus", "topic-drift corpus");
    struct Args {
      RunContext ctx;
      std::string out = "docs.jsonl";
      int year_min = 2009, year_max = 2012;
      int docs_per_year = 120;
      int era_switch = 2011;
    };
    auto args = std::make_shared<Args>();
    corpus->add_option("--out", args->out)->capture_default_str();
    corpus->add_option("--year-min", args->year_min)->capture_default_str();
    corpus->add_option("--year-max", args->year_max)->capture_default_str();
    corpus->add_option("--docs-per-year", args->docs_per_year)
        ->capture_default_str();
    corpus->add_option("--era-switch-year", args->era_switch)
        ->capture_default_str();
    add_common_options(corpus, args->ctx);

    corpus->callback([args, corpus]() {
      SynthCorpusOptions opt;
      opt.year_min = args->year_min;
      opt.year_max = args->year_max;
      opt.docs_per_year = args->docs_per_year;
      opt.era_switch_year = args->era_switch;
      opt.seed = args->ctx.seed;
      auto docs = synth_corpus(opt);
      const fs::path out(args->out);
      args->ctx.out_dir = out.has_parent_path() ? out.parent_path().string() : ".";
      write_documents_jsonl(args->out, docs);
      args->ctx.note(out.filename().string());
      std::printf("synth corpus: %zu documents (%d..%d)\n", docs.size(),
                  args->year_min, args->year_max);
      args->ctx.finish(corpus);
    });
  }

  {
    auto* graph = synth->add_subcommand("graph", "stochastic-block citation graph");
    struct Args {
      RunContext ctx;
      int nodes = 400;
      int year_min = 2009, year_max = 2016;
      int majors = 2, subs_per_major = 10;
      bool with_docs = false;
    };
    auto args = std::make_shared<Args>();
    graph->add_option("--nodes", args->nodes)->capture_default_str();
    graph->add_option("--year-min", args->year_min)->capture_default_str();
    graph->add_option("--year-max", args->year_max)->capture_default_str();
    graph->add_option("--majors", args->majors)->capture_default_str();
    graph->add_option("--subs-per-major", args->subs_per_major)
        ->capture_default_str();
    graph->add_flag("--with-docs", args->with_docs,
                    "also emit abstracts aligned with nodes");
    graph->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    add_common_options(graph, args->ctx);

    graph->callback([args, graph]() {
      SynthGraphOptions opt;
      opt.nodes = args->nodes;
      opt.year_min = args->year_min;
      opt.year_max = args->year_max;
      opt.majors = args->majors;
      opt.subs_per_major = args->subs_per_major;
      opt.seed = args->ctx.seed;
      CitationGraph g = synth_graph(opt);
      fs::create_directories(args->ctx.out_dir);
      write_graph(g, args->ctx.path("edges.tsv"), args->ctx.path("nodes.tsv"));
      args->ctx.note("edges.tsv");
      args->ctx.note("nodes.tsv");
      if (args->with_docs) {
        write_documents_jsonl(args->ctx.path("docs.jsonl"),
                              synth_graph_docs(g, args->ctx.seed));
        args->ctx.note("docs.jsonl");
      }
      std::printf("synth graph: %u nodes, %zu directed edges\n", g.num_nodes(),
                  g.directed_edges().size());
      args->ctx.finish(graph);
    });
  }
}

}  // namespace chronolm::cli
