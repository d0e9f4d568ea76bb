#include <filesystem>
#include <memory>

#include "chronolm/io.hpp"
#include "chronolm/series.hpp"
#include "cli_common.hpp"

namespace chronolm::cli {

namespace fs = std::filesystem;

namespace {

struct ModelArgs {
  std::string preset = "desk";
  int n_layers = 0, n_heads = 0, d_model = 0, d_ff = 0, max_len = 0;
  double dropout = -1.0;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "desk|paper architecture preset")
        ->check(CLI::IsMember({"desk", "paper"}))
        ->capture_default_str();
    cmd->add_option("--layers", n_layers, "override encoder layers");
    cmd->add_option("--heads", n_heads, "override attention heads");
    cmd->add_option("--d-model", d_model, "override hidden width");
    cmd->add_option("--d-ff", d_ff, "override feed-forward width");
    cmd->add_option("--max-len", max_len, "override sequence length");
    cmd->add_option("--dropout", dropout, "override dropout probability");
  }

  ModelConfig resolve(int vocab_size, std::uint64_t seed) const {
    ModelConfig cfg = preset == "paper" ? paper_config(vocab_size)
                                        : desk_config(vocab_size);
    if (n_layers > 0) cfg.n_layers = n_layers;
    if (n_heads > 0) cfg.n_heads = n_heads;
    if (d_model > 0) cfg.d_model = d_model;
    if (d_ff > 0) cfg.d_ff = d_ff;
    if (max_len > 0) cfg.max_len = max_len;
    if (dropout >= 0.0) cfg.dropout = dropout;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

struct HpArgs {
  double lr = 3e-4;
  int batch_size = 16;
  int epochs = 2;
  double weight_decay = 0.01;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "learning rate")->capture_default_str();
    cmd->add_option("--batch-size", batch_size)->capture_default_str();
    cmd->add_option("--epochs", epochs, "base-training epochs")
        ->capture_default_str();
    cmd->add_option("--weight-decay", weight_decay,
                    "decoupled decay (never on embeddings)")
        ->capture_default_str();
  }

  TrainHp resolve(std::uint64_t seed) const {
    TrainHp hp;
    hp.lr = lr;
    hp.batch_size = batch_size;
    hp.epochs = epochs;
    hp.weight_decay = weight_decay;
    hp.seed = seed;
    return hp;
  }
};

void write_loss_curve(const std::string& path, const std::vector<double>& curve) {
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    csv += std::to_string(i) + "," + format_double(curve[i]) + "\n";
  write_text_file(path, csv);
}

}  // namespace

void register_model(CLI::App& app) {
  auto* model = app.add_subcommand("model", "single-checkpoint training");
  model->require_subcommand(1);
  auto* pretrain = model->add_subcommand(
      "pretrain", "train one checkpoint from scratch on the given slices");

  struct Args {
    RunContext ctx;
    std::string slices, vocab;
    std::string out = "model.clm";
    bool shuffled_one_pass = false;
    int through_year = 0;
    ModelArgs model;
    HpArgs hp;
  };
  auto args = std::make_shared<Args>();
  pretrain->add_option("--slices", args->slices, "slice directory")->required();
  pretrain->add_option("--vocab", args->vocab, "vocab.tsv")->required();
  pretrain->add_option("--out", args->out, "checkpoint path")
      ->capture_default_str();
  pretrain->add_option("--through-year", args->through_year,
                       "train only on slices up to this year (0 = all)");
  pretrain->add_flag("--shuffled-one-pass", args->shuffled_one_pass,
                     "one epoch over the globally shuffled union of slices");
  args->model.add_options(pretrain);
  args->hp.add_options(pretrain);
  add_common_options(pretrain, args->ctx);

  pretrain->callback([args, pretrain]() {
    Vocabulary vocab = Vocabulary::load_tsv(args->vocab);
    auto slices = read_slices(args->slices);
    if (slices.empty()) throw ConfigError("no slices found in " + args->slices);
    ModelConfig cfg = args->model.resolve(vocab.size(), args->ctx.seed);
    TrainHp hp = args->hp.resolve(args->ctx.seed);

    Checkpoint ckpt;
    TrainResult tr;
    if (args->shuffled_one_pass) {
      ckpt = pretrain_one_pass(slices, vocab, cfg, hp, &tr);
    } else {
      const int through =
          args->through_year > 0 ? args->through_year : slices.rbegin()->first;
      ckpt = pretrain_base(slices, vocab, cfg, hp, through, &tr);
    }

    const fs::path out(args->out);
    args->ctx.out_dir = out.has_parent_path() ? out.parent_path().string() : ".";
    save_checkpoint(ckpt, args->out);
    args->ctx.note(out.filename().string());
    write_loss_curve(args->ctx.path("loss_curve.csv"), tr.loss_curve);
    args->ctx.note("loss_curve.csv");
    std::printf("model pretrain: %ld steps, final loss %s\n",
                ckpt.total_steps(),
                ckpt.meta["loss_history"]["last"].dump().c_str());
    args->ctx.finish(pretrain);
  });
}

void register_series(CLI::App& app) {
  auto* series = app.add_subcommand("series", "checkpoint series operations");
  series->require_subcommand(1);

  {
    auto* build = series->add_subcommand(
        "build", "base pretraining plus yearly continual training");
    struct Args {
      RunContext ctx;
      std::string slices, vocab;
      int base_year = 0;
      int through = 0;
      ModelArgs model;
      HpArgs hp;
    };
    auto args = std::make_shared<Args>();
    build->add_option("--slices", args->slices)->required();
    build->add_option("--vocab", args->vocab)->required();
    build->add_option("--base-year", args->base_year, "from-scratch cutoff year")
        ->required();
    build->add_option("--through", args->through, "final continual year")
        ->required();
    build->add_option("--out-dir", args->ctx.out_dir)->capture_default_str();
    args->model.add_options(build);
    args->hp.add_options(build);
    add_common_options(build, args->ctx);

    build->callback([args, build]() {
      Vocabulary vocab = Vocabulary::load_tsv(args->vocab);
      auto slices = read_slices(args->slices);
      ModelConfig cfg = args->model.resolve(vocab.size(), args->ctx.seed);
      TrainHp hp = args->hp.resolve(args->ctx.seed);
      SeriesRegistry reg = build_series(slices, vocab, cfg, hp, args->base_year,
                                        args->through, args->ctx.out_dir);
      for (const auto& e : reg.entries) args->ctx.note(e.path);
      args->ctx.note("series.json");
      std::printf("series build: %zu checkpoints (%d..%d)\n",
                  reg.entries.size(), args->base_year, args->through);
      args->ctx.finish(build);
    });
  }

  {
    auto* interp = series->add_subcommand(
        "interpolate", "elementwise mix of two checkpoints");
    struct Args {
      RunContext ctx;
      std::string a, b;
      std::string out = "mix.clm";
      double lambda = 0.5;
    };
    auto args = std::make_shared<Args>();
    interp->add_option("--a", args->a)->required();
    interp->add_option("--b", args->b)->required();
    interp->add_option("--lambda", args->lambda)->capture_default_str();
    interp->add_option("--out", args->out)->capture_default_str();
    add_common_options(interp, args->ctx);

    interp->callback([args, interp]() {
      Checkpoint mixed = interpolate(load_checkpoint(args->a),
                                     load_checkpoint(args->b), args->lambda);
      const fs::path out(args->out);
      args->ctx.out_dir = out.has_parent_path() ? out.parent_path().string() : ".";
      save_checkpoint(mixed, args->out);
      args->ctx.note(out.filename().string());
      std::printf("series interpolate: lambda=%s -> %s\n",
                  format_double(args->lambda).c_str(), args->out.c_str());
      args->ctx.finish(interp);
    });
  }

  {
    auto* rnd = series->add_subcommand(
        "random-matched", "moment-matched random checkpoint");
    struct Args {
      RunContext ctx;
      std::string ref;
      std::string out = "random.clm";
    };
    auto args = std::make_shared<Args>();
    rnd->add_option("--ref", args->ref, "reference checkpoint")->required();
    rnd->add_option("--out", args->out)->capture_default_str();
    add_common_options(rnd, args->ctx);

    rnd->callback([args, rnd]() {
      Checkpoint out = random_matched(load_checkpoint(args->ref), args->ctx.seed);
      const fs::path p(args->out);
      args->ctx.out_dir = p.has_parent_path() ? p.parent_path().string() : ".";
      save_checkpoint(out, args->out);
      args->ctx.note(p.filename().string());
      std::printf("series random-matched: seed=%llu -> %s\n",
                  static_cast<unsigned long long>(args->ctx.seed),
                  args->out.c_str());
      args->ctx.finish(rnd);
    });
  }
}

}  // namespace chronolm::cli
