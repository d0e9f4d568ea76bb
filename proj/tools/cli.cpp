#include "cli_common.hpp"

#include <cstdio>

namespace chronolm::cli {

int run_cli(std::vector<std::string> args) {
  CLI::App app{"chronolm: chronological masked-language-model workbench"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "run_config.txt snapshot (place before the subcommand)");

  register_corpus(app);
  register_vocab(app);
  register_model(app);
  register_series(app);
  register_probe(app);
  register_linkpred(app);
  register_synth(app);
  register_plot(app);

  // CLI11 expects argv order reversed
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMissingInput;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace chronolm::cli
