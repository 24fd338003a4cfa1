#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "refsource/errors.hpp"
#include "refsource/pipeline.hpp"

namespace {

struct CliFlags {
  std::string config_path;
  std::string ablate;
  std::string mode;
  std::string format = "plain";
  int jobs = 0;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CliFlags& flags, bool with_ablate, bool with_mode, bool with_format,
                bool with_dry_run) {
  cmd->add_option("--config", flags.config_path, "run configuration file")->required();
  cmd->add_option("--jobs", flags.jobs, "worker cap (overrides config)");
  if (with_ablate)
    cmd->add_option("--ablate", flags.ablate, "ablation mode: combined|base-only|llm-only");
  if (with_mode) cmd->add_option("--mode", flags.mode, "llm mode: live|replay (overrides config)");
  if (with_format) cmd->add_option("--format", flags.format, "report layout: plain|machine");
  if (with_dry_run)
    cmd->add_flag("--dry-run", flags.dry_run, "plan llm requests without sending (live mode)");
}

int dispatch(const std::string& name, const CliFlags& flags) {
  using namespace refsource;

  RunConfig cfg = load_run_config(flags.config_path);
  if (flags.jobs > 0) cfg.jobs = flags.jobs;  // flags win over file
  if (!flags.mode.empty()) {
    if (flags.mode == "live")
      cfg.mode = LlmMode::live;
    else if (flags.mode == "replay")
      cfg.mode = LlmMode::replay;
    else
      throw ValidationError("unknown --mode: " + flags.mode);
  }

  StageOptions opts;
  opts.ablate = ablate_from_name(flags.ablate);
  opts.dry_run = flags.dry_run;
  if (flags.format == "machine")
    opts.format = ReportFormat::machine;
  else if (flags.format != "plain")
    throw ValidationError("unknown --format: " + flags.format);

  if (name == "ingest") return run_ingest(cfg, std::cout);
  if (name == "featurize") return run_featurize(cfg, std::cout);
  if (name == "train") return run_train(cfg, std::cout);
  if (name == "llm") return run_llm(cfg, std::cout, opts);
  if (name == "score") return run_score(cfg, std::cout, opts);
  if (name == "eval") return run_eval(cfg, std::cout, opts);
  if (name == "pipeline") return run_pipeline(cfg, std::cout, opts);
  throw ValidationError("unknown subcommand: " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference source tracing pipeline"};
  app.require_subcommand(1);

  CliFlags flags;
  add_common(app.add_subcommand("ingest", "validate a pre-normalized corpus file"), flags, false,
             false, false, false);
  add_common(app.add_subcommand("featurize", "build the feature matrix"), flags, false, false,
             false, false);
  add_common(app.add_subcommand("train", "train the two base scorers"), flags, false, false, false,
             false);
  add_common(app.add_subcommand("llm", "elicit provider answers (live or replay)"), flags, false,
             true, false, true);
  add_common(app.add_subcommand("score", "fuse base scores with llm answers"), flags, true, false,
             false, false);
  add_common(app.add_subcommand("eval", "rank and compute MAP"), flags, true, false, true, false);
  add_common(app.add_subcommand("pipeline", "run all stages in order"), flags, true, true, true,
             true);

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app.get_subcommands().front()->get_name(), flags);
  } catch (const refsource::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
