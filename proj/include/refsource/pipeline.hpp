#pragma once

#include <ostream>

#include "refsource/config.hpp"
#include "refsource/eval.hpp"

namespace refsource {

enum class AblateMode { combined, base_only, llm_only };

AblateMode ablate_from_name(const std::string& name);

struct StageOptions {
  AblateMode ablate = AblateMode::combined;
  ReportFormat format = ReportFormat::plain;
  bool dry_run = false;
  // test seam: replaces the HTTP transport in live mode
  Transport* transport_override = nullptr;
};

// Each stage returns a process exit code and reports progress on `log`.
// run_pipeline is exactly the stages in order; it stops at the first failure.
int run_ingest(const RunConfig& cfg, std::ostream& log);
int run_featurize(const RunConfig& cfg, std::ostream& log);
int run_train(const RunConfig& cfg, std::ostream& log);
int run_llm(const RunConfig& cfg, std::ostream& log, const StageOptions& opts = {});
int run_score(const RunConfig& cfg, std::ostream& log, const StageOptions& opts = {});
int run_eval(const RunConfig& cfg, std::ostream& log, const StageOptions& opts = {});
int run_pipeline(const RunConfig& cfg, std::ostream& log, const StageOptions& opts = {});

// Artifact names under cfg.output_dir.
std::string scores_filename(AblateMode mode);
std::string report_filename(AblateMode mode);

}  // namespace refsource
