#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "refsource/ensemble.hpp"
#include "refsource/gbdt.hpp"
#include "refsource/llm.hpp"

namespace refsource {

/// One structured config drives every subcommand; CLI flags win over file
/// values. Relative paths resolve against the config file's directory.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir;
  std::filesystem::path cache_dir;
  LlmMode mode = LlmMode::replay;
  uint64_t seed = 7;
  int jobs = 1;

  int context_window = 150;
  std::size_t prompt_char_budget = 40000;
  int samples_per_combination = 1;
  double train_split = 0.8;

  std::vector<std::string> cues;  // empty -> default cue list
  std::vector<ProviderProfile> providers;
  std::vector<PromptVariant> variants;

  TrainConfig gbdt_a;
  TrainConfig gbdt_b;
  std::optional<std::filesystem::path> external_scores_a;
  std::optional<std::filesystem::path> external_scores_b;

  EnsembleConfig ensemble;

  const std::vector<std::string>& cue_list() const;
};

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace refsource
