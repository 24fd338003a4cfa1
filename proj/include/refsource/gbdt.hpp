#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "refsource/features.hpp"

namespace refsource {

struct TrainConfig {
  int trees = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  int min_samples_leaf = 1;
  double feature_subsample = 1.0;
  double row_subsample = 1.0;
  int bins = 64;
  uint64_t seed = 0;

  void validate() const;
};

// Two diversified presets used as the pipeline's base scorers.
TrainConfig preset_a();
TrainConfig preset_b();

struct TreeNode {
  bool is_leaf = true;
  int feature = -1;
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double leaf = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct BoostedModel {
  double base_score = 0.0;  // log-odds of the training prior
  double learning_rate = 0.0;
  std::string schema_fingerprint;
  std::vector<Tree> trees;
};

/// Gradient boosting on logistic loss with equal-frequency histogram splits.
/// Deterministic given (matrix order, config). When `round_loss` is non-null
/// it receives the training logistic loss after each boosting round.
BoostedModel fit(const Eigen::MatrixXd& x, const std::vector<int>& y, const TrainConfig& config,
                 const std::string& schema_fingerprint, std::vector<double>* round_loss = nullptr);

BoostedModel fit(const std::vector<FeatureVector>& rows, const TrainConfig& config,
                 const FeatureSchema& schema, std::vector<double>* round_loss = nullptr);

/// sigmoid(base_score + learning-rate-scaled sum of leaf values); the raw
/// log-odds are clamped to +/-15, so the result is strictly inside (0,1).
double predict_proba(const BoostedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Fingerprint-checked variant.
double predict_proba(const BoostedModel& model, const FeatureVector& x, const FeatureSchema& schema);

void save_model(const BoostedModel& model, const std::filesystem::path& path);

/// Refuses unknown versions and checksum mismatches.
BoostedModel load_model(const std::filesystem::path& path);

/// External-scores adapter: a `paper_id,ref_index,prob` file satisfies the
/// base-scorer interface, so scores from any outside model can be fused.
struct ExternalScores {
  std::map<std::pair<std::string, int>, double> probs;

  double at(const std::string& paper_id, int ref_index) const;
};

ExternalScores load_external_scores(const std::filesystem::path& path);

}  // namespace refsource
