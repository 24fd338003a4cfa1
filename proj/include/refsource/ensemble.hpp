#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "refsource/corpus.hpp"
#include "refsource/llm.hpp"

namespace refsource {

struct EnsembleConfig {
  double w_lgb = 0.4;
  double w_cb = 0.6;
  double w_f = 0.035;
  double p_neg = 0.4;
  double p_threshold_neg = 0.2;
  double c_neg = 4.0;
  // group id -> weight; empty means uniform over the groups present.
  std::map<std::string, double> group_weights;

  void validate() const;
};

/// Confidence bucketing: 3 if x >= 0.9; 2 if 0.5 <= x < 0.9; 1 if
/// 0.4 < x < 0.5; 0 if x <= 0.4.
int prob2score(double x);

/// Weighted base blend w_lgb*p_a + w_cb*p_b.
double combine_base(double p_a, double p_b, const EnsembleConfig& cfg);

/// Nearest-rank percentile: element at 1-based index ceil(p*n) of the sorted
/// list.
double percentile_nearest_rank(std::vector<double> values, double p);

struct BonusBreakdown {
  std::map<std::string, double> group_aggregate;  // usable groups only
  std::map<std::string, int> group_slots;         // non-missing slots per group
};

/// Group-weighted aggregate of bucketed confidences. Per group: mean of
/// prob2score over non-missing slots, where a slot that parsed but omitted
/// the reference contributes 0. Groups with no usable slot drop out and the
/// remaining weights renormalize.
std::pair<double, BonusBreakdown> group_bonus(const AnswerSet& answers, int ref_index,
                                              const EnsembleConfig& cfg);

/// Divides the bonus by c_neg when the p_neg-th percentile of the
/// reference's confidences falls below the threshold. Empty pools leave the
/// bonus unchanged.
std::pair<double, bool> apply_negative_adjustment(double bonus, const std::vector<double>& ref_probs,
                                                  const EnsembleConfig& cfg);

/// p_base + w_f * bonus. May exceed 1: the output ranks, it is not a
/// calibrated probability.
double final_score(double p_base, double adjusted_bonus, const EnsembleConfig& cfg);

struct ScoredReference {
  std::string paper_id;
  int ref_index = 0;
  double p_base = 0.0;
  double score_bonus = 0.0;  // post-demotion
  bool demoted = false;
  double p_final = 0.0;
  BonusBreakdown breakdown;
};

/// Full fusion for one paper. `base_scores[j-1]` holds (p_a, p_b) for
/// reference j; an entry is required for every reference.
std::vector<ScoredReference> score_paper(const PaperRecord& paper,
                                         const std::vector<std::pair<double, double>>& base_scores,
                                         const AnswerSet& answers, const EnsembleConfig& cfg);

// Scores file: paper_id,ref_index,p_base,score_bonus,demoted,p_final with
// 9-significant-digit decimals.
void write_scores(const std::filesystem::path& path, const std::vector<ScoredReference>& rows);
std::vector<ScoredReference> read_scores(const std::filesystem::path& path);

}  // namespace refsource
