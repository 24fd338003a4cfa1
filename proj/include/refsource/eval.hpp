#pragma once

#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace refsource {

struct RankedItem {
  int ref_index = 0;
  double score = 0.0;
};

/// Descending by score, ties broken by ascending ref_index.
std::vector<RankedItem> make_ranking(const std::vector<std::pair<int, double>>& scores);

/// AP = (1/|relevant|) * sum over relevant ranks k of precision@k.
/// `relevant` must be non-empty and a subset of the ranked indices.
double average_precision(const std::vector<RankedItem>& ranking, const std::set<int>& relevant);

struct EvalReport {
  struct Row {
    std::string paper_id;
    double ap = 0.0;
  };
  std::vector<Row> per_paper;  // evaluated papers only, input order
  double map = 0.0;
  int evaluated = 0;
  int skipped = 0;  // papers without gold labels
};

/// MAP over papers with labels; unlabeled papers are counted as skipped.
EvalReport mean_average_precision(
    const std::vector<std::pair<std::string, std::optional<double>>>& per_paper_ap);

/// Rank-based AUC; tied scores contribute half-credit. Both classes required.
double roc_auc(const std::vector<std::pair<double, int>>& scored_labels);

enum class ReportFormat { plain, machine };

void write_report(std::ostream& out, const EvalReport& report, ReportFormat format);

}  // namespace refsource
