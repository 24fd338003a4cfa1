#include "refsource/eval.hpp"

#include <algorithm>
#include <iomanip>

#include "refsource/errors.hpp"
#include "refsource/util.hpp"

namespace refsource {

std::vector<RankedItem> make_ranking(const std::vector<std::pair<int, double>>& scores) {
  std::vector<RankedItem> items;
  items.reserve(scores.size());
  for (const auto& [idx, score] : scores) items.push_back({idx, score});
  std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ref_index < b.ref_index;
  });
  return items;
}

double average_precision(const std::vector<RankedItem>& ranking, const std::set<int>& relevant) {
  if (relevant.empty()) throw ValidationError("average_precision: empty relevant set");
  int hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (relevant.count(ranking[k].ref_index)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

EvalReport mean_average_precision(
    const std::vector<std::pair<std::string, std::optional<double>>>& per_paper_ap) {
  EvalReport report;
  double sum = 0.0;
  for (const auto& [paper_id, ap] : per_paper_ap) {
    if (ap) {
      report.per_paper.push_back({paper_id, *ap});
      sum += *ap;
      ++report.evaluated;
    } else {
      ++report.skipped;
    }
  }
  if (report.evaluated == 0) throw ValidationError("mean_average_precision: no evaluated papers");
  report.map = sum / report.evaluated;
  return report;
}

double roc_auc(const std::vector<std::pair<double, int>>& scored_labels) {
  std::vector<std::pair<double, int>> sorted(scored_labels);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  long long n_pos = 0, n_neg = 0;
  for (const auto& [score, label] : sorted) (label == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("roc_auc: single-class input");

  // average ranks over tied scores (1-based)
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (sorted[k].second == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

void write_report(std::ostream& out, const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::machine) {
    out << "paper_id,ap\n";
    for (const auto& row : report.per_paper) out << row.paper_id << ',' << format_g9(row.ap) << '\n';
    out << "map," << format_g9(report.map) << '\n';
    out << "evaluated," << report.evaluated << '\n';
    out << "skipped," << report.skipped << '\n';
    return;
  }
  out << "Per-paper average precision\n";
  out << "---------------------------\n";
  for (const auto& row : report.per_paper)
    out << "  " << row.paper_id << "  " << format_g9(row.ap) << '\n';
  out << "---------------------------\n";
  out << "papers evaluated: " << report.evaluated << '\n';
  out << "papers skipped (no labels): " << report.skipped << '\n';
  out << "MAP: " << format_g9(report.map) << '\n';
}

}  // namespace refsource
