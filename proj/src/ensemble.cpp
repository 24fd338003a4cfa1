#include "refsource/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "refsource/errors.hpp"
#include "refsource/util.hpp"

namespace refsource {

void EnsembleConfig::validate() const {
  if (std::abs(w_lgb + w_cb - 1.0) > 1e-9)
    throw ValidationError("ensemble: base weights must sum to 1");
  if (w_lgb < 0.0 || w_cb < 0.0) throw ValidationError("ensemble: base weights must be >= 0");
  if (w_f < 0.0) throw ValidationError("ensemble: w_f must be >= 0");
  if (!(p_neg > 0.0 && p_neg <= 1.0)) throw ValidationError("ensemble: p_neg must be in (0,1]");
  if (p_threshold_neg < 0.0 || p_threshold_neg > 1.0)
    throw ValidationError("ensemble: p_threshold_neg must be in [0,1]");
  if (!(c_neg > 1.0)) throw ValidationError("ensemble: c_neg must be > 1");
  double sum = 0.0;
  for (const auto& [group, w] : group_weights) {
    if (w < 0.0) throw ValidationError("ensemble: negative weight for group " + group);
    sum += w;
  }
  if (!group_weights.empty() && sum <= 0.0)
    throw ValidationError("ensemble: group weights sum to zero");
}

int prob2score(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("prob2score: input outside [0,1]");
  if (x >= 0.9) return 3;
  if (x >= 0.5) return 2;
  if (x > 0.4) return 1;
  return 0;
}

double combine_base(double p_a, double p_b, const EnsembleConfig& cfg) {
  if (!(p_a >= 0.0 && p_a <= 1.0 && p_b >= 0.0 && p_b <= 1.0))
    throw ValidationError("combine_base: inputs outside [0,1]");
  return cfg.w_lgb * p_a + cfg.w_cb * p_b;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("percentile_nearest_rank: empty list");
  std::sort(values.begin(), values.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(values.size())));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

std::pair<double, BonusBreakdown> group_bonus(const AnswerSet& answers, int ref_index,
                                              const EnsembleConfig& cfg) {
  BonusBreakdown breakdown;

  std::vector<std::string> groups = answers.group_ids();
  std::map<std::string, double> score_sum;
  for (const AnswerSlot& slot : answers.slots) {
    if (slot.missing()) continue;
    auto it = slot.confidences.find(ref_index);
    double prob = it != slot.confidences.end() ? it->second : 0.0;  // omission = explicit 0
    score_sum[slot.group] += prob2score(prob);
    ++breakdown.group_slots[slot.group];
  }

  // weights over usable groups; missing groups drop out and the rest renormalize
  double weight_total = 0.0;
  std::map<std::string, double> weight;
  for (const std::string& g : groups) {
    if (!breakdown.group_slots.count(g)) continue;
    double w = 1.0;
    if (!cfg.group_weights.empty()) {
      auto it = cfg.group_weights.find(g);
      if (it == cfg.group_weights.end())
        throw ValidationError("ensemble: no weight configured for group " + g);
      w = it->second;
    }
    weight[g] = w;
    weight_total += w;
  }
  if (weight.empty() || weight_total <= 0.0) return {0.0, breakdown};

  double bonus = 0.0;
  for (const auto& [g, w] : weight) {
    double aggregate = score_sum[g] / breakdown.group_slots[g];
    breakdown.group_aggregate[g] = aggregate;
    bonus += (w / weight_total) * aggregate;
  }
  return {bonus, breakdown};
}

std::pair<double, bool> apply_negative_adjustment(double bonus, const std::vector<double>& ref_probs,
                                                  const EnsembleConfig& cfg) {
  if (ref_probs.empty()) return {bonus, false};  // no evidence either way
  if (percentile_nearest_rank(ref_probs, cfg.p_neg) < cfg.p_threshold_neg)
    return {bonus / cfg.c_neg, true};
  return {bonus, false};
}

double final_score(double p_base, double adjusted_bonus, const EnsembleConfig& cfg) {
  return p_base + cfg.w_f * adjusted_bonus;
}

std::vector<ScoredReference> score_paper(const PaperRecord& paper,
                                         const std::vector<std::pair<double, double>>& base_scores,
                                         const AnswerSet& answers, const EnsembleConfig& cfg) {
  cfg.validate();
  if (base_scores.size() != paper.references.size())
    throw MissingArtifactError("score_paper: base score missing for some reference of " +
                               paper.paper_id);

  std::vector<ScoredReference> out;
  out.reserve(paper.references.size());
  for (const ReferenceEntry& ref : paper.references) {
    const auto& [p_a, p_b] = base_scores[ref.index - 1];

    ScoredReference sr;
    sr.paper_id = paper.paper_id;
    sr.ref_index = ref.index;
    sr.p_base = combine_base(p_a, p_b, cfg);

    auto [bonus, breakdown] = group_bonus(answers, ref.index, cfg);
    sr.breakdown = std::move(breakdown);

    // demotion pool: raw confidences from slots that answered this reference;
    // omissions stay out so silence is not double-counted
    std::vector<double> pool;
    for (const AnswerSlot& slot : answers.slots) {
      if (slot.missing()) continue;
      auto it = slot.confidences.find(ref.index);
      if (it != slot.confidences.end()) pool.push_back(it->second);
    }
    auto [adjusted, demoted] = apply_negative_adjustment(bonus, pool, cfg);
    sr.score_bonus = adjusted;
    sr.demoted = demoted;
    sr.p_final = final_score(sr.p_base, adjusted, cfg);
    out.push_back(std::move(sr));
  }
  return out;
}

void write_scores(const std::filesystem::path& path, const std::vector<ScoredReference>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ExitCode::internal, "cannot write scores file: " + path.string());
  out << "paper_id,ref_index,p_base,score_bonus,demoted,p_final\n";
  for (const ScoredReference& r : rows) {
    out << r.paper_id << ',' << r.ref_index << ',' << format_g9(r.p_base) << ','
        << format_g9(r.score_bonus) << ',' << (r.demoted ? 1 : 0) << ',' << format_g9(r.p_final)
        << '\n';
  }
}

std::vector<ScoredReference> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open scores file: " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "paper_id,ref_index,p_base,score_bonus,demoted,p_final")
    throw ValidationError("scores file header malformed: " + path.string());
  std::vector<ScoredReference> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != 6)
      throw ValidationError("scores line " + std::to_string(line_no) + ": wrong column count");
    ScoredReference r;
    r.paper_id = parts[0];
    r.ref_index = std::stoi(parts[1]);
    r.p_base = std::stod(parts[2]);
    r.score_bonus = std::stod(parts[3]);
    r.demoted = parts[4] == "1";
    r.p_final = std::stod(parts[5]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace refsource
