#include "refsource/features.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "refsource/errors.hpp"
#include "refsource/util.hpp"

namespace refsource {

namespace {

struct SectionRule {
  SectionClass cls;
  std::vector<std::string> keywords;
};

const std::vector<SectionRule>& section_rules() {
  static const std::vector<SectionRule> rules = {
      {SectionClass::related, {"related work", "background"}},
      {SectionClass::intro, {"introduction"}},
      {SectionClass::method, {"method", "approach", "model"}},
      {SectionClass::experiment, {"experiment", "evaluation", "result"}},
      {SectionClass::conclusion, {"conclusion", "discussion"}},
  };
  return rules;
}

std::string cue_feature_name(const std::string& cue) {
  std::string name = "cue_";
  for (char c : cue) name.push_back(c == ' ' ? '_' : c);
  return name;
}

int author_overlap(const std::vector<AuthorInfo>& a, const std::vector<AuthorInfo>& b) {
  std::set<std::string> names;
  for (const AuthorInfo& x : a) {
    std::string n = normalize_name(x.name);
    if (!n.empty()) names.insert(n);
  }
  int overlap = 0;
  std::set<std::string> counted;
  for (const AuthorInfo& x : b) {
    std::string n = normalize_name(x.name);
    if (!n.empty() && names.count(n) && counted.insert(n).second) ++overlap;
  }
  return overlap;
}

int affiliation_overlap(const std::vector<AuthorInfo>& a, const std::vector<AuthorInfo>& b) {
  std::set<std::string> affs;
  for (const AuthorInfo& x : a) {
    std::string n = normalize_name(x.affiliation);
    if (!n.empty()) affs.insert(n);
  }
  int overlap = 0;
  std::set<std::string> counted;
  for (const AuthorInfo& x : b) {
    std::string n = normalize_name(x.affiliation);
    if (!n.empty() && affs.count(n) && counted.insert(n).second) ++overlap;
  }
  return overlap;
}

}  // namespace

SectionClass classify_section(std::string_view heading) {
  std::string h = to_lower(heading);
  for (const SectionRule& rule : section_rules())
    for (const std::string& kw : rule.keywords)
      if (h.find(kw) != std::string::npos) return rule.cls;
  return SectionClass::other;
}

std::string FeatureSchema::fingerprint() const {
  std::string joined;
  for (const Entry& e : entries) {
    joined += e.name;
    joined.push_back('\n');
  }
  return sha256_hex(joined).substr(0, 16);
}

const std::vector<std::string>& default_cues() {
  static const std::vector<std::string> cues = {
      "inspired by",  "motivated by",  "inspired us", "motivated us", "take inspiration",
      "pioneering",   "previous work", "following",   "based on",     "we adopt",
      "we use"};
  return cues;
}

FeatureSchema default_schema(const std::vector<std::string>& cues) {
  FeatureSchema s;
  using K = FeatureKind;
  s.entries = {
      {"paper_citation_log1p", K::count},
      {"ref_citation_log1p", K::count},
      {"venue_match", K::indicator},
      {"paper_venue_freq", K::encoded_category},
      {"ref_venue_freq", K::encoded_category},
      {"author_overlap", K::count},
      {"affiliation_overlap", K::count},
      {"year_delta", K::delta},
      {"total_mentions", K::count},
      {"mention_share", K::ratio},
      {"mentions_intro", K::count},
      {"mentions_related", K::count},
      {"mentions_method", K::count},
      {"mentions_experiment", K::count},
      {"mentions_conclusion", K::count},
      {"first_mention_pos", K::ratio},
      {"ref_list_length", K::count},
  };
  for (const std::string& cue : cues) s.entries.push_back({cue_feature_name(cue), K::count});
  return s;
}

CorpusStats CorpusStats::compute(std::span<const PaperRecord> papers) {
  CorpusStats stats;
  std::unordered_map<std::string, long long> paper_counts, ref_counts;
  long long total_refs = 0;
  for (const PaperRecord& p : papers) {
    ++paper_counts[to_lower(p.venue)];
    for (const ReferenceEntry& r : p.references) {
      ++ref_counts[to_lower(r.venue)];
      ++total_refs;
    }
  }
  for (const auto& [venue, n] : paper_counts)
    stats.paper_venue_freq[venue] = static_cast<double>(n) / static_cast<double>(papers.size());
  if (total_refs > 0)
    for (const auto& [venue, n] : ref_counts)
      stats.ref_venue_freq[venue] = static_cast<double>(n) / static_cast<double>(total_refs);
  return stats;
}

MentionIndex MentionIndex::build(const PaperRecord& paper, int window) {
  MentionIndex idx;
  idx.all = extract_mentions(paper, window);
  idx.total_mentions = idx.all.size();
  idx.section_char_offset.reserve(paper.sections.size());
  for (const SectionText& s : paper.sections) {
    idx.section_char_offset.push_back(idx.body_length);
    idx.body_length += s.body.size();
  }
  for (const CitationMention& m : idx.all) idx.by_ref[m.ref_index].push_back(m);
  return idx;
}

std::map<std::string, int> keyword_context_counts(const std::vector<CitationMention>& mentions,
                                                  const std::vector<std::string>& cues) {
  std::map<std::string, int> counts;
  for (const std::string& cue : cues) counts[cue] = 0;
  for (const CitationMention& m : mentions) {
    std::string ctx = to_lower(m.context);
    for (const std::string& cue : cues)
      if (ctx.find(cue) != std::string::npos) ++counts[cue];
  }
  return counts;
}

FeatureVector build_features(const PaperRecord& paper, int ref_index, const MentionIndex& mentions,
                             const FeatureSchema& schema, const CorpusStats& stats,
                             const std::vector<std::string>& cues) {
  if (ref_index < 1 || ref_index > static_cast<int>(paper.references.size()))
    throw ValidationError("build_features: ref_index out of range");
  if (schema.size() != 17 + cues.size())
    throw ValidationError("build_features: schema does not match cue list");

  const ReferenceEntry& ref = paper.references[ref_index - 1];
  static const std::vector<CitationMention> kNoMentions;
  auto it = mentions.by_ref.find(ref_index);
  const std::vector<CitationMention>& own = it != mentions.by_ref.end() ? it->second : kNoMentions;

  FeatureVector fv;
  fv.paper_id = paper.paper_id;
  fv.ref_index = ref_index;
  fv.values.resize(static_cast<Eigen::Index>(schema.size()));

  std::array<int, 5> per_class{};  // intro, related, method, experiment, conclusion
  for (const CitationMention& m : own) {
    SectionClass cls = classify_section(paper.sections[m.section_ordinal].heading);
    switch (cls) {
      case SectionClass::intro: ++per_class[0]; break;
      case SectionClass::related: ++per_class[1]; break;
      case SectionClass::method: ++per_class[2]; break;
      case SectionClass::experiment: ++per_class[3]; break;
      case SectionClass::conclusion: ++per_class[4]; break;
      case SectionClass::other: break;
    }
  }

  double first_pos = 1.0;  // never mentioned
  if (!own.empty() && mentions.body_length > 0) {
    const CitationMention& first = own.front();
    std::size_t global =
        mentions.section_char_offset[first.section_ordinal] + static_cast<std::size_t>(first.char_offset);
    first_pos = static_cast<double>(global) / static_cast<double>(mentions.body_length);
  }

  auto venue_freq = [](const std::unordered_map<std::string, double>& table, const std::string& v) {
    auto f = table.find(to_lower(v));
    return f != table.end() ? f->second : 0.0;
  };

  bool venue_match = !paper.venue.empty() && to_lower(paper.venue) == to_lower(ref.venue);

  Eigen::Index k = 0;
  fv.values[k++] = std::log1p(static_cast<double>(paper.citation_count));
  fv.values[k++] = std::log1p(static_cast<double>(ref.citation_count));
  fv.values[k++] = venue_match ? 1.0 : 0.0;
  fv.values[k++] = venue_freq(stats.paper_venue_freq, paper.venue);
  fv.values[k++] = venue_freq(stats.ref_venue_freq, ref.venue);
  fv.values[k++] = author_overlap(paper.authors, ref.authors);
  fv.values[k++] = affiliation_overlap(paper.authors, ref.authors);
  fv.values[k++] = static_cast<double>(paper.year - ref.year);
  fv.values[k++] = static_cast<double>(own.size());
  fv.values[k++] = mentions.total_mentions > 0
                       ? static_cast<double>(own.size()) / static_cast<double>(mentions.total_mentions)
                       : 0.0;
  for (int c = 0; c < 5; ++c) fv.values[k++] = per_class[c];
  fv.values[k++] = first_pos;
  fv.values[k++] = static_cast<double>(paper.references.size());

  auto cue_counts = keyword_context_counts(own, cues);
  for (const std::string& cue : cues) fv.values[k++] = cue_counts[cue];

  if (!fv.values.allFinite())
    throw ValidationError("build_features: non-finite value for " + paper.paper_id + " ref " +
                          std::to_string(ref_index));
  if (paper.source_labels) fv.label = paper.source_labels->count(ref_index) ? 1 : 0;
  return fv;
}

void write_feature_matrix(const std::filesystem::path& path, const FeatureSchema& schema,
                          const std::vector<FeatureVector>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ExitCode::internal, "cannot write feature matrix: " + path.string());
  out << "paper_id,ref_index,label";
  for (const FeatureSchema::Entry& e : schema.entries) out << ',' << e.name;
  out << '\n';
  for (const FeatureVector& fv : rows) {
    if (fv.values.size() != static_cast<Eigen::Index>(schema.size()))
      throw ValidationError("feature row does not match schema length");
    out << fv.paper_id << ',' << fv.ref_index << ',';
    if (fv.label) out << *fv.label;
    for (Eigen::Index i = 0; i < fv.values.size(); ++i) out << ',' << format_g9(fv.values[i]);
    out << '\n';
  }
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open feature matrix: " + path.string());
  FeatureMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("feature matrix is empty: " + path.string());
  auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "paper_id" || header[1] != "ref_index" || header[2] != "label")
    throw ValidationError("feature matrix header malformed: " + path.string());
  m.names.assign(header.begin() + 3, header.end());

  std::string joined;
  for (const std::string& n : m.names) {
    joined += n;
    joined.push_back('\n');
  }
  m.fingerprint = sha256_hex(joined).substr(0, 16);

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != m.names.size() + 3)
      throw ValidationError("feature matrix line " + std::to_string(line_no) + ": wrong column count");
    FeatureVector fv;
    fv.paper_id = parts[0];
    fv.ref_index = std::stoi(parts[1]);
    if (!parts[2].empty()) fv.label = std::stoi(parts[2]);
    fv.values.resize(static_cast<Eigen::Index>(m.names.size()));
    for (std::size_t i = 0; i < m.names.size(); ++i) fv.values[static_cast<Eigen::Index>(i)] = std::stod(parts[i + 3]);
    m.rows.push_back(std::move(fv));
  }
  return m;
}

}  // namespace refsource
