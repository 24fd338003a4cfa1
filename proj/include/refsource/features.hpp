#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "refsource/corpus.hpp"

namespace refsource {

enum class SectionClass { intro, related, method, experiment, conclusion, other };

/// Case-insensitive keyword match in priority order:
/// related > intro > method > experiment > conclusion > other.
SectionClass classify_section(std::string_view heading);

enum class FeatureKind { count, ratio, indicator, delta, encoded_category };

struct FeatureSchema {
  struct Entry {
    std::string name;
    FeatureKind kind;
  };
  std::vector<Entry> entries;

  std::size_t size() const { return entries.size(); }
  /// Hex digest over the ordered feature names; stored in trained models so
  /// a model is never applied to vectors from a different schema.
  std::string fingerprint() const;
};

/// Numeric representation of one (paper, reference) pair.
struct FeatureVector {
  std::string paper_id;
  int ref_index = 0;
  Eigen::VectorXd values;
  std::optional<int> label;  // present iff the paper carries gold labels
};

const std::vector<std::string>& default_cues();

/// The pipeline schema: metadata, citation statistics, reference metadata and
/// one contextual-keyword count per cue phrase.
FeatureSchema default_schema(const std::vector<std::string>& cues = default_cues());

/// Corpus-level normalizers. Computed once per run; venue frequencies are the
/// only cross-paper inputs to build_features.
struct CorpusStats {
  std::unordered_map<std::string, double> paper_venue_freq;
  std::unordered_map<std::string, double> ref_venue_freq;

  static CorpusStats compute(std::span<const PaperRecord> papers);
};

/// Per-paper mention layout shared by every pair of that paper.
struct MentionIndex {
  std::vector<CitationMention> all;                    // document order
  std::map<int, std::vector<CitationMention>> by_ref;  // ref_index -> its mentions
  std::size_t total_mentions = 0;
  std::size_t body_length = 0;                   // sum of section body lengths
  std::vector<std::size_t> section_char_offset;  // global offset of each section body

  static MentionIndex build(const PaperRecord& paper, int window);
};

/// Number of mentions whose context contains the cue as a lowercase
/// substring; a mention containing a cue twice still counts once.
std::map<std::string, int> keyword_context_counts(const std::vector<CitationMention>& mentions,
                                                  const std::vector<std::string>& cues);

FeatureVector build_features(const PaperRecord& paper, int ref_index, const MentionIndex& mentions,
                             const FeatureSchema& schema, const CorpusStats& stats,
                             const std::vector<std::string>& cues = default_cues());

// Feature matrix file: header row with id columns and schema names, one CSV
// row per (paper_id, ref_index), decimals at 9 significant digits.
void write_feature_matrix(const std::filesystem::path& path, const FeatureSchema& schema,
                          const std::vector<FeatureVector>& rows);

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<FeatureVector> rows;
  std::string fingerprint;
};

FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

}  // namespace refsource
