#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace refsource {

struct AuthorInfo {
  std::string name;
  std::string affiliation;  // may be empty

  bool operator==(const AuthorInfo&) const = default;
};

struct SectionText {
  std::string heading;
  std::string body;  // plain text with inline citation markers like "[3]" or "[2,5-7]"

  bool operator==(const SectionText&) const = default;
};

struct ReferenceEntry {
  int index = 0;  // 1-based position in the reference list
  std::string ref_id;
  std::string title;
  std::string venue;
  int year = 0;
  std::vector<AuthorInfo> authors;
  long long citation_count = 0;

  bool operator==(const ReferenceEntry&) const = default;
};

/// One paper: metadata, sectioned body text and its reference list, plus
/// optional gold source labels and an optional annotator note.
struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string abstract;
  std::string venue;
  int year = 0;
  long long citation_count = 0;
  std::vector<AuthorInfo> authors;
  std::vector<SectionText> sections;
  std::vector<ReferenceEntry> references;
  std::optional<std::set<int>> source_labels;
  std::optional<std::string> notes;

  bool operator==(const PaperRecord&) const = default;
};

/// One occurrence of a reference marker in the body text.
struct CitationMention {
  int ref_index = 0;
  int section_ordinal = 0;  // 0-based position in PaperRecord::sections
  int char_offset = 0;      // offset of the '[' within the section body
  std::string context;      // window around the marker, clipped at section bounds
};

struct Violation {
  std::string field;
  std::string message;
};

/// A bracketed citation marker as found in body text. "[2,5-7]" is a single
/// marker carrying indices {2,5,6,7}.
struct Marker {
  std::size_t offset = 0;
  std::size_t length = 0;
  std::vector<int> indices;
};

/// Scans body text for citation markers: bracketed arabic numerals with
/// comma lists and hyphen ranges. Bracket groups that do not match the
/// grammar (empty, non-numeric, reversed ranges) are ignored.
std::vector<Marker> scan_markers(const std::string& body);

/// Empty result iff all PaperRecord invariants hold. Violations are data,
/// not failures.
std::vector<Violation> validate_record(const PaperRecord& paper);

/// Loads a line-delimited corpus file (one JSON record per line, schema in
/// corpus.md). Every record is validated; any violation, parse error or
/// duplicate paper_id raises ValidationError naming the line.
std::vector<PaperRecord> load_corpus(const std::filesystem::path& path);

void save_corpus(const std::vector<PaperRecord>& papers, const std::filesystem::path& path);

/// One mention per marker occurrence in document order. `window` is the
/// context width in characters on each side of the marker.
std::vector<CitationMention> extract_mentions(const PaperRecord& paper, int window);

}  // namespace refsource
