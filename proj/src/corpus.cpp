#include "refsource/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "refsource/errors.hpp"

namespace refsource {

using nlohmann::json;

namespace {

// Largest index accepted by the marker grammar; brackets holding bigger
// numbers are treated as ordinary text, not citations.
constexpr long kMaxMarkerIndex = 100000;

// Parses the text between '[' and ']' as "k", "k-m" or a comma list of
// those. Returns false if the content does not match the grammar.
bool parse_marker_body(const std::string& s, std::vector<int>& out) {
  out.clear();
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  auto read_int = [&](long& value) -> bool {
    skip_ws();
    std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == start || i - start > 6) return false;
    value = std::stol(s.substr(start, i - start));
    return value >= 0 && value <= kMaxMarkerIndex;
  };
  while (true) {
    long lo = 0;
    if (!read_int(lo)) return false;
    skip_ws();
    if (i < s.size() && s[i] == '-') {
      ++i;
      long hi = 0;
      if (!read_int(hi)) return false;
      if (hi < lo) return false;
      if (hi - lo > 500) return false;  // implausible span, not a citation
      for (long k = lo; k <= hi; ++k) out.push_back(static_cast<int>(k));
      skip_ws();
    } else {
      out.push_back(static_cast<int>(lo));
    }
    if (i == s.size()) return true;
    if (s[i] != ',') return false;
    ++i;
  }
}

json author_to_json(const AuthorInfo& a) {
  json j;
  j["name"] = a.name;
  j["affiliation"] = a.affiliation;
  return j;
}

AuthorInfo author_from_json(const json& j) {
  AuthorInfo a;
  a.name = j.at("name").get<std::string>();
  a.affiliation = j.value("affiliation", std::string{});
  return a;
}

}  // namespace

std::vector<Marker> scan_markers(const std::string& body) {
  std::vector<Marker> markers;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t open = body.find('[', pos);
    if (open == std::string::npos) break;
    std::size_t close = body.find(']', open + 1);
    if (close == std::string::npos) break;
    std::vector<int> indices;
    if (parse_marker_body(body.substr(open + 1, close - open - 1), indices)) {
      markers.push_back({open, close - open + 1, std::move(indices)});
      pos = close + 1;
    } else {
      pos = open + 1;
    }
  }
  return markers;
}

std::vector<Violation> validate_record(const PaperRecord& paper) {
  std::vector<Violation> out;
  if (paper.paper_id.empty()) out.push_back({"paper_id", "paper_id is empty"});
  if (paper.citation_count < 0) out.push_back({"citation_count", "citation_count is negative"});

  const int j_count = static_cast<int>(paper.references.size());
  for (int k = 0; k < j_count; ++k) {
    const ReferenceEntry& r = paper.references[k];
    if (r.index != k + 1) {
      out.push_back({"references", "reference indices not contiguous: expected " +
                                       std::to_string(k + 1) + " found " + std::to_string(r.index)});
      break;
    }
    if (r.citation_count < 0)
      out.push_back({"references", "reference " + std::to_string(r.index) +
                                       ": citation_count is negative"});
    for (const AuthorInfo& a : r.authors)
      if (a.name.empty())
        out.push_back({"references", "reference " + std::to_string(r.index) + ": empty author name"});
  }

  for (const AuthorInfo& a : paper.authors)
    if (a.name.empty()) out.push_back({"authors", "empty author name"});

  for (std::size_t s = 0; s < paper.sections.size(); ++s) {
    for (const Marker& m : scan_markers(paper.sections[s].body)) {
      for (int idx : m.indices) {
        if (idx < 1 || idx > j_count) {
          out.push_back({"sections", "dangling citation marker: index " + std::to_string(idx) +
                                         " in section " + std::to_string(s) + " (paper has " +
                                         std::to_string(j_count) + " references)"});
        }
      }
    }
  }

  if (paper.source_labels) {
    for (int idx : *paper.source_labels) {
      if (idx < 1 || idx > j_count)
        out.push_back({"source_labels", "label out of range: " + std::to_string(idx)});
    }
  }
  return out;
}

std::vector<PaperRecord> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open corpus file: " + path.string());

  std::vector<PaperRecord> papers;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }

    PaperRecord p;
    try {
      p.paper_id = j.at("paper_id").get<std::string>();
      p.title = j.at("title").get<std::string>();
      p.abstract = j.at("abstract").get<std::string>();
      p.venue = j.at("venue").get<std::string>();
      p.year = j.at("year").get<int>();
      p.citation_count = j.at("citation_count").get<long long>();
      for (const json& a : j.at("authors")) p.authors.push_back(author_from_json(a));
      for (const json& s : j.at("sections"))
        p.sections.push_back({s.at("heading").get<std::string>(), s.at("body").get<std::string>()});
      for (const json& r : j.at("references")) {
        ReferenceEntry e;
        e.index = r.at("index").get<int>();
        e.ref_id = r.value("ref_id", std::string{});
        e.title = r.at("title").get<std::string>();
        e.venue = r.at("venue").get<std::string>();
        e.year = r.at("year").get<int>();
        e.citation_count = r.at("citation_count").get<long long>();
        if (r.contains("authors"))
          for (const json& a : r["authors"]) e.authors.push_back(author_from_json(a));
        p.references.push_back(std::move(e));
      }
      if (j.contains("source_labels")) {
        std::set<int> labels;
        for (const json& v : j["source_labels"]) labels.insert(v.get<int>());
        p.source_labels = std::move(labels);
      }
      if (j.contains("notes")) p.notes = j["notes"].get<std::string>();
    } catch (const json::exception& e) {
      throw ValidationError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }

    auto violations = validate_record(p);
    if (!violations.empty()) {
      std::ostringstream msg;
      msg << "corpus line " << line_no << " (" << p.paper_id << "): ";
      for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) msg << "; ";
        msg << violations[i].field << ": " << violations[i].message;
      }
      throw ValidationError(msg.str());
    }
    if (!seen_ids.insert(p.paper_id).second)
      throw ValidationError("corpus line " + std::to_string(line_no) + ": duplicate paper_id " +
                            p.paper_id);
    papers.push_back(std::move(p));
  }
  return papers;
}

void save_corpus(const std::vector<PaperRecord>& papers, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ExitCode::internal, "cannot write corpus file: " + path.string());
  for (const PaperRecord& p : papers) {
    json j;
    j["paper_id"] = p.paper_id;
    j["title"] = p.title;
    j["abstract"] = p.abstract;
    j["venue"] = p.venue;
    j["year"] = p.year;
    j["citation_count"] = p.citation_count;
    j["authors"] = json::array();
    for (const AuthorInfo& a : p.authors) j["authors"].push_back(author_to_json(a));
    j["sections"] = json::array();
    for (const SectionText& s : p.sections)
      j["sections"].push_back(json{{"heading", s.heading}, {"body", s.body}});
    j["references"] = json::array();
    for (const ReferenceEntry& r : p.references) {
      json e;
      e["index"] = r.index;
      if (!r.ref_id.empty()) e["ref_id"] = r.ref_id;
      e["title"] = r.title;
      e["venue"] = r.venue;
      e["year"] = r.year;
      e["citation_count"] = r.citation_count;
      e["authors"] = json::array();
      for (const AuthorInfo& a : r.authors) e["authors"].push_back(author_to_json(a));
      j["references"].push_back(std::move(e));
    }
    if (p.source_labels) j["source_labels"] = *p.source_labels;
    if (p.notes) j["notes"] = *p.notes;
    out << j.dump() << '\n';
  }
}

std::vector<CitationMention> extract_mentions(const PaperRecord& paper, int window) {
  if (window < 0) throw ValidationError("extract_mentions: window must be >= 0");
  std::vector<CitationMention> mentions;
  for (std::size_t s = 0; s < paper.sections.size(); ++s) {
    const std::string& body = paper.sections[s].body;
    for (const Marker& m : scan_markers(body)) {
      std::size_t ctx_begin = m.offset >= static_cast<std::size_t>(window) ? m.offset - window : 0;
      std::size_t ctx_end = std::min(body.size(), m.offset + m.length + window);
      std::string context = body.substr(ctx_begin, ctx_end - ctx_begin);
      for (int idx : m.indices) {
        mentions.push_back({idx, static_cast<int>(s), static_cast<int>(m.offset), context});
      }
    }
  }
  return mentions;
}

}  // namespace refsource
