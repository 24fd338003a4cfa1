#include <doctest.h>

#include <fstream>
#include <map>

#include "refsource/corpus.hpp"
#include "refsource/errors.hpp"
#include "test_support.hpp"

using namespace refsource;
using refsource::testing::fresh_dir;
using refsource::testing::minimal_paper;

namespace {

std::filesystem::path testdata() { return REFSOURCE_TESTDATA; }

std::filesystem::path write_lines(const std::filesystem::path& dir, const std::string& content) {
  auto path = dir / "corpus.jsonl";
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_corpus accepts a one-line minimal paper") {
  auto dir = fresh_dir("corpus_min");
  auto path = write_lines(
      dir,
      R"({"paper_id":"a","title":"T","abstract":"A","venue":"V","year":2020,"citation_count":0,)"
      R"("authors":[],"sections":[{"heading":"1 Introduction","body":"No citations here."}],)"
      R"("references":[{"index":1,"title":"R","venue":"W","year":2018,"citation_count":3,"authors":[]}]})"
      "\n");
  auto papers = load_corpus(path);
  REQUIRE(papers.size() == 1);
  CHECK(papers[0].paper_id == "a");
  CHECK(papers[0].references.size() == 1);
  CHECK_FALSE(papers[0].source_labels.has_value());
}

TEST_CASE("load_corpus rejects a dangling marker naming the index") {
  auto dir = fresh_dir("corpus_dangling");
  PaperRecord p = minimal_paper(8);
  p.sections.push_back({"1 Introduction", "This cites [9] which does not exist."});
  save_corpus({p}, dir / "corpus.jsonl");
  CHECK_THROWS_WITH_AS(load_corpus(dir / "corpus.jsonl"),
                       doctest::Contains("dangling citation marker: index 9"), ValidationError);
}

TEST_CASE("load_corpus rejects duplicate paper ids and bad json with line numbers") {
  auto dir = fresh_dir("corpus_dup");
  PaperRecord p = minimal_paper(2);
  std::ostringstream two;
  {
    save_corpus({p, p}, dir / "corpus.jsonl");
    CHECK_THROWS_WITH_AS(load_corpus(dir / "corpus.jsonl"), doctest::Contains("duplicate paper_id"),
                         ValidationError);
  }
  {
    auto path = write_lines(dir, "{\"paper_id\": nope}\n");
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("corpus line 1"), ValidationError);
  }
  {
    // missing required field reported with its line
    auto path = write_lines(dir, R"({"paper_id":"x","title":"T"})"
                                 "\n");
    CHECK_THROWS_AS(load_corpus(path), ValidationError);
  }
}

TEST_CASE("mini fixture corpus loads with label sets") {
  auto papers = load_corpus(testdata() / "mini" / "corpus.jsonl");
  REQUIRE(papers.size() == 3);
  CHECK(papers[0].paper_id == "m1");
  REQUIRE(papers[0].source_labels.has_value());
  CHECK(*papers[0].source_labels == std::set<int>{3});
  CHECK(*papers[1].source_labels == std::set<int>{2});
  CHECK(*papers[2].source_labels == std::set<int>{1});
  CHECK(papers[2].notes.has_value());
}

TEST_CASE("corpus round-trips through save and load") {
  auto papers = load_corpus(testdata() / "mini" / "corpus.jsonl");
  auto dir = fresh_dir("corpus_rt");
  save_corpus(papers, dir / "corpus.jsonl");
  auto again = load_corpus(dir / "corpus.jsonl");
  CHECK(again == papers);
}

TEST_CASE("validate_record reports label and contiguity violations") {
  SUBCASE("valid minimal paper gives an empty report") {
    CHECK(validate_record(minimal_paper(3)).empty());
  }
  SUBCASE("label out of range") {
    PaperRecord p = minimal_paper(3);
    p.source_labels = std::set<int>{0};
    auto report = validate_record(p);
    REQUIRE(report.size() == 1);
    CHECK(report[0].field == "source_labels");
    CHECK(report[0].message == "label out of range: 0");
  }
  SUBCASE("non-contiguous reference indices name the gap") {
    PaperRecord p = minimal_paper(2);
    p.references[1].index = 3;  // {1,3}
    auto report = validate_record(p);
    REQUIRE(report.size() >= 1);
    CHECK(report[0].message == "reference indices not contiguous: expected 2 found 3");
  }
  SUBCASE("empty author name") {
    PaperRecord p = minimal_paper(1);
    p.authors.push_back({"", "Lab"});
    CHECK_FALSE(validate_record(p).empty());
  }
}

TEST_CASE("extract_mentions hand-scanned single markers") {
  PaperRecord p = minimal_paper(5);
  p.sections.push_back({"1 Introduction", "as shown in [2]. Inspired by [5], we build."});
  auto mentions = extract_mentions(p, 10);
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].ref_index == 2);
  CHECK(mentions[0].char_offset == 12);
  CHECK(mentions[0].context == " shown in [2]. Inspired");
  CHECK(mentions[1].ref_index == 5);
  CHECK(mentions[1].char_offset == 29);
  CHECK(mentions[1].context == "spired by [5], we build");
}

TEST_CASE("extract_mentions comma list shares one offset") {
  PaperRecord p = minimal_paper(5);
  p.sections.push_back({"1 Introduction", "[3,5] prior work."});
  auto mentions = extract_mentions(p, 10);
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].ref_index == 3);
  CHECK(mentions[1].ref_index == 5);
  CHECK(mentions[0].char_offset == 0);
  CHECK(mentions[1].char_offset == 0);
  CHECK(mentions[0].context == "[3,5] prior wor");
  CHECK(mentions[0].context == mentions[1].context);
}

TEST_CASE("extract_mentions hyphen ranges expand inclusively") {
  PaperRecord p = minimal_paper(6);
  p.sections.push_back({"1 Introduction", "Early systems [2-4] and the survey [6]."});
  auto mentions = extract_mentions(p, 5);
  REQUIRE(mentions.size() == 4);
  CHECK(mentions[0].ref_index == 2);
  CHECK(mentions[1].ref_index == 3);
  CHECK(mentions[2].ref_index == 4);
  CHECK(mentions[3].ref_index == 6);
}

TEST_CASE("extract_mentions on a body without markers is empty") {
  PaperRecord p = minimal_paper(2);
  p.sections.push_back({"1 Introduction", "Nothing cited here, not even once."});
  CHECK(extract_mentions(p, 150).empty());
}

TEST_CASE("non-grammar brackets are ignored, window zero allowed") {
  PaperRecord p = minimal_paper(3);
  p.sections.push_back(
      {"1 Introduction", "[see below] [3-1] [a,2] [] [2] trailing [1"});
  auto mentions = extract_mentions(p, 0);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].ref_index == 2);
  CHECK(mentions[0].context == "[2]");
}

TEST_CASE("mention multiset matches hand counts on the mini fixture") {
  auto papers = load_corpus(testdata() / "mini" / "corpus.jsonl");
  auto mentions = extract_mentions(papers[0], 150);
  std::map<int, int> counts;
  for (const auto& m : mentions) ++counts[m.ref_index];
  CHECK(counts == std::map<int, int>{{1, 1}, {2, 1}, {3, 2}});

  // determinism on a validated record
  auto again = extract_mentions(papers[0], 150);
  REQUIRE(again.size() == mentions.size());
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    CHECK(again[i].ref_index == mentions[i].ref_index);
    CHECK(again[i].char_offset == mentions[i].char_offset);
  }

  // distinct mentioned indices never exceed the reference count
  for (const auto& paper : papers) {
    std::set<int> distinct;
    for (const auto& m : extract_mentions(paper, 150)) distinct.insert(m.ref_index);
    CHECK(distinct.size() <= paper.references.size());
  }
}
