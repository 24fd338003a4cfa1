#include <array>
#include <stdexcept>

#include "refsource/errors.hpp"
#include "refsource/llm.hpp"

namespace refsource {

namespace {

// Frozen instruction set. Do not edit: downstream consumers and the recorded
// caches key on these exact bytes.
const char* const kBasePrompt = R"__PROMPT__(**** I have a task to identify the source papers of a given paper, which author indicates that they inspire them most based on its text. 
                **** I will now give you a text of academic papers, to find the most pertinent source papers:
                Firstly, Determine the primary challenges outlined in the paper, and understand the algorithm proposed by the author.
                Then, look for key phrases such as "inspired by", "motivated by", "inspired us", "motivated us", "take inspiration", "the pioneering/previous work", "following.. we adopt ... to solve the challenge/problem", "we use... based on to achieve..." or other language that indicates a strong reliance on previous research for developing the paper's core contributions.
                If key phrases exist, locate the key phrases in the text and find the sources papers which are indicated by these key phrases.
                If key phrases do not exist or for other reasons, identify the novel methods and approaches the paper introduces to tackle these challenges and locate references that are directly linked to these main challenges and methods.
                Verify that your answer do not include the ref papers appearing at the begining part of the text which describe the historical findings  like "someone et al. proposed...", normally they are not direct related to the paper's topic.
                Verify that the source papers are directly relevant to the paper's novel contributions very directly.
                Specifically highlight any references that are preceded by phrases indicating direct inspiration or motivation, such as 'Inspired by [reference]', and make these references a priority in the list
                Please provide a concise list of source papers based on the aforementioned criteria, ideally limiting the selection to the most central references that heavily influenced the main contributions of the paper. 
                **** Normally you should return less than 8 source papers. ****
                **** Please re-evaluate your result by the following metric: 		
                * Is the main idea of paper p inspired by the reference?
                * Is the core method of paper p derived from the reference?
                * Is the reference essential for paper p? Without the work of this reference, paper p cannot be completed. 
                Then, you should return your result in the json format, with the key is "reference number" and the value is "confidence score" between 0 and 1.
                **** The text of the paper is:{text})__PROMPT__";

const char* const kTextTail = "**** The text of the paper is:{text}";

// Fixed one-time rewrite of the base instructions; kept frozen so runs do not
// depend on a live rewriting step.
const char* const kMetaOptimizedPrompt =
    R"__PROMPT__(You are an expert at tracing the intellectual origins of research papers.

TASK: From the paper text below, identify the small set of references that most directly inspired its core contributions.

PROCEDURE:
1. Identify the paper's primary challenges and the method it proposes.
2. Search the text for reliance cues near citations: "inspired by", "motivated by", "inspired us", "motivated us", "take inspiration", "the pioneering/previous work", "following .. we adopt", "we use ... based on".
3. Where such cues exist, the references they point at are the leading candidates; give priority to references explicitly marked as direct inspiration or motivation.
4. Where no cues exist, find the references most directly tied to the paper's novel methods and its main challenges.
5. Exclude references cited only as historical background near the beginning of the text (patterns like "someone et al. proposed ..."): they are normally not directly related to the paper's contribution.

QUALITY CHECKS - for each candidate ask:
* Is the main idea of the paper inspired by this reference?
* Is the core method of the paper derived from this reference?
* Is this reference essential, such that the paper could not be completed without it?

Keep the final list small; normally fewer than 8 references qualify.

OUTPUT: return your result in the json format, with the key is "reference number" and the value is "confidence score" between 0 and 1.

PAPER TEXT:{text})__PROMPT__";

const char* const kInspirationPrompt =
    R"__PROMPT__(**** I have a task to identify the source papers of a given paper, focusing on the inspiration behind the work.
**** I will now give you a text of an academic paper. Classify every reference that shaped this work by the kind of inspiration it provided:
"direct inspiration": the reference directly inspired the paper's main idea or core method, often signalled by phrases such as "inspired by", "motivated by", "take inspiration", "following" or "based on" near the citation.
"indirect inspiration": the reference influenced the approach or supplied an essential building block, but is not the primary origin of the idea.
"other inspiration": the reference provided background, a baseline, or supporting material that still informed the work.
Only include references that provided some inspiration; leave all other references out. Normally fewer than 8 references qualify as direct inspiration.
Then, you should return your result in the json format, with the key is "reference number" and the value is one of "direct inspiration", "indirect inspiration" or "other inspiration".
**** The text of the paper is:{text})__PROMPT__";

const char* const kNotesBasedPrompt =
    R"__PROMPT__(**** I have a task to identify the key citations of a paper from a written description of it.
**** I will now give you a description of the paper and the titles of its references:
Read the description, determine the paper's core contribution, and find the references whose work the description presents as the origin or foundation of that contribution.
**** Normally you should return less than 8 source papers. ****
Then, you should return your result in the json format, with the key is "reference number" and the value is "confidence score" between 0 and 1.
**** The description of the paper is:{notes}
**** The titles of the references are:
{ref_titles})__PROMPT__";

std::string make_title_enriched() {
  std::string text = kBasePrompt;
  std::size_t pos = text.rfind(kTextTail);
  if (pos == std::string::npos) throw std::logic_error("base prompt tail not found");
  return text.substr(0, pos) + "**** The titles of the references are:\n{ref_titles}\n" +
         text.substr(pos);
}

}  // namespace

std::string variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::base: return "base";
    case PromptVariant::inspiration: return "inspiration";
    case PromptVariant::title_enriched: return "title_enriched";
    case PromptVariant::meta_optimized: return "meta_optimized";
    case PromptVariant::notes_based: return "notes_based";
  }
  return "base";
}

PromptVariant variant_from_name(const std::string& name) {
  if (name == "base") return PromptVariant::base;
  if (name == "inspiration") return PromptVariant::inspiration;
  if (name == "title_enriched") return PromptVariant::title_enriched;
  if (name == "meta_optimized") return PromptVariant::meta_optimized;
  if (name == "notes_based") return PromptVariant::notes_based;
  throw ValidationError("unknown prompt variant: " + name);
}

const PromptTemplate& builtin_template(PromptVariant v) {
  static const PromptTemplate base{PromptVariant::base, kBasePrompt};
  static const PromptTemplate inspiration{PromptVariant::inspiration, kInspirationPrompt};
  static const PromptTemplate title_enriched{PromptVariant::title_enriched, make_title_enriched()};
  static const PromptTemplate meta{PromptVariant::meta_optimized, kMetaOptimizedPrompt};
  static const PromptTemplate notes{PromptVariant::notes_based, kNotesBasedPrompt};
  switch (v) {
    case PromptVariant::base: return base;
    case PromptVariant::inspiration: return inspiration;
    case PromptVariant::title_enriched: return title_enriched;
    case PromptVariant::meta_optimized: return meta;
    case PromptVariant::notes_based: return notes;
  }
  return base;
}

const std::map<std::string, double>& inspiration_label_scores() {
  static const std::map<std::string, double> scores = {
      {"direct inspiration", 0.95},
      {"indirect inspiration", 0.6},
      {"other inspiration", 0.3},
  };
  return scores;
}

}  // namespace refsource
