#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "refsource/corpus.hpp"

namespace refsource {

enum class PromptVariant { base, inspiration, title_enriched, meta_optimized, notes_based };

std::string variant_name(PromptVariant v);
PromptVariant variant_from_name(const std::string& name);

/// A prompt template with {text}, {ref_titles} and {notes} placeholders.
struct PromptTemplate {
  PromptVariant variant = PromptVariant::base;
  std::string text;
};

/// The built-in catalog. The base template is a frozen instruction set and is
/// never edited; the other variants derive from it (see docs/prompts.md).
const PromptTemplate& builtin_template(PromptVariant v);

/// Confidence mapping applied when a response labels references instead of
/// scoring them (inspiration variant).
const std::map<std::string, double>& inspiration_label_scores();

/// Substitutes placeholders. Body text concatenates the sections with their
/// markers intact; when it exceeds `char_budget` it is truncated middle-out
/// (head and tail halves kept), never the instruction text.
std::string render_prompt(const PromptTemplate& tpl, const PaperRecord& paper,
                          std::size_t char_budget);

struct ParseResult {
  bool ok = false;
  std::map<int, double> confidences;
  std::vector<std::string> warnings;
};

/// Locates the last well-formed key/value JSON object in `raw` (providers
/// wrap answers in prose or code fences). Keys parse as reference indices,
/// values as decimals; out-of-range values are clamped to [0,1] and unknown
/// keys dropped, both with a recorded warning. `label_map` translates string
/// values ("direct inspiration") to confidences.
ParseResult parse_answer(const std::string& raw, const std::set<int>& valid_indices,
                         const std::map<std::string, double>& label_map = {});

struct ProviderProfile {
  std::string provider_id;
  std::string model_id;
  std::string endpoint;
  std::string auth_env;  // environment variable holding the API key
  double temperature = 0.0;
  int max_retries = 3;
  int timeout_ms = 30000;
  int rate_limit_per_min = 60;
  int retry_backoff_ms = 500;  // doubled per attempt, capped at 30 s
};

struct ChatRequest {
  std::string model_id;
  std::string user_message;
  double temperature = 0.0;
  int timeout_ms = 30000;
};

struct ChatResult {
  bool transport_ok = false;  // false means network-level failure
  int status = 0;
  std::string text;   // assistant message content when status == 200
  std::string error;  // transport or protocol error description
};

/// Wire adapter: provider-agnostic chat-completion call.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ChatResult send(const ProviderProfile& provider, const ChatRequest& request) = 0;
};

/// POSTs an OpenAI-style chat-completions body to the profile endpoint with
/// a bearer token taken from the profile's auth_env variable.
std::unique_ptr<Transport> make_http_transport();

struct CompletionRecord {
  std::string key;  // hex digest, see cache_key
  std::string provider_id;
  std::string model_id;
  double temperature = 0.0;
  int sample = 0;
  std::string paper_id;
  std::string variant;
  std::string timestamp;  // RFC3339, recorded at request time
  std::string raw_response;
  std::string parse_status;
};

/// Digest of (provider_id, model_id, rendered prompt, temperature, sample).
std::string cache_key(const std::string& provider_id, const std::string& model_id,
                      const std::string& rendered_prompt, double temperature, int sample);

/// One JSON file per CompletionRecord named by hex digest, plus an append-only
/// index. Records are never mutated once written.
class CacheStore {
 public:
  explicit CacheStore(std::filesystem::path dir);

  bool contains(const std::string& key) const;
  std::optional<CompletionRecord> get(const std::string& key) const;
  void put(const CompletionRecord& record);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct AnswerSlot {
  std::string provider_id;
  std::string model_id;
  PromptVariant variant = PromptVariant::base;
  int sample = 0;
  std::string group;   // provider_id + "/" + variant
  std::string status;  // "ok" or a missing-reason ("parse_failure", ...)
  std::map<int, double> confidences;
  std::vector<std::string> warnings;

  bool missing() const { return status != "ok"; }
};

/// Per paper, the matrix of elicited confidences with provenance. Slots are
/// allocated for every (provider, variant, sample) triple; absent answers are
/// marked missing, never zero.
struct AnswerSet {
  std::string paper_id;
  std::vector<AnswerSlot> slots;

  std::vector<std::string> group_ids() const;  // first-appearance order
};

enum class LlmMode { live, replay };

struct GenerateOptions {
  int samples = 1;  // M
  LlmMode mode = LlmMode::replay;
  std::size_t char_budget = 40000;
  int jobs = 1;
  bool dry_run = false;  // plan requests without sending (live mode)
};

/// Eliciting pass over one paper. Live mode reuses cached records, issues the
/// missing requests with retry/backoff and rate limiting, and appends to the
/// cache; replay mode reads the cache only and fails hard on a miss.
AnswerSet generate_answers(const PaperRecord& paper, const std::vector<ProviderProfile>& providers,
                           const std::vector<PromptTemplate>& variants, const GenerateOptions& options,
                           CacheStore& cache, Transport* transport);

void save_answer_set(const AnswerSet& answers, const std::filesystem::path& path);
AnswerSet load_answer_set(const std::filesystem::path& path);

}  // namespace refsource
