#include "refsource/llm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "refsource/errors.hpp"
#include "refsource/util.hpp"

namespace refsource {

using nlohmann::json;

namespace {

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string paper_body_text(const PaperRecord& paper) {
  std::string body;
  for (const SectionText& s : paper.sections) {
    body += s.heading;
    body.push_back('\n');
    body += s.body;
    body.push_back('\n');
  }
  return body;
}

std::string truncate_middle_out(const std::string& text, std::size_t budget) {
  if (text.size() <= budget) return text;
  static const std::string kEllipsis = "\n[...]\n";
  std::size_t head = budget / 2;
  std::size_t tail = budget - head;
  return text.substr(0, head) + kEllipsis + text.substr(text.size() - tail);
}

std::string ref_title_lines(const PaperRecord& paper) {
  std::string out;
  for (const ReferenceEntry& r : paper.references) {
    out += std::to_string(r.index);
    out += ". ";
    out += r.title;
    out.push_back('\n');
  }
  if (!out.empty()) out.pop_back();
  return out;
}

// Balanced {...} substrings, honoring strings and escapes.
std::vector<std::pair<std::size_t, std::string>> candidate_objects(const std::string& raw) {
  std::vector<std::pair<std::size_t, std::string>> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '{') continue;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t j = i; j < raw.size(); ++j) {
      char c = raw[j];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
      } else if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          out.emplace_back(i, raw.substr(i, j - i + 1));
          break;
        }
      }
    }
  }
  return out;
}

std::string now_rfc3339() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json record_to_json(const CompletionRecord& r) {
  json j;
  j["key"] = r.key;
  j["provider_id"] = r.provider_id;
  j["model_id"] = r.model_id;
  j["temperature"] = r.temperature;
  j["sample"] = r.sample;
  j["paper_id"] = r.paper_id;
  j["variant"] = r.variant;
  j["timestamp"] = r.timestamp;
  j["raw_response"] = r.raw_response;
  j["parse_status"] = r.parse_status;
  return j;
}

CompletionRecord record_from_json(const json& j) {
  CompletionRecord r;
  r.key = j.at("key").get<std::string>();
  r.provider_id = j.at("provider_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.temperature = j.at("temperature").get<double>();
  r.sample = j.at("sample").get<int>();
  r.paper_id = j.value("paper_id", std::string{});
  r.variant = j.value("variant", std::string{});
  r.timestamp = j.value("timestamp", std::string{});
  r.raw_response = j.at("raw_response").get<std::string>();
  r.parse_status = j.value("parse_status", std::string{});
  return r;
}

std::mutex g_cache_write_mutex;

bool status_retryable(int status) {
  return status == 408 || status == 409 || status == 429 || (status >= 500 && status < 600);
}

class HttpTransport : public Transport {
 public:
  ChatResult send(const ProviderProfile& provider, const ChatRequest& request) override {
    ChatResult result;

    std::string url = provider.endpoint;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      result.error = "endpoint missing scheme: " + url;
      return result;
    }
    auto path_begin = url.find('/', scheme_end + 3);
    std::string host = url.substr(0, path_begin == std::string::npos ? url.size() : path_begin);
    std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(host);
    client.set_connection_timeout(request.timeout_ms / 1000, (request.timeout_ms % 1000) * 1000);
    client.set_read_timeout(request.timeout_ms / 1000, (request.timeout_ms % 1000) * 1000);

    rate_limit(provider);

    httplib::Headers headers;
    if (!provider.auth_env.empty()) {
      const char* token = std::getenv(provider.auth_env.c_str());
      if (!token)
        throw ProviderError("environment variable " + provider.auth_env + " is not set (provider " +
                            provider.provider_id + ")");
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    body["messages"] = json::array({json{{"role", "user"}, {"content", request.user_message}}});

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      result.error = "network error: " + httplib::to_string(res.error());
      return result;
    }
    result.transport_ok = true;
    result.status = res->status;
    if (res->status != 200) {
      result.error = "http status " + std::to_string(res->status);
      return result;
    }
    try {
      json reply = json::parse(res->body);
      result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      result.transport_ok = false;
      result.status = 0;
      result.error = std::string("malformed completion body: ") + e.what();
    }
    return result;
  }

 private:
  // Minimal spacing between requests per provider.
  void rate_limit(const ProviderProfile& provider) {
    using clock = std::chrono::steady_clock;
    std::unique_lock lock(mutex_);
    auto& last = last_request_[provider.provider_id];
    auto interval = std::chrono::milliseconds(
        provider.rate_limit_per_min > 0 ? 60000 / provider.rate_limit_per_min : 0);
    auto now = clock::now();
    if (last.time_since_epoch().count() != 0 && now - last < interval) {
      auto wait = interval - (now - last);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
    last = clock::now();
  }

  std::mutex mutex_;
  std::map<std::string, std::chrono::steady_clock::time_point> last_request_;
};

}  // namespace

std::string render_prompt(const PromptTemplate& tpl, const PaperRecord& paper,
                          std::size_t char_budget) {
  std::string out = tpl.text;

  if (out.find("{notes}") != std::string::npos) {
    if (!paper.notes || paper.notes->empty())
      throw ValidationError("render_prompt: paper " + paper.paper_id + " has no notes field");
    out = replace_all(out, "{notes}", *paper.notes);
  }
  if (out.find("{ref_titles}") != std::string::npos) {
    if (paper.references.empty())
      throw ValidationError("render_prompt: paper " + paper.paper_id + " has no references");
    for (const ReferenceEntry& r : paper.references)
      if (r.title.empty())
        throw ValidationError("render_prompt: paper " + paper.paper_id + " reference " +
                              std::to_string(r.index) + " has no title");
    out = replace_all(out, "{ref_titles}", ref_title_lines(paper));
  }
  if (out.find("{text}") != std::string::npos) {
    out = replace_all(out, "{text}", truncate_middle_out(paper_body_text(paper), char_budget));
  }
  return out;
}

ParseResult parse_answer(const std::string& raw, const std::set<int>& valid_indices,
                         const std::map<std::string, double>& label_map) {
  ParseResult best;
  for (const auto& [pos, text] : candidate_objects(raw)) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;

    ParseResult candidate;
    bool any_integer_key = false;
    for (const auto& [key, value] : j.items()) {
      int ref_index = 0;
      try {
        std::size_t used = 0;
        ref_index = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        candidate.warnings.push_back("non-integer key dropped: " + key);
        continue;
      }
      any_integer_key = true;

      double confidence = 0.0;
      if (value.is_number()) {
        confidence = value.get<double>();
      } else if (value.is_string()) {
        std::string s = to_lower(value.get<std::string>());
        auto it = label_map.find(s);
        if (it != label_map.end()) {
          confidence = it->second;
        } else {
          try {
            std::size_t used = 0;
            confidence = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
          } catch (const std::exception&) {
            candidate.warnings.push_back("unusable value dropped for key " + key + ": " +
                                         value.dump());
            continue;
          }
        }
      } else {
        candidate.warnings.push_back("unusable value dropped for key " + key + ": " + value.dump());
        continue;
      }

      if (confidence < 0.0 || confidence > 1.0) {
        double clamped = std::clamp(confidence, 0.0, 1.0);
        candidate.warnings.push_back("value for key " + key + " clamped from " +
                                     format_g9(confidence) + " to " + format_g9(clamped));
        confidence = clamped;
      }
      if (!valid_indices.count(ref_index)) {
        candidate.warnings.push_back("key outside reference range dropped: " + key);
        continue;
      }
      candidate.confidences[ref_index] = confidence;
    }

    if (any_integer_key) {
      candidate.ok = true;
      best = std::move(candidate);  // keep the last well-formed object
    }
  }
  return best;
}

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttpTransport>(); }

std::string cache_key(const std::string& provider_id, const std::string& model_id,
                      const std::string& rendered_prompt, double temperature, int sample) {
  std::string material;
  material.reserve(rendered_prompt.size() + 64);
  material += provider_id;
  material.push_back('\x1f');
  material += model_id;
  material.push_back('\x1f');
  material += format_g9(temperature);
  material.push_back('\x1f');
  material += std::to_string(sample);
  material.push_back('\x1f');
  material += rendered_prompt;
  return sha256_hex(material);
}

CacheStore::CacheStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

bool CacheStore::contains(const std::string& key) const {
  return std::filesystem::exists(dir_ / (key + ".json"));
}

std::optional<CompletionRecord> CacheStore::get(const std::string& key) const {
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ProviderError("cache record " + key + " is not valid JSON");
  return record_from_json(j);
}

void CacheStore::put(const CompletionRecord& record) {
  std::scoped_lock lock(g_cache_write_mutex);
  auto path = dir_ / (record.key + ".json");
  if (std::filesystem::exists(path)) return;  // append-only: never rewrite
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ProviderError("cannot write cache record: " + path.string());
    out << record_to_json(record).dump(2) << '\n';
  }
  std::ofstream index(dir_ / "index.jsonl", std::ios::app | std::ios::binary);
  json line;
  line["key"] = record.key;
  line["paper_id"] = record.paper_id;
  line["provider_id"] = record.provider_id;
  line["variant"] = record.variant;
  line["sample"] = record.sample;
  index << line.dump() << '\n';
}

std::vector<std::string> AnswerSet::group_ids() const {
  std::vector<std::string> ids;
  for (const AnswerSlot& slot : slots)
    if (std::find(ids.begin(), ids.end(), slot.group) == ids.end()) ids.push_back(slot.group);
  return ids;
}

AnswerSet generate_answers(const PaperRecord& paper, const std::vector<ProviderProfile>& providers,
                           const std::vector<PromptTemplate>& variants, const GenerateOptions& options,
                           CacheStore& cache, Transport* transport) {
  AnswerSet answers;
  answers.paper_id = paper.paper_id;

  std::set<int> valid_indices;
  for (const ReferenceEntry& r : paper.references) valid_indices.insert(r.index);

  // slot layout: provider-major, then variant, then sample ordinal
  for (const ProviderProfile& provider : providers) {
    for (const PromptTemplate& tpl : variants) {
      for (int m = 0; m < options.samples; ++m) {
        AnswerSlot slot;
        slot.provider_id = provider.provider_id;
        slot.model_id = provider.model_id;
        slot.variant = tpl.variant;
        slot.sample = m;
        slot.group = provider.provider_id + "/" + variant_name(tpl.variant);
        slot.status = "missing";
        answers.slots.push_back(std::move(slot));
      }
    }
  }

  const auto process_slot = [&](std::size_t slot_idx) {
    AnswerSlot& slot = answers.slots[slot_idx];
    const PromptTemplate& tpl = builtin_template(slot.variant);
    const ProviderProfile* provider = nullptr;
    for (const ProviderProfile& p : providers)
      if (p.provider_id == slot.provider_id) provider = &p;

    std::string prompt;
    try {
      // custom templates in `variants` override the builtin of the same variant
      const PromptTemplate* chosen = &tpl;
      for (const PromptTemplate& v : variants)
        if (v.variant == slot.variant) chosen = &v;
      prompt = render_prompt(*chosen, paper, options.char_budget);
    } catch (const ValidationError&) {
      slot.status = "inapplicable";
      return;
    }

    std::string key =
        cache_key(slot.provider_id, slot.model_id, prompt, provider->temperature, slot.sample);

    std::optional<CompletionRecord> record = cache.get(key);

    if (!record) {
      if (options.mode == LlmMode::replay)
        throw ProviderError("replay cache miss: digest " + key + " (paper " + paper.paper_id +
                            ", provider " + slot.provider_id + ", variant " +
                            variant_name(slot.variant) + ", sample " + std::to_string(slot.sample) +
                            ")");
      if (options.dry_run) {
        slot.status = "planned";
        return;
      }
      if (!transport) throw ProviderError("live mode requires a transport");

      ChatRequest request{slot.model_id, prompt, provider->temperature, provider->timeout_ms};
      ChatResult result;
      for (int attempt = 0; attempt <= provider->max_retries; ++attempt) {
        if (attempt > 0) {
          auto delay = std::chrono::milliseconds(std::min<long long>(
              static_cast<long long>(provider->retry_backoff_ms) << (attempt - 1), 30000LL));
          std::this_thread::sleep_for(delay);
        }
        result = transport->send(*provider, request);
        if (result.transport_ok && result.status == 200) break;
        if (result.transport_ok && !status_retryable(result.status)) break;
      }
      if (!result.transport_ok || result.status != 200) {
        slot.status = result.transport_ok ? "http_" + std::to_string(result.status)
                                          : "transport_failure";
        return;
      }

      CompletionRecord fresh;
      fresh.key = key;
      fresh.provider_id = slot.provider_id;
      fresh.model_id = slot.model_id;
      fresh.temperature = provider->temperature;
      fresh.sample = slot.sample;
      fresh.paper_id = paper.paper_id;
      fresh.variant = variant_name(slot.variant);
      fresh.timestamp = now_rfc3339();
      fresh.raw_response = result.text;

      ParseResult parsed = slot.variant == PromptVariant::inspiration
                               ? parse_answer(result.text, valid_indices, inspiration_label_scores())
                               : parse_answer(result.text, valid_indices);
      fresh.parse_status = parsed.ok ? "ok" : "parse_failure";
      cache.put(fresh);
      record = std::move(fresh);
    }

    ParseResult parsed = slot.variant == PromptVariant::inspiration
                             ? parse_answer(record->raw_response, valid_indices,
                                            inspiration_label_scores())
                             : parse_answer(record->raw_response, valid_indices);
    if (!parsed.ok) {
      slot.status = "parse_failure";
      slot.warnings = std::move(parsed.warnings);
      return;
    }
    slot.status = "ok";
    slot.confidences = std::move(parsed.confidences);
    slot.warnings = std::move(parsed.warnings);
  };

  if (options.mode == LlmMode::live && options.jobs > 1) {
    parallel_for(answers.slots.size(), options.jobs, process_slot);
  } else {
    for (std::size_t i = 0; i < answers.slots.size(); ++i) process_slot(i);
  }
  return answers;
}

void save_answer_set(const AnswerSet& answers, const std::filesystem::path& path) {
  json j;
  j["paper_id"] = answers.paper_id;
  j["slots"] = json::array();
  for (const AnswerSlot& slot : answers.slots) {
    json s;
    s["provider_id"] = slot.provider_id;
    s["model_id"] = slot.model_id;
    s["variant"] = variant_name(slot.variant);
    s["sample"] = slot.sample;
    s["group"] = slot.group;
    s["status"] = slot.status;
    json conf = json::object();
    for (const auto& [ref, value] : slot.confidences) conf[std::to_string(ref)] = value;
    s["confidences"] = std::move(conf);
    s["warnings"] = slot.warnings;
    j["slots"].push_back(std::move(s));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ExitCode::internal, "cannot write answer set: " + path.string());
  out << j.dump(2) << '\n';
}

AnswerSet load_answer_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open answer set: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("answer set is not valid JSON: " + path.string());
  AnswerSet answers;
  answers.paper_id = j.at("paper_id").get<std::string>();
  for (const json& s : j.at("slots")) {
    AnswerSlot slot;
    slot.provider_id = s.at("provider_id").get<std::string>();
    slot.model_id = s.at("model_id").get<std::string>();
    slot.variant = variant_from_name(s.at("variant").get<std::string>());
    slot.sample = s.at("sample").get<int>();
    slot.group = s.at("group").get<std::string>();
    slot.status = s.at("status").get<std::string>();
    for (const auto& [key, value] : s.at("confidences").items())
      slot.confidences[std::stoi(key)] = value.get<double>();
    for (const json& w : s.at("warnings")) slot.warnings.push_back(w.get<std::string>());
    answers.slots.push_back(std::move(slot));
  }
  return answers;
}

}  // namespace refsource
