#include "refsource/config.hpp"

#include <fstream>

#include <json.hpp>

#include "refsource/errors.hpp"
#include "refsource/features.hpp"

namespace refsource {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  base.trees = j.value("trees", base.trees);
  base.max_depth = j.value("max_depth", base.max_depth);
  base.learning_rate = j.value("learning_rate", base.learning_rate);
  base.min_samples_leaf = j.value("min_samples_leaf", base.min_samples_leaf);
  base.feature_subsample = j.value("feature_subsample", base.feature_subsample);
  base.row_subsample = j.value("row_subsample", base.row_subsample);
  base.bins = j.value("bins", base.bins);
  base.seed = j.value("seed", base.seed);
  return base;
}

}  // namespace

const std::vector<std::string>& RunConfig::cue_list() const {
  return cues.empty() ? default_cues() : cues;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open config file: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("config file is not valid JSON: " + path.string());

  const std::filesystem::path base = std::filesystem::absolute(path).parent_path();

  RunConfig cfg;
  cfg.gbdt_a = preset_a();
  cfg.gbdt_b = preset_b();
  try {
    cfg.corpus = resolve(base, j.at("corpus").get<std::string>());
    cfg.output_dir = resolve(base, j.value("output_dir", std::string("out")));
    cfg.cache_dir = resolve(base, j.value("cache_dir", std::string("cache")));
    std::string mode = j.value("mode", std::string("replay"));
    if (mode == "live")
      cfg.mode = LlmMode::live;
    else if (mode == "replay")
      cfg.mode = LlmMode::replay;
    else
      throw ValidationError("config: mode must be live or replay");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    cfg.context_window = j.value("context_window", cfg.context_window);
    cfg.prompt_char_budget = j.value("prompt_char_budget", cfg.prompt_char_budget);
    cfg.samples_per_combination = j.value("samples_per_combination", cfg.samples_per_combination);
    cfg.train_split = j.value("train_split", cfg.train_split);
    if (j.contains("cues"))
      for (const json& c : j["cues"]) cfg.cues.push_back(c.get<std::string>());

    for (const json& p : j.value("providers", json::array())) {
      ProviderProfile profile;
      profile.provider_id = p.at("provider_id").get<std::string>();
      profile.model_id = p.at("model_id").get<std::string>();
      profile.endpoint = p.value("endpoint", std::string{});
      profile.auth_env = p.value("auth_env", std::string{});
      profile.temperature = p.value("temperature", 0.0);
      profile.max_retries = p.value("max_retries", 3);
      profile.timeout_ms = p.value("timeout_ms", 30000);
      profile.rate_limit_per_min = p.value("rate_limit_per_min", 60);
      profile.retry_backoff_ms = p.value("retry_backoff_ms", 500);
      cfg.providers.push_back(std::move(profile));
    }
    for (std::size_t i = 0; i < cfg.providers.size(); ++i)
      for (std::size_t k = i + 1; k < cfg.providers.size(); ++k)
        if (cfg.providers[i].provider_id == cfg.providers[k].provider_id)
          throw ValidationError("config: duplicate provider_id " + cfg.providers[i].provider_id);

    for (const json& v : j.value("variants", json::array()))
      cfg.variants.push_back(variant_from_name(v.get<std::string>()));
    if (cfg.variants.empty()) cfg.variants.push_back(PromptVariant::base);

    if (j.contains("gbdt")) {
      const json& g = j["gbdt"];
      if (g.contains("preset_a")) cfg.gbdt_a = train_config_from_json(g["preset_a"], cfg.gbdt_a);
      if (g.contains("preset_b")) cfg.gbdt_b = train_config_from_json(g["preset_b"], cfg.gbdt_b);
    }
    if (j.contains("external_scores_a"))
      cfg.external_scores_a = resolve(base, j["external_scores_a"].get<std::string>());
    if (j.contains("external_scores_b"))
      cfg.external_scores_b = resolve(base, j["external_scores_b"].get<std::string>());

    if (j.contains("ensemble")) {
      const json& e = j["ensemble"];
      cfg.ensemble.w_lgb = e.value("w_lgb", cfg.ensemble.w_lgb);
      cfg.ensemble.w_cb = e.value("w_cb", cfg.ensemble.w_cb);
      cfg.ensemble.w_f = e.value("w_f", cfg.ensemble.w_f);
      cfg.ensemble.p_neg = e.value("p_neg", cfg.ensemble.p_neg);
      cfg.ensemble.p_threshold_neg = e.value("p_threshold_neg", cfg.ensemble.p_threshold_neg);
      cfg.ensemble.c_neg = e.value("c_neg", cfg.ensemble.c_neg);
      if (e.contains("group_weights"))
        for (const auto& [group, w] : e["group_weights"].items())
          cfg.ensemble.group_weights[group] = w.get<double>();
    }
  } catch (const json::exception& e) {
    throw ValidationError("config file " + path.string() + ": " + e.what());
  }

  if (cfg.context_window < 0) throw ValidationError("config: context_window must be >= 0");
  if (cfg.samples_per_combination < 1)
    throw ValidationError("config: samples_per_combination must be >= 1");
  if (!(cfg.train_split > 0.0 && cfg.train_split < 1.0))
    throw ValidationError("config: train_split must be in (0,1)");
  if (!std::filesystem::exists(cfg.corpus))
    throw ValidationError("config: corpus file does not exist: " + cfg.corpus.string());
  cfg.gbdt_a.validate();
  cfg.gbdt_b.validate();
  cfg.ensemble.validate();
  if (!cfg.ensemble.group_weights.empty()) {
    double sum = 0.0;
    for (const auto& [group, w] : cfg.ensemble.group_weights) sum += w;
    for (auto& [group, w] : cfg.ensemble.group_weights) w /= sum;
  }
  return cfg;
}

}  // namespace refsource
