#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "refsource/errors.hpp"
#include "refsource/pipeline.hpp"
#include "test_support.hpp"

using namespace refsource;
using nlohmann::json;
using refsource::testing::fresh_dir;
using refsource::testing::run_cmd;

namespace {

std::filesystem::path testdata() { return REFSOURCE_TESTDATA; }
std::string cli() { return REFSOURCE_CLI; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Test config pointing at the bundled fixture corpus/cache with a private
// output directory.
json fixture_config(const std::filesystem::path& out_dir) {
  json cfg;
  cfg["corpus"] = (testdata() / "fixture" / "corpus.jsonl").string();
  cfg["cache_dir"] = (testdata() / "fixture" / "cache").string();
  cfg["output_dir"] = out_dir.string();
  cfg["mode"] = "replay";
  cfg["seed"] = 7;
  cfg["variants"] = json::array({"base", "title_enriched"});
  cfg["providers"] = json::array();
  for (const char* id : {"athena", "boreas"}) {
    json p;
    p["provider_id"] = id;
    p["model_id"] = std::string(id) + (std::string(id) == "athena" ? "-large" : "-chat");
    p["endpoint"] = "https://api." + std::string(id) + ".example/v1/chat/completions";
    p["auth_env"] = std::string(id == std::string("athena") ? "ATHENA" : "BOREAS") + "_API_KEY";
    cfg["providers"].push_back(p);
  }
  return cfg;
}

std::filesystem::path write_config(const std::filesystem::path& dir, const json& cfg,
                                   const std::string& name = "config.json") {
  auto path = dir / name;
  std::ofstream out(path);
  out << cfg.dump(2) << '\n';
  return path;
}

}  // namespace

TEST_CASE("run config loads the fixture config with defaults") {
  RunConfig cfg = load_run_config(testdata() / "fixture" / "config.json");
  CHECK(cfg.mode == LlmMode::replay);
  CHECK(cfg.providers.size() == 2);
  CHECK(cfg.variants.size() == 2);
  CHECK(cfg.ensemble.w_lgb == doctest::Approx(0.4));
  CHECK(cfg.ensemble.w_cb == doctest::Approx(0.6));
  CHECK(cfg.ensemble.w_f == doctest::Approx(0.035));
  CHECK(cfg.ensemble.p_neg == doctest::Approx(0.4));
  CHECK(cfg.ensemble.p_threshold_neg == doctest::Approx(0.2));
  CHECK(cfg.ensemble.c_neg == doctest::Approx(4.0));
  CHECK(cfg.gbdt_a.trees == 400);
  CHECK(cfg.gbdt_b.trees == 600);
  CHECK(std::filesystem::exists(cfg.corpus));
}

TEST_CASE("config validation failures") {
  auto dir = fresh_dir("cfg_bad");
  SUBCASE("missing corpus path") {
    json cfg;
    cfg["corpus"] = (dir / "nope.jsonl").string();
    auto path = write_config(dir, cfg);
    CHECK_THROWS_AS(load_run_config(path), ValidationError);
  }
  SUBCASE("bad ensemble weights") {
    json cfg = fixture_config(dir / "out");
    cfg["ensemble"] = {{"w_lgb", 0.4}, {"w_cb", 0.7}};
    auto path = write_config(dir, cfg);
    CHECK_THROWS_AS(load_run_config(path), ValidationError);
  }
  SUBCASE("duplicate provider ids") {
    json cfg = fixture_config(dir / "out");
    cfg["providers"].push_back(cfg["providers"][0]);
    auto path = write_config(dir, cfg);
    CHECK_THROWS_AS(load_run_config(path), ValidationError);
  }
  SUBCASE("unknown variant") {
    json cfg = fixture_config(dir / "out");
    cfg["variants"] = json::array({"base", "mystery"});
    auto path = write_config(dir, cfg);
    CHECK_THROWS_AS(load_run_config(path), ValidationError);
  }
}

TEST_CASE("ingest validates and summarizes a corpus") {
  auto dir = fresh_dir("ingest");
  auto cfg_path = write_config(dir, fixture_config(dir / "out"));
  auto r = run_cmd(cli() + " ingest --config " + cfg_path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("42 papers") != std::string::npos);
  CHECK(r.output.find("40 labeled") != std::string::npos);
}

TEST_CASE("config load normalizes group weights") {
  auto dir = fresh_dir("cfg_weights");
  json cfg = fixture_config(dir / "out");
  cfg["ensemble"] = {{"group_weights", {{"athena/base", 2.0}, {"boreas/base", 6.0}}}};
  RunConfig loaded = load_run_config(write_config(dir, cfg));
  CHECK(loaded.ensemble.group_weights.at("athena/base") == doctest::Approx(0.25));
  CHECK(loaded.ensemble.group_weights.at("boreas/base") == doctest::Approx(0.75));
}

TEST_CASE("stage functions compose like the pipeline command") {
  auto dir = fresh_dir("stages");
  auto cfg_path = write_config(dir, fixture_config(dir / "out"));
  RunConfig cfg = load_run_config(cfg_path);
  std::ostringstream log;
  CHECK(run_featurize(cfg, log) == 0);
  CHECK(run_train(cfg, log) == 0);
  CHECK(log.str().find("preset-A validation AUC") != std::string::npos);
  CHECK(log.str().find("preset-B validation AUC") != std::string::npos);
  CHECK(run_llm(cfg, log) == 0);
  CHECK(run_score(cfg, log) == 0);
  CHECK(run_eval(cfg, log) == 0);
  std::string stage_scores = slurp(dir / "out" / "scores.csv");
  std::string stage_report = slurp(dir / "out" / "report.txt");

  auto dir2 = fresh_dir("stages_pipe");
  auto cfg_path2 = write_config(dir2, fixture_config(dir2 / "out"));
  RunConfig cfg2 = load_run_config(cfg_path2);
  CHECK(run_pipeline(cfg2, log) == 0);
  CHECK(slurp(dir2 / "out" / "scores.csv") == stage_scores);
  CHECK(slurp(dir2 / "out" / "report.txt") == stage_report);
}

TEST_CASE("score without upstream artifacts is a missing-artifact failure") {
  auto dir = fresh_dir("missing_upstream");
  auto cfg_path = write_config(dir, fixture_config(dir / "out"));
  RunConfig cfg = load_run_config(cfg_path);
  std::ostringstream log;
  CHECK(run_score(cfg, log) == 3);
  CHECK(log.str().find("featurize") != std::string::npos);
  CHECK(run_eval(cfg, log) == 3);
}

TEST_CASE("train without labels is a validation failure") {
  auto dir = fresh_dir("train_nolabel");
  // strip labels from the mini corpus
  auto papers = load_corpus(testdata() / "mini" / "corpus.jsonl");
  for (auto& p : papers) p.source_labels.reset();
  save_corpus(papers, dir / "corpus.jsonl");
  json cfg_json = fixture_config(dir / "out");
  cfg_json["corpus"] = (dir / "corpus.jsonl").string();
  RunConfig cfg = load_run_config(write_config(dir, cfg_json));
  std::ostringstream log;
  CHECK(run_featurize(cfg, log) == 0);
  CHECK(run_train(cfg, log) == 2);
  CHECK(log.str().find("no labeled rows") != std::string::npos);
}

TEST_CASE("external score files can stand in for both scorers") {
  auto dir = fresh_dir("ext_pipeline");
  auto papers = load_corpus(testdata() / "mini" / "corpus.jsonl");

  // perfect external scorer: 0.9 on gold, 0.05 elsewhere
  std::ofstream ext(dir / "ext.csv");
  ext << "paper_id,ref_index,prob\n";
  for (const auto& p : papers)
    for (const auto& r : p.references)
      ext << p.paper_id << ',' << r.index << ','
          << (p.source_labels->count(r.index) ? "0.9" : "0.05") << '\n';
  ext.close();

  json cfg_json = fixture_config(dir / "out");
  cfg_json["corpus"] = (testdata() / "mini" / "corpus.jsonl").string();
  cfg_json["external_scores_a"] = (dir / "ext.csv").string();
  cfg_json["external_scores_b"] = (dir / "ext.csv").string();
  RunConfig cfg = load_run_config(write_config(dir, cfg_json));

  std::ostringstream log;
  StageOptions opts;
  opts.ablate = AblateMode::base_only;  // no answer sets needed
  CHECK(run_score(cfg, log, opts) == 0);
  CHECK(run_eval(cfg, log, opts) == 0);
  CHECK(log.str().find("MAP 1 ") != std::string::npos);
}

TEST_CASE("cli exit codes match the contract") {
  auto dir = fresh_dir("cli_codes");

  SUBCASE("ok run and idempotent rerun") {
    auto cfg_path = write_config(dir, fixture_config(dir / "out"));
    auto r1 = run_cmd(cli() + " pipeline --config " + cfg_path.string());
    CHECK(r1.exit_code == 0);
    std::string scores = slurp(dir / "out" / "scores.csv");
    auto r2 = run_cmd(cli() + " pipeline --config " + cfg_path.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(dir / "out" / "scores.csv") == scores);
  }
  SUBCASE("validation failure exits 2") {
    std::ofstream bad(dir / "bad.jsonl");
    bad << R"({"paper_id":"x"})" << '\n';
    bad.close();
    json cfg = fixture_config(dir / "out");
    cfg["corpus"] = (dir / "bad.jsonl").string();
    auto cfg_path = write_config(dir, cfg);
    auto r = run_cmd(cli() + " featurize --config " + cfg_path.string());
    CHECK(r.exit_code == 2);
  }
  SUBCASE("empty corpus exits 2") {
    std::ofstream(dir / "empty.jsonl").put('\n');
    json cfg = fixture_config(dir / "out");
    cfg["corpus"] = (dir / "empty.jsonl").string();
    auto cfg_path = write_config(dir, cfg);
    auto r = run_cmd(cli() + " featurize --config " + cfg_path.string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("corpus is empty") != std::string::npos);
  }
  SUBCASE("missing upstream artifact exits 3") {
    auto cfg_path = write_config(dir, fixture_config(dir / "out_absent"));
    auto r = run_cmd(cli() + " score --config " + cfg_path.string());
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("featurize") != std::string::npos);
  }
  SUBCASE("replay cache miss exits 4 and names the digest") {
    json cfg = fixture_config(dir / "out");
    auto empty_cache = dir / "empty_cache";
    std::filesystem::create_directories(empty_cache);
    cfg["cache_dir"] = empty_cache.string();
    auto cfg_path = write_config(dir, cfg);
    auto r = run_cmd(cli() + " llm --config " + cfg_path.string());
    CHECK(r.exit_code == 4);
    CHECK(r.output.find("replay cache miss: digest") != std::string::npos);
  }
  SUBCASE("unknown subcommand fails to parse") {
    auto r = run_cmd(cli() + " frobnicate");
    CHECK(r.exit_code != 0);
  }
}

TEST_CASE("cli llm dry run reports the planned request count") {
  auto dir = fresh_dir("cli_dry");
  json cfg = fixture_config(dir / "out");
  auto empty_cache = dir / "empty_cache";
  std::filesystem::create_directories(empty_cache);
  cfg["cache_dir"] = empty_cache.string();
  cfg["mode"] = "live";
  auto cfg_path = write_config(dir, cfg);
  auto r = run_cmd(cli() + " llm --config " + cfg_path.string() + " --dry-run");
  CHECK(r.exit_code == 0);
  // 42 papers x (2 providers x 2 variants x 1 sample)
  CHECK(r.output.find("planned requests: 168") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "out" / "answers"));
}

TEST_CASE("worker count never changes the artifacts") {
  auto dir1 = fresh_dir("jobs1");
  auto dir4 = fresh_dir("jobs4");
  RunConfig cfg1 = load_run_config(write_config(dir1, fixture_config(dir1 / "out")));
  json with_jobs = fixture_config(dir4 / "out");
  with_jobs["jobs"] = 4;
  RunConfig cfg4 = load_run_config(write_config(dir4, with_jobs));
  std::ostringstream log;
  CHECK(run_pipeline(cfg1, log) == 0);
  CHECK(run_pipeline(cfg4, log) == 0);
  CHECK(slurp(dir1 / "out" / "features.csv") == slurp(dir4 / "out" / "features.csv"));
  CHECK(slurp(dir1 / "out" / "model_a.bin") == slurp(dir4 / "out" / "model_a.bin"));
  CHECK(slurp(dir1 / "out" / "model_b.bin") == slurp(dir4 / "out" / "model_b.bin"));
  CHECK(slurp(dir1 / "out" / "scores.csv") == slurp(dir4 / "out" / "scores.csv"));
  CHECK(slurp(dir1 / "out" / "report.txt") == slurp(dir4 / "out" / "report.txt"));
}

TEST_CASE("cli machine format report is parseable") {
  auto dir = fresh_dir("cli_machine");
  auto cfg_path = write_config(dir, fixture_config(dir / "out"));
  CHECK(run_cmd(cli() + " pipeline --config " + cfg_path.string() + " --format machine").exit_code ==
        0);
  std::string report = slurp(dir / "out" / "report.txt");
  CHECK(report.rfind("paper_id,ap\n", 0) == 0);
  CHECK(report.find("\nmap,") != std::string::npos);
  CHECK(report.find("\nskipped,2\n") != std::string::npos);
}
