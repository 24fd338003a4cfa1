#include "refsource/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "refsource/errors.hpp"
#include "refsource/util.hpp"

namespace refsource {

namespace {

std::vector<PaperRecord> load_validated_corpus(const RunConfig& cfg) {
  std::vector<PaperRecord> papers = load_corpus(cfg.corpus);
  if (papers.empty()) throw ValidationError("corpus is empty: " + cfg.corpus.string());
  return papers;
}

std::filesystem::path features_path(const RunConfig& cfg) { return cfg.output_dir / "features.csv"; }
std::filesystem::path model_a_path(const RunConfig& cfg) { return cfg.output_dir / "model_a.bin"; }
std::filesystem::path model_b_path(const RunConfig& cfg) { return cfg.output_dir / "model_b.bin"; }
std::filesystem::path answers_dir(const RunConfig& cfg) { return cfg.output_dir / "answers"; }

// Deterministic per-paper 80/20 split of the labeled papers.
std::set<std::string> train_paper_ids(const std::vector<std::string>& labeled_ids, double train_split,
                                      uint64_t seed) {
  std::vector<std::string> ids = labeled_ids;
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> dist(0, i - 1);
    std::swap(ids[i - 1], ids[dist(rng)]);
  }
  std::size_t n_train = static_cast<std::size_t>(std::floor(train_split * ids.size()));
  n_train = std::max<std::size_t>(1, n_train);
  if (ids.size() >= 2) n_train = std::min(n_train, ids.size() - 1);
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train)};
}

std::vector<PromptTemplate> selected_templates(const RunConfig& cfg) {
  std::vector<PromptTemplate> tpls;
  for (PromptVariant v : cfg.variants) tpls.push_back(builtin_template(v));
  return tpls;
}

int guarded(std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  }
}

}  // namespace

AblateMode ablate_from_name(const std::string& name) {
  if (name.empty() || name == "combined") return AblateMode::combined;
  if (name == "base-only") return AblateMode::base_only;
  if (name == "llm-only") return AblateMode::llm_only;
  throw ValidationError("unknown ablation mode: " + name);
}

std::string scores_filename(AblateMode mode) {
  switch (mode) {
    case AblateMode::combined: return "scores.csv";
    case AblateMode::base_only: return "scores_base_only.csv";
    case AblateMode::llm_only: return "scores_llm_only.csv";
  }
  return "scores.csv";
}

std::string report_filename(AblateMode mode) {
  switch (mode) {
    case AblateMode::combined: return "report.txt";
    case AblateMode::base_only: return "report_base_only.txt";
    case AblateMode::llm_only: return "report_llm_only.txt";
  }
  return "report.txt";
}

int run_ingest(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    // accepts pre-normalized records only; anything else fails validation
    std::vector<PaperRecord> papers = load_validated_corpus(cfg);
    std::size_t refs = 0, labeled = 0;
    for (const PaperRecord& p : papers) {
      refs += p.references.size();
      if (p.source_labels) ++labeled;
    }
    log << "ingest: " << papers.size() << " papers, " << refs << " references, " << labeled
        << " labeled (" << cfg.corpus.string() << ")\n";
    return 0;
  });
}

int run_featurize(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    std::vector<PaperRecord> papers = load_validated_corpus(cfg);
    std::filesystem::create_directories(cfg.output_dir);

    CorpusStats stats = CorpusStats::compute(papers);
    FeatureSchema schema = default_schema(cfg.cue_list());

    std::vector<std::vector<FeatureVector>> per_paper(papers.size());
    parallel_for(papers.size(), cfg.jobs, [&](std::size_t i) {
      const PaperRecord& paper = papers[i];
      MentionIndex mentions = MentionIndex::build(paper, cfg.context_window);
      per_paper[i].reserve(paper.references.size());
      for (const ReferenceEntry& ref : paper.references)
        per_paper[i].push_back(
            build_features(paper, ref.index, mentions, schema, stats, cfg.cue_list()));
    });

    std::vector<FeatureVector> rows;
    for (auto& block : per_paper)
      for (auto& fv : block) rows.push_back(std::move(fv));

    write_feature_matrix(features_path(cfg), schema, rows);
    log << "featurize: " << rows.size() << " rows over " << papers.size() << " papers -> "
        << features_path(cfg).string() << '\n';
    return 0;
  });
}

int run_train(const RunConfig& cfg, std::ostream& log) {
  return guarded(log, [&] {
    FeatureMatrix matrix = read_feature_matrix(features_path(cfg));

    std::vector<FeatureVector> labeled;
    std::vector<std::string> labeled_ids;
    for (FeatureVector& fv : matrix.rows) {
      if (!fv.label) continue;
      if (labeled_ids.empty() || labeled_ids.back() != fv.paper_id) {
        if (std::find(labeled_ids.begin(), labeled_ids.end(), fv.paper_id) == labeled_ids.end())
          labeled_ids.push_back(fv.paper_id);
      }
      labeled.push_back(std::move(fv));
    }
    if (labeled.empty()) throw ValidationError("train: corpus has no labeled rows");

    std::set<std::string> train_ids = train_paper_ids(labeled_ids, cfg.train_split, cfg.seed);
    std::vector<FeatureVector> train_rows;
    std::vector<FeatureVector> valid_rows;
    for (FeatureVector& fv : labeled)
      (train_ids.count(fv.paper_id) ? train_rows : valid_rows).push_back(std::move(fv));

    FeatureSchema schema;  // names suffice for the fingerprint
    for (const std::string& name : matrix.names)
      schema.entries.push_back({name, FeatureKind::count});

    BoostedModel model_a, model_b;
    std::exception_ptr err_a, err_b;
    auto train_one = [&](const TrainConfig& tc, BoostedModel& out, std::exception_ptr& err) {
      try {
        out = fit(train_rows, tc, schema);
      } catch (...) {
        err = std::current_exception();
      }
    };
    if (cfg.jobs > 1) {
      std::thread ta(train_one, std::cref(cfg.gbdt_a), std::ref(model_a), std::ref(err_a));
      std::thread tb(train_one, std::cref(cfg.gbdt_b), std::ref(model_b), std::ref(err_b));
      ta.join();
      tb.join();
    } else {
      train_one(cfg.gbdt_a, model_a, err_a);
      train_one(cfg.gbdt_b, model_b, err_b);
    }
    if (err_a) std::rethrow_exception(err_a);
    if (err_b) std::rethrow_exception(err_b);

    std::filesystem::create_directories(cfg.output_dir);
    save_model(model_a, model_a_path(cfg));
    save_model(model_b, model_b_path(cfg));

    auto report_auc = [&](const char* tag, const BoostedModel& model) {
      bool has_pos = false, has_neg = false;
      std::vector<std::pair<double, int>> scored;
      for (const FeatureVector& fv : valid_rows) {
        scored.emplace_back(predict_proba(model, fv.values), *fv.label);
        (*fv.label == 1 ? has_pos : has_neg) = true;
      }
      if (scored.empty() || !has_pos || !has_neg) {
        log << "train: " << tag << " validation AUC n/a (validation split lacks both classes)\n";
        return;
      }
      log << "train: " << tag << " validation AUC " << format_g9(roc_auc(scored)) << '\n';
    };
    log << "train: " << train_rows.size() << " rows (" << train_ids.size() << " papers), "
        << valid_rows.size() << " validation rows\n";
    report_auc("preset-A", model_a);
    report_auc("preset-B", model_b);
    return 0;
  });
}

int run_llm(const RunConfig& cfg, std::ostream& log, const StageOptions& opts) {
  return guarded(log, [&] {
    std::vector<PaperRecord> papers = load_validated_corpus(cfg);
    if (cfg.providers.empty()) throw ValidationError("llm: no providers configured");

    if (cfg.mode == LlmMode::replay && !std::filesystem::exists(cfg.cache_dir))
      throw ProviderError("replay cache directory does not exist: " + cfg.cache_dir.string());

    CacheStore cache(cfg.cache_dir);
    std::unique_ptr<Transport> http;
    Transport* transport = nullptr;
    if (cfg.mode == LlmMode::live && !opts.dry_run) {
      if (opts.transport_override) {
        transport = opts.transport_override;
      } else {
        http = make_http_transport();
        transport = http.get();
      }
    }

    GenerateOptions gen;
    gen.samples = cfg.samples_per_combination;
    gen.mode = cfg.mode;
    gen.char_budget = cfg.prompt_char_budget;
    gen.jobs = cfg.jobs;
    gen.dry_run = opts.dry_run;

    std::vector<PromptTemplate> templates = selected_templates(cfg);

    if (!opts.dry_run) std::filesystem::create_directories(answers_dir(cfg));
    std::size_t planned = 0, slots_total = 0, slots_missing = 0;
    for (const PaperRecord& paper : papers) {
      AnswerSet answers = generate_answers(paper, cfg.providers, templates, gen, cache, transport);
      slots_total += answers.slots.size();
      for (const AnswerSlot& slot : answers.slots) {
        if (slot.status == "planned") ++planned;
        if (slot.missing()) ++slots_missing;
      }
      if (!opts.dry_run)
        save_answer_set(answers, answers_dir(cfg) / (paper.paper_id + ".json"));
    }

    if (opts.dry_run) {
      log << "llm: dry run, planned requests: " << planned << " (" << papers.size()
          << " papers x " << cfg.providers.size() * cfg.variants.size() * cfg.samples_per_combination
          << " slots)\n";
      return 0;
    }
    log << "llm: " << papers.size() << " answer sets (" << slots_total << " slots, "
        << slots_missing << " missing) -> " << answers_dir(cfg).string() << '\n';
    return 0;
  });
}

int run_score(const RunConfig& cfg, std::ostream& log, const StageOptions& opts) {
  return guarded(log, [&] {
    std::vector<PaperRecord> papers = load_validated_corpus(cfg);

    // either boosted-trees models or external score files may back each side;
    // the feature matrix is read only when a model side needs vectors
    FeatureMatrix matrix;
    std::map<std::pair<std::string, int>, const FeatureVector*> by_pair;
    if (!cfg.external_scores_a || !cfg.external_scores_b) {
      if (!std::filesystem::exists(features_path(cfg)))
        throw MissingArtifactError("score: feature matrix missing, run featurize first: " +
                                   features_path(cfg).string());
      matrix = read_feature_matrix(features_path(cfg));
      for (const FeatureVector& fv : matrix.rows) by_pair[{fv.paper_id, fv.ref_index}] = &fv;
    }

    std::optional<BoostedModel> model_a, model_b;
    std::optional<ExternalScores> ext_a, ext_b;
    if (cfg.external_scores_a) {
      ext_a = load_external_scores(*cfg.external_scores_a);
    } else {
      if (!std::filesystem::exists(model_a_path(cfg)))
        throw MissingArtifactError("score: model missing, run train first: " +
                                   model_a_path(cfg).string());
      model_a = load_model(model_a_path(cfg));
      if (model_a->schema_fingerprint != matrix.fingerprint)
        throw ValidationError("score: model A schema fingerprint does not match feature matrix");
    }
    if (cfg.external_scores_b) {
      ext_b = load_external_scores(*cfg.external_scores_b);
    } else {
      if (!std::filesystem::exists(model_b_path(cfg)))
        throw MissingArtifactError("score: model missing, run train first: " +
                                   model_b_path(cfg).string());
      model_b = load_model(model_b_path(cfg));
      if (model_b->schema_fingerprint != matrix.fingerprint)
        throw ValidationError("score: model B schema fingerprint does not match feature matrix");
    }

    EnsembleConfig ecfg = cfg.ensemble;
    if (opts.ablate == AblateMode::base_only) ecfg.w_f = 0.0;

    std::vector<std::vector<ScoredReference>> per_paper(papers.size());
    parallel_for(papers.size(), cfg.jobs, [&](std::size_t i) {
      const PaperRecord& paper = papers[i];

      std::vector<std::pair<double, double>> base_scores;
      base_scores.reserve(paper.references.size());
      for (const ReferenceEntry& ref : paper.references) {
        const FeatureVector* fv = nullptr;
        if (model_a || model_b) {
          auto it = by_pair.find({paper.paper_id, ref.index});
          if (it == by_pair.end())
            throw MissingArtifactError("score: feature row missing for " + paper.paper_id + " ref " +
                                       std::to_string(ref.index) + "; re-run featurize");
          fv = it->second;
        }
        double p_a = ext_a ? ext_a->at(paper.paper_id, ref.index) : predict_proba(*model_a, fv->values);
        double p_b = ext_b ? ext_b->at(paper.paper_id, ref.index) : predict_proba(*model_b, fv->values);
        base_scores.emplace_back(p_a, p_b);
      }

      AnswerSet answers;
      answers.paper_id = paper.paper_id;
      auto answer_path = answers_dir(cfg) / (paper.paper_id + ".json");
      if (std::filesystem::exists(answer_path)) {
        answers = load_answer_set(answer_path);
      } else if (opts.ablate != AblateMode::base_only) {
        throw MissingArtifactError("score: answer set missing, run llm first: " +
                                   answer_path.string());
      }

      per_paper[i] = score_paper(paper, base_scores, answers, ecfg);
      if (opts.ablate == AblateMode::llm_only)
        for (ScoredReference& sr : per_paper[i]) sr.p_final = sr.score_bonus;
    });

    std::vector<ScoredReference> rows;
    for (auto& block : per_paper)
      for (auto& sr : block) rows.push_back(std::move(sr));

    std::filesystem::create_directories(cfg.output_dir);
    auto path = cfg.output_dir / scores_filename(opts.ablate);
    write_scores(path, rows);
    log << "score: " << rows.size() << " rows -> " << path.string() << '\n';
    return 0;
  });
}

int run_eval(const RunConfig& cfg, std::ostream& log, const StageOptions& opts) {
  return guarded(log, [&] {
    std::vector<PaperRecord> papers = load_validated_corpus(cfg);
    auto scores_path = cfg.output_dir / scores_filename(opts.ablate);
    if (!std::filesystem::exists(scores_path))
      throw MissingArtifactError("eval: scores missing, run score first: " + scores_path.string());

    std::map<std::string, std::vector<std::pair<int, double>>> by_paper;
    for (const ScoredReference& sr : read_scores(scores_path))
      by_paper[sr.paper_id].emplace_back(sr.ref_index, sr.p_final);

    std::vector<std::pair<std::string, std::optional<double>>> per_paper;
    for (const PaperRecord& paper : papers) {
      auto it = by_paper.find(paper.paper_id);
      if (it == by_paper.end())
        throw MissingArtifactError("eval: no scores for paper " + paper.paper_id);
      if (!paper.source_labels || paper.source_labels->empty()) {
        per_paper.emplace_back(paper.paper_id, std::nullopt);
        continue;
      }
      per_paper.emplace_back(paper.paper_id,
                             average_precision(make_ranking(it->second), *paper.source_labels));
    }

    EvalReport report = mean_average_precision(per_paper);
    auto path = cfg.output_dir / report_filename(opts.ablate);
    std::ofstream out(path, std::ios::binary);
    write_report(out, report, opts.format);
    log << "eval: MAP " << format_g9(report.map) << " over " << report.evaluated << " papers ("
        << report.skipped << " skipped) -> " << path.string() << '\n';
    return 0;
  });
}

int run_pipeline(const RunConfig& cfg, std::ostream& log, const StageOptions& opts) {
  int rc = run_featurize(cfg, log);
  if (rc != 0) return rc;
  rc = run_train(cfg, log);
  if (rc != 0) return rc;
  rc = run_llm(cfg, log, opts);
  if (rc != 0) return rc;
  rc = run_score(cfg, log, opts);
  if (rc != 0) return rc;
  return run_eval(cfg, log, opts);
}

}  // namespace refsource
