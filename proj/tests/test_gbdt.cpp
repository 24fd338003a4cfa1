#include <doctest.h>

#include <cmath>
#include <fstream>

#include "refsource/errors.hpp"
#include "refsource/eval.hpp"
#include "refsource/gbdt.hpp"
#include "refsource/util.hpp"
#include "test_support.hpp"

using namespace refsource;
using refsource::testing::fresh_dir;
using refsource::testing::synthetic_separable;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

BoostedModel stump_model(double threshold, double left, double right, double lr,
                         const std::string& fp = "fp") {
  BoostedModel m;
  m.base_score = 0.0;
  m.learning_rate = lr;
  m.schema_fingerprint = fp;
  Tree t;
  t.nodes.resize(3);
  t.nodes[0].is_leaf = false;
  t.nodes[0].feature = 0;
  t.nodes[0].threshold = threshold;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[1].leaf = left;
  t.nodes[2].leaf = right;
  m.trees.push_back(t);
  return m;
}

}  // namespace

TEST_CASE("zero trees predict the prior") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 1, 2, 3, 4, 5, 6, 7;
  std::vector<int> y = {0, 1, 0, 1};  // 50/50
  TrainConfig cfg;
  cfg.trees = 0;
  BoostedModel m = fit(x, y, cfg, "fp");
  CHECK(m.base_score == doctest::Approx(0.0));
  Eigen::VectorXd probe(2);
  probe << 1.0, 2.0;
  CHECK(predict_proba(m, probe) == doctest::Approx(0.5));
}

TEST_CASE("single-class labels are rejected") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  TrainConfig cfg;
  cfg.trees = 0;
  CHECK_THROWS_AS(fit(x, {1, 1, 1}, cfg, "fp"), ValidationError);
  CHECK_THROWS_AS(fit(x, {0, 0, 0}, cfg, "fp"), ValidationError);
  CHECK_THROWS_AS(fit(Eigen::MatrixXd(0, 1), {}, cfg, "fp"), ValidationError);
  Eigen::MatrixXd bad(2, 1);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit(bad, {0, 1}, cfg, "fp"), ValidationError);
}

TEST_CASE("single stump matches the closed-form sigmoid") {
  BoostedModel m = stump_model(0.5, -2.0, 2.0, 1.0);
  Eigen::VectorXd below(1), above(1);
  below << 0.0;
  above << 1.0;
  CHECK(predict_proba(m, below) == doctest::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-9));
  CHECK(predict_proba(m, below) == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(predict_proba(m, above) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-9));
  CHECK(predict_proba(m, above) == doctest::Approx(0.8808).epsilon(1e-3));
}

TEST_CASE("fingerprint-checked prediction") {
  BoostedModel m = stump_model(0.5, -1.0, 1.0, 1.0, default_schema().fingerprint());
  FeatureVector fv;
  fv.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(default_schema().size()));
  CHECK(predict_proba(m, fv, default_schema()) > 0.0);
  FeatureSchema other = default_schema({"a cue"});
  CHECK_THROWS_AS(predict_proba(m, fv, other), ValidationError);
}

TEST_CASE("a tree with all-zero leaves leaves predictions unchanged") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  synthetic_separable(200, 4, 3, x, y);
  TrainConfig cfg;
  cfg.trees = 5;
  cfg.max_depth = 3;
  cfg.learning_rate = 0.1;
  cfg.seed = 3;
  BoostedModel m = fit(x, y, cfg, "fp");

  BoostedModel padded = m;
  Tree zero;
  zero.nodes.resize(3);
  zero.nodes[0].is_leaf = false;
  zero.nodes[0].feature = 1;
  zero.nodes[0].threshold = 0.0;
  zero.nodes[0].left = 1;
  zero.nodes[0].right = 2;
  padded.trees.push_back(zero);

  for (int r = 0; r < 50; ++r) {
    Eigen::VectorXd probe = x.row(r);
    CHECK(predict_proba(m, probe) == doctest::Approx(predict_proba(padded, probe)).epsilon(1e-15));
  }
}

TEST_CASE("training logistic loss is non-increasing per round") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  synthetic_separable(400, 6, 9, x, y);
  TrainConfig cfg;
  cfg.trees = 40;
  cfg.max_depth = 3;
  cfg.learning_rate = 0.1;
  cfg.row_subsample = 1.0;
  cfg.feature_subsample = 1.0;
  std::vector<double> loss;
  fit(x, y, cfg, "fp", &loss);
  REQUIRE(loss.size() == 40);
  for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-12);
}

TEST_CASE("predictions stay strictly inside (0,1)") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  synthetic_separable(500, 3, 5, x, y);
  TrainConfig cfg;
  cfg.trees = 120;
  cfg.max_depth = 4;
  cfg.learning_rate = 0.5;
  BoostedModel m = fit(x, y, cfg, "fp");
  for (int r = 0; r < 100; ++r) {
    Eigen::VectorXd probe = x.row(r);
    double p = predict_proba(m, probe);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}

TEST_CASE("separable synthetic set reaches high held-out AUC") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  synthetic_separable(2000, 10, 17, x, y);
  Eigen::MatrixXd train = x.topRows(1600);
  std::vector<int> y_train(y.begin(), y.begin() + 1600);

  TrainConfig cfg;
  cfg.trees = 50;
  cfg.max_depth = 3;
  cfg.learning_rate = 0.2;
  cfg.seed = 17;
  BoostedModel m = fit(train, y_train, cfg, "fp");

  std::vector<std::pair<double, int>> scored;
  for (int r = 1600; r < 2000; ++r) {
    Eigen::VectorXd probe = x.row(r);
    scored.emplace_back(predict_proba(m, probe), y[r]);
  }
  CHECK(roc_auc(scored) >= 0.95);
}

TEST_CASE("identical data and config give identical model bytes") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  synthetic_separable(300, 5, 21, x, y);
  TrainConfig cfg;
  cfg.trees = 30;
  cfg.max_depth = 4;
  cfg.row_subsample = 0.7;
  cfg.feature_subsample = 0.6;
  cfg.seed = 13;
  auto dir = fresh_dir("gbdt_det");
  save_model(fit(x, y, cfg, "fp"), dir / "m1.bin");
  save_model(fit(x, y, cfg, "fp"), dir / "m2.bin");
  CHECK(slurp(dir / "m1.bin") == slurp(dir / "m2.bin"));
}

TEST_CASE("model files round-trip and reject corruption") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  synthetic_separable(200, 4, 29, x, y);
  TrainConfig cfg;
  cfg.trees = 10;
  cfg.max_depth = 3;
  cfg.seed = 29;
  BoostedModel m = fit(x, y, cfg, "schema-fp");
  auto dir = fresh_dir("gbdt_io");
  save_model(m, dir / "model.bin");

  SUBCASE("round-trip predictions are bit-identical") {
    BoostedModel loaded = load_model(dir / "model.bin");
    CHECK(loaded.schema_fingerprint == "schema-fp");
    CHECK(loaded.trees.size() == m.trees.size());
    for (int r = 0; r < 50; ++r) {
      Eigen::VectorXd probe = x.row(r);
      CHECK(predict_proba(loaded, probe) == predict_proba(m, probe));
    }
  }
  SUBCASE("truncated file is corrupt") {
    std::string bytes = slurp(dir / "model.bin");
    std::ofstream out(dir / "trunc.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_WITH_AS(load_model(dir / "trunc.bin"), doctest::Contains("corrupt"),
                         ValidationError);
  }
  SUBCASE("version bump is refused") {
    std::string bytes = slurp(dir / "model.bin");
    bytes[4] = 9;  // version byte
    // keep the checksum consistent so the version check itself fires
    std::string payload = bytes.substr(4, bytes.size() - 4 - 16);
    std::string digest = sha256_hex(payload).substr(0, 16);
    std::ofstream out(dir / "vers.bin", std::ios::binary);
    out.write(bytes.data(), 4);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.write(digest.data(), 16);
    out.close();
    CHECK_THROWS_WITH_AS(load_model(dir / "vers.bin"), doctest::Contains("unsupported version"),
                         ValidationError);
  }
  SUBCASE("flipped payload byte fails the checksum") {
    std::string bytes = slurp(dir / "model.bin");
    bytes[bytes.size() / 2] ^= 0x40;
    std::ofstream out(dir / "flip.bin", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_WITH_AS(load_model(dir / "flip.bin"), doctest::Contains("checksum"),
                         ValidationError);
  }
}

TEST_CASE("external scores adapter") {
  auto dir = fresh_dir("ext_scores");
  {
    std::ofstream out(dir / "scores.csv");
    out << "paper_id,ref_index,prob\n";
    out << "p1,1,0.75\n";
    out << "p1,2,0\n";
    out << "p2,1,1\n";
  }
  ExternalScores ext = load_external_scores(dir / "scores.csv");
  CHECK(ext.at("p1", 1) == doctest::Approx(0.75));
  CHECK(ext.at("p2", 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ext.at("p3", 1), MissingArtifactError);

  {
    std::ofstream out(dir / "bad.csv");
    out << "paper_id,ref_index,prob\n";
    out << "p1,1,1.5\n";
  }
  CHECK_THROWS_AS(load_external_scores(dir / "bad.csv"), ValidationError);
  {
    std::ofstream out(dir / "bad_header.csv");
    out << "paper,ref,prob\n";
  }
  CHECK_THROWS_AS(load_external_scores(dir / "bad_header.csv"), ValidationError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.row_subsample = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = TrainConfig{};
  cfg.bins = 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_NOTHROW(preset_a().validate());
  CHECK_NOTHROW(preset_b().validate());
}
