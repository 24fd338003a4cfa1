#include "refsource/gbdt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "refsource/errors.hpp"
#include "refsource/util.hpp"

namespace refsource {

namespace {

constexpr double kMaxLogOdds = 15.0;
constexpr double kMaxLeafValue = 10.0;
constexpr double kMinSplitGain = 1e-12;

double sigmoid_clamped(double z) {
  z = std::clamp(z, -kMaxLogOdds, kMaxLogOdds);
  return 1.0 / (1.0 + std::exp(-z));
}

// Equal-frequency thresholds for one feature column, deduplicated.
std::vector<double> quantile_thresholds(std::vector<double> values, int bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> thresholds;
  const std::size_t n = values.size();
  for (int b = 1; b < bins; ++b) {
    std::size_t pos = static_cast<std::size_t>(static_cast<double>(b) * n / bins);
    if (pos == 0 || pos >= n) continue;
    if (values[pos - 1] == values[pos]) continue;
    double t = values[pos - 1] + (values[pos] - values[pos - 1]) / 2.0;
    if (t >= values[pos]) t = values[pos - 1];  // midpoint collapsed by rounding
    if (thresholds.empty() || t > thresholds.back()) thresholds.push_back(t);
  }
  return thresholds;
}

struct BinStat {
  int count = 0;
  double sum_r = 0.0;  // residual (negative gradient) sum
  double sum_h = 0.0;  // hessian sum
};

// Deterministic partial Fisher-Yates: first k entries of a shuffled [0,n).
std::vector<int> sample_without_replacement(int n, int k, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> dist(i, n - 1);
    std::swap(idx[i], idx[dist(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// --- little-endian binary IO ------------------------------------------------

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

void put_i32(std::string& out, int32_t v) { put_u32(out, static_cast<uint32_t>(v)); }

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw ValidationError("model file: corrupt payload (truncated)");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(data[pos++]);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr char kMagic[4] = {'R', 'S', 'G', 'B'};
constexpr uint32_t kModelVersion = 1;

}  // namespace

void TrainConfig::validate() const {
  if (trees < 0) throw ValidationError("gbdt: trees must be >= 0");
  if (max_depth < 1) throw ValidationError("gbdt: max_depth must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ValidationError("gbdt: learning_rate must be in (0,1]");
  if (min_samples_leaf < 1) throw ValidationError("gbdt: min_samples_leaf must be positive");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0))
    throw ValidationError("gbdt: feature_subsample must be in (0,1]");
  if (!(row_subsample > 0.0 && row_subsample <= 1.0))
    throw ValidationError("gbdt: row_subsample must be in (0,1]");
  if (bins < 2 || bins > 65535) throw ValidationError("gbdt: bins must be in [2, 65535]");
}

TrainConfig preset_a() {
  TrainConfig c;
  c.trees = 400;
  c.max_depth = 6;
  c.learning_rate = 0.05;
  c.row_subsample = 0.8;
  c.feature_subsample = 0.8;
  c.min_samples_leaf = 2;
  c.bins = 64;
  c.seed = 1;
  return c;
}

TrainConfig preset_b() {
  TrainConfig c;
  c.trees = 600;
  c.max_depth = 4;
  c.learning_rate = 0.03;
  c.row_subsample = 0.7;
  c.feature_subsample = 0.9;
  c.min_samples_leaf = 2;
  c.bins = 64;
  c.seed = 2;
  return c;
}

BoostedModel fit(const Eigen::MatrixXd& x, const std::vector<int>& y, const TrainConfig& config,
                 const std::string& schema_fingerprint, std::vector<double>* round_loss) {
  config.validate();
  const int n_rows = static_cast<int>(x.rows());
  const int n_features = static_cast<int>(x.cols());
  if (n_rows == 0) throw ValidationError("gbdt: empty matrix");
  if (static_cast<int>(y.size()) != n_rows) throw ValidationError("gbdt: labels/matrix mismatch");

  long long positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw ValidationError("gbdt: labels must be 0 or 1");
    positives += label;
  }
  if (positives == 0 || positives == static_cast<long long>(n_rows))
    throw ValidationError("gbdt: single-class labels");
  if (!x.allFinite()) throw ValidationError("gbdt: non-finite feature values");

  // binning: one pass, before any boosting round
  std::vector<std::vector<double>> thresholds(n_features);
  std::vector<std::vector<uint16_t>> binned(n_features, std::vector<uint16_t>(n_rows));
  for (int f = 0; f < n_features; ++f) {
    std::vector<double> col(x.col(f).data(), x.col(f).data() + n_rows);
    thresholds[f] = quantile_thresholds(std::move(col), config.bins);
    const auto& t = thresholds[f];
    for (int r = 0; r < n_rows; ++r) {
      auto it = std::lower_bound(t.begin(), t.end(), x(r, f));
      binned[f][r] = static_cast<uint16_t>(it - t.begin());
    }
  }

  BoostedModel model;
  model.learning_rate = config.learning_rate;
  model.schema_fingerprint = schema_fingerprint;
  double prior = static_cast<double>(positives) / n_rows;
  prior = std::clamp(prior, 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(prior / (1.0 - prior));

  Eigen::ArrayXd raw = Eigen::ArrayXd::Constant(n_rows, model.base_score);
  Eigen::ArrayXd prob(n_rows), residual(n_rows), hessian(n_rows);

  std::mt19937_64 rng(config.seed);

  const int sampled_rows = config.row_subsample < 1.0
                               ? std::max(1, static_cast<int>(std::floor(config.row_subsample * n_rows)))
                               : n_rows;
  const int sampled_feats =
      config.feature_subsample < 1.0
          ? std::min(n_features,
                     std::max(1, static_cast<int>(std::llround(config.feature_subsample * n_features))))
          : n_features;

  struct GrowNode {
    int begin = 0;  // range in the row-index workspace
    int end = 0;
    int depth = 0;
    int node_id = 0;
  };

  std::vector<int> rows_ws;
  std::vector<BinStat> hist;

  for (int round = 0; round < config.trees; ++round) {
    for (int r = 0; r < n_rows; ++r) {
      double p = sigmoid_clamped(raw[r]);
      prob[r] = p;
      residual[r] = y[r] - p;
      hessian[r] = std::max(p * (1.0 - p), 1e-12);
    }

    std::vector<int> tree_rows = sampled_rows < n_rows
                                     ? sample_without_replacement(n_rows, sampled_rows, rng)
                                     : [&] {
                                         std::vector<int> all(n_rows);
                                         std::iota(all.begin(), all.end(), 0);
                                         return all;
                                       }();
    std::vector<int> tree_feats = sampled_feats < n_features
                                      ? sample_without_replacement(n_features, sampled_feats, rng)
                                      : [&] {
                                          std::vector<int> all(n_features);
                                          std::iota(all.begin(), all.end(), 0);
                                          return all;
                                        }();

    Tree tree;
    tree.nodes.emplace_back();
    rows_ws = tree_rows;

    std::vector<GrowNode> frontier{{0, static_cast<int>(rows_ws.size()), 0, 0}};
    while (!frontier.empty()) {
      std::vector<GrowNode> next;
      for (const GrowNode& g : frontier) {
        const int n_node = g.end - g.begin;
        double node_sum_r = 0.0, node_sum_h = 0.0;
        for (int i = g.begin; i < g.end; ++i) {
          node_sum_r += residual[rows_ws[i]];
          node_sum_h += hessian[rows_ws[i]];
        }

        auto make_leaf = [&] {
          double v = node_sum_r / (node_sum_h + 1e-12);
          tree.nodes[g.node_id].is_leaf = true;
          tree.nodes[g.node_id].leaf = std::clamp(v, -kMaxLeafValue, kMaxLeafValue);
        };

        if (g.depth >= config.max_depth || n_node < 2 * config.min_samples_leaf) {
          make_leaf();
          continue;
        }

        // best split: gain ties keep the first candidate, i.e. lowest feature
        // index then lowest threshold (features and bins scanned ascending)
        double best_gain = kMinSplitGain;
        int best_feature = -1;
        int best_bin = -1;
        const double parent_score = node_sum_r * node_sum_r / n_node;

        for (int f : tree_feats) {
          const int n_bins = static_cast<int>(thresholds[f].size()) + 1;
          if (n_bins < 2) continue;
          hist.assign(n_bins, BinStat{});
          for (int i = g.begin; i < g.end; ++i) {
            int row = rows_ws[i];
            BinStat& s = hist[binned[f][row]];
            ++s.count;
            s.sum_r += residual[row];
            s.sum_h += hessian[row];
          }
          int left_count = 0;
          double left_sum = 0.0;
          for (int b = 0; b + 1 < n_bins; ++b) {
            left_count += hist[b].count;
            left_sum += hist[b].sum_r;
            int right_count = n_node - left_count;
            if (left_count < config.min_samples_leaf) continue;
            if (right_count < config.min_samples_leaf) break;
            double right_sum = node_sum_r - left_sum;
            double gain = left_sum * left_sum / left_count + right_sum * right_sum / right_count -
                          parent_score;
            if (gain > best_gain) {
              best_gain = gain;
              best_feature = f;
              best_bin = b;
            }
          }
        }

        if (best_feature < 0) {
          make_leaf();
          continue;
        }

        // partition rows in place, preserving ascending row order on each side
        std::vector<int> left_rows, right_rows;
        left_rows.reserve(n_node);
        for (int i = g.begin; i < g.end; ++i) {
          int row = rows_ws[i];
          (binned[best_feature][row] <= best_bin ? left_rows : right_rows).push_back(row);
        }
        std::copy(left_rows.begin(), left_rows.end(), rows_ws.begin() + g.begin);
        std::copy(right_rows.begin(), right_rows.end(),
                  rows_ws.begin() + g.begin + static_cast<int>(left_rows.size()));

        int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        TreeNode& node = tree.nodes[g.node_id];
        node.is_leaf = false;
        node.feature = best_feature;
        node.threshold = thresholds[best_feature][best_bin];
        node.left = left_id;
        node.right = right_id;

        int mid = g.begin + static_cast<int>(left_rows.size());
        next.push_back({g.begin, mid, g.depth + 1, left_id});
        next.push_back({mid, g.end, g.depth + 1, right_id});
      }
      frontier = std::move(next);
    }

    // update raw scores for all rows (training partition uses bins, which is
    // equivalent to the stored thresholds by construction)
    for (int r = 0; r < n_rows; ++r) {
      int node_id = 0;
      while (!tree.nodes[node_id].is_leaf) {
        const TreeNode& nd = tree.nodes[node_id];
        node_id = x(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
      }
      raw[r] += config.learning_rate * tree.nodes[node_id].leaf;
    }

    model.trees.push_back(std::move(tree));

    if (round_loss) {
      double loss = 0.0;
      for (int r = 0; r < n_rows; ++r) {
        double p = sigmoid_clamped(raw[r]);
        loss -= y[r] == 1 ? std::log(p) : std::log(1.0 - p);
      }
      round_loss->push_back(loss / n_rows);
    }
  }

  return model;
}

BoostedModel fit(const std::vector<FeatureVector>& rows, const TrainConfig& config,
                 const FeatureSchema& schema, std::vector<double>* round_loss) {
  if (rows.empty()) throw ValidationError("gbdt: empty matrix");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(schema.size()));
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].label) throw ValidationError("gbdt: row without label: " + rows[i].paper_id);
    if (rows[i].values.size() != static_cast<Eigen::Index>(schema.size()))
      throw ValidationError("gbdt: schema mismatch in row " + rows[i].paper_id);
    x.row(static_cast<Eigen::Index>(i)) = rows[i].values;
    y[i] = *rows[i].label;
  }
  return fit(x, y, config, schema.fingerprint(), round_loss);
}

double predict_proba(const BoostedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double z = model.base_score;
  for (const Tree& tree : model.trees) {
    int node_id = 0;
    while (!tree.nodes[node_id].is_leaf) {
      const TreeNode& nd = tree.nodes[node_id];
      node_id = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    z += model.learning_rate * tree.nodes[node_id].leaf;
  }
  return sigmoid_clamped(z);
}

double predict_proba(const BoostedModel& model, const FeatureVector& x, const FeatureSchema& schema) {
  if (schema.fingerprint() != model.schema_fingerprint)
    throw ValidationError("gbdt: schema fingerprint mismatch");
  return predict_proba(model, x.values);
}

void save_model(const BoostedModel& model, const std::filesystem::path& path) {
  std::string payload;
  put_u32(payload, kModelVersion);
  put_u32(payload, static_cast<uint32_t>(model.schema_fingerprint.size()));
  payload += model.schema_fingerprint;
  put_f64(payload, model.base_score);
  put_f64(payload, model.learning_rate);
  put_u32(payload, static_cast<uint32_t>(model.trees.size()));
  for (const Tree& tree : model.trees) {
    put_u32(payload, static_cast<uint32_t>(tree.nodes.size()));
    for (const TreeNode& nd : tree.nodes) {
      payload.push_back(nd.is_leaf ? 1 : 0);
      put_i32(payload, nd.feature);
      put_f64(payload, nd.threshold);
      put_i32(payload, nd.left);
      put_i32(payload, nd.right);
      put_f64(payload, nd.leaf);
    }
  }

  std::string digest = sha256_hex(payload).substr(0, 16);  // 8 bytes as hex
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ExitCode::internal, "cannot write model file: " + path.string());
  out.write(kMagic, 4);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(digest.data(), static_cast<std::streamsize>(digest.size()));
}

BoostedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open model file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string file = buf.str();

  if (file.size() < 4 + 16 || std::string_view(file.data(), 4) != std::string_view(kMagic, 4))
    throw ValidationError("model file: bad magic: " + path.string());
  std::string payload = file.substr(4, file.size() - 4 - 16);
  std::string stored_digest = file.substr(file.size() - 16);
  if (sha256_hex(payload).substr(0, 16) != stored_digest)
    throw ValidationError("model file: corrupt payload (checksum mismatch): " + path.string());

  Reader r{payload};
  uint32_t version = r.u32();
  if (version != kModelVersion)
    throw ValidationError("model file: unsupported version " + std::to_string(version));

  BoostedModel model;
  uint32_t fp_len = r.u32();
  model.schema_fingerprint = r.bytes(fp_len);
  model.base_score = r.f64();
  model.learning_rate = r.f64();
  uint32_t n_trees = r.u32();
  model.trees.reserve(n_trees);
  for (uint32_t t = 0; t < n_trees; ++t) {
    Tree tree;
    uint32_t n_nodes = r.u32();
    tree.nodes.reserve(n_nodes);
    for (uint32_t k = 0; k < n_nodes; ++k) {
      TreeNode nd;
      nd.is_leaf = r.u8() != 0;
      nd.feature = r.i32();
      nd.threshold = r.f64();
      nd.left = r.i32();
      nd.right = r.i32();
      nd.leaf = r.f64();
      if (!std::isfinite(nd.leaf)) throw ValidationError("model file: non-finite leaf value");
      tree.nodes.push_back(nd);
    }
    for (const TreeNode& nd : tree.nodes) {
      if (!nd.is_leaf && (nd.left < 0 || nd.right < 0 ||
                          nd.left >= static_cast<int>(tree.nodes.size()) ||
                          nd.right >= static_cast<int>(tree.nodes.size())))
        throw ValidationError("model file: corrupt payload (bad child index)");
    }
    model.trees.push_back(std::move(tree));
  }
  if (r.pos != payload.size()) throw ValidationError("model file: corrupt payload (trailing bytes)");
  return model;
}

double ExternalScores::at(const std::string& paper_id, int ref_index) const {
  auto it = probs.find({paper_id, ref_index});
  if (it == probs.end())
    throw MissingArtifactError("external scores: missing entry for " + paper_id + " ref " +
                               std::to_string(ref_index));
  return it->second;
}

ExternalScores load_external_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open external scores: " + path.string());
  ExternalScores scores;
  std::string line;
  if (!std::getline(in, line) || split(line, ',') != std::vector<std::string>{"paper_id", "ref_index", "prob"})
    throw ValidationError("external scores: expected header paper_id,ref_index,prob");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto parts = split(line, ',');
    if (parts.size() != 3)
      throw ValidationError("external scores line " + std::to_string(line_no) + ": wrong column count");
    double prob = std::stod(parts[2]);
    if (!(prob >= 0.0 && prob <= 1.0))
      throw ValidationError("external scores line " + std::to_string(line_no) + ": prob outside [0,1]");
    scores.probs[{parts[0], std::stoi(parts[1])}] = prob;
  }
  return scores;
}

}  // namespace refsource
