#pragma once

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "refsource/corpus.hpp"

namespace refsource::testing {

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("refsource_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct CliResult {
  int exit_code = -1;
  std::string output;
};

// Runs a shell command, merging stderr into stdout.
inline CliResult run_cmd(const std::string& cmd) {
  CliResult result;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return result;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

// Minimal valid paper; sections and labels supplied by the caller.
inline PaperRecord minimal_paper(int n_refs) {
  PaperRecord p;
  p.paper_id = "t1";
  p.title = "A tiny paper";
  p.abstract = "About nothing in particular.";
  p.venue = "VenueX";
  p.year = 2020;
  p.citation_count = 4;
  p.authors.push_back({"Ada One", "Lab A"});
  for (int j = 1; j <= n_refs; ++j) {
    ReferenceEntry r;
    r.index = j;
    r.title = "Reference number " + std::to_string(j);
    r.venue = j % 2 == 0 ? "VenueX" : "VenueY";
    r.year = 2015 + j % 4;
    r.citation_count = 10 * j;
    r.authors.push_back({"Bea Two", "Lab B"});
    p.references.push_back(std::move(r));
  }
  return p;
}

// Independent AP oracle: selection-sorts by the ranking comparator and walks
// ranks directly. Kept free of the eval module's code path.
inline double ap_oracle(const std::vector<std::pair<int, double>>& scores,
                        const std::set<int>& relevant) {
  std::vector<bool> used(scores.size(), false);
  int hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 1; rank <= scores.size(); ++rank) {
    int best = -1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (used[i]) continue;
      if (best < 0 || scores[i].second > scores[best].second ||
          (scores[i].second == scores[best].second && scores[i].first < scores[best].first))
        best = static_cast<int>(i);
    }
    used[best] = true;
    if (relevant.count(scores[best].first)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

// Seeded separable set: label = 1 iff feature 0 > 0.
inline void synthetic_separable(int rows, int cols, uint64_t seed, Eigen::MatrixXd& x,
                                std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  x.resize(rows, cols);
  y.resize(rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) x(r, c) = normal(rng);
    y[r] = x(r, 0) > 0.0 ? 1 : 0;
  }
}

}  // namespace refsource::testing
