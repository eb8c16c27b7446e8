#pragma once

// Generators and brute-force reference implementations shared by the tests.
// The oracles are deliberately naive and do not call into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "eventbench/taxonomy.hpp"

namespace support {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(EVENTBENCH_FIXTURES) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("eventbench_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Probability that a random positive outranks a random negative, ties 1/2.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& gold) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!gold[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (gold[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

struct MultiLabelOracle {
  long exact = 0, symmetric = 0, overlapping = 0, true_labels = 0, pred_labels = 0, n = 0;

  double subset() const { return static_cast<double>(exact) / static_cast<double>(n); }
  double hamming() const { return static_cast<double>(symmetric) / (static_cast<double>(n) * 9.0); }
  double partial() const { return static_cast<double>(overlapping) / static_cast<double>(n); }
  double card_true() const { return static_cast<double>(true_labels) / static_cast<double>(n); }
  double card_pred() const { return static_cast<double>(pred_labels) / static_cast<double>(n); }
};

/// Per-instance enumeration over label sets given as sets of ordinals.
inline MultiLabelOracle multilabel_oracle(const std::vector<std::set<int>>& gold,
                                          const std::vector<std::set<int>>& pred) {
  MultiLabelOracle o;
  o.n = static_cast<long>(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) ++o.exact;
    bool overlap = false;
    for (int t = 0; t < 9; ++t) {
      const bool g = gold[i].count(t) > 0;
      const bool p = pred[i].count(t) > 0;
      if (g != p) ++o.symmetric;
      if (g && p) overlap = true;
    }
    if (overlap) ++o.overlapping;
    o.true_labels += static_cast<long>(gold[i].size());
    o.pred_labels += static_cast<long>(pred[i].size());
  }
  return o;
}

inline eventbench::AttackSet to_attack_set(const std::set<int>& s) {
  eventbench::AttackSet out;
  for (int t : s) out.set(static_cast<std::size_t>(t));
  return out;
}

inline std::set<int> random_label_set(std::mt19937_64& rng, double p = 0.2) {
  std::bernoulli_distribution coin(p);
  std::set<int> s;
  for (int t = 0; t < 9; ++t) {
    if (coin(rng)) s.insert(t);
  }
  return s;
}

}  // namespace support
