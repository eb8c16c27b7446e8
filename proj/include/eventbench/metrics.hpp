#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eventbench/corpus.hpp"
#include "eventbench/error.hpp"
#include "eventbench/taxonomy.hpp"

namespace eventbench {

using Count = std::int64_t;
using CountMatrix = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic>;
using CountVector = Eigen::Matrix<Count, Eigen::Dynamic, 1>;

/// Per-document score rows over the nine attack types.
using ScoreMatrix = Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kNumAttackTypes)>;
/// Per-document label membership over the nine attack types.
using IndicatorMatrix = Eigen::Array<bool, Eigen::Dynamic, static_cast<int>(kNumAttackTypes)>;

inline constexpr double kDefaultThreshold = 0.5;

struct ConfusionCounts {
  CountVector tp;
  CountVector fp;
  CountVector fn;
  CountVector support;
  /// Rows are gold classes, columns predicted classes. Single-label only.
  std::optional<CountMatrix> matrix;

  Eigen::Index num_classes() const { return tp.size(); }
};

/// Single-label confusion over classes 0..num_classes-1. Throws LengthMismatch
/// on unequal or empty inputs and InvalidArgument on out-of-range labels.
ConfusionCounts confusion(const Eigen::Ref<const Eigen::VectorXi>& gold,
                          const Eigen::Ref<const Eigen::VectorXi>& pred, int num_classes);
ConfusionCounts confusion_from_matrix(const CountMatrix& matrix);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Count support = 0;
};

/// Precision, recall and F1 per class; any zero denominator yields 0.
std::vector<ClassScore> class_scores(const ConfusionCounts& counts);
ClassScore score_from_counts(Count tp, Count fp, Count fn);

/// Unweighted mean of each metric; support is the total.
ClassScore macro_avg(std::span<const ClassScore> scores);
/// Support-weighted mean of each metric.
ClassScore weighted_avg(std::span<const ClassScore> scores);
/// trace / total. Requires the single-label matrix.
double accuracy(const ConfusionCounts& counts);

// ---------------------------------------------------------------------------
// One-vs-rest and multi-label

/// scores >= threshold, element-wise.
IndicatorMatrix threshold_scores(const Eigen::Ref<const ScoreMatrix>& scores,
                                 double threshold = kDefaultThreshold);
IndicatorMatrix indicators(std::span<const AttackSet> sets);

struct TypeScore {
  AttackType type = AttackType::Unknown;
  Count tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  ClassScore positive;
};

struct OneVsRestReport {
  std::array<TypeScore, kNumAttackTypes> per_type;
  /// Means over the nine types.
  double macro_accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

OneVsRestReport one_vs_rest(const Eigen::Ref<const ScoreMatrix>& scores,
                            const IndicatorMatrix& gold, double threshold = kDefaultThreshold);

struct MultiLabelScores {
  double subset_accuracy = 0.0;
  double hamming_loss = 0.0;
  double partial_match = 0.0;
  double cardinality_true = 0.0;
  double cardinality_pred = 0.0;
};

MultiLabelScores multilabel(const IndicatorMatrix& gold, const IndicatorMatrix& pred);

using ScoresById = std::map<std::string, CategoryVector, std::less<>>;
using LabelsById = std::map<std::string, AttackSet, std::less<>>;

/// Keyed variants: rows follow `ids`; throw MissingDocs when the key sets differ.
OneVsRestReport one_vs_rest(std::span<const std::string> ids, const ScoresById& scores,
                            const LabelsById& gold, double threshold = kDefaultThreshold);
MultiLabelScores multilabel(std::span<const std::string> ids, const LabelsById& gold,
                            const ScoresById& scores, double threshold = kDefaultThreshold);

ScoreMatrix stack_scores(std::span<const CategoryVector> rows);

// ---------------------------------------------------------------------------
// NER

struct NerTokenReport {
  std::vector<std::string> tags;  // "O" first, then lexicographic
  std::vector<ClassScore> per_tag;
  std::vector<std::string> macro_universe;  // tags present in gold
  ClassScore macro;
  ClassScore weighted;
  double accuracy = 0.0;
};

/// Token-level scoring with every tag, including O, as its own class.
NerTokenReport ner_token_metrics(std::span<const std::vector<std::string>> gold,
                                 std::span<const std::vector<std::string>> pred);

struct NerSpanReport {
  std::map<std::string, ClassScore> per_type;
  std::map<std::string, Count> tp, fp, fn;
  ClassScore micro;
};

/// Exact (doc, type, begin, end) matching.
NerSpanReport ner_span_metrics(std::span<const EntitySpan> gold, std::span<const EntitySpan> pred);

/// Row-aligns keyed values to `ids`. Throws MissingDocs if the id sets differ.
template <typename Value>
std::vector<Value> align_by_id(std::span<const std::string> ids,
                               const std::map<std::string, Value, std::less<>>& values) {
  std::vector<Value> out;
  out.reserve(ids.size());
  std::size_t missing = 0;
  std::string example;
  for (const auto& id : ids) {
    auto it = values.find(id);
    if (it == values.end()) {
      if (missing++ == 0) example = id;
      continue;
    }
    out.push_back(it->second);
  }
  if (missing > 0 || values.size() != ids.size()) {
    throw Error(ErrorCode::MissingDocs,
                std::to_string(missing) + " id(s) without a value (e.g. \"" + example + "\"), " +
                    std::to_string(values.size()) + " values for " + std::to_string(ids.size()) +
                    " ids");
  }
  return out;
}

}  // namespace eventbench
