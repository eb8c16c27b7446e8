#include "eventbench/metrics.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace eventbench {

ConfusionCounts confusion_from_matrix(const CountMatrix& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "confusion matrix must be square and non-empty");
  }
  if ((matrix.array() < 0).any()) {
    throw Error(ErrorCode::InvalidArgument, "negative count in confusion matrix");
  }
  ConfusionCounts c;
  c.tp = matrix.diagonal();
  c.support = matrix.rowwise().sum();
  c.fn = c.support - c.tp;
  c.fp = matrix.colwise().sum().transpose() - c.tp;
  c.matrix = matrix;
  return c;
}

ConfusionCounts confusion(const Eigen::Ref<const Eigen::VectorXi>& gold,
                          const Eigen::Ref<const Eigen::VectorXi>& pred, int num_classes) {
  if (gold.size() != pred.size() || gold.size() == 0) {
    throw Error(ErrorCode::LengthMismatch, "gold has " + std::to_string(gold.size()) +
                                               " labels, predictions " +
                                               std::to_string(pred.size()));
  }
  if (num_classes <= 0 || gold.minCoeff() < 0 || pred.minCoeff() < 0 ||
      gold.maxCoeff() >= num_classes || pred.maxCoeff() >= num_classes) {
    throw Error(ErrorCode::InvalidArgument, "label outside 0.." + std::to_string(num_classes - 1));
  }
  CountMatrix m = CountMatrix::Zero(num_classes, num_classes);
  for (Eigen::Index i = 0; i < gold.size(); ++i) ++m(gold(i), pred(i));
  return confusion_from_matrix(m);
}

ClassScore score_from_counts(Count tp, Count fp, Count fn) {
  ClassScore s;
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double pr = s.precision + s.recall;
  s.f1 = pr == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / pr;
  s.support = tp + fn;
  return s;
}

std::vector<ClassScore> class_scores(const ConfusionCounts& counts) {
  std::vector<ClassScore> out;
  out.reserve(static_cast<std::size_t>(counts.num_classes()));
  for (Eigen::Index k = 0; k < counts.num_classes(); ++k) {
    out.push_back(score_from_counts(counts.tp(k), counts.fp(k), counts.fn(k)));
  }
  return out;
}

ClassScore macro_avg(std::span<const ClassScore> scores) {
  ClassScore m;
  if (scores.empty()) return m;
  for (const auto& s : scores) {
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
    m.support += s.support;
  }
  const auto n = static_cast<double>(scores.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

ClassScore weighted_avg(std::span<const ClassScore> scores) {
  ClassScore w;
  for (const auto& s : scores) {
    const auto weight = static_cast<double>(s.support);
    w.precision += weight * s.precision;
    w.recall += weight * s.recall;
    w.f1 += weight * s.f1;
    w.support += s.support;
  }
  if (w.support == 0) return ClassScore{};
  const auto total = static_cast<double>(w.support);
  w.precision /= total;
  w.recall /= total;
  w.f1 /= total;
  return w;
}

double accuracy(const ConfusionCounts& counts) {
  if (!counts.matrix) {
    throw Error(ErrorCode::InvalidArgument, "accuracy needs a single-label confusion matrix");
  }
  const Count total = counts.matrix->sum();
  return total == 0 ? 0.0
                    : static_cast<double>(counts.matrix->trace()) / static_cast<double>(total);
}

IndicatorMatrix threshold_scores(const Eigen::Ref<const ScoreMatrix>& scores, double threshold) {
  return scores.array() >= threshold;
}

IndicatorMatrix indicators(std::span<const AttackSet> sets) {
  IndicatorMatrix m(static_cast<Eigen::Index>(sets.size()), static_cast<int>(kNumAttackTypes));
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t t = 0; t < kNumAttackTypes; ++t) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = sets[i].test(t);
    }
  }
  return m;
}

ScoreMatrix stack_scores(std::span<const CategoryVector> rows) {
  ScoreMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<int>(kNumAttackTypes));
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

OneVsRestReport one_vs_rest(const Eigen::Ref<const ScoreMatrix>& scores,
                            const IndicatorMatrix& gold, double threshold) {
  if (scores.rows() != gold.rows()) {
    throw Error(ErrorCode::LengthMismatch, "score and gold row counts differ");
  }
  const IndicatorMatrix pred = threshold_scores(scores, threshold);
  const Count n = scores.rows();

  OneVsRestReport r;
  for (std::size_t t = 0; t < kNumAttackTypes; ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    const auto g = gold.col(col);
    const auto p = pred.col(col);
    TypeScore& s = r.per_type[t];
    s.type = attack_type_from_ordinal(t);
    s.tp = (g && p).count();
    s.fp = (!g && p).count();
    s.fn = (g && !p).count();
    s.tn = n - s.tp - s.fp - s.fn;
    s.accuracy = n == 0 ? 0.0 : static_cast<double>(s.tp + s.tn) / static_cast<double>(n);
    s.positive = score_from_counts(s.tp, s.fp, s.fn);
    r.macro_accuracy += s.accuracy;
    r.macro_precision += s.positive.precision;
    r.macro_recall += s.positive.recall;
    r.macro_f1 += s.positive.f1;
  }
  const auto k = static_cast<double>(kNumAttackTypes);
  r.macro_accuracy /= k;
  r.macro_precision /= k;
  r.macro_recall /= k;
  r.macro_f1 /= k;
  return r;
}

MultiLabelScores multilabel(const IndicatorMatrix& gold, const IndicatorMatrix& pred) {
  if (gold.rows() != pred.rows()) {
    throw Error(ErrorCode::LengthMismatch, "gold and predicted row counts differ");
  }
  MultiLabelScores s;
  const Eigen::Index n = gold.rows();
  if (n == 0) return s;
  const auto rows = static_cast<double>(n);
  const auto mismatches = (gold != pred).rowwise().count();
  const auto overlaps = (gold && pred).rowwise().count();
  s.subset_accuracy = static_cast<double>((mismatches.array() == 0).count()) / rows;
  s.hamming_loss = static_cast<double>(mismatches.sum()) / (rows * static_cast<double>(kNumAttackTypes));
  s.partial_match = static_cast<double>((overlaps.array() > 0).count()) / rows;
  s.cardinality_true = static_cast<double>(gold.count()) / rows;
  s.cardinality_pred = static_cast<double>(pred.count()) / rows;
  return s;
}

namespace {

std::pair<ScoreMatrix, IndicatorMatrix> align_keyed(std::span<const std::string> ids,
                                                    const ScoresById& scores,
                                                    const LabelsById& gold) {
  const auto rows = align_by_id(ids, scores);
  const auto sets = align_by_id(ids, gold);
  return {stack_scores(rows), indicators(sets)};
}

}  // namespace

OneVsRestReport one_vs_rest(std::span<const std::string> ids, const ScoresById& scores,
                            const LabelsById& gold, double threshold) {
  const auto [s, g] = align_keyed(ids, scores, gold);
  return one_vs_rest(s, g, threshold);
}

MultiLabelScores multilabel(std::span<const std::string> ids, const LabelsById& gold,
                            const ScoresById& scores, double threshold) {
  const auto [s, g] = align_keyed(ids, scores, gold);
  return multilabel(g, threshold_scores(s, threshold));
}

NerTokenReport ner_token_metrics(std::span<const std::vector<std::string>> gold,
                                 std::span<const std::vector<std::string>> pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::LengthMismatch, "gold and predicted sequence counts differ");
  }
  std::set<std::string> universe;
  std::set<std::string> gold_tags;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw Error(ErrorCode::LengthMismatch, "sequence " + std::to_string(i) + " has " +
                                                 std::to_string(gold[i].size()) + " gold and " +
                                                 std::to_string(pred[i].size()) + " predicted tags");
    }
    universe.insert(gold[i].begin(), gold[i].end());
    gold_tags.insert(gold[i].begin(), gold[i].end());
    universe.insert(pred[i].begin(), pred[i].end());
  }

  NerTokenReport r;
  universe.erase("O");
  r.tags.push_back("O");
  r.tags.insert(r.tags.end(), universe.begin(), universe.end());
  std::map<std::string, int, std::less<>> index;
  for (std::size_t k = 0; k < r.tags.size(); ++k) index.emplace(r.tags[k], static_cast<int>(k));

  const auto k = static_cast<Eigen::Index>(r.tags.size());
  CountMatrix m = CountMatrix::Zero(k, k);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < gold[i].size(); ++j) {
      ++m(index.at(gold[i][j]), index.at(pred[i][j]));
    }
  }
  const auto counts = confusion_from_matrix(m);
  r.per_tag = class_scores(counts);
  r.accuracy = accuracy(counts);

  std::vector<ClassScore> in_gold;
  for (std::size_t t = 0; t < r.tags.size(); ++t) {
    if (gold_tags.count(r.tags[t])) {
      r.macro_universe.push_back(r.tags[t]);
      in_gold.push_back(r.per_tag[t]);
    }
  }
  r.macro = macro_avg(in_gold);
  r.weighted = weighted_avg(r.per_tag);
  return r;
}

NerSpanReport ner_span_metrics(std::span<const EntitySpan> gold, std::span<const EntitySpan> pred) {
  const std::set<EntitySpan> g(gold.begin(), gold.end());
  const std::set<EntitySpan> p(pred.begin(), pred.end());

  NerSpanReport r;
  for (const auto* set : {&g, &p}) {
    for (const auto& s : *set) {
      r.tp[s.type];
      r.fp[s.type];
      r.fn[s.type];
    }
  }
  for (const auto& s : g) ++(p.count(s) ? r.tp[s.type] : r.fn[s.type]);
  for (const auto& s : p) {
    if (!g.count(s)) ++r.fp[s.type];
  }
  Count tp = 0, fp = 0, fn = 0;
  for (const auto& [type, n] : r.tp) {
    r.per_type[type] = score_from_counts(n, r.fp[type], r.fn[type]);
    tp += n;
    fp += r.fp[type];
    fn += r.fn[type];
  }
  r.micro = score_from_counts(tp, fp, fn);
  return r;
}

}  // namespace eventbench
