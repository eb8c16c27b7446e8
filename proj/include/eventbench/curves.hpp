#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "eventbench/error.hpp"

namespace eventbench {

/// Ordered (x, y) points with the threshold that produced each, plus a scalar
/// summary: AUC for ROC, average precision for PR, best F1 for F-vs-cutoff.
template <typename Scalar>
struct CurveSeries {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector threshold;
  Vector x;
  Vector y;
  Scalar summary = Scalar(0);
  /// False when the gold labels hold a single class (summary undefined).
  bool summary_defined = true;

  Eigen::Index size() const { return x.size(); }
};

namespace detail {

/// Cumulative true/false positive counts when predicting positive for
/// score >= t, at every distinct score t in descending order.
template <typename Scalar>
struct RankedCounts {
  std::vector<Scalar> thresholds;
  std::vector<std::int64_t> tp;
  std::vector<std::int64_t> fp;
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
};

template <typename DerivedS, typename DerivedG>
RankedCounts<typename DerivedS::Scalar> ranked_counts(const Eigen::DenseBase<DerivedS>& scores,
                                                      const Eigen::DenseBase<DerivedG>& gold) {
  using Scalar = typename DerivedS::Scalar;
  const Eigen::Index n = scores.size();
  if (n != gold.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and gold differ in length");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(static_cast<double>(scores(i)))) {
      throw Error(ErrorCode::InvalidArgument, "NaN score");
    }
  }
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });

  RankedCounts<Scalar> out;
  std::int64_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto i = order[k];
    if (static_cast<bool>(gold(i))) {
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_group = k + 1 == order.size() || scores(order[k + 1]) != scores(i);
    if (last_of_group) {
      out.thresholds.push_back(scores(i));
      out.tp.push_back(tp);
      out.fp.push_back(fp);
    }
  }
  out.positives = tp;
  out.negatives = fp;
  return out;
}

template <typename Scalar>
Scalar ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? Scalar(0) : static_cast<Scalar>(num) / static_cast<Scalar>(den);
}

template <typename Scalar>
Scalar f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const std::int64_t den = 2 * tp + fp + fn;
  return den == 0 ? Scalar(0) : static_cast<Scalar>(2 * tp) / static_cast<Scalar>(den);
}

}  // namespace detail

/// ROC points (FPR, TPR) at every distinct score plus the (0,0) origin, with
/// trapezoidal AUC. Ties are handled as one step, so the AUC equals the
/// probability that a random positive outranks a random negative, ties ½.
template <typename DerivedS, typename DerivedG>
CurveSeries<typename DerivedS::Scalar> roc_curve(const Eigen::DenseBase<DerivedS>& scores,
                                                 const Eigen::DenseBase<DerivedG>& gold) {
  using Scalar = typename DerivedS::Scalar;
  const auto ranked = detail::ranked_counts(scores, gold);
  const auto m = static_cast<Eigen::Index>(ranked.thresholds.size());

  CurveSeries<Scalar> curve;
  curve.threshold.resize(m + 1);
  curve.x.resize(m + 1);
  curve.y.resize(m + 1);
  curve.threshold(0) = std::numeric_limits<Scalar>::infinity();
  curve.x(0) = Scalar(0);
  curve.y(0) = Scalar(0);
  for (Eigen::Index k = 0; k < m; ++k) {
    curve.threshold(k + 1) = ranked.thresholds[k];
    curve.x(k + 1) = detail::ratio<Scalar>(ranked.fp[k], ranked.negatives);
    curve.y(k + 1) = detail::ratio<Scalar>(ranked.tp[k], ranked.positives);
  }
  curve.summary_defined = ranked.positives > 0 && ranked.negatives > 0;
  if (curve.summary_defined) {
    Scalar area = 0;
    for (Eigen::Index k = 1; k <= m; ++k) {
      area += (curve.x(k) - curve.x(k - 1)) * (curve.y(k) + curve.y(k - 1)) / Scalar(2);
    }
    curve.summary = area;
  } else {
    curve.summary = std::numeric_limits<Scalar>::quiet_NaN();
  }
  return curve;
}

/// PR points (recall, precision) at every distinct score, preceded by the
/// (0, 1) endpoint. Summary is step-wise average precision.
template <typename DerivedS, typename DerivedG>
CurveSeries<typename DerivedS::Scalar> pr_curve(const Eigen::DenseBase<DerivedS>& scores,
                                                const Eigen::DenseBase<DerivedG>& gold) {
  using Scalar = typename DerivedS::Scalar;
  const auto ranked = detail::ranked_counts(scores, gold);
  const auto m = static_cast<Eigen::Index>(ranked.thresholds.size());

  CurveSeries<Scalar> curve;
  curve.threshold.resize(m + 1);
  curve.x.resize(m + 1);
  curve.y.resize(m + 1);
  curve.threshold(0) = std::numeric_limits<Scalar>::infinity();
  curve.x(0) = Scalar(0);
  curve.y(0) = Scalar(1);
  Scalar ap = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    curve.threshold(k + 1) = ranked.thresholds[k];
    curve.x(k + 1) = detail::ratio<Scalar>(ranked.tp[k], ranked.positives);
    curve.y(k + 1) = detail::ratio<Scalar>(ranked.tp[k], ranked.tp[k] + ranked.fp[k]);
    ap += (curve.x(k + 1) - curve.x(k)) * curve.y(k + 1);
  }
  curve.summary_defined = ranked.positives > 0 && ranked.negatives > 0;
  curve.summary = ranked.positives > 0 ? ap : std::numeric_limits<Scalar>::quiet_NaN();
  return curve;
}

/// `points` evenly spaced cutoffs over [0, 1].
template <typename Scalar = double>
std::vector<Scalar> uniform_grid(std::size_t points = 101) {
  std::vector<Scalar> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = points == 1 ? Scalar(0) : static_cast<Scalar>(i) / static_cast<Scalar>(points - 1);
  }
  return grid;
}

/// F1 of the positive class when predicting positive for score >= cutoff, for
/// each cutoff in `grid` (sorted ascending, duplicates removed). Summary is
/// the best F1.
template <typename DerivedS, typename DerivedG>
CurveSeries<typename DerivedS::Scalar> f1_vs_threshold(
    const Eigen::DenseBase<DerivedS>& scores, const Eigen::DenseBase<DerivedG>& gold,
    std::vector<typename DerivedS::Scalar> grid) {
  using Scalar = typename DerivedS::Scalar;
  const auto ranked = detail::ranked_counts(scores, gold);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const auto m = static_cast<Eigen::Index>(grid.size());
  CurveSeries<Scalar> curve;
  curve.threshold.resize(m);
  curve.x.resize(m);
  curve.y.resize(m);
  Scalar best = 0;
  // Thresholds are descending; the count of scores >= c is the cumulative count
  // at the last distinct threshold that is still >= c.
  for (Eigen::Index k = 0; k < m; ++k) {
    const Scalar c = grid[static_cast<std::size_t>(k)];
    const auto it = std::partition_point(ranked.thresholds.begin(), ranked.thresholds.end(),
                                         [&](Scalar t) { return t >= c; });
    const auto j = it - ranked.thresholds.begin();
    const std::int64_t tp = j == 0 ? 0 : ranked.tp[j - 1];
    const std::int64_t fp = j == 0 ? 0 : ranked.fp[j - 1];
    const Scalar f = detail::f1<Scalar>(tp, fp, ranked.positives - tp);
    curve.threshold(k) = c;
    curve.x(k) = c;
    curve.y(k) = f;
    best = std::max(best, f);
  }
  curve.summary = best;
  curve.summary_defined = ranked.positives > 0 && ranked.negatives > 0;
  return curve;
}

/// Default grid: 101 uniform cutoffs united with the distinct observed scores.
template <typename DerivedS, typename DerivedG>
CurveSeries<typename DerivedS::Scalar> f1_vs_threshold(const Eigen::DenseBase<DerivedS>& scores,
                                                       const Eigen::DenseBase<DerivedG>& gold) {
  using Scalar = typename DerivedS::Scalar;
  auto grid = uniform_grid<Scalar>();
  for (Eigen::Index i = 0; i < scores.size(); ++i) grid.push_back(scores(i));
  return f1_vs_threshold(scores, gold, std::move(grid));
}

}  // namespace eventbench
