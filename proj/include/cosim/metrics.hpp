#pragma once

// Shared-task scores. Subtask 1: uncentered Pearson of predicted vs gold
// change. Subtask 2: harmonic mean of Pearson and Spearman of predicted vs
// gold ratings.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cosim/corpus.hpp"
#include "cosim/error.hpp"
#include "cosim/similarity.hpp"

namespace cosim::metrics {

namespace detail {

inline void check_lengths(std::span<const double> xs, std::span<const double> ys, std::size_t min_n, const char* name) {
  if (xs.size() != ys.size()) {
    throw ContractError(std::string(name) + ": series lengths differ (" + std::to_string(xs.size()) + " vs " +
                        std::to_string(ys.size()) + ")");
  }
  if (xs.size() < min_n) {
    throw ContractError(std::string(name) + ": needs at least " + std::to_string(min_n) + " points, got " +
                        std::to_string(xs.size()));
  }
}

inline long double mean(std::span<const double> xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<long double>(xs.size());
}

}  // namespace detail

/// Centered Pearson r.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  detail::check_lengths(xs, ys, 2, "pearson");
  const long double mx = detail::mean(xs);
  const long double my = detail::mean(ys);
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const long double dx = xs[i] - mx;
    const long double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0) throw DegenerateError("pearson: first series has zero variance");
  if (syy == 0) throw DegenerateError("pearson: second series has zero variance");
  return std::clamp(static_cast<double>(sxy / (std::sqrt(sxx) * std::sqrt(syy))), -1.0, 1.0);
}

/// Pearson with deviations taken from zero instead of the mean, so the sign
/// of each value counts.
inline double uncentered_pearson(std::span<const double> xs, std::span<const double> ys) {
  detail::check_lengths(xs, ys, 1, "uncentered_pearson");
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += static_cast<long double>(xs[i]) * ys[i];
    sxx += static_cast<long double>(xs[i]) * xs[i];
    syy += static_cast<long double>(ys[i]) * ys[i];
  }
  if (sxx == 0) throw DegenerateError("uncentered_pearson: first series is all zeros");
  if (syy == 0) throw DegenerateError("uncentered_pearson: second series is all zeros");
  return std::clamp(static_cast<double>(sxy / (std::sqrt(sxx) * std::sqrt(syy))), -1.0, 1.0);
}

/// 1-based fractional ranks; tied values share the mean of their positions.
inline std::vector<double> fractional_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  detail::check_lengths(xs, ys, 2, "spearman");
  auto distinct = [](std::span<const double> v) {
    return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
  };
  if (!distinct(xs)) throw DegenerateError("spearman: first series is constant");
  if (!distinct(ys)) throw DegenerateError("spearman: second series is constant");
  const auto rx = fractional_ranks(xs);
  const auto ry = fractional_ranks(ys);
  return pearson(rx, ry);
}

/// 2ps/(p+s) for positive p and s; 0 whenever either is non-positive.
inline double harmonic_mean(double p, double s) {
  if (!(p > 0) || !(s > 0)) return 0.0;
  return 2.0 * p * s / (p + s);
}

struct GoldRecord {
  std::string item_id;
  corpus::GoldScores scores;
};

inline std::vector<GoldRecord> gold_records(const corpus::Dataset& ds) {
  std::vector<GoldRecord> out;
  for (const auto& item : ds.items) {
    if (!item.gold) throw ContractError("item '" + item.id + "' has no gold scores");
    out.push_back({item.id, *item.gold});
  }
  return out;
}

struct Subtask2Scores {
  double pearson = 0;
  double spearman = 0;
  double harmonic = 0;
};

struct ScoreReport {
  double subtask1_uncentered_pearson = 0;
  double subtask2_pearson = 0;
  double subtask2_spearman = 0;
  double subtask2_harmonic = 0;
  std::size_t n_items = 0;
};

namespace detail {

inline void check_alignment(std::span<const similarity::ItemPrediction> preds, std::span<const GoldRecord> golds,
                            std::size_t min_n, const char* name) {
  if (preds.size() != golds.size()) {
    throw ContractError(std::string(name) + ": " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(golds.size()) + " gold records");
  }
  if (preds.size() < min_n) {
    throw ContractError(std::string(name) + ": needs at least " + std::to_string(min_n) + " items");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].item_id != golds[i].item_id) {
      throw ContractError(std::string(name) + ": position " + std::to_string(i) + " pairs prediction '" +
                          preds[i].item_id + "' with gold '" + golds[i].item_id + "'");
    }
  }
}

inline Subtask2Scores correlate(std::span<const double> xs, std::span<const double> ys) {
  Subtask2Scores s;
  s.pearson = pearson(xs, ys);
  s.spearman = spearman(xs, ys);
  s.harmonic = harmonic_mean(s.pearson, s.spearman);
  return s;
}

}  // namespace detail

inline double score_subtask1(std::span<const similarity::ItemPrediction> preds, std::span<const GoldRecord> golds) {
  detail::check_alignment(preds, golds, 1, "score_subtask1");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    xs.push_back(preds[i].change);
    ys.push_back(golds[i].scores.change);
  }
  return uncentered_pearson(xs, ys);
}

/// Pooled mode correlates all 2n (sim1, sim2) values at once; per-context
/// mode scores each context's n values and averages the two results.
inline Subtask2Scores score_subtask2(std::span<const similarity::ItemPrediction> preds,
                                     std::span<const GoldRecord> golds, bool per_context = false) {
  detail::check_alignment(preds, golds, 2, "score_subtask2");
  if (!per_context) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      xs.push_back(preds[i].sim1);
      ys.push_back(golds[i].scores.sim1);
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
      xs.push_back(preds[i].sim2);
      ys.push_back(golds[i].scores.sim2);
    }
    return detail::correlate(xs, ys);
  }
  std::vector<double> x1, y1, x2, y2;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    x1.push_back(preds[i].sim1);
    y1.push_back(golds[i].scores.sim1);
    x2.push_back(preds[i].sim2);
    y2.push_back(golds[i].scores.sim2);
  }
  const Subtask2Scores a = detail::correlate(x1, y1);
  const Subtask2Scores b = detail::correlate(x2, y2);
  return {(a.pearson + b.pearson) / 2, (a.spearman + b.spearman) / 2, (a.harmonic + b.harmonic) / 2};
}

}  // namespace cosim::metrics
