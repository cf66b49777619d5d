#include "fairtrain/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fairtrain {

namespace {

// counts[group][bucket] and hits[group][bucket] for a boolean split of the rows.
struct CellTable {
  std::vector<std::array<double, 2>> total;
  std::vector<std::array<double, 2>> hits;
};

double rate(const CellTable& t, std::size_t g, int bucket, const char* what, const char* bucket_name) {
  const double n = t.total[g][static_cast<std::size_t>(bucket)];
  if (n == 0.0) {
    throw DataError(std::string("empty cell: group ") + std::to_string(g) + ", " + what + " " +
                    (bucket ? "positive" : "negative") + bucket_name);
  }
  return t.hits[g][static_cast<std::size_t>(bucket)] / n;
}

template <typename PairGap>
double max_over_pairs(std::size_t groups, PairGap gap) {
  double worst = 0.0;
  for (std::size_t a = 0; a < groups; ++a) {
    for (std::size_t b = a + 1; b < groups; ++b) worst = std::max(worst, gap(a, b));
  }
  return worst;
}

}  // namespace

void PredictionSet::validate() const {
  const auto n = static_cast<std::size_t>(scores.size());
  if (labels.size() != n || groups.size() != n) throw ShapeError("prediction set columns differ in length");
  if (n == 0) throw DataError("prediction set is empty");
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scores(static_cast<Index>(i));
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("scores must lie in [0, 1]");
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
    if (groups[i] < 0) throw std::invalid_argument("group ids must be non-negative");
  }
  if (group_count() < 2) throw DataError("fairness metrics need at least two groups");
}

std::size_t PredictionSet::group_count() const {
  int top = -1;
  for (int g : groups) top = std::max(top, g);
  return static_cast<std::size_t>(top + 1);
}

double independence_gap(const PredictionSet& p) {
  p.validate();
  const auto G = p.group_count();
  std::vector<double> total(G, 0.0), pos(G, 0.0);
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    const auto g = static_cast<std::size_t>(p.groups[i]);
    total[g] += 1.0;
    if (p.positive(i)) pos[g] += 1.0;
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (total[g] == 0.0) throw DataError("empty cell: group " + std::to_string(g));
  }
  return max_over_pairs(G, [&](std::size_t a, std::size_t b) {
    return std::abs(pos[a] / total[a] - pos[b] / total[b]);
  });
}

double separation_gap(const PredictionSet& p) {
  p.validate();
  const auto G = p.group_count();
  CellTable t{std::vector<std::array<double, 2>>(G, {0.0, 0.0}), std::vector<std::array<double, 2>>(G, {0.0, 0.0})};
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    const auto g = static_cast<std::size_t>(p.groups[i]);
    const auto y = static_cast<std::size_t>(p.labels[i]);
    t.total[g][y] += 1.0;
    if (p.positive(i)) t.hits[g][y] += 1.0;
  }
  return max_over_pairs(G, [&](std::size_t a, std::size_t b) {
    double sum = 0.0;
    for (int v = 0; v < 2; ++v) sum += std::abs(rate(t, a, v, "label", "") - rate(t, b, v, "label", ""));
    return sum;
  });
}

double sufficiency_gap(const PredictionSet& p) {
  p.validate();
  const auto G = p.group_count();
  CellTable t{std::vector<std::array<double, 2>>(G, {0.0, 0.0}), std::vector<std::array<double, 2>>(G, {0.0, 0.0})};
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    const auto g = static_cast<std::size_t>(p.groups[i]);
    const auto pred = static_cast<std::size_t>(p.positive(i));
    t.total[g][pred] += 1.0;
    if (p.labels[i] == 1) t.hits[g][pred] += 1.0;
  }
  return max_over_pairs(G, [&](std::size_t a, std::size_t b) {
    double sum = 0.0;
    for (int v = 0; v < 2; ++v) {
      sum += std::abs(rate(t, a, v, "prediction", "") - rate(t, b, v, "prediction", ""));
    }
    return sum;
  });
}

double inaccuracy(const PredictionSet& p) {
  p.validate();
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    if (static_cast<int>(p.positive(i)) != p.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(p.labels.size());
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DataError("wasserstein distance needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t na = a.size(), nb = b.size();
  // Quantile breakpoints are i / na and j / nb; compare them as i * nb vs j * na.
  std::size_t i = 0, j = 0;
  double t = 0.0, acc = 0.0;
  while (i < na && j < nb) {
    const std::size_t next_a = (i + 1) * nb;
    const std::size_t next_b = (j + 1) * na;
    const std::size_t next = std::min(next_a, next_b);
    const double level = static_cast<double>(next) / static_cast<double>(na * nb);
    acc += (level - t) * std::abs(a[i] - b[j]);
    t = level;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return acc;
}

double group_wasserstein(const PredictionSet& p) {
  p.validate();
  const auto G = p.group_count();
  std::vector<std::vector<double>> by_group(G);
  for (std::size_t i = 0; i < p.groups.size(); ++i) {
    by_group[static_cast<std::size_t>(p.groups[i])].push_back(p.scores(static_cast<Index>(i)));
  }
  for (std::size_t g = 0; g < G; ++g) {
    if (by_group[g].empty()) throw DataError("empty cell: group " + std::to_string(g));
  }
  return max_over_pairs(G, [&](std::size_t a, std::size_t b) { return wasserstein_1d(by_group[a], by_group[b]); });
}

FairnessReport fairness_report(const PredictionSet& p) {
  FairnessReport r;
  r.ind = independence_gap(p);
  r.sp = separation_gap(p);
  r.sf = sufficiency_gap(p);
  r.ina = inaccuracy(p);
  r.wd = group_wasserstein(p);
  return r;
}

}  // namespace fairtrain
