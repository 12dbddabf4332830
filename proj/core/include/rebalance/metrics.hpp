#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rebalance/matrix.hpp"

namespace rebalance {

struct ConfusionMatrix {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

// All scores live on the 0-100 scale. Ratios with a zero denominator are
// defined as 0. Rounding to integers happens only when rendering reports.
struct MetricReport {
  double pd = 0;       // recall
  double pf = 0;       // false positive rate
  double prec = 0;
  double acc = 0;
  double f1 = 0;
  double g_score = 0;  // harmonic mean of pd and (100 - pf)
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);
MetricReport score(const ConfusionMatrix& cm);

// discrete KL divergence, natural log; throws DataError when p > 0 on a
// zero-probability bin of q (infinite divergence)
double kl_divergence(std::span<const double> p, std::span<const double> q);

// JS(p,q) = KL(p||m)/2 + KL(q||m)/2 with m = (p+q)/2; bounded by ln 2
double js_divergence(std::span<const double> p, std::span<const double> q);

// Equal-width histogram of one column with add-one smoothing, so every bin
// has positive mass. `range`, when given, overrides the column min/max (used
// to put real and synthetic marginals on shared bins).
std::vector<double> marginal_histogram(const Matrix& rows, std::size_t column, std::size_t bins);
std::vector<double> marginal_histogram(const Matrix& rows, std::size_t column, std::size_t bins,
                                       double lo, double hi);

// JS divergence between per-column marginals of two row sets over shared bins
double marginal_js(const Matrix& a, const Matrix& b, std::size_t column, std::size_t bins);

}  // namespace rebalance
