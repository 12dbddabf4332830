#include "rebalance/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rebalance/errors.hpp"

namespace rebalance {

namespace {
double ratio100(double num, double den) { return den == 0.0 ? 0.0 : 100.0 * num / den; }
}  // namespace

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size())
    throw ConfigError("confusion: truth and prediction lengths differ");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] != 0 && truth[i] != 1) throw DataError("confusion: labels must be binary");
    if (predicted[i] != 0 && predicted[i] != 1) throw DataError("confusion: labels must be binary");
    if (truth[i] == 1)
      predicted[i] == 1 ? ++cm.tp : ++cm.fn;
    else
      predicted[i] == 1 ? ++cm.fp : ++cm.tn;
  }
  return cm;
}

MetricReport score(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ConfigError("score: empty confusion matrix");
  MetricReport r;
  const auto tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
  const auto fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
  r.pd = ratio100(tp, tp + fn);
  r.pf = ratio100(fp, fp + tn);
  r.prec = ratio100(tp, tp + fp);
  r.acc = ratio100(tp + tn, tp + tn + fp + fn);
  r.f1 = (r.pd + r.prec) == 0.0 ? 0.0 : 2.0 * r.pd * r.prec / (r.pd + r.prec);
  const double comp = 100.0 - r.pf;
  r.g_score = (r.pd + comp) == 0.0 ? 0.0 : 2.0 * r.pd * comp / (r.pd + comp);
  return r;
}

namespace {
void check_probability(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw DataError(std::string("divergence: ") + name + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError(std::string("divergence: ") + name + " does not sum to 1");
}
}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("kl_divergence: length mismatch");
  check_probability(p, "p");
  check_probability(q, "q");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw DataError("kl_divergence: support violation (p > 0 where q = 0), divergence infinite");
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(acc, 0.0);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("js_divergence: length mismatch");
  check_probability(p, "p");
  check_probability(q, "q");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m[i]);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m[i]);
  }
  return std::max(acc, 0.0);
}

std::vector<double> marginal_histogram(const Matrix& rows, std::size_t column, std::size_t bins,
                                       double lo, double hi) {
  if (bins < 1) throw ConfigError("marginal_histogram: bins must be >= 1");
  if (rows.rows() == 0) throw ConfigError("marginal_histogram: empty row set");
  if (column >= rows.cols()) throw ConfigError("marginal_histogram: column out of range");

  std::vector<std::size_t> counts(bins, 0);
  const double width = hi - lo;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const double v = rows(i, column);
    std::size_t b = 0;
    if (width > 0.0) {
      const double t = (v - lo) / width * static_cast<double>(bins);
      b = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(bins) - 1.0));
    }
    ++counts[b];
  }
  std::vector<double> out(bins);
  const double denom = static_cast<double>(rows.rows() + bins);  // add-one smoothing
  for (std::size_t b = 0; b < bins; ++b) out[b] = static_cast<double>(counts[b] + 1) / denom;
  return out;
}

std::vector<double> marginal_histogram(const Matrix& rows, std::size_t column, std::size_t bins) {
  if (rows.rows() == 0) throw ConfigError("marginal_histogram: empty row set");
  if (column >= rows.cols()) throw ConfigError("marginal_histogram: column out of range");
  double lo = rows(0, column), hi = lo;
  for (std::size_t i = 1; i < rows.rows(); ++i) {
    lo = std::min(lo, rows(i, column));
    hi = std::max(hi, rows(i, column));
  }
  return marginal_histogram(rows, column, bins, lo, hi);
}

double marginal_js(const Matrix& a, const Matrix& b, std::size_t column, std::size_t bins) {
  if (column >= a.cols() || column >= b.cols())
    throw ConfigError("marginal_js: column out of range");
  double lo = a(0, column), hi = lo;
  for (const Matrix* m : {&a, &b})
    for (std::size_t i = 0; i < m->rows(); ++i) {
      lo = std::min(lo, (*m)(i, column));
      hi = std::max(hi, (*m)(i, column));
    }
  return js_divergence(marginal_histogram(a, column, bins, lo, hi),
                       marginal_histogram(b, column, bins, lo, hi));
}

}  // namespace rebalance
