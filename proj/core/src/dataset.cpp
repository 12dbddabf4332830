#include "rebalance/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rebalance/errors.hpp"
#include "rebalance/rng.hpp"

namespace rebalance {

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::size_t> Dataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

void Dataset::append(std::span<const double> row, int label) {
  features.append_row(row);
  labels.push_back(label);
}

void validate(const Dataset& d, bool require_both_classes) {
  if (d.features.rows() != d.labels.size())
    throw DataError("dataset row count (" + std::to_string(d.features.rows()) +
                    ") does not match label count (" + std::to_string(d.labels.size()) + ")");
  if (!d.feature_names.empty() && d.feature_names.size() != d.features.cols())
    throw DataError("feature name count does not match column count");
  if (!all_finite(d.features)) throw DataError("dataset contains non-finite feature values");
  for (int l : d.labels)
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
  if (require_both_classes && (d.minority_count() == 0 || d.majority_count() == 0))
    throw DataError("dataset must contain at least one sample of each class");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// accepts 0/1 (also as numerals like "1.0"), yes/no, true/false
int parse_label(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string v = lower(trimmed(raw));
  if (v == "1" || v == "yes" || v == "true") return 1;
  if (v == "0" || v == "no" || v == "false") return 0;
  double num;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), num);
  if (ec == std::errc{} && p == v.data() + v.size()) {
    if (num == 0.0) return 0;
    if (num == 1.0) return 1;
  }
  throw DataError("label outside binary domain at row " + std::to_string(row) + ", column '" +
                  column + "': '" + raw + "'");
}

double parse_number(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string v = trimmed(raw);
  double num;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), num);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw DataError("non-numeric feature cell at row " + std::to_string(row) + ", column '" +
                    column + "': '" + raw + "'");
  if (!std::isfinite(num))
    throw DataError("non-finite feature cell at row " + std::to_string(row) + ", column '" +
                    column + "'");
  return num;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const std::vector<std::string> header = split_line(line);

  std::size_t label_idx = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (trimmed(header[j]) == label_column) label_idx = j;
  if (label_idx == header.size())
    throw DataError("missing label column '" + label_column + "' in " + path);

  Dataset d;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != label_idx) d.feature_names.push_back(trimmed(header[j]));
  d.features = Matrix(0, d.feature_names.size());

  std::vector<double> row(d.feature_names.size());
  std::size_t line_no = 1;  // header is row 0
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) {
      ++line_no;
      continue;
    }
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    std::size_t k = 0;
    int label = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_idx)
        label = parse_label(cells[j], line_no, label_column);
      else
        row[k++] = parse_number(cells[j], line_no, header[j]);
    }
    d.append(row, label);
    ++line_no;
  }
  if (d.rows() == 0) throw DataError("empty dataset: " + path);
  return d;
}

void save_csv(const Dataset& d, const std::string& path, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t j = 0; j < d.cols(); ++j) {
    const std::string name = j < d.feature_names.size() ? d.feature_names[j] : "f" + std::to_string(j);
    out << name << ',';
  }
  out << label_column << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) out << d.features(i, j) << ',';
    out << d.labels[i] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

namespace {

// round(fraction*n) for train and validation, remainder to test, then make
// sure each partition keeps at least one sample by stealing from the largest
std::array<std::size_t, 3> apportion(std::size_t n, const SplitSpec& spec) {
  auto rnd = [](double x) { return static_cast<std::size_t>(std::llround(x)); };
  std::array<std::size_t, 3> c{};
  c[0] = rnd(spec.train_fraction * static_cast<double>(n));
  c[1] = rnd(spec.validation_fraction * static_cast<double>(n));
  c[0] = std::min(c[0], n);
  c[1] = std::min(c[1], n - c[0]);
  c[2] = n - c[0] - c[1];
  for (int round = 0; round < 3; ++round) {
    for (std::size_t p = 0; p < 3; ++p) {
      if (c[p] > 0) continue;
      const std::size_t donor =
          static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
      if (c[donor] < 2) throw DataError("class too small to stratify (need one sample per partition)");
      --c[donor];
      ++c[p];
    }
  }
  return c;
}

}  // namespace

SplitResult stratified_split(const Dataset& data, const SplitSpec& spec) {
  validate(data, /*require_both_classes=*/true);
  const double sum = spec.train_fraction + spec.validation_fraction + spec.test_fraction;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1 (got " + std::to_string(sum) + ")");
  if (spec.train_fraction <= 0 || spec.validation_fraction <= 0 || spec.test_fraction <= 0)
    throw ConfigError("split fractions must be positive");

  SplitResult out;
  for (Dataset* part : {&out.train, &out.validation, &out.test}) {
    part->features = Matrix(0, data.cols());
    part->feature_names = data.feature_names;
  }

  Rng rng(spec.seed);
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx = data.indices_of(label);
    if (idx.size() < 3) throw DataError("class too small to stratify: label " +
                                        std::to_string(label) + " has " +
                                        std::to_string(idx.size()) + " samples, need >= 3");
    const auto counts = apportion(idx.size(), spec);
    rng.shuffle(idx);
    std::size_t pos = 0;
    Dataset* parts[3] = {&out.train, &out.validation, &out.test};
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < counts[p]; ++k, ++pos)
        parts[p]->append(data.features.row(idx[pos]), label);
  }
  return out;
}

MinMaxScaler fit_minmax(const Dataset& data) {
  if (data.rows() == 0) throw DataError("cannot fit scaler on empty dataset");
  MinMaxScaler s;
  s.minimum.assign(data.cols(), 0.0);
  s.maximum.assign(data.cols(), 0.0);
  for (std::size_t j = 0; j < data.cols(); ++j) {
    double lo = data.features(0, j), hi = lo;
    for (std::size_t i = 1; i < data.rows(); ++i) {
      lo = std::min(lo, data.features(i, j));
      hi = std::max(hi, data.features(i, j));
    }
    s.minimum[j] = lo;
    s.maximum[j] = hi;
  }
  return s;
}

Dataset apply_scaler(const MinMaxScaler& scaler, const Dataset& data, ScaleDirection direction) {
  if (scaler.minimum.size() != data.cols())
    throw ConfigError("scaler has " + std::to_string(scaler.minimum.size()) +
                      " columns, data has " + std::to_string(data.cols()));
  Dataset out = data;
  for (std::size_t j = 0; j < data.cols(); ++j) {
    const double lo = scaler.minimum[j];
    const double range = scaler.maximum[j] - lo;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      double& v = out.features(i, j);
      if (direction == ScaleDirection::Forward)
        v = range == 0.0 ? 0.0 : (v - lo) / range;
      else
        v = lo + v * range;
    }
  }
  return out;
}

Dataset make_synthetic_imbalanced(std::size_t n_majority, std::size_t n_minority,
                                  std::size_t n_features, double separation, std::uint64_t seed) {
  if (n_majority < 1 || n_minority < 1 || n_features < 1)
    throw ConfigError("synthetic fixture needs at least one sample per class and one feature");
  Dataset d;
  d.features = Matrix(0, n_features);
  for (std::size_t j = 0; j < n_features; ++j) d.feature_names.push_back("f" + std::to_string(j));

  Rng rng(seed);
  std::vector<double> row(n_features);
  for (std::size_t i = 0; i < n_majority; ++i) {
    for (std::size_t j = 0; j < n_features; ++j) row[j] = rng.normal();
    d.append(row, 0);
  }
  for (std::size_t i = 0; i < n_minority; ++i) {
    for (std::size_t j = 0; j < n_features; ++j) row[j] = rng.normal();
    row[0] += separation;  // class means differ along the first axis only
    d.append(row, 1);
  }
  return d;
}

}  // namespace rebalance
