#include "stereo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stereo/errors.hpp"

namespace stereo {

void PairedSeries::validate() const {
  if (a.size() != b.size()) throw DomainError("paired series have different lengths");
  if (a.size() < 3) throw DomainError("paired series need at least 3 pairs");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(a.begin(), a.end(), finite) || !std::all_of(b.begin(), b.end(), finite))
    throw DomainError("paired series contain non-finite values");
}

std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

double spearman(const PairedSeries& series) {
  series.validate();
  const auto ra = mid_ranks(series.a);
  const auto rb = mid_ranks(series.b);
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DomainError("Spearman correlation undefined: zero rank variance");
  return sab / std::sqrt(saa * sbb);
}

BlandAltman bland_altman(const PairedSeries& series) {
  series.validate();
  std::vector<double> d(series.a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = series.a[i] - series.b[i];
  BlandAltman out;
  out.bias = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - out.bias) * (v - out.bias);
  out.sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  out.loa_low = out.bias - kLoaMultiplier * out.sd;
  out.loa_high = out.bias + kLoaMultiplier * out.sd;
  return out;
}

RatingMatrix RatingMatrix::from_columns(const std::vector<std::vector<double>>& columns) {
  RatingMatrix m;
  m.cols = columns.size();
  m.rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != m.rows) throw DomainError("rating columns have different lengths");
  }
  m.values.resize(m.rows * m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m.values[r * m.cols + c] = columns[c][r];
  return m;
}

double icc_2k(const RatingMatrix& m) {
  if (m.rows < 3 || m.cols < 2) throw DomainError("ICC needs at least 3 subjects and 2 measures");
  if (m.values.size() != m.rows * m.cols) throw DomainError("rating matrix size mismatch");
  const double n = static_cast<double>(m.rows);
  const double k = static_cast<double>(m.cols);
  const double grand = mean(m.values);
  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) row += m(r, c);
    ss_rows += (row / k - grand) * (row / k - grand);
  }
  ss_rows *= k;
  for (std::size_t c = 0; c < m.cols; ++c) {
    double col = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) col += m(r, c);
    ss_cols += (col / n - grand) * (col / n - grand);
  }
  ss_cols *= n;
  for (double v : m.values) ss_total += (v - grand) * (v - grand);
  const double ss_error = ss_total - ss_rows - ss_cols;

  const double ms_rows = ss_rows / (n - 1.0);
  const double ms_cols = ss_cols / (k - 1.0);
  const double ms_error = ss_error / ((n - 1.0) * (k - 1.0));
  const double denom = ms_rows + (ms_cols - ms_error) / n;
  if (denom == 0.0) throw DomainError("ICC undefined: degenerate variance");
  return (ms_rows - ms_error) / denom;
}

}  // namespace stereo
