#pragma once

// Reference implementations used only by tests. Each one follows the
// textbook definition directly and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

// ---- psychometric model -------------------------------------------------

inline double psi(double x, double alpha, double beta, double lambda) {
  double f = 1.0 - std::exp(-std::pow(x / alpha, beta));
  return 0.25 + (1.0 - 0.25 - lambda) * f;
}

struct Cell {
  double alpha, beta, lambda;
};

/// Cells in (alpha, beta, lambda) nesting order, lambda fastest.
inline std::vector<Cell> enumerate_cells(const std::vector<double>& a, const std::vector<double>& b,
                                         const std::vector<double>& l) {
  std::vector<Cell> out;
  for (double x : a)
    for (double y : b)
      for (double z : l) out.push_back({x, y, z});
  return out;
}

/// Posterior from a flat prior by multiplying every trial likelihood.
inline std::vector<double> posterior(const std::vector<Cell>& cells, const std::vector<std::pair<double, bool>>& hist) {
  std::vector<double> w(cells.size(), 1.0);
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (auto [x, r] : hist) {
      double p = psi(x, cells[c].alpha, cells[c].beta, cells[c].lambda);
      w[c] *= r ? p : 1.0 - p;
    }
  double z = 0.0;
  for (double v : w) z += v;
  for (double& v : w) v /= z;
  return w;
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

/// Enumerates both outcomes: condition the posterior on each, weight the
/// resulting entropies by the predictive outcome probability.
inline double expected_entropy(const std::vector<Cell>& cells, const std::vector<double>& post, double x) {
  std::vector<double> pc(cells.size()), pi(cells.size());
  double zc = 0.0, zi = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    double p = psi(x, cells[c].alpha, cells[c].beta, cells[c].lambda);
    pc[c] = post[c] * p;
    pi[c] = post[c] * (1.0 - p);
    zc += pc[c];
    zi += pi[c];
  }
  double h = 0.0;
  if (zc > 0.0) {
    for (double& v : pc) v /= zc;
    h += zc * entropy(pc);
  }
  if (zi > 0.0) {
    for (double& v : pi) v /= zi;
    h += zi * entropy(pi);
  }
  return h;
}

/// First index of the minimum (candidates are ascending, so ties go low).
inline std::size_t argmin(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

/// Smallest index whose value is within `tol` of the minimum. Values that
/// agree to rounding are ties, and ties go to the smaller candidate.
inline std::size_t argmin_within(const std::vector<double>& v, double tol) {
  const double lo = v[argmin(v)];
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] <= lo + tol) return i;
  return 0;
}

// ---- statistics ----------------------------------------------------------

/// Rank by counting: 1 + #smaller + (#equal - 1)/2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double w : v) {
      if (w < v[i]) less += 1.0;
      if (w == v[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

struct Agreement {
  double bias, sd, low, high;
};

inline Agreement bland_altman(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) d.push_back(a[i] - b[i]);
  double m = 0.0;
  for (double v : d) m += v;
  m /= d.size();
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  double sd = std::sqrt(ss / (d.size() - 1));
  return {m, sd, m - 1.96 * sd, m + 1.96 * sd};
}

/// Two-way ANOVA with the error sum of squares taken from the interaction
/// residuals x_ij - row_i - col_j + grand.
inline double icc_a_k(const std::vector<std::vector<double>>& rows) {
  std::size_t n = rows.size(), k = rows[0].size();
  double grand = 0.0;
  std::vector<double> rm(n, 0.0), cm(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      grand += rows[i][j];
      rm[i] += rows[i][j] / k;
      cm[j] += rows[i][j] / n;
    }
  grand /= static_cast<double>(n * k);
  double ssr = 0.0, ssc = 0.0, sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) ssr += k * (rm[i] - grand) * (rm[i] - grand);
  for (std::size_t j = 0; j < k; ++j) ssc += n * (cm[j] - grand) * (cm[j] - grand);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double e = rows[i][j] - rm[i] - cm[j] + grand;
      sse += e * e;
    }
  double msr = ssr / (n - 1), msc = ssc / (k - 1), mse = sse / ((n - 1) * (k - 1));
  return (msr - mse) / (msr + (msc - mse) / n);
}

// ---- two-sample Kolmogorov-Smirnov ------------------------------------

/// Asymptotic p-value of the two-sample KS statistic.
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  double ne = double(a.size()) * b.size() / (a.size() + b.size());
  double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lam < 0.2) return 1.0;  // series has not converged; p is 1 to 1e-9
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace oracle
