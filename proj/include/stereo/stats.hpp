#pragma once

#include <span>
#include <vector>

namespace stereo {

/// Two equal-length measurement series (e.g. thresholds from two modes).
struct PairedSeries {
  std::vector<double> a;
  std::vector<double> b;

  /// Length >= 3, equal lengths, all entries finite; throws DomainError otherwise.
  void validate() const;
};

/// Mid-ranks (1-based, ties averaged).
std::vector<double> mid_ranks(std::span<const double> values);

/// Pearson correlation of the mid-ranks.
double spearman(const PairedSeries& series);

struct BlandAltman {
  double bias = 0.0;
  double sd = 0.0;
  double loa_low = 0.0;
  double loa_high = 0.0;
};

inline constexpr double kLoaMultiplier = 1.96;

BlandAltman bland_altman(const PairedSeries& series);

/// Row-major n x k ratings (subjects x raters/sessions).
struct RatingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  static RatingMatrix from_columns(const std::vector<std::vector<double>>& columns);
};

/// ICC(A,k): two-way model, absolute agreement, average of k measures.
double icc_2k(const RatingMatrix& ratings);

}  // namespace stereo
