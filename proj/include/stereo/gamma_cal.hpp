#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace stereo {

/// Preset luminances and the gray levels that produce them on a display
/// with power-law response gray = lum^(1/gamma0).
struct LuminanceLut {
  std::vector<double> lum;
  std::vector<double> gray;
  double gamma0 = 2.2;

  std::size_t size() const { return lum.size(); }
};

LuminanceLut build_luminance_lut(int n, double gamma0);

/// High/low LUT indices (1-based) for each calibration trial of the
/// default 17-entry table.
inline constexpr std::array<int, 15> kDefaultHighIndex = {17, 17, 9, 17, 13, 9, 5, 17, 15, 13, 11, 9, 7, 5, 3};
inline constexpr std::array<int, 15> kDefaultLowIndex = {1, 9, 1, 13, 9, 5, 17, 15, 13, 11, 9, 7, 5, 3, 1};

inline constexpr double kCoarseStep = 3.0 / 255.0;
inline constexpr double kFineStep = 0.3 / 255.0;

enum class AdjustKey { CoarseUp, CoarseDown, FineUp, FineDown };

std::string_view to_string(AdjustKey key);
/// Accepts "coarse_up", "coarse_down", "fine_up", "fine_down".
std::optional<AdjustKey> parse_adjust_key(std::string_view text);
double step_of(AdjustKey key);

struct TrialIntensities {
  double high = 0.0;
  double low = 0.0;
  double init = 0.0;
};

struct AdjustmentRecord {
  int trial = 0;
  AdjustKey key = AdjustKey::FineUp;
  double value_after = 0.0;
};

struct GammaSearchConfig {
  double gamma_min = 0.5;
  double gamma_max = 5.0;
  double step = 0.001;
};

struct GammaFit {
  double gamma = 0.0;
  double sse = 0.0;
  /// Every matched value sits on a clamp boundary; the estimate is only
  /// constrained by the search range.
  bool degenerate = false;
};

/// Bisection-matching calibration: one trial per (high, low) index pair.
/// The middle texture starts each trial at the mean of the two line
/// intensities and is nudged by coarse/fine key presses until it matches.
class GammaSession {
 public:
  explicit GammaSession(LuminanceLut lut = build_luminance_lut(17, 2.2));
  GammaSession(LuminanceLut lut, std::vector<int> high_index, std::vector<int> low_index);

  const LuminanceLut& lut() const { return lut_; }
  const std::vector<int>& high_index() const { return high_index_; }
  const std::vector<int>& low_index() const { return low_index_; }
  int trial_count() const { return static_cast<int>(high_index_.size()); }

  /// 1-based index of the active trial; trial_count() + 1 once all are committed.
  int trial() const { return trial_; }
  bool fit_ready() const { return trial_ > trial_count(); }

  TrialIntensities intensities(int trial) const;
  double current() const { return current_; }

  void adjust(AdjustKey key);
  void commit();

  /// Matched value and error (init - matched) for committed trials.
  const std::vector<double>& matched() const { return matched_; }
  const std::vector<double>& errors() const { return errors_; }
  const std::vector<AdjustmentRecord>& adjustments() const { return adjustments_; }

  GammaFit fit(const GammaSearchConfig& search = {}) const;

 private:
  LuminanceLut lut_;
  std::vector<int> high_index_;
  std::vector<int> low_index_;
  int trial_ = 1;
  double current_ = 0.0;
  std::vector<double> matched_;
  std::vector<double> errors_;
  std::vector<AdjustmentRecord> adjustments_;
};

/// Sum of squared match residuals sum_i [m_i^g - (h_i^g + l_i^g)/2]^2.
double gamma_match_sse(double gamma, const std::vector<double>& high, const std::vector<double>& low,
                       const std::vector<double>& matched);

GammaFit fit_gamma(const std::vector<double>& high, const std::vector<double>& low,
                   const std::vector<double>& matched, const GammaSearchConfig& search = {});

struct NormalizedGammaTable {
  std::array<double, 256> entries{};
  double gamma = 1.0;
};

NormalizedGammaTable build_normalized_gamma_table(double gamma);
NormalizedGammaTable identity_gamma_table();

nlohmann::json to_json_array(const NormalizedGammaTable& table);
/// 256 lines, one value per line, 9 significant digits.
void write_gamma_table_text(std::ostream& out, const NormalizedGammaTable& table);

/// Rebuilds a session from an AGC JSON-lines log with records
/// {trial, event, value, timestamp}; event is a key name or "commit".
/// Session event logs ({ts, kind, payload}) are accepted too; their
/// calibration payloads are used and all other events skipped.
GammaSession replay_agc_log(std::istream& in, GammaSession session = GammaSession{});

}  // namespace stereo
