#include "stereo/gamma_cal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <istream>

#include "stereo/errors.hpp"

namespace stereo {

LuminanceLut build_luminance_lut(int n, double gamma0) {
  if (n < 3) throw ConfigError("luminance table needs at least 3 entries");
  if (!std::isfinite(gamma0) || gamma0 <= 0.0) throw ConfigError("initial gamma must be positive");
  LuminanceLut lut;
  lut.gamma0 = gamma0;
  lut.lum.resize(static_cast<std::size_t>(n));
  lut.gray.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double lum = static_cast<double>(k) / (n - 1);
    lut.lum[k] = lum;
    lut.gray[k] = std::pow(lum, 1.0 / gamma0);
  }
  return lut;
}

std::string_view to_string(AdjustKey key) {
  switch (key) {
    case AdjustKey::CoarseUp: return "coarse_up";
    case AdjustKey::CoarseDown: return "coarse_down";
    case AdjustKey::FineUp: return "fine_up";
    case AdjustKey::FineDown: return "fine_down";
  }
  return "unknown";
}

std::optional<AdjustKey> parse_adjust_key(std::string_view text) {
  if (text == "coarse_up") return AdjustKey::CoarseUp;
  if (text == "coarse_down") return AdjustKey::CoarseDown;
  if (text == "fine_up") return AdjustKey::FineUp;
  if (text == "fine_down") return AdjustKey::FineDown;
  return std::nullopt;
}

double step_of(AdjustKey key) {
  switch (key) {
    case AdjustKey::CoarseUp: return kCoarseStep;
    case AdjustKey::CoarseDown: return -kCoarseStep;
    case AdjustKey::FineUp: return kFineStep;
    case AdjustKey::FineDown: return -kFineStep;
  }
  return 0.0;
}

GammaSession::GammaSession(LuminanceLut lut)
    : GammaSession(std::move(lut), {kDefaultHighIndex.begin(), kDefaultHighIndex.end()},
                   {kDefaultLowIndex.begin(), kDefaultLowIndex.end()}) {}

GammaSession::GammaSession(LuminanceLut lut, std::vector<int> high_index, std::vector<int> low_index)
    : lut_(std::move(lut)), high_index_(std::move(high_index)), low_index_(std::move(low_index)) {
  if (high_index_.empty() || high_index_.size() != low_index_.size())
    throw ConfigError("high/low index vectors must be non-empty and of equal length");
  const int n = static_cast<int>(lut_.size());
  for (std::size_t i = 0; i < high_index_.size(); ++i) {
    if (high_index_[i] < 1 || high_index_[i] > n || low_index_[i] < 1 || low_index_[i] > n)
      throw ConfigError("calibration index outside the luminance table");
  }
  current_ = intensities(1).init;
}

TrialIntensities GammaSession::intensities(int trial) const {
  if (trial < 1 || trial > trial_count()) throw StateError("calibration trial index out of range");
  TrialIntensities t;
  t.high = lut_.gray[static_cast<std::size_t>(high_index_[trial - 1] - 1)];
  t.low = lut_.gray[static_cast<std::size_t>(low_index_[trial - 1] - 1)];
  t.init = (t.high + t.low) / 2.0;
  return t;
}

void GammaSession::adjust(AdjustKey key) {
  if (fit_ready()) throw StateError("calibration has no active trial");
  current_ = std::clamp(current_ + step_of(key), 0.0, 1.0);
  adjustments_.push_back({trial_, key, current_});
}

void GammaSession::commit() {
  if (fit_ready()) throw StateError("all calibration trials are already committed");
  const double init = intensities(trial_).init;
  matched_.push_back(current_);
  errors_.push_back(init - current_);
  ++trial_;
  if (!fit_ready()) current_ = intensities(trial_).init;
}

GammaFit GammaSession::fit(const GammaSearchConfig& search) const {
  if (!fit_ready()) throw StateError("calibration trials are not complete");
  std::vector<double> high, low;
  for (int i = 1; i <= trial_count(); ++i) {
    const auto t = intensities(i);
    high.push_back(t.high);
    low.push_back(t.low);
  }
  return fit_gamma(high, low, matched_, search);
}

double gamma_match_sse(double gamma, const std::vector<double>& high, const std::vector<double>& low,
                       const std::vector<double>& matched) {
  double sse = 0.0;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    const double r = std::pow(matched[i], gamma) - (std::pow(high[i], gamma) + std::pow(low[i], gamma)) / 2.0;
    sse += r * r;
  }
  return sse;
}

GammaFit fit_gamma(const std::vector<double>& high, const std::vector<double>& low,
                   const std::vector<double>& matched, const GammaSearchConfig& search) {
  if (high.size() != low.size() || high.size() != matched.size() || matched.empty())
    throw ConfigError("gamma fit needs equal-length, non-empty trial vectors");
  if (!(search.gamma_min > 0.0) || !(search.gamma_max > search.gamma_min) || !(search.step > 0.0))
    throw ConfigError("invalid gamma search range");

  const auto cells = static_cast<long>(std::floor((search.gamma_max - search.gamma_min) / search.step + 1e-9));
  auto at = [&](long k) { return search.gamma_min + static_cast<double>(k) * search.step; };

  long best = 0;
  double best_sse = gamma_match_sse(at(0), high, low, matched);
  for (long k = 1; k <= cells; ++k) {
    const double sse = gamma_match_sse(at(k), high, low, matched);
    if (sse < best_sse) {
      best_sse = sse;
      best = k;
    }
  }

  GammaFit fit{at(best), best_sse, false};
  if (best > 0 && best < cells) {
    const double fm = gamma_match_sse(at(best - 1), high, low, matched);
    const double fp = gamma_match_sse(at(best + 1), high, low, matched);
    const double curvature = fp - 2.0 * best_sse + fm;
    if (curvature > 0.0) {
      const double shift = std::clamp(0.5 * (fm - fp) / curvature, -1.0, 1.0);
      const double refined = at(best) + shift * search.step;
      const double refined_sse = gamma_match_sse(refined, high, low, matched);
      if (refined_sse <= best_sse) fit = {refined, refined_sse, false};
    }
  }

  fit.degenerate = std::all_of(matched.begin(), matched.end(), [](double m) { return m <= 0.0 || m >= 1.0; });
  return fit;
}

NormalizedGammaTable build_normalized_gamma_table(double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0) throw ConfigError("gamma must be positive");
  NormalizedGammaTable table;
  table.gamma = gamma;
  for (int g = 0; g < 256; ++g) table.entries[g] = std::pow(g / 255.0, gamma);
  table.entries[0] = 0.0;
  table.entries[255] = 1.0;
  return table;
}

NormalizedGammaTable identity_gamma_table() { return build_normalized_gamma_table(1.0); }

nlohmann::json to_json_array(const NormalizedGammaTable& table) {
  return nlohmann::json(std::vector<double>(table.entries.begin(), table.entries.end()));
}

void write_gamma_table_text(std::ostream& out, const NormalizedGammaTable& table) {
  char buf[32];
  for (double v : table.entries) {
    std::snprintf(buf, sizeof buf, "%.9g\n", v);
    out << buf;
  }
}

GammaSession replay_agc_log(std::istream& in, GammaSession session) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("AGC log line " + std::to_string(line_no) + ": " + e.what());
    }
    if (rec.contains("kind") && rec.contains("payload")) {
      // Session event log: only calibration events carry AGC records.
      const auto kind = rec["kind"].get<std::string>();
      if (kind != "agc_key" && kind != "agc_commit") continue;
      rec = rec["payload"];
    }
    const auto event = rec.value("event", std::string{});
    const int trial = rec.value("trial", 0);
    if (trial != session.trial())
      throw ConfigError("AGC log line " + std::to_string(line_no) + ": trial " + std::to_string(trial) +
                        " does not match session trial " + std::to_string(session.trial()));
    if (event == "commit") {
      session.commit();
    } else if (auto key = parse_adjust_key(event)) {
      session.adjust(*key);
    } else {
      throw ConfigError("AGC log line " + std::to_string(line_no) + ": unknown event '" + event + "'");
    }
  }
  return session;
}

}  // namespace stereo
