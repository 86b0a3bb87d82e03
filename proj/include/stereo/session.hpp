#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stereo/gamma_cal.hpp"
#include "stereo/geometry.hpp"
#include "stereo/psi_engine.hpp"
#include "stereo/rds.hpp"

namespace stereo {

enum class Paradigm { OneStep, TwoStep };
enum class Phase { Agc, St, Done };

std::string_view to_string(Paradigm p);
std::string_view to_string(Phase p);
std::optional<Paradigm> parse_paradigm(std::string_view text);

inline constexpr double kDefaultDisplayGamma = 2.2;

struct SessionSettings {
  Paradigm paradigm = Paradigm::OneStep;
  DisplayProfile profile;
  std::uint64_t master_seed = 0;
  RdsConfig rds;  // rds.profile is replaced by `profile`
  PsiConfig psi = PsiConfig::defaults();
};

void to_json(nlohmann::json& j, const SessionSettings& s);
void from_json(const nlohmann::json& j, SessionSettings& s);
void to_json(nlohmann::json& j, const RdsConfig& c);
void from_json(const nlohmann::json& j, RdsConfig& c);

struct AgcView {
  int trial = 0;
  int trial_count = 0;
  double i_high = 0.0;
  double i_low = 0.0;
  double i_current = 0.0;
};

struct AgcCommitOutcome {
  int committed_trial = 0;
  double matched = 0.0;
  /// Next calibration trial; empty once calibration has finished.
  std::optional<AgcView> next;
};

struct StTrialPlan {
  int trial_no = 0;
  double o1_px = 0.0;
  int o2_px = 0;
  double arcsec = 0.0;
  Shape shape = Shape::OpenUp;
  std::uint64_t rds_seed = 0;
};

struct StTrialRecord {
  int trial_no = 0;
  double o1_px = 0.0;
  int o2_px = 0;
  double arcsec = 0.0;
  Shape shape_true = Shape::OpenUp;
  Shape shape_response = Shape::OpenUp;
  bool correct = false;
  double latency_ms = 0.0;
};

void to_json(nlohmann::json& j, const StTrialRecord& r);

/// One participant run. Two-step sessions calibrate gamma first, then run
/// the stereo test; one-step sessions start directly in the stereo test with
/// the display's native table. Every stimulus choice is a deterministic
/// function of the settings and the responses so far.
class Session {
 public:
  Session(std::string id, SessionSettings settings, std::string created_at);

  const std::string& id() const { return id_; }
  const SessionSettings& settings() const { return settings_; }
  const std::string& created_at() const { return created_at_; }
  Phase phase() const { return phase_; }

  AgcView agc_view() const;
  AgcView agc_key(AdjustKey key);
  AgcCommitOutcome agc_commit();
  const std::optional<GammaSession>& agc() const { return agc_; }
  const std::optional<GammaFit>& gamma_fit() const { return gamma_fit_; }
  /// Fitted gamma for two-step sessions after calibration, 2.2 otherwise.
  double gamma() const;
  const NormalizedGammaTable& gamma_table() const { return gamma_table_; }

  const StTrialPlan& pending_trial() const;
  /// Stimulus for the pending trial; generated on first request and cached.
  const RdsStimulus& pending_stimulus();
  StTrialRecord st_respond(Shape response, double latency_ms);

  const std::vector<StTrialRecord>& st_trials() const { return st_trials_; }
  const std::optional<ThresholdResult>& result() const { return result_; }
  const PsiState& psi() const { return psi_; }

  /// Full session record (settings, calibration, trials, result).
  nlohmann::json record_json() const;
  /// Compact view for GET /sessions/{id}.
  nlohmann::json summary_json() const;

 private:
  void check_phase(Phase expected) const;
  void plan_trial();

  std::string id_;
  SessionSettings settings_;
  std::string created_at_;
  Phase phase_;
  std::optional<GammaSession> agc_;
  std::optional<GammaFit> gamma_fit_;
  NormalizedGammaTable gamma_table_;
  PsiState psi_;
  std::optional<StTrialPlan> pending_;
  std::optional<RdsStimulus> pending_stimulus_;
  std::vector<StTrialRecord> st_trials_;
  std::optional<ThresholdResult> result_;
};

}  // namespace stereo
