#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "stereo/session.hpp"
#include "stereo/sim_observer.hpp"

namespace stereo {

struct SimulationOptions {
  /// Generate each trial's dot stimulus, as a live client would request it.
  bool render_stimuli = false;
  /// Optional event log (same format the service writes).
  std::optional<std::filesystem::path> log_path;
};

struct SimulatedSessionOutcome {
  ThresholdResult result;
  double gamma_fitted = kDefaultDisplayGamma;
  std::vector<StTrialRecord> trials;
  /// Slowest single session call (key press, commit, stimulus, response), ms.
  double max_call_ms = 0.0;
};

/// Drives a full session with a simulated participant through the same
/// operations the HTTP service uses: calibration key presses and commits
/// for two-step sessions, then one shape response per stereo trial.
SimulatedSessionOutcome run_simulated_session(const SessionSettings& settings, const ObserverModel& observer,
                                              const SimulationOptions& options = {});

/// CSV header and row used by the `simulate` command.
void write_simulation_csv_header(std::ostream& out);
void write_simulation_csv_row(std::ostream& out, const ObserverModel& observer,
                              const SimulatedSessionOutcome& outcome);

}  // namespace stereo
