#pragma once

#include <cstdint>
#include <vector>

#include "stereo/gamma_cal.hpp"

namespace stereo {

struct ObserverModel {
  double true_alpha_px = 2.0;
  double true_beta = 3.5;
  double true_lambda = 0.02;
  std::uint64_t seed = 1;
  double agc_gamma_true = 2.2;
  /// Half-width of the uniform noise added to the ideal match, in gray units.
  double agc_noise_amplitude = 0.0;
};

/// Synthetic participant. Each response draws from its own counter-indexed
/// stream, so the n-th answer depends only on (seed, n).
class SimulatedObserver {
 public:
  explicit SimulatedObserver(ObserverModel model);

  const ObserverModel& model() const { return model_; }

  /// Four-alternative response at disparity x: correct with probability
  /// psychometric(x | true parameters).
  bool respond_st(double x_px);

  /// Gray value whose displayed luminance equals the mean luminance of the
  /// alternating lines, plus noise, clamped and snapped to the fine-step
  /// lattice reachable from `init`.
  double respond_agc(double high, double low, double init);

  /// Coarse/fine key presses that move `init` to the respond_agc value.
  std::vector<AdjustKey> plan_agc_keys(double high, double low, double init);

  /// Runs every remaining calibration trial of `session` through key presses.
  void complete_calibration(GammaSession& session);

 private:
  double next_uniform(std::uint64_t stream);

  ObserverModel model_;
  std::uint64_t st_draws_ = 0;
  std::uint64_t agc_draws_ = 0;
};

/// Noise-free match ((h^g + l^g) / 2)^(1/g).
double ideal_match(double high, double low, double gamma);

}  // namespace stereo
