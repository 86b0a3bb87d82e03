#include "stereo/sim_observer.hpp"

#include <algorithm>
#include <cmath>

#include "stereo/errors.hpp"
#include "stereo/psi_engine.hpp"
#include "stereo/random.hpp"

namespace stereo {

namespace {
constexpr std::uint64_t kStStream = 0x5354;
constexpr std::uint64_t kAgcStream = 0x414743;
}  // namespace

SimulatedObserver::SimulatedObserver(ObserverModel model) : model_(model) {
  if (!(model_.true_alpha_px > 0.0) || !(model_.true_beta > 0.0))
    throw ConfigError("observer alpha and beta must be positive");
  if (!(model_.true_lambda >= 0.0 && model_.true_lambda <= kMaxLapseRate))
    throw ConfigError("observer lapse must lie in [0, 0.04]");
  if (!(model_.agc_gamma_true > 0.0)) throw ConfigError("observer gamma must be positive");
  if (!(model_.agc_noise_amplitude >= 0.0)) throw ConfigError("noise amplitude must be non-negative");
}

double SimulatedObserver::next_uniform(std::uint64_t stream) {
  std::uint64_t& counter = stream == kStStream ? st_draws_ : agc_draws_;
  return uniform01(derive_seed(model_.seed, stream, counter++));
}

bool SimulatedObserver::respond_st(double x_px) {
  const double p = psychometric(x_px, model_.true_alpha_px, model_.true_beta, model_.true_lambda);
  return next_uniform(kStStream) < p;
}

double ideal_match(double high, double low, double gamma) {
  return std::pow((std::pow(high, gamma) + std::pow(low, gamma)) / 2.0, 1.0 / gamma);
}

namespace {

long lattice_steps(double target, double init) { return std::lround((target - init) / kFineStep); }

}  // namespace

double SimulatedObserver::respond_agc(double high, double low, double init) {
  double target = ideal_match(high, low, model_.agc_gamma_true);
  if (model_.agc_noise_amplitude > 0.0)
    target += (2.0 * next_uniform(kAgcStream) - 1.0) * model_.agc_noise_amplitude;
  target = std::clamp(target, 0.0, 1.0);
  const long k = lattice_steps(target, init);
  if (k == 0) return init;
  return std::clamp(init + static_cast<double>(k) * kFineStep, 0.0, 1.0);
}

std::vector<AdjustKey> SimulatedObserver::plan_agc_keys(double high, double low, double init) {
  const double matched = respond_agc(high, low, init);
  const long k = lattice_steps(matched, init);
  const long n = std::labs(k);
  std::vector<AdjustKey> keys;
  keys.insert(keys.end(), static_cast<std::size_t>(n / 10), k > 0 ? AdjustKey::CoarseUp : AdjustKey::CoarseDown);
  keys.insert(keys.end(), static_cast<std::size_t>(n % 10), k > 0 ? AdjustKey::FineUp : AdjustKey::FineDown);
  return keys;
}

void SimulatedObserver::complete_calibration(GammaSession& session) {
  while (!session.fit_ready()) {
    const auto t = session.intensities(session.trial());
    for (AdjustKey key : plan_agc_keys(t.high, t.low, t.init)) session.adjust(key);
    session.commit();
  }
}

}  // namespace stereo
