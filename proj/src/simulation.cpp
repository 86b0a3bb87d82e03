#include "stereo/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

#include "stereo/random.hpp"
#include "stereo/session_store.hpp"

namespace stereo {

namespace {

template <typename Fn>
auto timed(double& max_ms, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<decltype(fn())>) {
    fn();
    max_ms = std::max(max_ms, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  } else {
    auto out = fn();
    max_ms = std::max(max_ms, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
    return out;
  }
}

Shape wrong_shape(Shape truth, std::uint64_t bits) {
  // Uniform over the three other shapes.
  const auto offset = 1 + static_cast<int>(bits % 3);
  return kAllShapes[(static_cast<int>(truth) + offset) % 4];
}

}  // namespace

SimulatedSessionOutcome run_simulated_session(const SessionSettings& settings, const ObserverModel& observer_model,
                                              const SimulationOptions& options) {
  SimulatedObserver observer(observer_model);
  LoggedSession logged("sim-" + std::to_string(settings.master_seed), settings, options.log_path);
  SimulatedSessionOutcome out;

  while (logged.session().phase() == Phase::Agc) {
    const auto view = logged.session().agc_view();
    const double init = logged.session().agc()->intensities(view.trial).init;
    for (AdjustKey key : observer.plan_agc_keys(view.i_high, view.i_low, init))
      timed(out.max_call_ms, [&] { return logged.agc_key(key); });
    timed(out.max_call_ms, [&] { return logged.agc_commit(); });
  }

  std::uint64_t draw = 0;
  while (logged.session().phase() == Phase::St) {
    const StTrialPlan plan = logged.session().pending_trial();
    if (options.render_stimuli) timed(out.max_call_ms, [&] { logged.session().pending_stimulus(); });
    const bool correct = observer.respond_st(plan.o1_px);
    const Shape answer = correct ? plan.shape : wrong_shape(plan.shape, derive_seed(observer_model.seed, 0x57524f4e47, draw++));
    timed(out.max_call_ms, [&] { return logged.st_respond(answer, 0.0); });
  }

  out.result = *logged.session().result();
  out.gamma_fitted = logged.session().gamma();
  out.trials = logged.session().st_trials();
  return out;
}

void write_simulation_csv_header(std::ostream& out) {
  out << "seed,alpha_true,beta_true,lambda_true,threshold_px,threshold_arcsec,posterior_mean_alpha,gamma_true,gamma_fitted\n";
}

void write_simulation_csv_row(std::ostream& out, const ObserverModel& m, const SimulatedSessionOutcome& o) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                static_cast<unsigned long long>(m.seed), m.true_alpha_px, m.true_beta, m.true_lambda,
                o.result.last_correct_o1_px, o.result.last_correct_arcsec, o.result.posterior_mean_alpha_px,
                m.agc_gamma_true, o.gamma_fitted);
  out << buf;
}

}  // namespace stereo
