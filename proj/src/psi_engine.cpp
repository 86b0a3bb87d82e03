#include "stereo/psi_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <utility>

#include "stereo/errors.hpp"

namespace stereo {

double weibull_cdf(double x, double alpha, double beta) {
  if (std::isnan(x) || x < 0.0) throw DomainError("intensity must be non-negative");
  if (!std::isfinite(alpha) || alpha <= 0.0) throw DomainError("alpha must be positive");
  if (!std::isfinite(beta) || beta <= 0.0) throw DomainError("beta must be positive");
  return 1.0 - std::exp(-std::pow(x / alpha, beta));
}

namespace {

void check_rates(double lapse, double guess) {
  if (!(lapse >= 0.0 && lapse <= kMaxLapseRate)) throw DomainError("lapse rate must lie in [0, 0.04]");
  if (!(guess > 0.0 && guess < 1.0 - lapse)) throw DomainError("guess rate must lie in (0, 1 - lapse)");
}

// Unchecked form shared by the tables and the direct path so both agree bit for bit.
inline double psi_value(double f, double lapse, double guess) { return guess + (1.0 - guess - lapse) * f; }

std::vector<double> linspace_steps(int first_num, int step_num, int count, double denom) {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) v[k] = (first_num + step_num * k) / denom;
  return v;
}

void check_grid(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw ConfigError(std::string(name) + " grid is empty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw ConfigError(std::string(name) + " grid has non-finite entries");
    if (i > 0 && !(g[i] > g[i - 1])) throw ConfigError(std::string(name) + " grid must be strictly increasing");
  }
}

}  // namespace

double psychometric(double x, double alpha, double beta, double lapse, double guess) {
  check_rates(lapse, guess);
  return psi_value(weibull_cdf(x, alpha, beta), lapse, guess);
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  const double q = 1.0 - p;
  if (q > 0.0) h -= q * std::log(q);
  return h;
}

PsiConfig PsiConfig::defaults() {
  PsiConfig c;
  c.alpha_grid = linspace_steps(10, 1, 991, 100.0);
  c.beta_grid = linspace_steps(8, 1, 49, 4.0);
  c.lambda_grid = linspace_steps(0, 1, 5, 100.0);
  c.candidates = linspace_steps(1, 1, 100, 10.0);
  return c;
}

PsiConfig PsiConfig::simulation() {
  PsiConfig c = defaults();
  c.alpha_grid = linspace_steps(10, 5, 199, 100.0);
  c.beta_grid = linspace_steps(2, 1, 13, 1.0);
  return c;
}

void PsiConfig::validate() const {
  check_grid(alpha_grid, "alpha");
  check_grid(beta_grid, "beta");
  check_grid(lambda_grid, "lambda");
  check_grid(candidates, "candidate");
  if (alpha_grid.front() <= 0.0) throw ConfigError("alpha grid must be positive");
  if (beta_grid.front() <= 0.0) throw ConfigError("beta grid must be positive");
  if (lambda_grid.front() < 0.0 || lambda_grid.back() > kMaxLapseRate)
    throw ConfigError("lambda grid must lie in [0, 0.04]");
  if (candidates.front() < kMinDisparityPx - 1e-12 || candidates.back() > kMaxDisparityPx + 1e-12)
    throw ConfigError("candidates must lie in [0.1, 10] px");
  if (guess_rate != kFourAfcGuessRate) throw ConfigError("guess rate is fixed at 1/4 by the four-shape task");
  if (n_trials <= 0) throw ConfigError("trial count must be positive");
}

void to_json(nlohmann::json& j, const PsiConfig& c) {
  j = nlohmann::json{{"alpha_grid", c.alpha_grid}, {"beta_grid", c.beta_grid},
                     {"lambda_grid", c.lambda_grid}, {"candidates", c.candidates},
                     {"guess_rate", c.guess_rate}, {"n_trials", c.n_trials}};
}

void from_json(const nlohmann::json& j, PsiConfig& c) {
  // Missing fields keep their defaults so overrides can be partial.
  PsiConfig d = PsiConfig::defaults();
  try {
    c.alpha_grid = j.value("alpha_grid", d.alpha_grid);
    c.beta_grid = j.value("beta_grid", d.beta_grid);
    c.lambda_grid = j.value("lambda_grid", d.lambda_grid);
    c.candidates = j.value("candidates", d.candidates);
    c.guess_rate = j.value("guess_rate", d.guess_rate);
    c.n_trials = j.value("n_trials", d.n_trials);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed psi config: ") + e.what());
  }
  c.validate();
}

PsiGrid::PsiGrid(PsiConfig config) : config_(std::move(config)) {
  config_.validate();
  nb_ = config_.beta_grid.size();
  nl_ = config_.lambda_grid.size();
  cell_count_ = config_.cell_count();
  const std::size_t nc = config_.candidates.size();
  p_.resize(nc * cell_count_);
  h_.resize(nc * cell_count_);
  for (std::size_t c = 0; c < nc; ++c) {
    double* p = p_.data() + c * cell_count_;
    double* h = h_.data() + c * cell_count_;
    const double x = config_.candidates[c];
    std::size_t cell = 0;
    for (double alpha : config_.alpha_grid) {
      for (double beta : config_.beta_grid) {
        const double f = weibull_cdf(x, alpha, beta);
        for (double lapse : config_.lambda_grid) {
          p[cell] = psi_value(f, lapse, config_.guess_rate);
          h[cell] = binary_entropy(p[cell]);
          ++cell;
        }
      }
    }
  }
}

std::size_t PsiGrid::find_candidate(double x) const {
  const auto& c = config_.candidates;
  auto it = std::lower_bound(c.begin(), c.end(), x);
  if (it != c.end() && *it == x) return static_cast<std::size_t>(it - c.begin());
  return npos;
}

std::vector<double> PsiGrid::p_correct_at(double x) const {
  std::vector<double> p(cell_count_);
  std::size_t cell = 0;
  for (double alpha : config_.alpha_grid) {
    for (double beta : config_.beta_grid) {
      const double f = weibull_cdf(x, alpha, beta);
      for (double lapse : config_.lambda_grid) p[cell++] = psi_value(f, lapse, config_.guess_rate);
    }
  }
  return p;
}

std::shared_ptr<const PsiGrid> shared_psi_grid(const PsiConfig& config) {
  static std::mutex mutex;
  static std::deque<std::shared_ptr<const PsiGrid>> cache;
  constexpr std::size_t kCapacity = 4;
  std::lock_guard lock(mutex);
  for (const auto& g : cache) {
    if (g->config() == config) return g;
  }
  auto grid = std::make_shared<const PsiGrid>(config);
  cache.push_back(grid);
  if (cache.size() > kCapacity) cache.pop_front();
  return grid;
}

void to_json(nlohmann::json& j, const ThresholdResult& r) {
  j = nlohmann::json{{"last_correct_o1_px", r.last_correct_o1_px},
                     {"last_correct_arcsec", r.last_correct_arcsec},
                     {"posterior_mean_alpha_px", r.posterior_mean_alpha_px},
                     {"posterior_mean_alpha_arcsec", r.posterior_mean_alpha_arcsec},
                     {"ceiling_flag", r.ceiling_flag}};
}

void from_json(const nlohmann::json& j, ThresholdResult& r) {
  r.last_correct_o1_px = j.at("last_correct_o1_px").get<double>();
  r.last_correct_arcsec = j.at("last_correct_arcsec").get<double>();
  r.posterior_mean_alpha_px = j.at("posterior_mean_alpha_px").get<double>();
  r.posterior_mean_alpha_arcsec = j.at("posterior_mean_alpha_arcsec").get<double>();
  r.ceiling_flag = j.at("ceiling_flag").get<bool>();
}

PsiState::PsiState(std::shared_ptr<const PsiGrid> grid) : grid_(std::move(grid)) {
  if (!grid_) throw ConfigError("psi state needs a grid");
  log_posterior_.assign(grid_->cell_count(), 0.0);
  renormalize();
}

void PsiState::renormalize() {
  const double peak = *std::max_element(log_posterior_.begin(), log_posterior_.end());
  if (!std::isfinite(peak)) throw NumericalError("posterior has no support left");
  posterior_.resize(log_posterior_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_posterior_.size(); ++i) {
    posterior_[i] = std::exp(log_posterior_[i] - peak);
    total += posterior_[i];
  }
  for (double& w : posterior_) w /= total;
}

void PsiState::update(double x, bool correct) {
  if (std::isnan(x) || x < 0.0) throw DomainError("intensity must be non-negative");
  std::vector<double> direct;
  std::span<const double> p;
  if (const auto c = grid_->find_candidate(x); c != PsiGrid::npos) {
    p = grid_->p_correct(c);
  } else {
    direct = grid_->p_correct_at(x);
    p = direct;
  }
  std::vector<double> next = log_posterior_;
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += std::log(correct ? p[i] : 1.0 - p[i]);
  const double peak = *std::max_element(next.begin(), next.end());
  if (!std::isfinite(peak)) throw NumericalError("response has zero likelihood under every grid cell");
  log_posterior_ = std::move(next);
  renormalize();
  history_.push_back({x, correct});
}

double PsiState::entropy() const {
  double h = 0.0;
  for (double w : posterior_) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

double PsiState::expected_entropy_from(std::span<const double> p, std::span<const double> h, double current) const {
  // E[H] = H(w) + sum w H_b(p) - H_b(sum w p): the outcome-averaged entropy
  // without forming either updated posterior.
  const std::size_t n = posterior_.size();
  const double* w = posterior_.data();
  double pc[4] = {0, 0, 0, 0};
  double hb[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int k = 0; k < 4; ++k) {
      pc[k] += w[i + k] * p[i + k];
      hb[k] += w[i + k] * h[i + k];
    }
  }
  for (; i < n; ++i) {
    pc[0] += w[i] * p[i];
    hb[0] += w[i] * h[i];
  }
  const double p_correct = (pc[0] + pc[1]) + (pc[2] + pc[3]);
  const double mean_h = (hb[0] + hb[1]) + (hb[2] + hb[3]);
  return current + mean_h - binary_entropy(p_correct);
}

double PsiState::expected_entropy(double x) const {
  if (const auto c = grid_->find_candidate(x); c != PsiGrid::npos)
    return expected_entropy_from(grid_->p_correct(c), grid_->response_entropy(c), entropy());
  const auto p = grid_->p_correct_at(x);
  std::vector<double> h(p.size());
  std::transform(p.begin(), p.end(), h.begin(), binary_entropy);
  return expected_entropy_from(p, h, entropy());
}

std::vector<double> PsiState::expected_entropies() const {
  const double current = entropy();
  std::vector<double> out(grid_->candidate_count());
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] = expected_entropy_from(grid_->p_correct(c), grid_->response_entropy(c), current);
  return out;
}

double PsiState::select_next() const {
  const auto e = expected_entropies();
  const double lowest = *std::min_element(e.begin(), e.end());
  // Entropies that agree to rounding count as tied; the smaller x wins.
  std::size_t best = 0;
  while (e[best] > lowest + kEntropyTieTolerance) ++best;
  return grid_->config().candidates[best];
}

double PsiState::posterior_mean_alpha() const {
  double mean = 0.0;
  for (std::size_t i = 0; i < posterior_.size(); ++i) mean += posterior_[i] * grid_->alpha_of(i);
  return mean;
}

ThresholdResult threshold_from_history(const std::vector<PsiTrial>& history, double posterior_mean_alpha_px,
                                       const DisplayProfile& profile) {
  ThresholdResult r;
  auto last = std::find_if(history.rbegin(), history.rend(), [](const PsiTrial& t) { return t.correct; });
  if (last == history.rend()) {
    r.last_correct_o1_px = kMaxDisparityPx;
    r.ceiling_flag = true;
  } else {
    r.last_correct_o1_px = last->x;
    r.ceiling_flag = last->x >= kMaxDisparityPx;
  }
  r.last_correct_arcsec = pixels_to_arcsec(r.last_correct_o1_px, profile);
  r.posterior_mean_alpha_px = posterior_mean_alpha_px;
  r.posterior_mean_alpha_arcsec = pixels_to_arcsec(posterior_mean_alpha_px, profile);
  return r;
}

ThresholdResult PsiState::finalize(const DisplayProfile& profile) const {
  if (!complete()) throw StateError("threshold requested before the final trial");
  return threshold_from_history(history_, posterior_mean_alpha(), profile);
}

nlohmann::json PsiState::snapshot() const {
  nlohmann::json log_post = nlohmann::json::array();
  for (double v : log_posterior_) {
    if (std::isfinite(v))
      log_post.push_back(v);
    else
      log_post.push_back(nullptr);  // -inf
  }
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& t : history_) hist.push_back({t.x, t.correct ? 1 : 0});
  return nlohmann::json{{"config", grid_->config()}, {"log_posterior", std::move(log_post)}, {"history", std::move(hist)}};
}

PsiState PsiState::restore(const nlohmann::json& snapshot) {
  PsiState state(shared_psi_grid(snapshot.at("config").get<PsiConfig>()));
  const auto& lp = snapshot.at("log_posterior");
  if (lp.size() != state.log_posterior_.size()) throw ConfigError("snapshot posterior size does not match grid");
  for (std::size_t i = 0; i < lp.size(); ++i)
    state.log_posterior_[i] = lp[i].is_null() ? -std::numeric_limits<double>::infinity() : lp[i].get<double>();
  for (const auto& t : snapshot.at("history")) state.history_.push_back({t.at(0).get<double>(), t.at(1).get<int>() != 0});
  state.renormalize();
  return state;
}

}  // namespace stereo
