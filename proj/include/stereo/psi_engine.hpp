#pragma once

#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "stereo/geometry.hpp"

namespace stereo {

inline constexpr double kFourAfcGuessRate = 0.25;
inline constexpr double kMaxLapseRate = 0.04;
/// Expected entropies closer than this (nats) are treated as equal.
inline constexpr double kEntropyTieTolerance = 1e-12;

/// 1 - exp(-(x/alpha)^beta).
double weibull_cdf(double x, double alpha, double beta);

/// Probability of a correct response: guess + (1 - guess - lapse) * F(x).
/// Lower asymptote is the guess rate, upper asymptote 1 - lapse.
double psychometric(double x, double alpha, double beta, double lapse, double guess = kFourAfcGuessRate);

struct PsiConfig {
  std::vector<double> alpha_grid;
  std::vector<double> beta_grid;
  std::vector<double> lambda_grid;
  std::vector<double> candidates;
  double guess_rate = kFourAfcGuessRate;
  int n_trials = 30;

  /// alpha 0.1:0.01:10, beta 2:0.25:14, lambda 0:0.01:0.04, candidates 0.1:0.1:10.
  static PsiConfig defaults();
  /// alpha 0.1:0.05:10, beta 2:1:14, lambda 0:0.01:0.04, candidates 0.1:0.1:10.
  /// Used for large simulation batches.
  static PsiConfig simulation();

  void validate() const;
  std::size_t cell_count() const { return alpha_grid.size() * beta_grid.size() * lambda_grid.size(); }

  bool operator==(const PsiConfig&) const = default;
};

void to_json(nlohmann::json& j, const PsiConfig& c);
void from_json(const nlohmann::json& j, PsiConfig& c);

/// Immutable parameter grid plus per-candidate tables of P(correct) and
/// binary response entropy for every (alpha, beta, lambda) cell. Built once
/// per config and shared by all sessions using it.
///
/// Cell index = (alpha_index * n_beta + beta_index) * n_lambda + lambda_index.
class PsiGrid {
 public:
  explicit PsiGrid(PsiConfig config);

  const PsiConfig& config() const { return config_; }
  std::size_t cell_count() const { return cell_count_; }
  std::size_t candidate_count() const { return config_.candidates.size(); }

  double alpha_of(std::size_t cell) const { return config_.alpha_grid[cell / (nb_ * nl_)]; }
  double beta_of(std::size_t cell) const { return config_.beta_grid[(cell / nl_) % nb_]; }
  double lambda_of(std::size_t cell) const { return config_.lambda_grid[cell % nl_]; }

  std::span<const double> p_correct(std::size_t candidate) const {
    return {p_.data() + candidate * cell_count_, cell_count_};
  }
  std::span<const double> response_entropy(std::size_t candidate) const {
    return {h_.data() + candidate * cell_count_, cell_count_};
  }

  /// Index of x in the candidate set, or npos when x is not a candidate.
  std::size_t find_candidate(double x) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// P(correct) of every cell at an arbitrary intensity.
  std::vector<double> p_correct_at(double x) const;

 private:
  PsiConfig config_;
  std::size_t nb_ = 0, nl_ = 0, cell_count_ = 0;
  std::vector<double> p_;
  std::vector<double> h_;
};

/// Shared, lazily built grid for a config; repeated calls with an equal
/// config return the same instance.
std::shared_ptr<const PsiGrid> shared_psi_grid(const PsiConfig& config);

/// Binary entropy in nats with 0 ln 0 = 0.
double binary_entropy(double p);

struct PsiTrial {
  double x = 0.0;
  bool correct = false;
};

struct ThresholdResult {
  double last_correct_o1_px = 0.0;
  double last_correct_arcsec = 0.0;
  double posterior_mean_alpha_px = 0.0;
  double posterior_mean_alpha_arcsec = 0.0;
  bool ceiling_flag = false;

  bool operator==(const ThresholdResult&) const = default;
};

void to_json(nlohmann::json& j, const ThresholdResult& r);
void from_json(const nlohmann::json& j, ThresholdResult& r);

/// Posterior over the grid plus the response history. The posterior is kept
/// in log space and renormalized after each update.
class PsiState {
 public:
  explicit PsiState(std::shared_ptr<const PsiGrid> grid);

  const PsiGrid& grid() const { return *grid_; }
  std::shared_ptr<const PsiGrid> shared_grid() const { return grid_; }
  const std::vector<double>& posterior() const { return posterior_; }
  const std::vector<PsiTrial>& history() const { return history_; }
  int trial_count() const { return static_cast<int>(history_.size()); }
  bool complete() const { return trial_count() >= grid_->config().n_trials; }

  void update(double x, bool correct);

  /// -sum p ln p in nats.
  double entropy() const;
  /// Response-weighted entropy of the posterior after observing x.
  double expected_entropy(double x) const;
  /// Expected entropy for every candidate, in candidate order.
  std::vector<double> expected_entropies() const;
  /// Candidate with the smallest expected entropy; ties go to the smaller x.
  double select_next() const;

  double posterior_mean_alpha() const;
  ThresholdResult finalize(const DisplayProfile& profile) const;

  nlohmann::json snapshot() const;
  static PsiState restore(const nlohmann::json& snapshot);

 private:
  double expected_entropy_from(std::span<const double> p, std::span<const double> h, double current) const;
  void renormalize();

  std::shared_ptr<const PsiGrid> grid_;
  std::vector<double> log_posterior_;
  std::vector<double> posterior_;
  std::vector<PsiTrial> history_;
};

/// Threshold rule on a finished history: x of the latest correct trial, or
/// the ceiling disparity when nothing was correct.
ThresholdResult threshold_from_history(const std::vector<PsiTrial>& history, double posterior_mean_alpha_px,
                                       const DisplayProfile& profile);

}  // namespace stereo
