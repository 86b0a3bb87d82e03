#include "stereo/session.hpp"

#include "stereo/errors.hpp"
#include "stereo/random.hpp"

namespace stereo {

namespace {
constexpr std::uint64_t kShapeStream = 0x5348415045;
constexpr std::uint64_t kRdsStream = 0x524453;
}  // namespace

std::string_view to_string(Paradigm p) { return p == Paradigm::OneStep ? "one_step" : "two_step"; }

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Agc: return "agc";
    case Phase::St: return "st";
    case Phase::Done: return "done";
  }
  return "unknown";
}

std::optional<Paradigm> parse_paradigm(std::string_view text) {
  if (text == "one_step") return Paradigm::OneStep;
  if (text == "two_step") return Paradigm::TwoStep;
  return std::nullopt;
}

void to_json(nlohmann::json& j, const RdsConfig& c) {
  j = nlohmann::json{{"texture_size_mm", c.texture_size_mm}, {"dots_per_layer", c.dots_per_layer},
                     {"hidden_dots", c.hidden_dots},         {"dot_size_px", c.dot_size_px},
                     {"shape_fraction", c.shape_fraction}};
}

void from_json(const nlohmann::json& j, RdsConfig& c) {
  const RdsConfig d;
  c.texture_size_mm = j.value("texture_size_mm", d.texture_size_mm);
  c.dots_per_layer = j.value("dots_per_layer", d.dots_per_layer);
  c.hidden_dots = j.value("hidden_dots", d.hidden_dots);
  c.dot_size_px = j.value("dot_size_px", d.dot_size_px);
  c.shape_fraction = j.value("shape_fraction", d.shape_fraction);
}

void to_json(nlohmann::json& j, const SessionSettings& s) {
  j = nlohmann::json{{"paradigm", to_string(s.paradigm)},
                     {"profile", s.profile},
                     {"master_seed", s.master_seed},
                     {"rds", s.rds},
                     {"psi", s.psi}};
}

void from_json(const nlohmann::json& j, SessionSettings& s) {
  try {
    const auto paradigm = parse_paradigm(j.at("paradigm").get<std::string>());
    if (!paradigm) throw ConfigError("paradigm must be one_step or two_step");
    s.paradigm = *paradigm;
    s.profile = j.at("profile").get<DisplayProfile>();
    s.master_seed = j.at("master_seed").get<std::uint64_t>();
    s.rds = j.contains("rds") ? j.at("rds").get<RdsConfig>() : RdsConfig{};
    s.psi = j.contains("psi") ? j.at("psi").get<PsiConfig>() : PsiConfig::defaults();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed session settings: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const StTrialRecord& r) {
  j = nlohmann::json{{"trial_no", r.trial_no},
                     {"o1_px", r.o1_px},
                     {"o2_px", r.o2_px},
                     {"arcsec", r.arcsec},
                     {"shape_true", to_string(r.shape_true)},
                     {"shape_response", to_string(r.shape_response)},
                     {"correct", r.correct},
                     {"latency_ms", r.latency_ms}};
}

Session::Session(std::string id, SessionSettings settings, std::string created_at)
    : id_(std::move(id)),
      settings_(std::move(settings)),
      created_at_(std::move(created_at)),
      phase_(settings_.paradigm == Paradigm::TwoStep ? Phase::Agc : Phase::St),
      gamma_table_(identity_gamma_table()),
      psi_(shared_psi_grid(settings_.psi)) {
  settings_.profile.validate();
  settings_.rds.profile = settings_.profile;
  make_layout(settings_.rds);
  if (phase_ == Phase::Agc)
    agc_.emplace();
  else
    plan_trial();
}

void Session::check_phase(Phase expected) const {
  if (phase_ == expected) return;
  if (phase_ == Phase::Done) throw CompletedError("session is complete");
  throw StateError(std::string("session is in phase '") + std::string(to_string(phase_)) + "', not '" +
                   std::string(to_string(expected)) + "'");
}

AgcView Session::agc_view() const {
  check_phase(Phase::Agc);
  const auto t = agc_->intensities(agc_->trial());
  return {agc_->trial(), agc_->trial_count(), t.high, t.low, agc_->current()};
}

AgcView Session::agc_key(AdjustKey key) {
  check_phase(Phase::Agc);
  agc_->adjust(key);
  return agc_view();
}

AgcCommitOutcome Session::agc_commit() {
  check_phase(Phase::Agc);
  AgcCommitOutcome out;
  out.committed_trial = agc_->trial();
  agc_->commit();
  out.matched = agc_->matched().back();
  if (!agc_->fit_ready()) {
    out.next = agc_view();
    return out;
  }
  gamma_fit_ = agc_->fit();
  gamma_table_ = build_normalized_gamma_table(gamma_fit_->gamma);
  phase_ = Phase::St;
  plan_trial();
  return out;
}

double Session::gamma() const { return gamma_fit_ ? gamma_fit_->gamma : kDefaultDisplayGamma; }

void Session::plan_trial() {
  StTrialPlan plan;
  plan.trial_no = psi_.trial_count() + 1;
  plan.o1_px = psi_.select_next();
  plan.o2_px = compute_correction_offset(plan.o1_px);
  plan.arcsec = pixels_to_arcsec(plan.o1_px, settings_.profile);
  const auto n = static_cast<std::uint64_t>(plan.trial_no);
  plan.shape = kAllShapes[derive_seed(settings_.master_seed, kShapeStream, n) % kAllShapes.size()];
  plan.rds_seed = derive_seed(settings_.master_seed, kRdsStream, n);
  pending_ = plan;
  pending_stimulus_.reset();
}

const StTrialPlan& Session::pending_trial() const {
  check_phase(Phase::St);
  return *pending_;
}

const RdsStimulus& Session::pending_stimulus() {
  const auto& plan = pending_trial();
  if (!pending_stimulus_) pending_stimulus_ = generate_rds(settings_.rds, plan.o1_px, plan.shape, plan.rds_seed);
  return *pending_stimulus_;
}

StTrialRecord Session::st_respond(Shape response, double latency_ms) {
  const StTrialPlan plan = pending_trial();
  StTrialRecord rec;
  rec.trial_no = plan.trial_no;
  rec.o1_px = plan.o1_px;
  rec.o2_px = plan.o2_px;
  rec.arcsec = plan.arcsec;
  rec.shape_true = plan.shape;
  rec.shape_response = response;
  rec.correct = response == plan.shape;
  rec.latency_ms = latency_ms;

  psi_.update(plan.o1_px, rec.correct);
  st_trials_.push_back(rec);
  if (psi_.complete()) {
    result_ = psi_.finalize(settings_.profile);
    phase_ = Phase::Done;
    pending_.reset();
    pending_stimulus_.reset();
  } else {
    plan_trial();
  }
  return rec;
}

nlohmann::json Session::record_json() const {
  nlohmann::json j{{"session_id", id_},
                   {"paradigm", to_string(settings_.paradigm)},
                   {"profile", settings_.profile},
                   {"created_at", created_at_},
                   {"master_seed", settings_.master_seed},
                   {"fitted_gamma", gamma()},
                   {"phase", to_string(phase_)}};
  if (agc_) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& a : agc_->adjustments())
      log.push_back({{"trial", a.trial}, {"event", to_string(a.key)}, {"value", a.value_after}});
    j["agc_log"] = std::move(log);
    j["agc_matched"] = agc_->matched();
    j["agc_errors"] = agc_->errors();
  }
  j["st_trials"] = st_trials_;
  j["result"] = result_ ? nlohmann::json(*result_) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json Session::summary_json() const {
  nlohmann::json j{{"session_id", id_},
                   {"paradigm", to_string(settings_.paradigm)},
                   {"phase", to_string(phase_)},
                   {"profile", settings_.profile},
                   {"created_at", created_at_},
                   {"fitted_gamma", gamma()},
                   {"st_trials_done", st_trials_.size()},
                   {"st_trial_count", settings_.psi.n_trials}};
  if (phase_ == Phase::Agc) {
    const auto v = agc_view();
    j["agc"] = {{"trial", v.trial}, {"trial_count", v.trial_count}, {"i_high", v.i_high},
                {"i_low", v.i_low}, {"i_current", v.i_current}};
  }
  if (phase_ == Phase::St) j["st"] = {{"trial_no", pending_->trial_no}};
  if (result_) j["result"] = *result_;
  return j;
}

}  // namespace stereo
