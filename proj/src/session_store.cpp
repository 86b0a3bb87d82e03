#include "stereo/session_store.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iterator>
#include <random>
#include <sstream>

#include "stereo/errors.hpp"

namespace stereo {

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

SessionLog::SessionLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw Error("cannot open session log " + path.string());
}

void SessionLog::append(std::string_view kind, const nlohmann::json& payload) {
  if (!out_.is_open()) return;
  const nlohmann::json event{{"ts", utc_timestamp()}, {"kind", kind}, {"payload", payload}};
  out_ << event.dump() << '\n';
  out_.flush();
  if (!out_) throw Error("failed to append to session log");
}

namespace {

// Every complete event ends in a newline; anything after the last one is an
// interrupted write and is cut so new events start on a fresh line.
void drop_partial_tail(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return;
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto last = text.find_last_of('\n');
  const std::size_t keep = last == std::string::npos ? 0 : last + 1;
  if (keep < text.size()) std::filesystem::resize_file(path, keep);
}

nlohmann::json agc_record(int trial, std::string_view event, double value) {
  return {{"trial", trial}, {"event", event}, {"value", value}, {"timestamp", utc_timestamp()}};
}

}  // namespace

LoggedSession::LoggedSession(std::string id, SessionSettings settings, std::optional<std::filesystem::path> log_path)
    : session_(std::move(id), std::move(settings), utc_timestamp()) {
  if (log_path) {
    log_ = SessionLog(*log_path);
    log_.append("created", {{"session_id", session_.id()},
                            {"created_at", session_.created_at()},
                            {"settings", session_.settings()}});
  }
}

LoggedSession::LoggedSession(Session session, std::optional<std::filesystem::path> log_path)
    : session_(std::move(session)) {
  if (log_path) {
    drop_partial_tail(*log_path);
    log_ = SessionLog(*log_path);
  }
}

AgcView LoggedSession::agc_key(AdjustKey key) {
  auto view = session_.agc_key(key);
  log_.append("agc_key", agc_record(view.trial, to_string(key), view.i_current));
  return view;
}

AgcCommitOutcome LoggedSession::agc_commit() {
  auto out = session_.agc_commit();
  log_.append("agc_commit", agc_record(out.committed_trial, "commit", out.matched));
  if (const auto& fit = session_.gamma_fit(); fit && !out.next)
    log_.append("agc_fit", {{"gamma", fit->gamma}, {"sse", fit->sse}, {"degenerate", fit->degenerate}});
  return out;
}

StTrialRecord LoggedSession::st_respond(Shape response, double latency_ms) {
  auto rec = session_.st_respond(response, latency_ms);
  log_.append("st_response", rec);
  if (const auto& result = session_.result()) log_.append("completed", {{"result", *result}});
  return rec;
}

Session replay_session_log(std::istream& in) {
  std::optional<Session> session;
  std::string line;
  std::string pending_error;
  int line_no = 0;
  auto corrupt = [&](const std::string& what) {
    return Error("session log line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!pending_error.empty()) throw Error(pending_error);
    nlohmann::json event;
    try {
      event = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      // Tolerated only as the final line (interrupted write).
      pending_error = "session log line " + std::to_string(line_no) + " is not valid JSON";
      continue;
    }
    const auto kind = event.value("kind", std::string{});
    const auto& payload = event.at("payload");
    if (kind == "created") {
      if (session) throw corrupt("duplicate created event");
      session.emplace(payload.at("session_id").get<std::string>(), payload.at("settings").get<SessionSettings>(),
                      payload.at("created_at").get<std::string>());
      continue;
    }
    if (!session) throw corrupt("event before created");
    if (kind == "agc_key") {
      const auto key = parse_adjust_key(payload.at("event").get<std::string>());
      if (!key) throw corrupt("unknown AGC key");
      const auto view = session->agc_key(*key);
      if (view.trial != payload.at("trial").get<int>() || view.i_current != payload.at("value").get<double>())
        throw corrupt("AGC adjustment does not reproduce");
    } else if (kind == "agc_commit") {
      const auto out = session->agc_commit();
      if (out.committed_trial != payload.at("trial").get<int>() || out.matched != payload.at("value").get<double>())
        throw corrupt("AGC commit does not reproduce");
    } else if (kind == "agc_fit") {
      if (!session->gamma_fit() || session->gamma_fit()->gamma != payload.at("gamma").get<double>())
        throw corrupt("gamma fit does not reproduce");
    } else if (kind == "st_response") {
      const auto shape = parse_shape(payload.at("shape_response").get<std::string>());
      if (!shape) throw corrupt("unknown shape");
      const auto rec = session->st_respond(*shape, payload.value("latency_ms", 0.0));
      if (rec.trial_no != payload.at("trial_no").get<int>() || rec.o1_px != payload.at("o1_px").get<double>() ||
          rec.correct != payload.at("correct").get<bool>())
        throw corrupt("stereo trial does not reproduce");
    } else if (kind == "completed") {
      if (!session->result() || !(*session->result() == payload.at("result").get<ThresholdResult>()))
        throw corrupt("result does not reproduce");
    } else {
      throw corrupt("unknown event kind '" + kind + "'");
    }
  }
  if (!session) throw Error("session log has no created event");
  return std::move(*session);
}

Session replay_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open session log " + path.string());
  return replay_session_log(in);
}

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  j = nlohmann::json{{"host", c.host},       {"port", c.port}, {"data_dir", c.data_dir.string()},
                     {"default_profile", c.default_profile}, {"psi", c.psi}, {"rds", c.rds}};
}

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  const ServiceConfig d;
  try {
    c.host = j.value("host", d.host);
    c.port = j.value("port", d.port);
    c.data_dir = j.value("data_dir", d.data_dir.string());
    c.default_profile = j.contains("default_profile") ? j.at("default_profile").get<DisplayProfile>() : d.default_profile;
    c.psi = j.contains("psi") ? j.at("psi").get<PsiConfig>() : d.psi;
    c.rds = j.contains("rds") ? j.at("rds").get<RdsConfig>() : d.rds;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed service config: ") + e.what());
  }
}

SessionManager::SessionManager(ServiceConfig config) : config_(std::move(config)) {
  config_.default_profile.validate();
  config_.psi.validate();
  std::filesystem::create_directories(config_.data_dir);
}

std::filesystem::path SessionManager::log_path(const std::string& id) const {
  return config_.data_dir / (id + ".jsonl");
}

std::size_t SessionManager::load_existing() {
  std::size_t loaded = 0;
  for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    Session s = replay_session_log(entry.path());
    const std::string id = s.id();
    auto slot = std::make_shared<Slot>(LoggedSession(std::move(s), entry.path()));
    std::unique_lock lock(map_mutex_);
    sessions_[id] = std::move(slot);
    ++loaded;
  }
  return loaded;
}

std::string SessionManager::create(Paradigm paradigm, std::optional<DisplayProfile> profile,
                                   std::optional<std::uint64_t> seed) {
  static std::mutex rng_mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t id_bits = 0;
  std::uint64_t drawn_seed = 0;
  {
    std::lock_guard lock(rng_mutex);
    id_bits = rng();
    drawn_seed = rng();
  }
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(id_bits));

  SessionSettings settings;
  settings.paradigm = paradigm;
  settings.profile = profile.value_or(config_.default_profile);
  settings.master_seed = seed.value_or(drawn_seed);
  settings.rds = config_.rds;
  settings.psi = config_.psi;
  auto slot = std::make_shared<Slot>(LoggedSession(id, std::move(settings), log_path(id)));
  std::unique_lock lock(map_mutex_);
  sessions_[id] = std::move(slot);
  return id;
}

std::shared_ptr<SessionManager::Slot> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, slot] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace stereo
