#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "stereo/session.hpp"

namespace stereo {

/// ISO-8601 UTC timestamp with milliseconds.
std::string utc_timestamp();

/// Append-only JSON-lines event log: one {ts, kind, payload} object per line.
class SessionLog {
 public:
  SessionLog() = default;
  explicit SessionLog(const std::filesystem::path& path);

  bool is_open() const { return out_.is_open(); }
  void append(std::string_view kind, const nlohmann::json& payload);

 private:
  std::ofstream out_;
};

/// Applies session operations and mirrors each one into the log.
/// Every mutating call on a Session that must survive a restart goes
/// through here.
class LoggedSession {
 public:
  /// Creates a fresh session and writes its "created" event.
  LoggedSession(std::string id, SessionSettings settings, std::optional<std::filesystem::path> log_path);
  /// Wraps a replayed session; further events are appended to `log_path`.
  LoggedSession(Session session, std::optional<std::filesystem::path> log_path);

  Session& session() { return session_; }
  const Session& session() const { return session_; }

  AgcView agc_key(AdjustKey key);
  AgcCommitOutcome agc_commit();
  StTrialRecord st_respond(Shape response, double latency_ms);

 private:
  Session session_;
  SessionLog log_;
};

/// Rebuilds a session from its event log. Every recorded outcome (matched
/// values, selected disparities, correctness, result) is checked against the
/// recomputed one; a mismatch throws. A truncated final line is ignored.
Session replay_session_log(std::istream& in);
Session replay_session_log(const std::filesystem::path& path);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "sessions";
  DisplayProfile default_profile;
  PsiConfig psi = PsiConfig::defaults();
  RdsConfig rds;
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

/// Owns live sessions. Each session has its own mutex: mutations on one
/// session are serialized, different sessions proceed independently.
class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config);

  const ServiceConfig& config() const { return config_; }

  /// Replays every *.jsonl log in the data directory; returns how many loaded.
  std::size_t load_existing();

  std::string create(Paradigm paradigm, std::optional<DisplayProfile> profile, std::optional<std::uint64_t> seed);

  /// Runs `fn` with exclusive access to the session; throws NotFoundError.
  template <typename Fn>
  auto with_session(const std::string& id, Fn&& fn) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return fn(slot->logged);
  }

  std::vector<std::string> session_ids() const;

 private:
  struct Slot {
    explicit Slot(LoggedSession s) : logged(std::move(s)) {}
    std::mutex mutex;
    LoggedSession logged;
  };

  std::shared_ptr<Slot> find(const std::string& id) const;
  std::filesystem::path log_path(const std::string& id) const;

  ServiceConfig config_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace stereo
