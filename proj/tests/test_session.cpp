#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "stereo/errors.hpp"
#include "stereo/random.hpp"
#include "stereo/session_store.hpp"
#include "stereo/simulation.hpp"

using namespace stereo;
namespace fs = std::filesystem;

namespace {

SessionSettings fast_settings(Paradigm p, std::uint64_t seed) {
  SessionSettings s;
  s.paradigm = p;
  s.master_seed = seed;
  s.psi = PsiConfig::simulation();
  return s;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("stereo_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("one-step sessions start in the stereo test") {
  Session s("a", fast_settings(Paradigm::OneStep, 1), "t");
  CHECK(s.phase() == Phase::St);
  CHECK(s.pending_trial().trial_no == 1);
  CHECK(s.settings().psi.n_trials == 30);
  CHECK(s.gamma() == 2.2);
  CHECK(s.gamma_table().entries[128] == 128.0 / 255.0);
  CHECK_FALSE(s.agc().has_value());
  CHECK_THROWS_AS(s.agc_view(), StateError);
  CHECK_THROWS_AS(s.agc_key(AdjustKey::FineUp), StateError);
  CHECK_THROWS_AS(s.agc_commit(), StateError);
  CHECK_FALSE(s.record_json().contains("agc_log"));
}

TEST_CASE("two-step sessions calibrate first") {
  Session s("b", fast_settings(Paradigm::TwoStep, 2), "t");
  CHECK(s.phase() == Phase::Agc);
  auto v = s.agc_view();
  CHECK(v.trial == 1);
  CHECK(v.trial_count == 15);
  CHECK_THROWS_AS(s.pending_trial(), StateError);
  CHECK_THROWS_AS(s.st_respond(Shape::OpenUp, 0), StateError);

  v = s.agc_key(AdjustKey::FineUp);
  CHECK(v.i_current == doctest::Approx(0.5 + 0.3 / 255).epsilon(1e-15));
  auto out = s.agc_commit();
  CHECK(out.committed_trial == 1);
  CHECK(out.matched == v.i_current);
  REQUIRE(out.next.has_value());
  CHECK(out.next->trial == 2);
  CHECK(out.next->i_current == out.next->i_high / 2 + out.next->i_low / 2);

  for (int i = 2; i < 15; ++i) CHECK(s.agc_commit().next.has_value());
  out = s.agc_commit();
  CHECK_FALSE(out.next.has_value());
  CHECK(out.committed_trial == 15);
  CHECK(s.phase() == Phase::St);
  REQUIRE(s.gamma_fit().has_value());
  CHECK(s.gamma() == s.gamma_fit()->gamma);
  CHECK(s.gamma_table().gamma == s.gamma());
  CHECK_THROWS_AS(s.agc_key(AdjustKey::FineUp), StateError);
  CHECK(s.pending_trial().trial_no == 1);
}

TEST_CASE("finished sessions refuse further work") {
  Session s("c", fast_settings(Paradigm::OneStep, 3), "t");
  for (int i = 0; i < 30; ++i) s.st_respond(Shape::OpenUp, 100);
  CHECK(s.phase() == Phase::Done);
  REQUIRE(s.result().has_value());
  CHECK_THROWS_AS(s.pending_trial(), CompletedError);
  CHECK_THROWS_AS(s.st_respond(Shape::OpenUp, 0), CompletedError);
  CHECK_THROWS_AS(s.agc_key(AdjustKey::FineUp), CompletedError);
  CHECK(s.st_trials().size() == 30);
  for (int i = 0; i < 30; ++i) CHECK(s.st_trials()[i].trial_no == i + 1);
}

TEST_CASE("trial disparities are the engine's selections") {
  Session s("d", fast_settings(Paradigm::OneStep, 4), "t");
  PsiState mirror(shared_psi_grid(PsiConfig::simulation()));
  for (int i = 0; i < 30; ++i) {
    const auto plan = s.pending_trial();
    CHECK(plan.o1_px == mirror.select_next());
    CHECK(plan.o2_px == compute_correction_offset(plan.o1_px));
    CHECK(plan.arcsec == pixels_to_arcsec(plan.o1_px, s.settings().profile));
    const auto resp = i % 3 ? plan.shape : kAllShapes[(int(plan.shape) + 1) % 4];
    const auto rec = s.st_respond(resp, 0);
    CHECK(rec.correct == (resp == plan.shape));
    mirror.update(plan.o1_px, rec.correct);
  }
  CHECK(s.result()->posterior_mean_alpha_px == mirror.posterior_mean_alpha());
}

TEST_CASE("stimulus is cached and deterministic per seed") {
  Session a("e", fast_settings(Paradigm::OneStep, 77), "t");
  Session b("f", fast_settings(Paradigm::OneStep, 77), "t");
  const auto& s1 = a.pending_stimulus();
  const auto& s2 = a.pending_stimulus();
  CHECK(&s1 == &s2);
  CHECK(to_wire_json(s1) == to_wire_json(b.pending_stimulus()));
  for (int i = 0; i < 10; ++i) {
    CHECK(a.pending_trial().o1_px == b.pending_trial().o1_px);
    CHECK(a.pending_trial().shape == b.pending_trial().shape);
    CHECK(a.pending_trial().rds_seed == b.pending_trial().rds_seed);
    a.st_respond(Shape::OpenLeft, 0);
    b.st_respond(Shape::OpenLeft, 0);
  }
}

TEST_CASE("shapes cover all four alternatives") {
  Session s("g", fast_settings(Paradigm::OneStep, 5), "t");
  int seen[4] = {};
  for (int i = 0; i < 30; ++i) {
    ++seen[int(s.pending_trial().shape)];
    s.st_respond(Shape::OpenUp, 0);
  }
  for (int k : seen) CHECK(k > 0);
}

TEST_CASE("all-incorrect session reports the ceiling") {
  Session s("h", fast_settings(Paradigm::OneStep, 6), "t");
  while (s.phase() == Phase::St) {
    const auto truth = s.pending_trial().shape;
    s.st_respond(kAllShapes[(int(truth) + 2) % 4], 0);
  }
  CHECK(s.result()->ceiling_flag);
  CHECK(std::abs(s.result()->last_correct_arcsec - 1663.0) <= 1.0);
}

TEST_CASE("settings JSON round trip") {
  auto s = fast_settings(Paradigm::TwoStep, 0xdeadbeefcafeULL);
  s.rds.dot_size_px = 1.5;
  nlohmann::json j = s;
  const auto back = j.get<SessionSettings>();
  CHECK(back.paradigm == Paradigm::TwoStep);
  CHECK(back.master_seed == 0xdeadbeefcafeULL);
  CHECK(back.psi == s.psi);
  CHECK(back.rds.dot_size_px == 1.5);
  CHECK(back.profile == s.profile);
  j["paradigm"] = "three_step";
  CHECK_THROWS_AS(j.get<SessionSettings>(), ConfigError);
}

TEST_CASE("persisted two-step session replays bit-identically") {
  const auto dir = scratch_dir("replay");
  const auto log = dir / "s.jsonl";
  const auto settings = fast_settings(Paradigm::TwoStep, 1234);
  const auto out = run_simulated_session(settings, {2.0, 3.5, 0.02, 99, 2.4, 1.0 / 255}, {false, log});

  const auto lines = read_lines(log);
  CHECK(nlohmann::json::parse(lines.front())["kind"] == "created");
  CHECK(nlohmann::json::parse(lines.back())["kind"] == "completed");
  for (const auto& l : lines) {
    const auto e = nlohmann::json::parse(l);
    CHECK(e.contains("ts"));
    CHECK(e.contains("payload"));
    if (e["kind"] == "agc_key" || e["kind"] == "agc_commit")
      for (const char* k : {"trial", "event", "value", "timestamp"}) CHECK(e["payload"].contains(k));
  }

  const Session replayed = replay_session_log(log);
  REQUIRE(replayed.result().has_value());
  CHECK(*replayed.result() == out.result);
  CHECK(replayed.gamma() == out.gamma_fitted);
  CHECK(std::abs(out.gamma_fitted - 2.4) <= 0.1);
  CHECK(replayed.record_json()["st_trials"] == nlohmann::json(out.trials));

  // The calibration part of the same log feeds the standalone gamma fit.
  std::ifstream in(log);
  CHECK(replay_agc_log(in).fit().gamma == out.gamma_fitted);
  fs::remove_all(dir);
}

TEST_CASE("tampered logs are rejected") {
  const auto dir = scratch_dir("tamper");
  const auto log = dir / "s.jsonl";
  run_simulated_session(fast_settings(Paradigm::OneStep, 8), {2.0, 3.5, 0.02, 1, 2.2, 0}, {false, log});
  auto lines = read_lines(log);
  auto e = nlohmann::json::parse(lines[5]);
  e["payload"]["correct"] = !e["payload"]["correct"].get<bool>();
  lines[5] = e.dump();
  std::stringstream ss;
  for (const auto& l : lines) ss << l << "\n";
  CHECK_THROWS_AS(replay_session_log(ss), Error);

  std::stringstream no_created("{\"ts\":\"x\",\"kind\":\"st_response\",\"payload\":{}}\n");
  CHECK_THROWS_AS(replay_session_log(no_created), Error);
  CHECK_THROWS_AS(replay_session_log(dir / "missing.jsonl"), NotFoundError);
  fs::remove_all(dir);
}

TEST_CASE("crash mid-session: replay restores state and the run finishes identically") {
  const auto dir = scratch_dir("crash");
  const auto settings = fast_settings(Paradigm::TwoStep, 4321);
  const ObserverModel model{1.5, 3.5, 0.02, 42, 2.2, 0.0};
  const auto full = run_simulated_session(settings, model, {false, dir / "full.jsonl"});

  // Keep the first 60 events plus half of the next one.
  const auto lines = read_lines(dir / "full.jsonl");
  REQUIRE(lines.size() > 61);
  {
    std::ofstream cut(dir / "cut.jsonl");
    for (int i = 0; i < 60; ++i) cut << lines[i] << "\n";
    cut << lines[60].substr(0, lines[60].size() / 2);
  }
  Session restored = replay_session_log(dir / "cut.jsonl");

  // The replayed engine state equals a straight replay of the intact prefix.
  std::stringstream prefix;
  for (int i = 0; i < 60; ++i) prefix << lines[i] << "\n";
  const Session reference = replay_session_log(prefix);
  CHECK(restored.phase() == reference.phase());
  CHECK(restored.psi().posterior() == reference.psi().posterior());
  CHECK(restored.st_trials().size() == reference.st_trials().size());

  // Resume from the log and drive the remaining events from the full run.
  LoggedSession resumed(std::move(restored), dir / "cut.jsonl");
  for (std::size_t i = 60; i < lines.size(); ++i) {
    const auto e = nlohmann::json::parse(lines[i]);
    const auto& p = e["payload"];
    if (e["kind"] == "agc_key") resumed.agc_key(*parse_adjust_key(p["event"].get<std::string>()));
    if (e["kind"] == "agc_commit") resumed.agc_commit();
    if (e["kind"] == "st_response") resumed.st_respond(*parse_shape(p["shape_response"].get<std::string>()), 0.0);
  }
  REQUIRE(resumed.session().result().has_value());
  CHECK(*resumed.session().result() == full.result);
  // The repaired log replays cleanly on its own.
  CHECK(*replay_session_log(dir / "cut.jsonl").result() == full.result);
  fs::remove_all(dir);
}

TEST_CASE("session manager persists and reloads") {
  const auto dir = scratch_dir("manager");
  ServiceConfig cfg;
  cfg.data_dir = dir;
  cfg.psi = PsiConfig::simulation();
  std::string id;
  {
    SessionManager m(cfg);
    id = m.create(Paradigm::OneStep, std::nullopt, 5);
    m.with_session(id, [](LoggedSession& s) {
      for (int i = 0; i < 4; ++i) s.st_respond(Shape::OpenDown, 10);
    });
    CHECK_THROWS_AS(m.with_session("nope", [](LoggedSession&) {}), NotFoundError);
  }
  SessionManager again(cfg);
  CHECK(again.load_existing() == 1);
  CHECK(again.session_ids() == std::vector<std::string>{id});
  again.with_session(id, [](LoggedSession& s) {
    CHECK(s.session().st_trials().size() == 4);
    CHECK(s.session().pending_trial().trial_no == 5);
    CHECK(s.session().settings().master_seed == 5);
  });
  fs::remove_all(dir);
}

TEST_CASE("concurrent sessions do not interact") {
  const auto dir = scratch_dir("concurrent");
  ServiceConfig cfg;
  cfg.data_dir = dir;
  cfg.psi = PsiConfig::simulation();
  SessionManager m(cfg);

  auto drive = [&](const std::string& id, std::uint64_t seed) {
    SimulatedObserver obs({2.0, 3.5, 0.02, seed, 2.2, 0.0});
    for (int i = 0; i < 30; ++i)
      m.with_session(id, [&](LoggedSession& s) {
        const auto plan = s.session().pending_trial();
        const bool ok = obs.respond_st(plan.o1_px);
        s.st_respond(ok ? plan.shape : kAllShapes[(int(plan.shape) + 1) % 4], 0);
      });
  };

  const auto a = m.create(Paradigm::OneStep, std::nullopt, 11);
  const auto b = m.create(Paradigm::OneStep, std::nullopt, 12);
  std::thread ta([&] { drive(a, 1); });
  std::thread tb([&] { drive(b, 2); });
  ta.join();
  tb.join();

  const auto sa = m.create(Paradigm::OneStep, std::nullopt, 11);
  const auto sb = m.create(Paradigm::OneStep, std::nullopt, 12);
  drive(sa, 1);
  drive(sb, 2);

  auto result = [&](const std::string& id) {
    return m.with_session(id, [](LoggedSession& s) { return *s.session().result(); });
  };
  CHECK(result(a) == result(sa));
  CHECK(result(b) == result(sb));
  fs::remove_all(dir);
}

TEST_CASE("service config JSON") {
  auto cfg = nlohmann::json{{"port", 9000}, {"psi", {{"n_trials", 20}}}}.get<ServiceConfig>();
  CHECK(cfg.port == 9000);
  CHECK(cfg.psi.n_trials == 20);
  CHECK(cfg.host == "127.0.0.1");
  nlohmann::json j = cfg;
  CHECK(j.get<ServiceConfig>().psi == cfg.psi);
  CHECK_THROWS_AS(nlohmann::json({{"port", "x"}}).get<ServiceConfig>(), ConfigError);
}

TEST_CASE("simulation CSV rows") {
  SimulatedSessionOutcome o;
  o.result.last_correct_o1_px = 2.5;
  std::ostringstream out;
  write_simulation_csv_header(out);
  write_simulation_csv_row(out, {2.0, 3.5, 0.02, 9, 2.2, 0}, o);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header ==
        "seed,alpha_true,beta_true,lambda_true,threshold_px,threshold_arcsec,posterior_mean_alpha,gamma_true,gamma_fitted");
  CHECK(row.rfind("9,2,3.5,0.02,2.5,", 0) == 0);
}
