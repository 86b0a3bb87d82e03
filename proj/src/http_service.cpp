#include "stereo/http_service.hpp"

#include <httplib.h>

#include <sstream>

#include "stereo/errors.hpp"

namespace stereo {

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path.substr(0, path.find('?')));
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

ApiResponse json_response(int status, const nlohmann::json& body) { return {status, "application/json", body.dump()}; }

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(body);
    if (!j.is_object()) throw ConfigError("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("request body is not valid JSON: ") + e.what());
  }
}

nlohmann::json agc_view_json(const AgcView& v) {
  return {{"phase", "agc"},   {"trial", v.trial},  {"trial_count", v.trial_count},
          {"i_high", v.i_high}, {"i_low", v.i_low}, {"i_current", v.i_current}};
}

}  // namespace

int http_status_for(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const CompletedError*>(&e)) return 410;
  if (dynamic_cast<const StateError*>(&e)) return 409;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 400;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 400;
  return 500;
}

ApiResponse ApiRouter::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const std::exception& e) {
    return json_response(http_status_for(e), {{"error", e.what()}});
  }
}

ApiResponse ApiRouter::route(const ApiRequest& req) {
  const auto parts = split_path(req.path);
  if (parts.empty() || parts[0] != "sessions") throw NotFoundError("no route for " + req.path);

  if (parts.size() == 1) {
    if (req.method != "POST") throw NotFoundError("no route for " + req.method + " " + req.path);
    const auto body = parse_body(req.body);
    const auto paradigm = parse_paradigm(body.value("paradigm", std::string{}));
    if (!paradigm) throw ConfigError("paradigm must be one_step or two_step");
    std::optional<DisplayProfile> profile;
    if (body.contains("profile")) profile = body.at("profile").get<DisplayProfile>();
    std::optional<std::uint64_t> seed;
    if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
    const auto id = manager_.create(*paradigm, profile, seed);
    return json_response(201, manager_.with_session(id, [](LoggedSession& s) { return s.session().summary_json(); }));
  }

  const std::string& id = parts[1];
  const std::string route = parts.size() == 2 ? std::string{} : parts[2] + (parts.size() > 3 ? "/" + parts[3] : "");
  const std::string key = req.method + " " + route;

  if (key == "GET ")
    return json_response(200, manager_.with_session(id, [](LoggedSession& s) { return s.session().summary_json(); }));
  if (key == "GET record")
    return json_response(200, manager_.with_session(id, [](LoggedSession& s) { return s.session().record_json(); }));

  if (key == "POST agc/keys") {
    const auto body = parse_body(req.body);
    std::vector<std::string> names;
    if (body.contains("keys")) {
      names = body.at("keys").get<std::vector<std::string>>();
    } else {
      names.push_back(body.value("key", std::string{}));
    }
    std::vector<AdjustKey> keys;
    for (const auto& n : names) {
      const auto k = parse_adjust_key(n);
      if (!k) throw ConfigError("unknown key '" + n + "'");
      keys.push_back(*k);
    }
    return json_response(200, manager_.with_session(id, [&](LoggedSession& s) {
      if (s.session().phase() != Phase::Agc) s.session().agc_view();  // raises the phase error
      AgcView view;
      for (AdjustKey k : keys) view = s.agc_key(k);
      if (keys.empty()) view = s.session().agc_view();
      return agc_view_json(view);
    }));
  }

  if (key == "POST agc/commit") {
    return json_response(200, manager_.with_session(id, [&](LoggedSession& s) {
      const auto out = s.agc_commit();
      if (out.next) {
        auto j = agc_view_json(*out.next);
        j["committed_trial"] = out.committed_trial;
        j["matched"] = out.matched;
        return j;
      }
      const auto& fit = *s.session().gamma_fit();
      return nlohmann::json{{"phase", to_string(s.session().phase())},
                            {"committed_trial", out.committed_trial},
                            {"matched", out.matched},
                            {"fitted_gamma", fit.gamma},
                            {"fit_degenerate", fit.degenerate},
                            {"gamma_table", to_json_array(s.session().gamma_table())}};
    }));
  }

  if (key == "GET st/current") {
    return json_response(200, manager_.with_session(id, [](LoggedSession& s) {
      const auto& plan = s.session().pending_trial();
      return nlohmann::json{{"trial_no", plan.trial_no},
                            {"trial_count", s.session().settings().psi.n_trials},
                            {"stimulus", to_wire_json(s.session().pending_stimulus())}};
    }));
  }

  if (key == "GET st/current.png") {
    auto png = manager_.with_session(id, [](LoggedSession& s) {
      const auto& stim = s.session().pending_stimulus();
      return encode_png(rasterize(stim, s.session().settings().rds, s.session().gamma_table()));
    });
    return {200, "image/png", std::string(png.begin(), png.end())};
  }

  if (key == "POST st/response") {
    const auto body = parse_body(req.body);
    const auto shape = parse_shape(body.value("shape", std::string{}));
    if (!shape) throw ConfigError("shape must be one of open_up, open_down, open_right, open_left");
    const double latency = body.value("latency_ms", 0.0);
    return json_response(200, manager_.with_session(id, [&](LoggedSession& s) {
      const int pending = s.session().pending_trial().trial_no;
      if (body.contains("trial_no") && body.at("trial_no").get<int>() != pending)
        throw StateError("response for trial " + std::to_string(body.at("trial_no").get<int>()) +
                         " but trial " + std::to_string(pending) + " is pending");
      const auto rec = s.st_respond(*shape, latency);
      nlohmann::json j{{"trial_no", rec.trial_no},
                       {"accepted", true},
                       {"complete", s.session().phase() == Phase::Done}};
      if (const auto& r = s.session().result()) j["result"] = *r;
      return j;
    }));
  }

  if (key == "GET result") {
    return json_response(200, manager_.with_session(id, [](LoggedSession& s) {
      const auto& r = s.session().result();
      if (!r) throw StateError("session has no result yet");
      return nlohmann::json(*r);
    }));
  }

  throw NotFoundError("no route for " + req.method + " " + req.path);
}

struct HttpServer::Impl {
  explicit Impl(SessionManager& manager) : router(manager) {
    auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
      const auto out = router.handle({req.method, req.path, req.body});
      res.status = out.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(out.body, out.content_type);
    };
    server.Get(".*", bridge);
    server.Post(".*", bridge);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
  }

  ApiRouter router;
  httplib::Server server;
};

HttpServer::HttpServer(SessionManager& manager) : impl_(std::make_unique<Impl>(manager)) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind_any_port(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw Error("cannot bind to " + host);
  return port;
}

void HttpServer::listen_after_bind() { impl_->server.listen_after_bind(); }

void HttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace stereo
