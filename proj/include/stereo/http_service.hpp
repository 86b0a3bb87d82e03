#pragma once

#include <memory>
#include <string>

#include "stereo/session_store.hpp"

namespace stereo {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Maps the session REST API onto a SessionManager. Independent of the
/// transport so it can be exercised without sockets.
///
///   POST /sessions                     {paradigm, profile?, seed?}
///   GET  /sessions/{id}
///   GET  /sessions/{id}/record
///   POST /sessions/{id}/agc/keys       {key} or {keys: [...]}
///   POST /sessions/{id}/agc/commit
///   GET  /sessions/{id}/st/current
///   GET  /sessions/{id}/st/current.png (debug rendering with the session table)
///   POST /sessions/{id}/st/response    {shape, trial_no?, latency_ms?}
///   GET  /sessions/{id}/result
class ApiRouter {
 public:
  explicit ApiRouter(SessionManager& manager) : manager_(manager) {}

  ApiResponse handle(const ApiRequest& request);

 private:
  ApiResponse route(const ApiRequest& request);

  SessionManager& manager_;
};

/// Error classes to HTTP status: malformed input 400, unknown session 404,
/// wrong phase or stale trial 409, finished session 410, otherwise 500.
int http_status_for(const std::exception& e);

/// httplib transport for ApiRouter (with permissive CORS for the browser client).
class HttpServer {
 public:
  explicit HttpServer(SessionManager& manager);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to host on a free port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  void listen_after_bind();
  /// Blocking bind + serve.
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stereo
