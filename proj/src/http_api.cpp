#include "vidloc/http_api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "vidloc/error.hpp"

namespace vidloc {

using json = nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                json details = json::object()) {
  send_json(res, status, json{{"code", code}, {"message", message}, {"details", std::move(details)}});
}

void send_error(httplib::Response& res, const Error& e, json details = json::object()) {
  send_error(res, http_status_for(e.code()), error_code_name(e.code()), e.what(),
             std::move(details));
}

std::optional<std::string> bearer_token(const httplib::Request& req) {
  const auto header = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (header.size() <= kPrefix.size() || header.compare(0, kPrefix.size(), kPrefix) != 0) {
    return std::nullopt;
  }
  return header.substr(kPrefix.size());
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownVideo:
    case ErrorCode::UnknownSentence:
    case ErrorCode::UnknownTask:
      return 404;
    case ErrorCode::Unauthenticated:
      return 401;
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::EmptyProposal:
    case ErrorCode::NoOpProposal:
    case ErrorCode::PreconditionViolation:
      return 400;
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::RateLimited:
      return 503;
    default:
      return 500;
  }
}

ApiServer::ApiServer(ContributionService& service, const Authenticator& auth,
                     std::function<void()> on_tasks_queued)
    : service_(service),
      auth_(auth),
      on_tasks_queued_(std::move(on_tasks_queued)),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      spdlog::error("unhandled: {}", e.what());
      send_error(res, 500, "InternalError", e.what());
    } catch (...) {
      send_error(res, 500, "InternalError", "unknown exception");
    }
  });
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError",
                 "no route for " + req.method + " " + req.path);
    }
  });
  s.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto identity = [this](const httplib::Request& req) -> std::optional<Identity> {
    const auto token = bearer_token(req);
    if (!token) return std::nullopt;
    return auth_.authenticate(*token);
  };

  s.Get("/v1/videos", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& v : service_.list_videos()) out.push_back(to_json(v));
    send_json(res, 200, json{{"videos", out}});
  });

  s.Get(R"(/v1/videos/([^/]+)/sentences)", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
    const std::string id = req.matches[1];
    try {
      json out = json::array();
      for (const auto& r : service_.list_sentences(id)) out.push_back(to_json(r));
      send_json(res, 200, json{{"video_id", id}, {"sentences", out}});
    } catch (const Error& e) {
      send_error(res, e, json{{"video_id", id}});
    }
  });

  s.Get(R"(/v1/videos/([^/]+)/artifact)", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
    const std::string id = req.matches[1];
    try {
      send_json(res, 200, to_json(service_.artifact(id)));
    } catch (const Error& e) {
      send_error(res, e, json{{"video_id", id}});
    }
  });

  s.Post("/v1/contributions", [this, identity](const httplib::Request& req,
                                               httplib::Response& res) {
    const auto who = identity(req);
    if (!who) {
      send_error(res, 401, "Unauthenticated", "a valid bearer token is required");
      return;
    }
    const auto body = json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("sentence_id") || !body["sentence_id"].is_string() ||
        !body.contains("proposed_text") || !body["proposed_text"].is_string()) {
      send_error(res, 400, "MalformedRequest",
                 "body must be {\"sentence_id\": string, \"proposed_text\": string}");
      return;
    }
    const auto sentence_id = body["sentence_id"].get<std::string>();
    try {
      const auto c =
          service_.submit_contribution(who, sentence_id, body["proposed_text"].get<std::string>());
      send_json(res, 201, to_json(c));
    } catch (const Error& e) {
      send_error(res, e, json{{"sentence_id", sentence_id}});
    }
  });

  s.Get("/v1/contributions", [this, identity](const httplib::Request& req,
                                              httplib::Response& res) {
    const auto who = identity(req);
    if (!who) {
      send_error(res, 401, "Unauthenticated", "a valid bearer token is required");
      return;
    }
    const auto user = req.has_param("user") ? req.get_param_value("user") : who->user_id;
    json out = json::array();
    for (const auto& c : service_.list_contributions(who, user)) out.push_back(to_json(c));
    send_json(res, 200, json{{"user", user}, {"contributions", out}});
  });

  s.Post("/v1/admin/crawler-pass", [this, identity](const httplib::Request& req,
                                                    httplib::Response& res) {
    const auto who = identity(req);
    if (!who) {
      send_error(res, 401, "Unauthenticated", "a valid bearer token is required");
      return;
    }
    if (!who->admin) {
      send_error(res, 403, "Forbidden", "admin token required");
      return;
    }
    const auto summary = service_.crawler_pass();
    if (!summary.tasks.empty() && on_tasks_queued_) on_tasks_queued_();
    send_json(res, 200, to_json(summary));
  });
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound <= 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::run() { server_->listen_after_bind(); }

void ApiServer::start() {
  thread_ = std::thread([this] { run(); });
  server_->wait_until_ready();
}

void ApiServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace vidloc
