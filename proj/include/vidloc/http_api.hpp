#pragma once

#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "vidloc/contribution_service.hpp"
#include "vidloc/error.hpp"

namespace httplib {
class Server;
}

namespace vidloc {

// HTTP status for an error code (404 unknown ids, 401/403 auth, 400 invalid
// proposals, 503 provider trouble, 500 otherwise).
int http_status_for(ErrorCode code);

/// JSON API under /v1:
///   GET  /v1/videos
///   GET  /v1/videos/{id}/sentences
///   GET  /v1/videos/{id}/artifact
///   POST /v1/contributions            {sentence_id, proposed_text}, bearer token
///   GET  /v1/contributions?user={id}  bearer token
///   POST /v1/admin/crawler-pass       admin bearer token
/// Errors are {code, message, details}.
class ApiServer {
 public:
  ApiServer(ContributionService& service, const Authenticator& auth,
            std::function<void()> on_tasks_queued = {});
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws IoError.
  int bind(const std::string& host, int port);
  // Serves until stop(); blocks.
  void run();
  // run() on a background thread; returns once accepting.
  void start();
  void stop();

 private:
  void routes();

  ContributionService& service_;
  const Authenticator& auth_;
  std::function<void()> on_tasks_queued_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace vidloc
