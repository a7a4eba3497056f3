#include <httplib.h>
#include <spdlog/spdlog.h>

#include "vidloc/error.hpp"
#include "vidloc/process.hpp"
#include "vidloc/providers.hpp"
#include "vidloc/util.hpp"
#include "vidloc/wav.hpp"

namespace vidloc {

using json = nlohmann::json;

namespace {

struct Url {
  std::string base;  // scheme://host[:port]
  std::string path;  // at least "/"
};

bool is_http_endpoint(std::string_view endpoint) {
  return endpoint.starts_with("http://") || endpoint.starts_with("https://");
}

Url split_url(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

// One POST with the provider's auth and timeout applied. Transport failures
// are ProviderUnavailable; status codes map through check_http_status.
httplib::Result post_json(const ProviderConfig& config, const json& body) {
  const Url url = split_url(config.endpoint);
  httplib::Client client(url.base);
  const auto secs = config.timeout.count() / 1000;
  const auto usecs = (config.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (const auto token = resolve_secret(config.auth)) {
    headers.emplace("Authorization", "Bearer " + *token);
  }
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::ProviderUnavailable,
                config.name + ": " + httplib::to_string(res.error()) + " (" + config.endpoint + ")");
  }
  check_http_status(res->status, config.name, res->body);
  return res;
}

json parse_reply(const ProviderConfig& config, const std::string& body) {
  json reply = json::parse(body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    throw Error(ErrorCode::ProviderUnavailable, config.name + ": malformed response body");
  }
  return reply;
}

}  // namespace

void check_http_status(int status, std::string_view provider, std::string_view body) {
  if (status >= 200 && status < 300) return;
  std::string message = std::string(provider) + ": HTTP " + std::to_string(status);
  if (!body.empty()) message += ": " + std::string(body.substr(0, 200));
  if (status == 429) throw Error(ErrorCode::RateLimited, message);
  if (status >= 400 && status < 500) throw Error(ErrorCode::ProviderRejected, message);
  throw Error(ErrorCode::ProviderUnavailable, message);
}

std::string HttpTranslation::translate(std::string_view text, std::string_view source,
                                       std::string_view target) {
  const auto res = post_json(config_, {{"text", text}, {"source", source}, {"target", target}});
  const json reply = parse_reply(config_, res->body);
  if (!reply.contains("text") || !reply["text"].is_string()) {
    throw Error(ErrorCode::ProviderUnavailable, config_.name + ": response lacks \"text\"");
  }
  return reply["text"].get<std::string>();
}

void HttpSpeech::synthesize(std::string_view text, std::string_view language,
                            const std::filesystem::path& out_file) {
  const auto res = post_json(config_, {{"text", text}, {"language", language}});
  write_file(out_file, res->body);
}

// ---------------------------------------------------------------------------

struct SidecarSimilarity::Channel {
  explicit Channel(const std::string& command) : line(command) {}
  LineChannel line;
};

SidecarSimilarity::SidecarSimilarity(ProviderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw Error(ErrorCode::InvalidConfig, config_.name + ": sidecar endpoint is empty");
  }
}

SidecarSimilarity::~SidecarSimilarity() = default;

double SidecarSimilarity::score(std::string_view a, std::string_view b, SimilarityMetric metric) {
  const json request{{"a", a}, {"b", b}, {"metric", to_string(metric)}};

  json reply;
  if (is_http_endpoint(config_.endpoint)) {
    const auto res = post_json(config_, request);
    reply = parse_reply(config_, res->body);
  } else {
    std::lock_guard lock(mu_);
    if (!channel_ || !channel_->line.alive()) {
      channel_ = std::make_unique<Channel>(config_.endpoint);
    }
    const auto line = channel_->line.request(request.dump(), config_.timeout);
    if (!line) {
      channel_.reset();
      throw Error(ErrorCode::ProviderUnavailable,
                  config_.name + ": sidecar exited or timed out (" + config_.endpoint + ")");
    }
    reply = parse_reply(config_, *line);
  }

  if (!reply.contains("score") || !reply["score"].is_number()) {
    throw Error(ErrorCode::ProviderUnavailable, config_.name + ": response lacks numeric score");
  }
  return reply["score"].get<double>();
}

}  // namespace vidloc
