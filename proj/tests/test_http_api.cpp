#include <doctest.h>
#include <httplib.h>

#include <atomic>

#include "support.hpp"
#include "vidloc/http_api.hpp"

using namespace vidloc;
using namespace vidloc::testing;
using json = nlohmann::json;

namespace {

const std::string kHomonym = "We'd put the seven in the ones place.";
const std::string kFix = "Ponemos el siete en el lugar de las unidades.";

struct Api {
  TempDir dir;
  OfflineProviders mocks;
  std::unique_ptr<Pipeline> pipeline;
  std::unique_ptr<ContributionService> service;
  TokenAuthenticator auth;
  std::atomic<int> notified{0};
  std::unique_ptr<ApiServer> server;
  std::unique_ptr<httplib::Client> client;

  Api() {
    mocks.back->table[kHomonym] = "We'll put seven people in one place.";
    mocks.back->table[kFix] = kHomonym;
    pipeline = std::make_unique<Pipeline>(test_config(), dir / "build", mocks.handles());
    const Transcript t{"pv", "en", Millis{8000},
                       {{0, Millis{0}, "Let's count."}, {1, Millis{4000}, kHomonym}}};
    const auto result = pipeline->run_video(VideoJob{write_transcript(dir.path(), t)});
    REQUIRE(result.status == VideoStatus::Completed);
    const auto& p = pipeline->providers();
    service = std::make_unique<ContributionService>(
        std::make_shared<Store>(":memory:"), RoundTripProviders{p.back_translator, p.f1, nullptr});
    service->publish(result, ThresholdPolicy::defaults(Subject::Reading), "en", "es");
    auth.add("alice-token", {"alice", false});
    auth.add("bob-token", {"bob", false});
    auth.add("admin-token", {"root", true});
    server = std::make_unique<ApiServer>(*service, auth, [this] { ++notified; });
    const int port = server->bind("127.0.0.1", 0);
    server->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  ~Api() { server->stop(); }

  static httplib::Headers bearer(const std::string& token) {
    return {{"Authorization", "Bearer " + token}};
  }

  httplib::Result post(const std::string& path, const std::string& body, const std::string& token) {
    return client->Post(path, token.empty() ? httplib::Headers{} : bearer(token), body,
                        "application/json");
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

}  // namespace

TEST_SUITE("http_api") {
  TEST_CASE("status mapping") {
    CHECK(http_status_for(ErrorCode::UnknownVideo) == 404);
    CHECK(http_status_for(ErrorCode::UnknownSentence) == 404);
    CHECK(http_status_for(ErrorCode::UnknownTask) == 404);
    CHECK(http_status_for(ErrorCode::Unauthenticated) == 401);
    CHECK(http_status_for(ErrorCode::Forbidden) == 403);
    CHECK(http_status_for(ErrorCode::EmptyProposal) == 400);
    CHECK(http_status_for(ErrorCode::NoOpProposal) == 400);
    CHECK(http_status_for(ErrorCode::ProviderUnavailable) == 503);
    CHECK(http_status_for(ErrorCode::StorageFailure) == 500);
  }

  TEST_CASE("read routes") {
    Api api;
    auto r = api.client->Get("/v1/videos");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    auto videos = body_of(r)["videos"];
    REQUIRE(videos.size() == 1);
    CHECK(videos[0]["video_id"] == "pv");
    CHECK(videos[0]["flagged_count"] == 1);

    r = api.client->Get("/v1/videos/pv/sentences");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto sentences = body_of(r)["sentences"];
    REQUIRE(sentences.size() == 2);
    CHECK(sentences[1]["sentence_id"] == "pv:1");
    CHECK(sentences[1]["flagged"] == true);

    r = api.client->Get("/v1/videos/nope/sentences");
    REQUIRE(r);
    CHECK(r->status == 404);
    CHECK(body_of(r)["code"] == "UnknownVideo");
    CHECK(body_of(r)["details"]["video_id"] == "nope");

    r = api.client->Get("/v1/videos/pv/artifact");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["version"] == 0);

    r = api.client->Get("/v1/nothing-here");
    REQUIRE(r);
    CHECK(r->status == 404);
    CHECK(body_of(r)["code"] == "NotFound");

    r = api.client->Options("/v1/videos");
    REQUIRE(r);
    CHECK(r->status == 204);
    CHECK(r->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
  }

  TEST_CASE("contribution submission") {
    Api api;
    const json good{{"sentence_id", "pv:1"}, {"proposed_text", kFix}};
    auto r = api.post("/v1/contributions", good.dump(), "");
    REQUIRE(r);
    CHECK(r->status == 401);
    CHECK(body_of(r)["code"] == "Unauthenticated");
    r = api.post("/v1/contributions", good.dump(), "wrong-token");
    REQUIRE(r);
    CHECK(r->status == 401);

    r = api.post("/v1/contributions", "{not json", "alice-token");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(body_of(r)["code"] == "MalformedRequest");
    r = api.post("/v1/contributions", json{{"sentence_id", 3}}.dump(), "alice-token");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = api.post("/v1/contributions", json{{"sentence_id", "pv:1"}, {"proposed_text", " "}}.dump(),
                 "alice-token");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(body_of(r)["code"] == "EmptyProposal");
    r = api.post("/v1/contributions",
                 json{{"sentence_id", "pv:1"}, {"proposed_text", kHomonym}}.dump(), "alice-token");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(body_of(r)["code"] == "NoOpProposal");
    r = api.post("/v1/contributions", json{{"sentence_id", "pv:7"}, {"proposed_text", "x"}}.dump(),
                 "alice-token");
    REQUIRE(r);
    CHECK(r->status == 404);
    CHECK(body_of(r)["details"]["sentence_id"] == "pv:7");

    r = api.post("/v1/contributions", good.dump(), "alice-token");
    REQUIRE(r);
    CHECK(r->status == 201);
    const auto created = body_of(r);
    CHECK(created["state"] == "pending");
    CHECK(created["user_id"] == "alice");
    r = api.post("/v1/contributions", good.dump(), "alice-token");
    REQUIRE(r);
    CHECK(body_of(r)["contribution_id"] == created["contribution_id"]);
  }

  TEST_CASE("listing, crawler pass and visibility") {
    Api api;
    api.post("/v1/contributions", json{{"sentence_id", "pv:1"}, {"proposed_text", kFix}}.dump(),
             "alice-token");
    api.post("/v1/contributions",
             json{{"sentence_id", "pv:1"}, {"proposed_text", "Algo distinto."}}.dump(),
             "alice-token");

    auto r = api.post("/v1/admin/crawler-pass", "", "");
    REQUIRE(r);
    CHECK(r->status == 401);
    r = api.post("/v1/admin/crawler-pass", "", "bob-token");
    REQUIRE(r);
    CHECK(r->status == 403);
    CHECK(body_of(r)["code"] == "Forbidden");
    r = api.post("/v1/admin/crawler-pass", "", "admin-token");
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto summary = body_of(r);
    CHECK(summary["accepted"] == 1);
    CHECK(summary["rejected"] == 1);
    CHECK(summary["tasks"].size() == 1);
    CHECK(api.notified == 1);

    r = api.client->Get("/v1/contributions", Api::bearer("alice-token"));
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(r)["user"] == "alice");
    CHECK(body_of(r)["contributions"].size() == 2);
    r = api.client->Get("/v1/contributions?user=alice", Api::bearer("bob-token"));
    REQUIRE(r);
    const auto visible = body_of(r)["contributions"];
    REQUIRE(visible.size() == 1);
    CHECK(visible[0]["state"] == "accepted");
    r = api.client->Get("/v1/contributions?user=alice");
    REQUIRE(r);
    CHECK(r->status == 401);

    r = api.client->Get("/v1/videos/pv/artifact");
    REQUIRE(r);
    CHECK(body_of(r)["active_task"]["state"] == "queued");
    r = api.client->Get("/v1/videos/pv/sentences");
    REQUIRE(r);
    CHECK(body_of(r)["sentences"][1]["current_translation"] == kFix);
  }
}
