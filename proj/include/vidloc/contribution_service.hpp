#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vidloc/confidence.hpp"
#include "vidloc/pipeline.hpp"
#include "vidloc/store.hpp"

namespace vidloc {

struct Identity {
  std::string user_id;
  bool admin = false;
};

class Authenticator {
 public:
  virtual ~Authenticator() = default;
  // nullopt for unknown tokens.
  virtual std::optional<Identity> authenticate(std::string_view bearer_token) const = 0;
};

/// Fixed token table. File format: {"tokens": [{"token", "user", "admin"?}]}.
class TokenAuthenticator final : public Authenticator {
 public:
  TokenAuthenticator() = default;
  explicit TokenAuthenticator(const std::map<std::string, Identity>& tokens)
      : tokens_(tokens.begin(), tokens.end()) {}

  static TokenAuthenticator load(const std::filesystem::path& path);
  static TokenAuthenticator parse(std::string_view json_text);

  void add(std::string token, Identity identity) { tokens_[std::move(token)] = std::move(identity); }
  std::optional<Identity> authenticate(std::string_view bearer_token) const override;

 private:
  std::map<std::string, Identity, std::less<>> tokens_;
};

struct CrawlerSummary {
  std::size_t evaluated = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t superseded = 0;
  std::size_t still_pending = 0;  // provider errors; retried next pass
  std::vector<RecompileTask> tasks;
};

struct ArtifactInfo {
  std::string video_id;
  int version = 0;
  std::optional<std::filesystem::path> dir;
  std::optional<std::filesystem::path> video;
  std::string updated_at;
  std::optional<RecompileTask> active_task;
};

nlohmann::json to_json(const SentenceRecord& s);
nlohmann::json to_json(const Contribution& c);
nlohmann::json to_json(const RecompileTask& t);
nlohmann::json to_json(const CrawlerSummary& s);
nlohmann::json to_json(const ArtifactInfo& a);
nlohmann::json to_json(const VideoSummary& v);

/// Sentence store, contributions, crawler and recompilation.
class ContributionService {
 public:
  // `crawler` scores proposals: back-translation plus the f1 scorer.
  ContributionService(std::shared_ptr<Store> store, RoundTripProviders crawler);

  /// Seeds a completed pipeline result. Returns false when the video is
  /// already published (nothing changes).
  bool publish(const PipelineResult& result, const ThresholdPolicy& policy,
               std::string source_language, std::string target_language);

  std::vector<VideoSummary> list_videos();
  // Throws UnknownVideo.
  std::vector<SentenceRecord> list_sentences(const std::string& video_id);

  /// Throws Unauthenticated (no identity), UnknownSentence, EmptyProposal,
  /// NoOpProposal. Resubmitting the same (sentence, user, text) returns the
  /// existing contribution.
  Contribution submit_contribution(const std::optional<Identity>& who,
                                   const std::string& sentence_id,
                                   const std::string& proposed_text);

  // A user's submissions; rejected ones are shown to their author only.
  std::vector<Contribution> list_contributions(const std::optional<Identity>& who,
                                               const std::string& user_id);

  /// Scores every pending contribution. Per sentence, the highest scorer
  /// strictly above current_f1 is accepted (earliest on ties); others above
  /// current_f1 are superseded, the rest rejected. One recompile task per
  /// affected video. Passes never overlap.
  CrawlerSummary crawler_pass();

  /// Runs one queued task: re-synthesizes from stored texts, re-plans and
  /// re-renders into a new version directory. On failure the task is marked
  /// failed and the previous artifact stays current. Throws UnknownTask.
  RecompileTask recompile(std::int64_t task_id, const Pipeline& pipeline);

  // Runs every queued task; returns how many ran.
  std::size_t drain_tasks(const Pipeline& pipeline);

  ArtifactInfo artifact(const std::string& video_id);

  Store& store() { return *store_; }

 private:
  std::shared_ptr<Store> store_;
  RoundTripProviders crawler_;
  std::mutex pass_mu_;
};

/// Background crawler on a fixed interval plus a recompile worker pool.
class ServiceScheduler {
 public:
  ServiceScheduler(ContributionService& service, const Pipeline& pipeline,
                   std::chrono::milliseconds interval = std::chrono::minutes(10),
                   std::size_t recompile_workers = 1);
  ~ServiceScheduler();

  void start();
  void stop();
  // Wakes the recompile workers after tasks were queued out of band.
  void notify();

 private:
  void crawler_loop();
  void worker_loop();

  ContributionService& service_;
  const Pipeline& pipeline_;
  std::chrono::milliseconds interval_;
  std::size_t workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::uint64_t wake_ = 0;
  std::vector<std::thread> threads_;
};

}  // namespace vidloc
