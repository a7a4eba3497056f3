#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vidloc/confidence.hpp"

struct sqlite3;

namespace vidloc {

struct VideoRecord {
  std::string video_id;
  Subject subject = Subject::Reading;
  ThresholdPolicy policy;
  std::string source_language;
  std::string target_language;
  Millis duration{0};
  std::optional<std::filesystem::path> source_video;
  std::filesystem::path build_dir;
  int artifact_version = 0;
  std::optional<std::filesystem::path> artifact_dir;
  std::optional<std::filesystem::path> artifact_video;
  std::string updated_at;
};

struct SentenceRecord {
  std::string sentence_id;  // "<video_id>:<index>"
  std::string video_id;
  std::size_t index = 0;
  std::string original_text;
  std::string current_translation;
  double current_f1 = 0.0;
  bool flagged = true;
  int version = 1;
  Millis slot_start{0};
  Millis slot_end{0};

  bool operator==(const SentenceRecord&) const = default;
};

std::string make_sentence_id(std::string_view video_id, std::size_t index);

enum class ContributionState { Pending, Accepted, Rejected, Superseded };
std::string_view to_string(ContributionState state);
std::optional<ContributionState> contribution_state_from_string(std::string_view name);

struct Contribution {
  std::int64_t contribution_id = 0;
  std::string sentence_id;
  std::string user_id;
  std::string proposed_text;
  std::string submitted_at;
  std::optional<double> round_trip_f1;
  std::optional<std::string> back_translated_text;
  ContributionState state = ContributionState::Pending;
  std::optional<std::string> evaluated_at;

  bool operator==(const Contribution&) const = default;
};

enum class TaskState { Queued, Running, Done, Failed };
std::string_view to_string(TaskState state);
std::optional<TaskState> task_state_from_string(std::string_view name);

struct RecompileTask {
  std::int64_t task_id = 0;
  std::string video_id;
  std::vector<std::int64_t> triggered_by;
  TaskState state = TaskState::Queued;
  bool rerun = false;  // new triggers arrived while running
  std::string diagnostics;
  std::string created_at;
  std::string updated_at;
};

// One accepted change: who, when, scores and texts before/after.
struct AuditEntry {
  std::int64_t audit_id = 0;
  std::int64_t contribution_id = 0;
  std::string sentence_id;
  std::string user_id;
  std::string at;
  double f1_before = 0.0;
  double f1_after = 0.0;
  std::string text_before;
  std::string text_after;
  int version_after = 0;
};

struct VideoSummary {
  std::string video_id;
  std::size_t sentence_count = 0;
  std::size_t flagged_count = 0;
  int artifact_version = 0;
};

/// SQLite-backed persistence. One connection guarded by a mutex; every
/// method is safe to call concurrently, and transaction() groups calls
/// atomically. Errors surface as Error(StorageFailure).
class Store {
 public:
  // ":memory:" gives a private in-memory database.
  explicit Store(const std::string& path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void transaction(const std::function<void()>& body);

  bool insert_video(const VideoRecord& video);
  std::optional<VideoRecord> get_video(const std::string& video_id);
  std::vector<VideoSummary> list_videos();
  void set_artifact(const std::string& video_id, int version, const std::filesystem::path& dir,
                    const std::optional<std::filesystem::path>& video);

  void insert_sentence(const SentenceRecord& sentence);
  std::optional<SentenceRecord> get_sentence(const std::string& sentence_id);
  std::vector<SentenceRecord> list_sentences(const std::string& video_id);
  void update_sentence(const SentenceRecord& sentence);

  Contribution insert_contribution(const Contribution& c);
  std::optional<Contribution> find_contribution(const std::string& sentence_id,
                                                const std::string& user_id,
                                                const std::string& proposed_text);
  std::optional<Contribution> get_contribution(std::int64_t id);
  std::vector<Contribution> contributions_by_user(const std::string& user_id);
  std::vector<Contribution> contributions_for_sentence(const std::string& sentence_id);
  // Ordered by sentence, then submission order.
  std::vector<Contribution> pending_contributions();
  void update_contribution(const Contribution& c);

  // Queued or running task for the video, if any.
  std::optional<RecompileTask> active_task(const std::string& video_id);
  RecompileTask insert_task(const RecompileTask& task);
  std::optional<RecompileTask> get_task(std::int64_t task_id);
  std::vector<RecompileTask> tasks_in_state(TaskState state);
  std::vector<RecompileTask> tasks_for_video(const std::string& video_id);
  void update_task(const RecompileTask& task);

  void insert_audit(const AuditEntry& entry);
  std::vector<AuditEntry> audit_for_sentence(const std::string& sentence_id);

 private:
  class Statement;
  void exec(const char* sql);

  std::recursive_mutex mu_;
  sqlite3* db_ = nullptr;
  int depth_ = 0;
};

}  // namespace vidloc
