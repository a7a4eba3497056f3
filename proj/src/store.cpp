#include "vidloc/store.hpp"

#include <sqlite3.h>

#include <json.hpp>

#include "vidloc/error.hpp"
#include "vidloc/util.hpp"

namespace vidloc {

using json = nlohmann::json;

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS videos (
  video_id TEXT PRIMARY KEY,
  subject TEXT NOT NULL,
  policy TEXT NOT NULL,
  source_language TEXT NOT NULL,
  target_language TEXT NOT NULL,
  duration_ms INTEGER NOT NULL,
  source_video TEXT,
  build_dir TEXT NOT NULL,
  artifact_version INTEGER NOT NULL DEFAULT 0,
  artifact_dir TEXT,
  artifact_video TEXT,
  updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sentences (
  sentence_id TEXT PRIMARY KEY,
  video_id TEXT NOT NULL REFERENCES videos(video_id),
  idx INTEGER NOT NULL,
  original_text TEXT NOT NULL,
  current_translation TEXT NOT NULL,
  current_f1 REAL NOT NULL,
  flagged INTEGER NOT NULL,
  version INTEGER NOT NULL,
  slot_start_ms INTEGER NOT NULL,
  slot_end_ms INTEGER NOT NULL,
  UNIQUE (video_id, idx)
);
CREATE TABLE IF NOT EXISTS contributions (
  contribution_id INTEGER PRIMARY KEY AUTOINCREMENT,
  sentence_id TEXT NOT NULL REFERENCES sentences(sentence_id),
  user_id TEXT NOT NULL,
  proposed_text TEXT NOT NULL,
  submitted_at TEXT NOT NULL,
  round_trip_f1 REAL,
  back_translated_text TEXT,
  state TEXT NOT NULL,
  evaluated_at TEXT,
  UNIQUE (sentence_id, user_id, proposed_text)
);
CREATE INDEX IF NOT EXISTS contributions_by_state ON contributions(state, sentence_id);
CREATE INDEX IF NOT EXISTS contributions_by_user ON contributions(user_id);
CREATE TABLE IF NOT EXISTS tasks (
  task_id INTEGER PRIMARY KEY AUTOINCREMENT,
  video_id TEXT NOT NULL REFERENCES videos(video_id),
  triggered_by TEXT NOT NULL,
  state TEXT NOT NULL,
  rerun INTEGER NOT NULL DEFAULT 0,
  diagnostics TEXT NOT NULL DEFAULT '',
  created_at TEXT NOT NULL,
  updated_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS audit (
  audit_id INTEGER PRIMARY KEY AUTOINCREMENT,
  contribution_id INTEGER NOT NULL,
  sentence_id TEXT NOT NULL,
  user_id TEXT NOT NULL,
  at TEXT NOT NULL,
  f1_before REAL NOT NULL,
  f1_after REAL NOT NULL,
  text_before TEXT NOT NULL,
  text_after TEXT NOT NULL,
  version_after INTEGER NOT NULL
);
)sql";

std::string now() { return iso8601_utc(std::chrono::system_clock::now()); }

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
  throw Error(ErrorCode::StorageFailure, what + ": " + (db ? sqlite3_errmsg(db) : "no database"));
}

}  // namespace

class Store::Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail(db, "prepare");
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, const std::string& v) {
    check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  Statement& bind(int i, double v) {
    check(sqlite3_bind_double(stmt_, i, v));
    return *this;
  }
  template <class T>
  Statement& bind(int i, const std::optional<T>& v) {
    if (v) return bind(i, *v);
    check(sqlite3_bind_null(stmt_, i));
    return *this;
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CONSTRAINT) {
      throw Error(ErrorCode::StorageFailure,
                  std::string("constraint violated: ") + sqlite3_errmsg(db_));
    }
    fail(db_, "step");
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  std::optional<std::string> opt_text(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    return text(col);
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  std::optional<double> opt_real(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    return real(col);
  }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(db_, "bind");
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

namespace {

std::optional<std::filesystem::path> opt_path(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return std::filesystem::path(*s);
}

std::optional<std::string> opt_string(const std::optional<std::filesystem::path>& p) {
  if (!p) return std::nullopt;
  return p->string();
}

}  // namespace

std::string make_sentence_id(std::string_view video_id, std::size_t index) {
  return std::string(video_id) + ":" + std::to_string(index);
}

std::string_view to_string(ContributionState state) {
  switch (state) {
    case ContributionState::Pending: return "pending";
    case ContributionState::Accepted: return "accepted";
    case ContributionState::Rejected: return "rejected";
    case ContributionState::Superseded: return "superseded";
  }
  return "pending";
}

std::optional<ContributionState> contribution_state_from_string(std::string_view name) {
  if (name == "pending") return ContributionState::Pending;
  if (name == "accepted") return ContributionState::Accepted;
  if (name == "rejected") return ContributionState::Rejected;
  if (name == "superseded") return ContributionState::Superseded;
  return std::nullopt;
}

std::string_view to_string(TaskState state) {
  switch (state) {
    case TaskState::Queued: return "queued";
    case TaskState::Running: return "running";
    case TaskState::Done: return "done";
    case TaskState::Failed: return "failed";
  }
  return "queued";
}

std::optional<TaskState> task_state_from_string(std::string_view name) {
  if (name == "queued") return TaskState::Queued;
  if (name == "running") return TaskState::Running;
  if (name == "done") return TaskState::Done;
  if (name == "failed") return TaskState::Failed;
  return std::nullopt;
}

Store::Store(const std::string& path) {
  if (sqlite3_open_v2(path.c_str(), &db_,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::StorageFailure, "cannot open " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA foreign_keys = ON");
  exec("PRAGMA journal_mode = WAL");
  exec(kSchema);
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    const std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::StorageFailure, msg);
  }
}

void Store::transaction(const std::function<void()>& body) {
  std::lock_guard lock(mu_);
  if (depth_ > 0) {
    ++depth_;
    try {
      body();
    } catch (...) {
      --depth_;
      throw;
    }
    --depth_;
    return;
  }
  exec("BEGIN IMMEDIATE");
  depth_ = 1;
  try {
    body();
    exec("COMMIT");
  } catch (...) {
    depth_ = 0;
    char* err = nullptr;
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, &err);
    sqlite3_free(err);
    throw;
  }
  depth_ = 0;
}

bool Store::insert_video(const VideoRecord& v) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "INSERT OR IGNORE INTO videos (video_id, subject, policy, source_language, "
               "target_language, duration_ms, source_video, build_dir, artifact_version, "
               "artifact_dir, artifact_video, updated_at) VALUES (?,?,?,?,?,?,?,?,?,?,?,?)");
  st.bind(1, v.video_id)
      .bind(2, std::string(to_string(v.subject)))
      .bind(3, to_json(v.policy).dump())
      .bind(4, v.source_language)
      .bind(5, v.target_language)
      .bind(6, static_cast<std::int64_t>(v.duration.count()))
      .bind(7, opt_string(v.source_video))
      .bind(8, v.build_dir.string())
      .bind(9, static_cast<std::int64_t>(v.artifact_version))
      .bind(10, opt_string(v.artifact_dir))
      .bind(11, opt_string(v.artifact_video))
      .bind(12, v.updated_at.empty() ? now() : v.updated_at);
  st.run();
  return sqlite3_changes(db_) > 0;
}

std::optional<VideoRecord> Store::get_video(const std::string& video_id) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "SELECT video_id, subject, policy, source_language, target_language, duration_ms, "
               "source_video, build_dir, artifact_version, artifact_dir, artifact_video, "
               "updated_at FROM videos WHERE video_id = ?");
  st.bind(1, video_id);
  if (!st.step()) return std::nullopt;
  VideoRecord v;
  v.video_id = st.text(0);
  v.subject = subject_from_string(st.text(1)).value_or(Subject::Other);
  try {
    v.policy = threshold_policy_from_json(json::parse(st.text(2)), v.subject);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::StorageFailure, "corrupt policy for " + v.video_id + ": " + e.what());
  }
  v.source_language = st.text(3);
  v.target_language = st.text(4);
  v.duration = Millis{st.integer(5)};
  v.source_video = opt_path(st.opt_text(6));
  v.build_dir = st.text(7);
  v.artifact_version = static_cast<int>(st.integer(8));
  v.artifact_dir = opt_path(st.opt_text(9));
  v.artifact_video = opt_path(st.opt_text(10));
  v.updated_at = st.text(11);
  return v;
}

std::vector<VideoSummary> Store::list_videos() {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "SELECT v.video_id, COUNT(s.sentence_id), COALESCE(SUM(s.flagged), 0), "
               "v.artifact_version FROM videos v LEFT JOIN sentences s ON s.video_id = v.video_id "
               "GROUP BY v.video_id ORDER BY v.video_id");
  std::vector<VideoSummary> out;
  while (st.step()) {
    out.push_back({st.text(0), static_cast<std::size_t>(st.integer(1)),
                   static_cast<std::size_t>(st.integer(2)), static_cast<int>(st.integer(3))});
  }
  return out;
}

void Store::set_artifact(const std::string& video_id, int version,
                         const std::filesystem::path& dir,
                         const std::optional<std::filesystem::path>& video) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "UPDATE videos SET artifact_version = ?, artifact_dir = ?, artifact_video = ?, "
               "updated_at = ? WHERE video_id = ?");
  st.bind(1, static_cast<std::int64_t>(version))
      .bind(2, dir.string())
      .bind(3, opt_string(video))
      .bind(4, now())
      .bind(5, video_id);
  st.run();
  if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::UnknownVideo, "unknown video " + video_id);
}

namespace {
constexpr const char* kSentenceColumns =
    "sentence_id, video_id, idx, original_text, current_translation, current_f1, flagged, "
    "version, slot_start_ms, slot_end_ms";
}  // namespace

void Store::insert_sentence(const SentenceRecord& s) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("INSERT INTO sentences (") + kSentenceColumns +
                     ") VALUES (?,?,?,?,?,?,?,?,?,?)")
                        .c_str());
  st.bind(1, s.sentence_id)
      .bind(2, s.video_id)
      .bind(3, static_cast<std::int64_t>(s.index))
      .bind(4, s.original_text)
      .bind(5, s.current_translation)
      .bind(6, s.current_f1)
      .bind(7, static_cast<std::int64_t>(s.flagged ? 1 : 0))
      .bind(8, static_cast<std::int64_t>(s.version))
      .bind(9, static_cast<std::int64_t>(s.slot_start.count()))
      .bind(10, static_cast<std::int64_t>(s.slot_end.count()));
  st.run();
}

namespace {
template <class Stmt>
SentenceRecord read_sentence(const Stmt& st) {
  SentenceRecord s;
  s.sentence_id = st.text(0);
  s.video_id = st.text(1);
  s.index = static_cast<std::size_t>(st.integer(2));
  s.original_text = st.text(3);
  s.current_translation = st.text(4);
  s.current_f1 = st.real(5);
  s.flagged = st.integer(6) != 0;
  s.version = static_cast<int>(st.integer(7));
  s.slot_start = Millis{st.integer(8)};
  s.slot_end = Millis{st.integer(9)};
  return s;
}
}  // namespace

std::optional<SentenceRecord> Store::get_sentence(const std::string& sentence_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kSentenceColumns +
                     " FROM sentences WHERE sentence_id = ?")
                        .c_str());
  st.bind(1, sentence_id);
  if (!st.step()) return std::nullopt;
  return read_sentence(st);
}

std::vector<SentenceRecord> Store::list_sentences(const std::string& video_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kSentenceColumns +
                     " FROM sentences WHERE video_id = ? ORDER BY idx")
                        .c_str());
  st.bind(1, video_id);
  std::vector<SentenceRecord> out;
  while (st.step()) out.push_back(read_sentence(st));
  return out;
}

void Store::update_sentence(const SentenceRecord& s) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "UPDATE sentences SET current_translation = ?, current_f1 = ?, flagged = ?, "
               "version = ? WHERE sentence_id = ?");
  st.bind(1, s.current_translation)
      .bind(2, s.current_f1)
      .bind(3, static_cast<std::int64_t>(s.flagged ? 1 : 0))
      .bind(4, static_cast<std::int64_t>(s.version))
      .bind(5, s.sentence_id);
  st.run();
  if (sqlite3_changes(db_) == 0) {
    throw Error(ErrorCode::UnknownSentence, "unknown sentence " + s.sentence_id);
  }
}

namespace {
constexpr const char* kContributionColumns =
    "contribution_id, sentence_id, user_id, proposed_text, submitted_at, round_trip_f1, "
    "back_translated_text, state, evaluated_at";

template <class Stmt>
Contribution read_contribution(const Stmt& st) {
  Contribution c;
  c.contribution_id = st.integer(0);
  c.sentence_id = st.text(1);
  c.user_id = st.text(2);
  c.proposed_text = st.text(3);
  c.submitted_at = st.text(4);
  c.round_trip_f1 = st.opt_real(5);
  c.back_translated_text = st.opt_text(6);
  c.state = contribution_state_from_string(st.text(7)).value_or(ContributionState::Pending);
  c.evaluated_at = st.opt_text(8);
  return c;
}
}  // namespace

Contribution Store::insert_contribution(const Contribution& c) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "INSERT INTO contributions (sentence_id, user_id, proposed_text, submitted_at, "
               "round_trip_f1, back_translated_text, state, evaluated_at) "
               "VALUES (?,?,?,?,?,?,?,?)");
  Contribution out = c;
  if (out.submitted_at.empty()) out.submitted_at = now();
  st.bind(1, out.sentence_id)
      .bind(2, out.user_id)
      .bind(3, out.proposed_text)
      .bind(4, out.submitted_at)
      .bind(5, out.round_trip_f1)
      .bind(6, out.back_translated_text)
      .bind(7, std::string(to_string(out.state)))
      .bind(8, out.evaluated_at);
  st.run();
  out.contribution_id = sqlite3_last_insert_rowid(db_);
  return out;
}

std::optional<Contribution> Store::find_contribution(const std::string& sentence_id,
                                                     const std::string& user_id,
                                                     const std::string& proposed_text) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kContributionColumns +
                     " FROM contributions WHERE sentence_id = ? AND user_id = ? AND "
                     "proposed_text = ?")
                        .c_str());
  st.bind(1, sentence_id).bind(2, user_id).bind(3, proposed_text);
  if (!st.step()) return std::nullopt;
  return read_contribution(st);
}

std::optional<Contribution> Store::get_contribution(std::int64_t id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kContributionColumns +
                     " FROM contributions WHERE contribution_id = ?")
                        .c_str());
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return read_contribution(st);
}

std::vector<Contribution> Store::contributions_by_user(const std::string& user_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kContributionColumns +
                     " FROM contributions WHERE user_id = ? ORDER BY contribution_id")
                        .c_str());
  st.bind(1, user_id);
  std::vector<Contribution> out;
  while (st.step()) out.push_back(read_contribution(st));
  return out;
}

std::vector<Contribution> Store::contributions_for_sentence(const std::string& sentence_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kContributionColumns +
                     " FROM contributions WHERE sentence_id = ? ORDER BY contribution_id")
                        .c_str());
  st.bind(1, sentence_id);
  std::vector<Contribution> out;
  while (st.step()) out.push_back(read_contribution(st));
  return out;
}

std::vector<Contribution> Store::pending_contributions() {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kContributionColumns +
                     " FROM contributions WHERE state = 'pending' "
                     "ORDER BY sentence_id, contribution_id")
                        .c_str());
  std::vector<Contribution> out;
  while (st.step()) out.push_back(read_contribution(st));
  return out;
}

void Store::update_contribution(const Contribution& c) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "UPDATE contributions SET round_trip_f1 = ?, back_translated_text = ?, state = ?, "
               "evaluated_at = ? WHERE contribution_id = ?");
  st.bind(1, c.round_trip_f1)
      .bind(2, c.back_translated_text)
      .bind(3, std::string(to_string(c.state)))
      .bind(4, c.evaluated_at)
      .bind(5, c.contribution_id);
  st.run();
  if (sqlite3_changes(db_) == 0) {
    throw Error(ErrorCode::StorageFailure,
                "unknown contribution " + std::to_string(c.contribution_id));
  }
}

namespace {
constexpr const char* kTaskColumns =
    "task_id, video_id, triggered_by, state, rerun, diagnostics, created_at, updated_at";

template <class Stmt>
RecompileTask read_task(const Stmt& st) {
  RecompileTask t;
  t.task_id = st.integer(0);
  t.video_id = st.text(1);
  const auto ids = json::parse(st.text(2), nullptr, false);
  if (ids.is_array()) {
    for (const auto& id : ids) t.triggered_by.push_back(id.template get<std::int64_t>());
  }
  t.state = task_state_from_string(st.text(3)).value_or(TaskState::Failed);
  t.rerun = st.integer(4) != 0;
  t.diagnostics = st.text(5);
  t.created_at = st.text(6);
  t.updated_at = st.text(7);
  return t;
}
}  // namespace

std::optional<RecompileTask> Store::active_task(const std::string& video_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kTaskColumns +
                     " FROM tasks WHERE video_id = ? AND state IN ('queued', 'running') "
                     "ORDER BY task_id LIMIT 1")
                        .c_str());
  st.bind(1, video_id);
  if (!st.step()) return std::nullopt;
  return read_task(st);
}

RecompileTask Store::insert_task(const RecompileTask& task) {
  std::lock_guard lock(mu_);
  RecompileTask out = task;
  out.created_at = out.updated_at = now();
  Statement st(db_,
               "INSERT INTO tasks (video_id, triggered_by, state, rerun, diagnostics, created_at, "
               "updated_at) VALUES (?,?,?,?,?,?,?)");
  st.bind(1, out.video_id)
      .bind(2, json(out.triggered_by).dump())
      .bind(3, std::string(to_string(out.state)))
      .bind(4, static_cast<std::int64_t>(out.rerun ? 1 : 0))
      .bind(5, out.diagnostics)
      .bind(6, out.created_at)
      .bind(7, out.updated_at);
  st.run();
  out.task_id = sqlite3_last_insert_rowid(db_);
  return out;
}

std::optional<RecompileTask> Store::get_task(std::int64_t task_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kTaskColumns + " FROM tasks WHERE task_id = ?")
                        .c_str());
  st.bind(1, task_id);
  if (!st.step()) return std::nullopt;
  return read_task(st);
}

std::vector<RecompileTask> Store::tasks_in_state(TaskState state) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kTaskColumns +
                     " FROM tasks WHERE state = ? ORDER BY task_id")
                        .c_str());
  st.bind(1, std::string(to_string(state)));
  std::vector<RecompileTask> out;
  while (st.step()) out.push_back(read_task(st));
  return out;
}

std::vector<RecompileTask> Store::tasks_for_video(const std::string& video_id) {
  std::lock_guard lock(mu_);
  Statement st(db_, (std::string("SELECT ") + kTaskColumns +
                     " FROM tasks WHERE video_id = ? ORDER BY task_id")
                        .c_str());
  st.bind(1, video_id);
  std::vector<RecompileTask> out;
  while (st.step()) out.push_back(read_task(st));
  return out;
}

void Store::update_task(const RecompileTask& task) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "UPDATE tasks SET triggered_by = ?, state = ?, rerun = ?, diagnostics = ?, "
               "updated_at = ? WHERE task_id = ?");
  st.bind(1, json(task.triggered_by).dump())
      .bind(2, std::string(to_string(task.state)))
      .bind(3, static_cast<std::int64_t>(task.rerun ? 1 : 0))
      .bind(4, task.diagnostics)
      .bind(5, now())
      .bind(6, task.task_id);
  st.run();
  if (sqlite3_changes(db_) == 0) {
    throw Error(ErrorCode::UnknownTask, "unknown task " + std::to_string(task.task_id));
  }
}

void Store::insert_audit(const AuditEntry& e) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "INSERT INTO audit (contribution_id, sentence_id, user_id, at, f1_before, "
               "f1_after, text_before, text_after, version_after) VALUES (?,?,?,?,?,?,?,?,?)");
  st.bind(1, e.contribution_id)
      .bind(2, e.sentence_id)
      .bind(3, e.user_id)
      .bind(4, e.at.empty() ? now() : e.at)
      .bind(5, e.f1_before)
      .bind(6, e.f1_after)
      .bind(7, e.text_before)
      .bind(8, e.text_after)
      .bind(9, static_cast<std::int64_t>(e.version_after));
  st.run();
}

std::vector<AuditEntry> Store::audit_for_sentence(const std::string& sentence_id) {
  std::lock_guard lock(mu_);
  Statement st(db_,
               "SELECT audit_id, contribution_id, sentence_id, user_id, at, f1_before, f1_after, "
               "text_before, text_after, version_after FROM audit WHERE sentence_id = ? "
               "ORDER BY audit_id");
  st.bind(1, sentence_id);
  std::vector<AuditEntry> out;
  while (st.step()) {
    AuditEntry e;
    e.audit_id = st.integer(0);
    e.contribution_id = st.integer(1);
    e.sentence_id = st.text(2);
    e.user_id = st.text(3);
    e.at = st.text(4);
    e.f1_before = st.real(5);
    e.f1_after = st.real(6);
    e.text_before = st.text(7);
    e.text_after = st.text(8);
    e.version_after = static_cast<int>(st.integer(9));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace vidloc
