#include "vidloc/contribution_service.hpp"

#include <spdlog/spdlog.h>

#include "vidloc/error.hpp"
#include "vidloc/util.hpp"

namespace vidloc {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string now() { return iso8601_utc(std::chrono::system_clock::now()); }

double f1_threshold(const VideoRecord& video) {
  if (video.policy.f1_threshold) return *video.policy.f1_threshold;
  return ThresholdPolicy::defaults(video.subject).f1_threshold.value_or(1.0);
}

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(); }
json opt(const std::optional<double>& v) { return v ? json(*v) : json(); }
json opt(const std::optional<fs::path>& v) { return v ? json(v->string()) : json(); }

}  // namespace

TokenAuthenticator TokenAuthenticator::parse(std::string_view json_text) {
  const auto doc = json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (!doc.is_object() || !doc.contains("tokens") || !doc["tokens"].is_array()) {
    throw Error(ErrorCode::InvalidConfig, "token file must be {\"tokens\": [...]}");
  }
  TokenAuthenticator auth;
  try {
    for (const auto& t : doc["tokens"]) {
      const auto token = t.at("token").get<std::string>();
      const auto user = t.at("user").get<std::string>();
      if (token.empty() || user.empty()) {
        throw Error(ErrorCode::InvalidConfig, "token and user must be non-empty");
      }
      auth.add(token, Identity{user, t.value("admin", false)});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("token file: ") + e.what());
  }
  return auth;
}

TokenAuthenticator TokenAuthenticator::load(const fs::path& path) { return parse(read_file(path)); }

std::optional<Identity> TokenAuthenticator::authenticate(std::string_view bearer_token) const {
  const auto it = tokens_.find(bearer_token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

ContributionService::ContributionService(std::shared_ptr<Store> store, RoundTripProviders crawler)
    : store_(std::move(store)), crawler_(std::move(crawler)) {
  if (!store_) throw Error(ErrorCode::PreconditionViolation, "service needs a store");
  if (!crawler_.back || !crawler_.f1) {
    throw Error(ErrorCode::InvalidConfig, "crawler needs back-translation and f1 providers");
  }
}

bool ContributionService::publish(const PipelineResult& result, const ThresholdPolicy& policy,
                                  std::string source_language, std::string target_language) {
  if (result.status != VideoStatus::Completed) {
    throw Error(ErrorCode::PreconditionViolation,
                "only completed videos can be published (" + result.video_id + " is " +
                    std::string(to_string(result.status)) + ")");
  }
  policy.validate();
  bool inserted = false;
  store_->transaction([&] {
    VideoRecord v;
    v.video_id = result.video_id;
    v.subject = policy.subject;
    v.policy = policy;
    v.source_language = std::move(source_language);
    v.target_language = std::move(target_language);
    v.duration = result.video_duration;
    v.source_video = result.source_video;
    v.build_dir = result.artifacts.build_dir;
    v.artifact_dir = result.artifacts.build_dir;
    v.artifact_video = result.artifacts.video;
    inserted = store_->insert_video(v);
    if (!inserted) return;
    const double threshold = f1_threshold(v);
    for (const auto& r : result.sentences) {
      SentenceRecord s;
      s.video_id = v.video_id;
      s.index = r.sentence.index;
      s.sentence_id = make_sentence_id(v.video_id, s.index);
      s.original_text = r.sentence.original_text;
      s.current_translation = r.sentence.translated_text;
      s.current_f1 = r.score ? r.score->f1_score : 0.0;
      s.flagged = !r.score || s.current_f1 < threshold;
      s.version = 1;
      s.slot_start = r.sentence.slot_start;
      s.slot_end = r.sentence.slot_end;
      store_->insert_sentence(s);
    }
  });
  return inserted;
}

std::vector<VideoSummary> ContributionService::list_videos() { return store_->list_videos(); }

std::vector<SentenceRecord> ContributionService::list_sentences(const std::string& video_id) {
  if (!store_->get_video(video_id)) {
    throw Error(ErrorCode::UnknownVideo, "unknown video " + video_id);
  }
  return store_->list_sentences(video_id);
}

Contribution ContributionService::submit_contribution(const std::optional<Identity>& who,
                                                      const std::string& sentence_id,
                                                      const std::string& proposed_text) {
  if (!who || who->user_id.empty()) {
    throw Error(ErrorCode::Unauthenticated, "a valid bearer token is required");
  }
  const auto text_view = text::trim(proposed_text);
  if (text_view.empty()) throw Error(ErrorCode::EmptyProposal, "proposed_text is empty");
  if (!text::is_valid_utf8(text_view)) {
    throw Error(ErrorCode::PreconditionViolation, "proposed_text is not valid UTF-8");
  }
  const std::string text(text_view);

  Contribution out;
  store_->transaction([&] {
    const auto sentence = store_->get_sentence(sentence_id);
    if (!sentence) throw Error(ErrorCode::UnknownSentence, "unknown sentence " + sentence_id);
    if (auto existing = store_->find_contribution(sentence_id, who->user_id, text)) {
      out = *existing;
      return;
    }
    if (text == text::trim(sentence->current_translation)) {
      throw Error(ErrorCode::NoOpProposal, "proposal equals the current translation");
    }
    Contribution c;
    c.sentence_id = sentence_id;
    c.user_id = who->user_id;
    c.proposed_text = text;
    out = store_->insert_contribution(c);
  });
  return out;
}

std::vector<Contribution> ContributionService::list_contributions(
    const std::optional<Identity>& who, const std::string& user_id) {
  if (!who) throw Error(ErrorCode::Unauthenticated, "a valid bearer token is required");
  auto all = store_->contributions_by_user(user_id);
  if (who->user_id == user_id) return all;
  std::erase_if(all, [](const Contribution& c) { return c.state == ContributionState::Rejected; });
  return all;
}

CrawlerSummary ContributionService::crawler_pass() {
  std::lock_guard pass(pass_mu_);
  CrawlerSummary summary;

  std::map<std::string, std::vector<Contribution>> by_sentence;
  for (auto& c : store_->pending_contributions()) by_sentence[c.sentence_id].push_back(std::move(c));

  std::map<std::string, std::vector<std::int64_t>> accepted_by_video;
  for (auto& [sentence_id, pending] : by_sentence) {
    const auto sentence = store_->get_sentence(sentence_id);
    const auto video = sentence ? store_->get_video(sentence->video_id) : std::nullopt;
    if (!sentence || !video) {
      spdlog::warn("crawler: contributions reference missing sentence {}", sentence_id);
      summary.still_pending += pending.size();
      continue;
    }

    struct Scored {
      Contribution c;
      ConfidenceScore score;
    };
    std::vector<Scored> scored;
    for (const auto& c : pending) {
      AlignedSentence s;
      s.index = sentence->index;
      s.original_text = sentence->original_text;
      s.translated_text = c.proposed_text;
      try {
        scored.push_back({c, round_trip_score(s, video->source_language, video->target_language,
                                              {crawler_.back, crawler_.f1, nullptr})});
      } catch (const std::exception& e) {
        spdlog::warn("crawler: contribution {} left pending: {}", c.contribution_id, e.what());
        ++summary.still_pending;
      }
    }
    summary.evaluated += scored.size();

    std::optional<std::size_t> winner;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      const double f1 = scored[i].score.f1_score;
      if (f1 > sentence->current_f1 && (!winner || f1 > scored[*winner].score.f1_score)) {
        winner = i;
      }
    }

    store_->transaction([&] {
      const std::string at = now();
      for (std::size_t i = 0; i < scored.size(); ++i) {
        auto c = scored[i].c;
        c.round_trip_f1 = scored[i].score.f1_score;
        c.back_translated_text = scored[i].score.back_translated_text;
        c.evaluated_at = at;
        if (winner && i == *winner) {
          c.state = ContributionState::Accepted;
          SentenceRecord updated = *sentence;
          updated.current_translation = c.proposed_text;
          updated.current_f1 = *c.round_trip_f1;
          updated.version = sentence->version + 1;
          updated.flagged = updated.current_f1 < f1_threshold(*video);
          store_->update_sentence(updated);
          store_->insert_audit(AuditEntry{0, c.contribution_id, sentence_id, c.user_id, at,
                                          sentence->current_f1, updated.current_f1,
                                          sentence->current_translation, c.proposed_text,
                                          updated.version});
          ++summary.accepted;
        } else if (*c.round_trip_f1 > sentence->current_f1) {
          c.state = ContributionState::Superseded;
          ++summary.superseded;
        } else {
          c.state = ContributionState::Rejected;
          ++summary.rejected;
        }
        store_->update_contribution(c);
      }
    });
    if (winner) {
      accepted_by_video[sentence->video_id].push_back(scored[*winner].c.contribution_id);
    }
  }

  for (const auto& [video_id, ids] : accepted_by_video) {
    store_->transaction([&] {
      if (auto active = store_->active_task(video_id)) {
        active->triggered_by.insert(active->triggered_by.end(), ids.begin(), ids.end());
        if (active->state == TaskState::Running) active->rerun = true;
        store_->update_task(*active);
        summary.tasks.push_back(*store_->get_task(active->task_id));
      } else {
        RecompileTask t;
        t.video_id = video_id;
        t.triggered_by = ids;
        summary.tasks.push_back(store_->insert_task(t));
      }
    });
  }
  return summary;
}

RecompileTask ContributionService::recompile(std::int64_t task_id, const Pipeline& pipeline) {
  RecompileTask task;
  store_->transaction([&] {
    auto t = store_->get_task(task_id);
    if (!t) throw Error(ErrorCode::UnknownTask, "unknown task " + std::to_string(task_id));
    if (t->state != TaskState::Queued) {
      throw Error(ErrorCode::PreconditionViolation,
                  "task " + std::to_string(task_id) + " is " + std::string(to_string(t->state)));
    }
    t->state = TaskState::Running;
    t->rerun = false;
    store_->update_task(*t);
    task = *t;
  });

  try {
    const auto video = store_->get_video(task.video_id);
    if (!video) throw Error(ErrorCode::UnknownVideo, "unknown video " + task.video_id);
    RenderRequest req;
    req.video_id = video->video_id;
    req.language = video->target_language;
    for (const auto& s : store_->list_sentences(video->video_id)) {
      AlignedSentence a;
      a.index = s.index;
      a.original_text = s.original_text;
      a.translated_text = s.current_translation;
      a.slot_start = s.slot_start;
      a.slot_end = s.slot_end;
      req.sentences.push_back(std::move(a));
    }
    const int version = video->artifact_version + 1;
    req.video_duration = video->duration;
    req.source_video = video->source_video;
    req.work_dir = video->build_dir / ("v" + std::to_string(version));
    req.audio_dir = video->build_dir / "audio";
    req.video_output = req.work_dir / ("out." + pipeline.config().assembly.tool.container);
    const auto out = pipeline.render(req);

    store_->transaction([&] {
      store_->set_artifact(video->video_id, version, req.work_dir, out.video);
      auto t = *store_->get_task(task_id);
      t.state = t.rerun ? TaskState::Queued : TaskState::Done;
      t.rerun = false;
      t.diagnostics.clear();
      store_->update_task(t);
      task = t;
    });
  } catch (const std::exception& e) {
    spdlog::warn("recompile task {} failed: {}", task_id, e.what());
    auto t = store_->get_task(task_id).value_or(task);
    t.state = TaskState::Failed;
    t.diagnostics = e.what();
    store_->update_task(t);
    task = t;
  }
  return task;
}

std::size_t ContributionService::drain_tasks(const Pipeline& pipeline) {
  std::size_t ran = 0;
  for (;;) {
    const auto queued = store_->tasks_in_state(TaskState::Queued);
    if (queued.empty()) return ran;
    bool progressed = false;
    for (const auto& t : queued) {
      try {
        recompile(t.task_id, pipeline);
        ++ran;
        progressed = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::PreconditionViolation) throw;
      }
    }
    if (!progressed) return ran;
  }
}

ArtifactInfo ContributionService::artifact(const std::string& video_id) {
  const auto video = store_->get_video(video_id);
  if (!video) throw Error(ErrorCode::UnknownVideo, "unknown video " + video_id);
  return ArtifactInfo{video->video_id, video->artifact_version, video->artifact_dir,
                      video->artifact_video, video->updated_at, store_->active_task(video_id)};
}

json to_json(const SentenceRecord& s) {
  return json{{"sentence_id", s.sentence_id},
              {"video_id", s.video_id},
              {"index", s.index},
              {"original_text", s.original_text},
              {"current_translation", s.current_translation},
              {"current_f1", s.current_f1},
              {"flagged", s.flagged},
              {"version", s.version},
              {"slot_start_ms", s.slot_start.count()},
              {"slot_end_ms", s.slot_end.count()}};
}

json to_json(const Contribution& c) {
  return json{{"contribution_id", c.contribution_id},
              {"sentence_id", c.sentence_id},
              {"user_id", c.user_id},
              {"proposed_text", c.proposed_text},
              {"submitted_at", c.submitted_at},
              {"round_trip_f1", opt(c.round_trip_f1)},
              {"state", to_string(c.state)},
              {"evaluated_at", opt(c.evaluated_at)}};
}

json to_json(const RecompileTask& t) {
  return json{{"task_id", t.task_id},         {"video_id", t.video_id},
              {"triggered_by", t.triggered_by}, {"state", to_string(t.state)},
              {"diagnostics", t.diagnostics},   {"created_at", t.created_at},
              {"updated_at", t.updated_at}};
}

json to_json(const CrawlerSummary& s) {
  json tasks = json::array();
  for (const auto& t : s.tasks) tasks.push_back(to_json(t));
  return json{{"evaluated", s.evaluated},   {"accepted", s.accepted},
              {"rejected", s.rejected},     {"superseded", s.superseded},
              {"still_pending", s.still_pending}, {"tasks", tasks}};
}

json to_json(const ArtifactInfo& a) {
  return json{{"video_id", a.video_id},
              {"version", a.version},
              {"dir", opt(a.dir)},
              {"video", opt(a.video)},
              {"rendered", a.video.has_value()},
              {"updated_at", a.updated_at},
              {"active_task", a.active_task ? to_json(*a.active_task) : json()}};
}

json to_json(const VideoSummary& v) {
  return json{{"video_id", v.video_id},
              {"sentence_count", v.sentence_count},
              {"flagged_count", v.flagged_count},
              {"artifact_version", v.artifact_version}};
}

ServiceScheduler::ServiceScheduler(ContributionService& service, const Pipeline& pipeline,
                                   std::chrono::milliseconds interval,
                                   std::size_t recompile_workers)
    : service_(service),
      pipeline_(pipeline),
      interval_(interval),
      workers_(std::max<std::size_t>(1, recompile_workers)) {}

ServiceScheduler::~ServiceScheduler() { stop(); }

void ServiceScheduler::start() {
  std::lock_guard lock(mu_);
  if (!threads_.empty()) return;
  stopping_ = false;
  threads_.emplace_back([this] { crawler_loop(); });
  for (std::size_t i = 0; i < workers_; ++i) threads_.emplace_back([this] { worker_loop(); });
}

void ServiceScheduler::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  threads_.clear();
}

void ServiceScheduler::notify() {
  {
    std::lock_guard lock(mu_);
    ++wake_;
  }
  cv_.notify_all();
}

void ServiceScheduler::crawler_loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    if (cv_.wait_for(lock, interval_, [this] { return stopping_; })) break;
    lock.unlock();
    try {
      const auto summary = service_.crawler_pass();
      spdlog::info("crawler pass: {} evaluated, {} accepted, {} tasks", summary.evaluated,
                   summary.accepted, summary.tasks.size());
      if (!summary.tasks.empty()) notify();
    } catch (const std::exception& e) {
      spdlog::error("crawler pass failed: {}", e.what());
    }
    lock.lock();
  }
}

void ServiceScheduler::worker_loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    const auto seen = wake_;
    lock.unlock();
    try {
      service_.drain_tasks(pipeline_);
    } catch (const std::exception& e) {
      spdlog::error("recompile worker: {}", e.what());
    }
    lock.lock();
    cv_.wait_for(lock, std::chrono::seconds(1), [&] { return stopping_ || wake_ != seen; });
  }
}

}  // namespace vidloc
