#include "vidloc/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>

#include "vidloc/error.hpp"
#include "vidloc/util.hpp"
#include "vidloc/wav.hpp"

namespace vidloc {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Per-directory record of the input hash each stage last ran with.
class StampFile {
 public:
  explicit StampFile(fs::path path) : path_(std::move(path)) {
    if (!fs::exists(path_)) return;
    try {
      data_ = json::parse(read_file(path_), nullptr, false);
    } catch (const Error&) {
    }
    if (!data_.is_object()) data_ = json::object();
  }

  bool matches(const std::string& stage, const std::string& key, const fs::path& artifact) const {
    return fs::exists(artifact) && data_.contains(stage) && data_[stage] == key;
  }

  void set(const std::string& stage, const std::string& key) {
    data_[stage] = key;
    write_file(path_, data_.dump(2) + "\n");
  }

  void erase(const std::string& stage) {
    if (data_.erase(stage) > 0) write_file(path_, data_.dump(2) + "\n");
  }

 private:
  fs::path path_;
  json data_ = json::object();
};

class FailureLog {
 public:
  void add(std::string_view stage, std::optional<std::size_t> sentence, const std::exception& e) {
    std::string line = iso8601_utc(std::chrono::system_clock::now()) + " " + std::string(stage);
    if (sentence) line += " sentence=" + std::to_string(*sentence);
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
      line += " " + std::string(error_code_name(err->code()));
    }
    line += ": ";
    line += e.what();
    std::lock_guard lock(mu_);
    lines_.push_back(std::move(line));
  }

  std::string text() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  std::mutex mu_;
  std::vector<std::string> lines_;
};

bool safe_video_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == '.';
  });
}

bool is_provider_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ProviderRejected:
    case ErrorCode::RateLimited:
    case ErrorCode::AudioDecodeError:
    case ErrorCode::InvalidConfig:
      return true;
    default:
      return false;
  }
}

std::string stage_key(std::initializer_list<std::string_view> parts) {
  std::string joined;
  for (const auto part : parts) {
    joined += std::to_string(part.size());
    joined += ':';
    joined += part;
  }
  return sha256_hex(joined);
}

std::string provider_key(const std::shared_ptr<Translator>& t) {
  return t ? to_json(t->config()).dump() : "";
}
std::string provider_key(const std::shared_ptr<SimilarityScorer>& s) {
  return s ? to_json(s->config()).dump() : "";
}

std::string serialize_translated(const std::string& video_id, const std::string& source,
                                 const std::string& target, const std::string& translated_text,
                                 const std::vector<AlignedSentence>* aligned,
                                 const AlignmentMismatch* mismatch) {
  ordered_json doc;
  doc["video_id"] = video_id;
  doc["source"] = source;
  doc["target"] = target;
  doc["translated_text"] = translated_text;
  if (aligned) {
    auto& arr = doc["sentences"] = ordered_json::array();
    for (const auto& s : *aligned) {
      arr.push_back(ordered_json{{"index", s.index},
                                 {"slot_start_ms", s.slot_start.count()},
                                 {"slot_end_ms", s.slot_end.count()},
                                 {"original_text", s.original_text},
                                 {"translated_text", s.translated_text}});
    }
  }
  if (mismatch) {
    doc["alignment"] = {{"expected", mismatch->expected()}, {"got", mismatch->got()}};
  }
  return doc.dump(2) + "\n";
}

std::string serialize_scores(const std::string& video_id, const ThresholdPolicy& policy,
                             const std::vector<SentenceResult>& sentences) {
  ordered_json doc;
  doc["video_id"] = video_id;
  doc["policy"] = to_json(policy);
  auto& arr = doc["sentences"] = ordered_json::array();
  for (const auto& r : sentences) {
    ordered_json j;
    j["index"] = r.sentence.index;
    if (r.score) {
      j["back_translated_text"] = r.score->back_translated_text;
      j["f1"] = r.score->f1_score;
      j["cosine"] = r.score->cosine_score ? ordered_json(*r.score->cosine_score) : ordered_json();
    } else {
      j["back_translated_text"] = nullptr;
      j["f1"] = nullptr;
      j["cosine"] = nullptr;
    }
    j["classification"] = to_string(r.classification);
    j["error"] = r.error ? ordered_json(*r.error) : ordered_json();
    arr.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

// Loads cached scores; returns nullopt when the file does not cover exactly
// these sentences.
std::optional<std::vector<ConfidenceScore>> load_scores(const fs::path& path, std::size_t count) {
  try {
    const auto doc = json::parse(read_file(path), nullptr, false);
    if (!doc.is_object() || !doc.contains("sentences") || doc["sentences"].size() != count) {
      return std::nullopt;
    }
    std::vector<ConfidenceScore> out;
    for (const auto& j : doc["sentences"]) {
      if (j.at("f1").is_null()) return std::nullopt;
      ConfidenceScore c;
      c.sentence_index = j.at("index").get<std::size_t>();
      c.f1_score = j.at("f1").get<double>();
      if (!j.at("cosine").is_null()) c.cosine_score = j["cosine"].get<double>();
      c.back_translated_text = j.at("back_translated_text").get<std::string>();
      out.push_back(std::move(c));
    }
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<std::string> load_translated_text(const fs::path& path) {
  try {
    const auto doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_object() && doc.contains("translated_text") && doc["translated_text"].is_string()) {
      return doc["translated_text"].get<std::string>();
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string_view to_string(VideoStatus status) {
  switch (status) {
    case VideoStatus::Completed: return "completed";
    case VideoStatus::ExcludedAlignment: return "excluded-alignment";
    case VideoStatus::FailedProvider: return "failed-provider";
    case VideoStatus::FailedAssembly: return "failed-assembly";
    case VideoStatus::FailedInput: return "failed-input";
  }
  return "unknown";
}

PipelineProviders PipelineProviders::from_config(const PipelineConfig& config) {
  PipelineProviders p;
  const auto retry = config.retry_policy();
  p.translator = make_translator(config.translation, retry);
  p.back_translator =
      config.back_translation ? make_translator(*config.back_translation, retry) : p.translator;
  p.speech = make_speech_synthesizer(config.speech, retry);
  p.f1 = make_similarity_scorer(config.similarity, retry);
  if (config.cosine) p.cosine = make_similarity_scorer(*config.cosine, retry);
  return p;
}

Pipeline::Pipeline(PipelineConfig config, fs::path build_root)
    : Pipeline(config, std::move(build_root), PipelineProviders::from_config(config)) {}

Pipeline::Pipeline(PipelineConfig config, fs::path build_root, PipelineProviders providers)
    : config_(std::move(config)),
      build_root_(std::move(build_root)),
      providers_(std::move(providers)) {
  config_.validate();
  if (!providers_.translator || !providers_.speech || !providers_.f1) {
    throw Error(ErrorCode::InvalidConfig, "pipeline needs translation, speech and similarity");
  }
  if (!providers_.back_translator) providers_.back_translator = providers_.translator;
  splitter_ = config_.abbreviations
                  ? std::make_shared<RuleBasedSplitter>(AbbreviationList::load(*config_.abbreviations))
                  : std::make_shared<RuleBasedSplitter>();
}

PipelineResult Pipeline::run_video(const VideoJob& job) const {
  PipelineResult r;
  r.video_id = job.transcript.stem().string();
  r.subject = job.subject.value_or(config_.subject);
  r.source_video = job.source_video;
  const std::string source = config_.source_language;
  const std::string target = job.target_language.value_or(config_.target_language);
  FailureLog failures;

  Transcript transcript;
  try {
    const auto raw = read_file(job.transcript);
    const auto format = job.format.value_or(job.transcript.extension() == ".json"
                                                ? TranscriptFormat::CanonicalJson
                                                : TranscriptFormat::TimedLines);
    transcript = parse_transcript(raw, format, job.timed_lines);
    if (transcript.video_id.empty()) transcript.video_id = r.video_id;
    if (!safe_video_id(transcript.video_id)) {
      throw Error(ErrorCode::MalformedEntry,
                  "video_id '" + transcript.video_id + "' is not usable as a directory name");
    }
    if (transcript.language == "und") transcript.language = source;
  } catch (const std::exception& e) {
    r.status = VideoStatus::FailedInput;
    r.diagnostic = e.what();
    spdlog::warn("{}: {}", job.transcript.string(), e.what());
    return r;
  }
  r.video_id = transcript.video_id;
  r.video_duration = transcript.duration;

  const fs::path dir = build_root_ / r.video_id;
  r.artifacts.build_dir = dir;
  r.artifacts.failures_log = dir / "failures.log";

  auto finish = [&](VideoStatus status, std::string diagnostic) {
    r.status = status;
    r.diagnostic = std::move(diagnostic);
    try {
      write_file(r.artifacts.failures_log, failures.text());
    } catch (const Error& e) {
      spdlog::warn("{}: {}", r.video_id, e.what());
    }
    return r;
  };

  try {
    fs::create_directories(dir);
    StampFile stamps(dir / "stamps.json");
    const auto policy = config_.policy_for(r.subject);

    const std::string transcript_json =
        serialize_transcript(transcript, TranscriptFormat::CanonicalJson);
    write_file(dir / "transcript.json", transcript_json);

    // Translate the whole document, then re-split.
    const fs::path translated_path = dir / "translated.json";
    const auto translate_key =
        stage_key({transcript_json, provider_key(providers_.translator), source, target});
    std::string translated_text;
    std::optional<std::string> cached;
    if (stamps.matches("translated", translate_key, translated_path)) {
      cached = load_translated_text(translated_path);
    }
    if (cached) {
      translated_text = *cached;
    } else {
      try {
        translated_text = providers_.translator->translate(merge_segments(transcript), source, target);
      } catch (const Error& e) {
        failures.add("translate", std::nullopt, e);
        stamps.erase("translated");
        return finish(VideoStatus::FailedProvider, e.what());
      }
    }

    std::vector<AlignedSentence> aligned;
    try {
      aligned = align(transcript, splitter_->split(translated_text, target));
    } catch (const AlignmentMismatch& e) {
      failures.add("align", std::nullopt, e);
      write_file(translated_path, serialize_translated(r.video_id, source, target,
                                                       translated_text, nullptr, &e));
      stamps.set("translated", translate_key);
      return finish(VideoStatus::ExcludedAlignment, e.what());
    }
    const auto translated_json =
        serialize_translated(r.video_id, source, target, translated_text, &aligned, nullptr);
    write_file(translated_path, translated_json);
    stamps.set("translated", translate_key);

    // Round-trip scoring, sentence-parallel.
    const fs::path scores_path = dir / "scores.json";
    const auto score_key =
        stage_key({translated_json, provider_key(providers_.back_translator),
                   provider_key(providers_.f1), provider_key(providers_.cosine)});
    std::vector<SentenceResult> results(aligned.size());
    std::optional<std::vector<ConfidenceScore>> cached_scores;
    if (stamps.matches("scores", score_key, scores_path)) {
      cached_scores = load_scores(scores_path, aligned.size());
    }
    if (cached_scores) {
      for (std::size_t i = 0; i < aligned.size(); ++i) {
        results[i].sentence = aligned[i];
        results[i].score = (*cached_scores)[i];
      }
    } else {
      const RoundTripProviders rt{providers_.back_translator, providers_.f1, providers_.cosine};
      parallel_for(aligned.size(), config_.sentence_workers, [&](std::size_t i) {
        results[i].sentence = aligned[i];
        try {
          results[i].score = round_trip_score(aligned[i], source, target, rt);
        } catch (const std::exception& e) {
          results[i].error = e.what();
          failures.add("score", aligned[i].index, e);
        }
      });
    }
    bool all_scored = true;
    for (auto& res : results) {
      if (res.score) {
        res.sentence.back_translated_text = res.score->back_translated_text;
        try {
          res.classification = classify(*res.score, policy);
        } catch (const Error& e) {
          res.classification = Classification::Flagged;
          res.error = e.what();
          failures.add("classify", res.sentence.index, e);
        }
      } else {
        all_scored = false;
        res.classification = Classification::Flagged;
      }
    }
    write_file(scores_path, serialize_scores(r.video_id, policy, results));
    if (all_scored) {
      stamps.set("scores", score_key);
    } else {
      stamps.erase("scores");
    }
    r.sentences = results;

    // Speech, timeline, EDL, render.
    RenderRequest req;
    req.video_id = r.video_id;
    req.language = target;
    for (const auto& res : results) req.sentences.push_back(res.sentence);
    req.video_duration = transcript.duration;
    req.source_video = job.source_video;
    req.work_dir = dir;
    req.video_output = dir / ("out." + config_.assembly.tool.container);
    try {
      const auto out = render(req);
      r.artifacts.plan = dir / "plan.json";
      r.artifacts.edl = dir / "edl.json";
      r.artifacts.video = out.video;
    } catch (const Error& e) {
      failures.add("render", std::nullopt, e);
      if (fs::exists(dir / "plan.json")) r.artifacts.plan = dir / "plan.json";
      if (fs::exists(dir / "edl.json")) r.artifacts.edl = dir / "edl.json";
      return finish(is_provider_error(e.code()) ? VideoStatus::FailedProvider
                                                : VideoStatus::FailedAssembly,
                    e.what());
    }
  } catch (const std::exception& e) {
    failures.add("pipeline", std::nullopt, e);
    return finish(VideoStatus::FailedInput, e.what());
  }
  return finish(VideoStatus::Completed, "");
}

RenderOutput Pipeline::render(const RenderRequest& req) const {
  if (req.sentences.empty()) throw Error(ErrorCode::PreconditionViolation, "nothing to render");
  const fs::path audio_dir = req.audio_dir.empty() ? req.work_dir / "audio" : req.audio_dir;
  fs::create_directories(req.work_dir);
  fs::create_directories(audio_dir);

  RenderOutput out;
  out.audio.resize(req.sentences.size());
  std::vector<std::exception_ptr> errors(req.sentences.size());
  parallel_for(req.sentences.size(), config_.sentence_workers, [&](std::size_t i) {
    const auto& s = req.sentences[i];
    try {
      const auto path = providers_.speech->asset_path(s.translated_text, req.language, s.index,
                                                      audio_dir);
      if (fs::exists(path)) {
        try {
          const auto info = wav::probe_file(path);
          if (info.duration().count() > 0) {
            out.audio[i] = AudioAsset{s.index, path, info.duration(), req.language};
            return;
          }
        } catch (const Error&) {
        }
      }
      out.audio[i] = providers_.speech->synthesize(s.translated_text, req.language, s.index,
                                                   audio_dir);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.plan = plan_timeline(req.video_id, req.sentences, out.audio, req.video_duration);
  write_file(req.work_dir / "plan.json", serialize_plan(out.plan));
  out.edl = emit_edl(out.plan, req.source_video.value_or(fs::path()), out.audio);
  const auto edl_json = serialize_edl(out.edl);
  write_file(req.work_dir / "edl.json", edl_json);

  if (!config_.assembly.enabled || !req.source_video) return out;

  const auto& tool = config_.assembly.tool;
  StampFile stamps(req.work_dir / "stamps.json");
  const auto key = stage_key({edl_json, tool.command, tool.probe_command,
                              std::to_string(tool.tolerance.count()),
                              req.video_output.filename().string()});
  if (!stamps.matches("render", key, req.video_output)) {
    stamps.erase("render");
    assemble(out.edl, tool, req.video_output);
    stamps.set("render", key);
  }
  out.video = req.video_output;
  return out;
}

CategoryRun Pipeline::run_category(const fs::path& manifest) const {
  json doc;
  try {
    doc = json::parse(read_file(manifest));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "manifest is not JSON: " + std::string(e.what()));
  }
  const json entries = doc.is_object() && doc.contains("videos") ? doc["videos"] : doc;
  if (!entries.is_array()) throw Error(ErrorCode::InvalidConfig, "manifest must list videos");

  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() ? base / path : path;
  };

  std::vector<VideoJob> jobs;
  std::vector<CategoryLabel> labels;
  for (const auto& e : entries) {
    VideoJob job;
    CategoryLabel label;
    try {
      job.transcript = resolve(e.at("transcript").get<std::string>());
      if (e.contains("source_video") && !e["source_video"].is_null()) {
        job.source_video = resolve(e["source_video"].get<std::string>());
      }
      if (e.contains("format")) {
        const auto name = e["format"].get<std::string>();
        job.format = transcript_format_from_string(name);
        if (!job.format) throw Error(ErrorCode::InvalidConfig, "unknown transcript format " + name);
      }
      label.subject = e.value("subject", std::string(to_string(config_.subject)));
      label.grade = e.value("grade", "");
      label.language = e.value("language", config_.target_language);
      label.model = e.value("model", config_.translation.name);
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::InvalidConfig, "manifest entry: " + std::string(ex.what()));
    }
    job.subject = subject_from_string(label.subject).value_or(Subject::Other);
    if (!label.language.empty()) job.target_language = label.language;
    jobs.push_back(std::move(job));
    labels.push_back(std::move(label));
  }

  CategoryRun run;
  run.results.resize(jobs.size());
  parallel_for(jobs.size(), config_.workers,
               [&](std::size_t i) { run.results[i] = run_video(jobs[i]); });

  std::map<CategoryLabel, std::vector<PipelineResult>> grouped;
  for (std::size_t i = 0; i < jobs.size(); ++i) grouped[labels[i]].push_back(run.results[i]);
  for (const auto& [label, results] : grouped) run.reports.push_back(aggregate(label, results));
  return run;
}

std::string CategoryLabel::display() const {
  std::string out;
  for (const auto* part : {&subject, &grade, &language, &model}) {
    if (part->empty()) continue;
    if (!out.empty()) out += ' ';
    out += *part;
  }
  return out.empty() ? "(unlabeled)" : out;
}

ScoreStats score_stats(std::vector<double> values) {
  ScoreStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  s.median = values[(values.size() - 1) / 2];
  double sq = 0.0;
  for (const double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

CategoryReport aggregate(const CategoryLabel& label, const std::vector<PipelineResult>& results) {
  CategoryReport rep;
  rep.label = label;
  std::vector<double> f1;
  std::vector<double> cosine;
  std::size_t confident = 0;
  for (const auto& r : results) {
    switch (r.status) {
      case VideoStatus::Completed: ++rep.videos_processed; break;
      case VideoStatus::ExcludedAlignment: ++rep.videos_excluded; continue;
      default: ++rep.videos_failed; continue;
    }
    for (const auto& s : r.sentences) {
      ++rep.sentence_count;
      if (s.classification == Classification::Confident) ++confident;
      if (!s.score) continue;
      f1.push_back(s.score->f1_score);
      if (s.score->cosine_score) cosine.push_back(*s.score->cosine_score);
    }
  }
  rep.f1 = score_stats(std::move(f1));
  if (!cosine.empty()) rep.cosine = score_stats(std::move(cosine));
  rep.correct_translation_percentage =
      rep.sentence_count == 0 ? 0.0
                              : static_cast<double>(confident) /
                                    static_cast<double>(rep.sentence_count);
  return rep;
}

json to_json(const CategoryReport& r) {
  auto stats = [](const ScoreStats& s) {
    return json{{"mean", s.mean}, {"median", s.median}, {"stddev", s.stddev}, {"count", s.count}};
  };
  return json{{"category",
               {{"subject", r.label.subject},
                {"grade", r.label.grade},
                {"language", r.label.language},
                {"model", r.label.model}}},
              {"videos_processed", r.videos_processed},
              {"videos_excluded", r.videos_excluded},
              {"videos_failed", r.videos_failed},
              {"sentence_count", r.sentence_count},
              {"f1", stats(r.f1)},
              {"cosine", r.cosine ? stats(*r.cosine) : json()},
              {"correct_translation_percentage", r.correct_translation_percentage}};
}

std::string format_category_table(const std::vector<CategoryReport>& reports) {
  const std::vector<std::string> header{"Category",     "Videos",     "Excluded",  "Failed",
                                        "Sentences",    "Mean F1",    "Median F1", "StdDev F1",
                                        "Mean cosine",  "Median cosine", "StdDev cosine", "CTP"};
  std::vector<std::vector<std::string>> rows{header};
  for (const auto& r : reports) {
    const auto cos = [&](double ScoreStats::*field) {
      return r.cosine ? fixed3((*r.cosine).*field) : std::string("-");
    };
    rows.push_back({r.label.display(), std::to_string(r.videos_processed),
                    std::to_string(r.videos_excluded), std::to_string(r.videos_failed),
                    std::to_string(r.sentence_count), fixed3(r.f1.mean), fixed3(r.f1.median),
                    fixed3(r.f1.stddev), cos(&ScoreStats::mean), cos(&ScoreStats::median),
                    cos(&ScoreStats::stddev), fixed3(r.correct_translation_percentage)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      out += c == 0 ? row[c] + pad : "  " + pad + row[c];
    }
    out += "\n";
  }
  return out;
}

json to_json(const PipelineResult& r) {
  json sentences = json::array();
  for (const auto& s : r.sentences) {
    json j{{"index", s.sentence.index},
           {"slot_start_ms", s.sentence.slot_start.count()},
           {"slot_end_ms", s.sentence.slot_end.count()},
           {"original_text", s.sentence.original_text},
           {"translated_text", s.sentence.translated_text},
           {"classification", to_string(s.classification)}};
    j["back_translated_text"] = s.score ? json(s.score->back_translated_text) : json();
    j["f1"] = s.score ? json(s.score->f1_score) : json();
    j["cosine"] = s.score && s.score->cosine_score ? json(*s.score->cosine_score) : json();
    j["error"] = s.error ? json(*s.error) : json();
    sentences.push_back(std::move(j));
  }
  auto opt_path = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(); };
  return json{{"video_id", r.video_id},
              {"status", to_string(r.status)},
              {"subject", to_string(r.subject)},
              {"diagnostic", r.diagnostic},
              {"video_duration_ms", r.video_duration.count()},
              {"source_video", opt_path(r.source_video)},
              {"artifacts",
               {{"build_dir", r.artifacts.build_dir.string()},
                {"plan", opt_path(r.artifacts.plan)},
                {"edl", opt_path(r.artifacts.edl)},
                {"video", opt_path(r.artifacts.video)},
                {"failures_log", r.artifacts.failures_log.string()}}},
              {"sentences", sentences}};
}

}  // namespace vidloc
