#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdio>
#include <iostream>

#include "vidloc/config.hpp"
#include "vidloc/confidence.hpp"
#include "vidloc/contribution_service.hpp"
#include "vidloc/error.hpp"
#include "vidloc/http_api.hpp"
#include "vidloc/pipeline.hpp"
#include "vidloc/util.hpp"

namespace {

using namespace vidloc;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::string out = "build";
  std::string source;
  std::string target;
  std::string subject;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Pipeline config JSON (default: offline mock providers)");
  cmd->add_option("--out", o.out, "Build directory root")->capture_default_str();
  cmd->add_option("--source", o.source, "Source language code");
  cmd->add_option("--target", o.target, "Target language code");
  cmd->add_option("--subject", o.subject, "reading | math | other");
}

PipelineConfig make_config(const CommonOptions& o) {
  PipelineConfig c;
  if (o.config.empty()) {
    c = PipelineConfig::offline(o.source.empty() ? "en" : o.source, o.target);
  } else {
    c = load_pipeline_config(o.config);
  }
  if (!o.source.empty()) c.source_language = o.source;
  if (!o.target.empty()) c.target_language = o.target;
  if (!o.subject.empty()) {
    const auto s = subject_from_string(o.subject);
    if (!s) throw Error(ErrorCode::InvalidConfig, "unknown subject: " + o.subject);
    c.subject = *s;
  }
  c.validate();
  return c;
}

struct RunOptions {
  std::string transcript;
  std::string source_video;
  std::string format;
  std::string video_id;
  std::string language;
  double duration = 0.0;
};

VideoJob make_job(const RunOptions& r) {
  VideoJob job;
  job.transcript = r.transcript;
  if (!r.source_video.empty()) job.source_video = fs::path(r.source_video);
  if (!r.format.empty()) {
    job.format = transcript_format_from_string(r.format);
    if (!job.format) throw Error(ErrorCode::InvalidConfig, "unknown format: " + r.format);
  }
  if (!r.video_id.empty()) job.timed_lines.video_id = r.video_id;
  if (!r.language.empty()) job.timed_lines.language = r.language;
  if (r.duration > 0) job.timed_lines.duration = text::seconds_to_millis(r.duration);
  return job;
}

void add_run_options(CLI::App* cmd, RunOptions& r) {
  cmd->add_option("--transcript", r.transcript, "Transcript file")->required();
  cmd->add_option("--source-video", r.source_video, "Original video to re-render");
  cmd->add_option("--format", r.format, "canonical-json | timed-lines (default: by extension)");
  cmd->add_option("--video-id", r.video_id, "Timed-lines video id");
  cmd->add_option("--language", r.language, "Timed-lines transcript language");
  cmd->add_option("--duration", r.duration, "Timed-lines video duration in seconds");
}

int status_exit_code(VideoStatus s) {
  switch (s) {
    case VideoStatus::Completed: return 0;
    case VideoStatus::ExcludedAlignment: return 3;
    default: return 4;
  }
}

RoundTripProviders crawler_providers(const Pipeline& p) {
  return {p.providers().back_translator, p.providers().f1, nullptr};
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Localize timestamped video transcripts: translate, score, re-time, re-render."};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  CommonOptions common;
  RunOptions run_opts;

  auto* run = app.add_subcommand("run", "Run the pipeline on one transcript");
  add_common(run, common);
  add_run_options(run, run_opts);
  bool run_json = false;
  run->add_flag("--json", run_json, "Print the full result as JSON");

  auto* report = app.add_subcommand("report", "Run a manifest and print per-category statistics");
  add_common(report, common);
  std::string manifest;
  bool report_json = false;
  report->add_option("--manifest", manifest, "Manifest JSON")->required();
  report->add_flag("--json", report_json, "Print JSON instead of a table");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit thresholds on a labeled corpus");
  std::string labeled;
  std::vector<double> targets{1.0, 2.0, 3.0};
  bool calibrate_json = false;
  calibrate_cmd->add_option("--labeled", labeled, "Labeled pairs JSON")->required();
  calibrate_cmd->add_option("--target-fp", targets, "False-positive percentage(s)")
      ->capture_default_str();
  calibrate_cmd->add_flag("--json", calibrate_json, "Print JSON instead of a table");

  std::string db = "vidloc.db";
  auto* publish = app.add_subcommand("publish", "Run the pipeline and load the result into the store");
  add_common(publish, common);
  add_run_options(publish, run_opts);
  publish->add_option("--db", db, "SQLite database")->capture_default_str();

  auto* crawl = app.add_subcommand("crawler-pass", "Score pending contributions once");
  add_common(crawl, common);
  crawl->add_option("--db", db, "SQLite database")->capture_default_str();
  bool recompile_now = false;
  crawl->add_flag("--recompile", recompile_now, "Run queued recompile tasks afterwards");

  auto* serve = app.add_subcommand("serve", "Serve the contribution API");
  add_common(serve, common);
  serve->add_option("--db", db, "SQLite database")->capture_default_str();
  std::string tokens;
  std::string host = "127.0.0.1";
  int port = 8080;
  double interval_minutes = 10.0;
  std::size_t recompile_workers = 1;
  serve->add_option("--tokens", tokens, "Token file {\"tokens\": [...]}")->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--crawler-interval", interval_minutes, "Minutes between crawler passes")
      ->capture_default_str();
  serve->add_option("--recompile-workers", recompile_workers)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::set_pattern("%^%l%$ %v");

  try {
    if (*calibrate_cmd) {
      const auto pairs = parse_labeled_corpus(read_file(labeled));
      std::vector<CalibrationResult> rows;
      for (const double t : targets) rows.push_back(calibrate(pairs, t));
      const auto best = f1_optimal_threshold(pairs);
      if (calibrate_json) {
        nlohmann::json out{{"rows", nlohmann::json::array()},
                           {"f1_optimal", {{"threshold", best.threshold},
                                           {"classifier_f1", best.classifier_f1}}}};
        for (const auto& r : rows) out["rows"].push_back(to_json(r));
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << format_calibration_table(rows);
        std::printf("F1-optimal threshold %.3f (classifier F1 %.3f)\n", best.threshold,
                    best.classifier_f1);
      }
      return 0;
    }

    const auto config = make_config(common);
    Pipeline pipeline(config, common.out);

    if (*run) {
      const auto result = pipeline.run_video(make_job(run_opts));
      if (run_json) {
        std::cout << to_json(result).dump(2) << "\n";
      } else {
        std::size_t flagged = 0;
        for (const auto& s : result.sentences) {
          if (s.classification == Classification::Flagged) ++flagged;
        }
        std::printf("%s: %s, %zu sentences, %zu flagged\n", result.video_id.c_str(),
                    std::string(to_string(result.status)).c_str(), result.sentences.size(),
                    flagged);
        if (!result.diagnostic.empty()) std::printf("  %s\n", result.diagnostic.c_str());
        if (!result.artifacts.build_dir.empty()) {
          std::printf("  artifacts: %s\n", result.artifacts.build_dir.string().c_str());
        }
      }
      return status_exit_code(result.status);
    }

    if (*report) {
      const auto category = pipeline.run_category(manifest);
      if (report_json) {
        nlohmann::json out{{"reports", nlohmann::json::array()},
                           {"videos", nlohmann::json::array()}};
        for (const auto& r : category.reports) out["reports"].push_back(to_json(r));
        for (const auto& r : category.results) {
          out["videos"].push_back({{"video_id", r.video_id},
                                   {"status", to_string(r.status)},
                                   {"diagnostic", r.diagnostic}});
        }
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << format_category_table(category.reports);
      }
      return 0;
    }

    auto store = std::make_shared<Store>(db);
    ContributionService service(store, crawler_providers(pipeline));

    if (*publish) {
      const auto result = pipeline.run_video(make_job(run_opts));
      if (result.status != VideoStatus::Completed) {
        std::fprintf(stderr, "%s: %s: %s\n", result.video_id.c_str(),
                     std::string(to_string(result.status)).c_str(), result.diagnostic.c_str());
        return status_exit_code(result.status);
      }
      const bool fresh = service.publish(result, config.policy_for(result.subject),
                                         config.source_language, config.target_language);
      std::printf("%s: %s\n", result.video_id.c_str(), fresh ? "published" : "already published");
      return 0;
    }

    if (*crawl) {
      const auto summary = service.crawler_pass();
      std::cout << to_json(summary).dump(2) << "\n";
      if (recompile_now) {
        const auto ran = service.drain_tasks(pipeline);
        std::printf("recompiled %zu task(s)\n", ran);
      }
      return 0;
    }

    if (*serve) {
      const auto auth = TokenAuthenticator::load(tokens);
      ServiceScheduler scheduler(
          service, pipeline,
          std::chrono::milliseconds(static_cast<std::int64_t>(interval_minutes * 60'000.0)),
          recompile_workers);
      ApiServer api(service, auth, [&] { scheduler.notify(); });
      const int bound = api.bind(host, port);
      scheduler.start();
      api.start();
      std::printf("listening on http://%s:%d/v1\n", host.c_str(), bound);
      std::fflush(stdout);
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      api.stop();
      scheduler.stop();
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(error_code_name(e.code())).c_str(),
                 e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
