// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero when any check fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fuzz.hpp"
#include "oracles.hpp"
#include "support.hpp"
#include "vidloc/assembly.hpp"
#include "vidloc/contribution_service.hpp"
#include "vidloc/process.hpp"

using namespace vidloc;
using namespace vidloc::testing;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Pass;
  std::string detail;
};

// Collects failed expectations; the first few are reported.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 3) msgs_ += (msgs_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(std::string detail) const {
    if (failures_ == 0) return {Verdict::Pass, std::move(detail)};
    return {Verdict::Fail, std::to_string(failures_) + " failure(s): " + msgs_};
  }

 private:
  std::size_t failures_ = 0;
  std::string msgs_;
};

using Clock = std::chrono::steady_clock;

ConfidenceScore f1_only(double f1) {
  ConfidenceScore s;
  s.f1_score = f1;
  return s;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.precision(precision);
  os << std::fixed << v;
  return os.str();
}

std::vector<LabeledPair> random_labeled(Rng& rng, std::size_t max_pairs = 500) {
  std::vector<LabeledPair> pairs(uniform(rng, 1, max_pairs));
  // Coarse grids force ties between scores.
  const int grid = static_cast<int>(uniform(rng, 5, 1000));
  const double bias = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
  for (auto& p : pairs) {
    p.score = static_cast<double>(uniform(rng, 0, grid)) / grid;
    p.is_match = coin(rng, std::clamp(p.score * bias * 2.0, 0.02, 0.98));
  }
  return pairs;
}

Outcome fdr_identity() {
  Checker c;
  const double reading = fdr(71.2, 2.0);
  const double math = fdr(51.1, 2.0);
  c.expect(std::abs(reading - oracle::kReadingFdr) < 1e-9, "reading fdr != oracle");
  c.expect(std::abs(math - oracle::kMathFdr) < 1e-9, "math fdr != oracle");
  c.expect(std::abs(reading - 2.7) <= 0.1, "reading fdr " + fmt(reading) + " not within 0.1 of 2.7");
  c.expect(std::abs(math - 3.8) <= 0.1, "math fdr " + fmt(math) + " not within 0.1 of 3.8");
  return c.outcome("reading " + fmt(reading, 2) + "%, math " + fmt(math, 2) + "%");
}

Outcome calibration_oracle() {
  Checker c;
  Rng rng(11);
  const auto t0 = Clock::now();
  const double targets[] = {0.0, 1.0, 2.0, 3.0, 10.0};
  std::size_t pairs_seen = 0;
  for (int set = 0; set < 200; ++set) {
    auto pairs = random_labeled(rng);
    if (std::none_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.is_match; })) {
      pairs[0].is_match = true;
    }
    pairs_seen += pairs.size();
    for (const double target : targets) {
      const auto got = calibrate(pairs, target);
      const auto want = oracle::brute_force_calibrate(pairs, target);
      c.expect(got.threshold == want.threshold && got.tp_pct == want.tp_pct &&
                   got.fp_pct == want.fp_pct && got.fn_pct == want.fn_pct,
               "set " + std::to_string(set) + " target " + fmt(target, 1) + ": threshold " +
                   fmt(got.threshold) + " vs " + fmt(want.threshold));
      c.expect(oracle::confusion_at(pairs, got.threshold).fp_pct <= target,
               "fp above target in set " + std::to_string(set));
    }
    const auto best = f1_optimal_threshold(pairs);
    const auto want = oracle::brute_force_f1_optimum(pairs);
    c.expect(best.threshold == want.threshold && best.classifier_f1 == want.classifier_f1,
             "f1 optimum differs in set " + std::to_string(set));
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "took " + fmt(elapsed) + " s");
  return c.outcome("200 sets, " + std::to_string(pairs_seen) + " pairs, " + fmt(elapsed, 2) + " s");
}

Outcome calibration_monotone() {
  Checker c;
  Rng rng(12);
  const auto t0 = Clock::now();
  for (int set = 0; set < 500; ++set) {
    const auto pairs = random_labeled(rng);
    const auto r1 = calibrate(pairs, 1.0);
    const auto r2 = calibrate(pairs, 2.0);
    const auto r3 = calibrate(pairs, 3.0);
    c.expect(r1.threshold >= r2.threshold && r2.threshold >= r3.threshold,
             "threshold increased in set " + std::to_string(set));
    c.expect(r1.tp_pct <= r2.tp_pct && r2.tp_pct <= r3.tp_pct,
             "tp decreased in set " + std::to_string(set));
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 5.0, "took " + fmt(elapsed) + " s");
  return c.outcome("500 sets, " + fmt(elapsed, 2) + " s");
}

Outcome threshold_defaults() {
  Checker c;
  const auto reading = ThresholdPolicy::defaults(Subject::Reading);
  const auto math = ThresholdPolicy::defaults(Subject::Math);
  c.expect(reading.f1_threshold == 0.955 && reading.cosine_threshold == 0.890, "reading defaults");
  c.expect(math.f1_threshold == 0.959 && math.cosine_threshold == 0.931, "math defaults");
  c.expect(classify(f1_only(0.955), reading) == Classification::Confident,
           "reading boundary not confident");
  c.expect(classify(f1_only(0.959), math) == Classification::Confident,
           "math boundary not confident");
  c.expect(classify(f1_only(0.958), math) == Classification::Flagged, "0.958 math not flagged");
  return c.outcome("reading 0.955/0.890, math 0.959/0.931");
}

Outcome alignment_contract() {
  Checker c;
  const auto t0 = Clock::now();
  TempDir dir;
  Rng rng(5);
  Pipeline pipeline(test_config(), dir / "build");
  std::size_t sentences = 0;
  for (int i = 0; i < 50; ++i) {
    const auto t = random_transcript(rng, "fixture" + std::to_string(i));
    const auto r = pipeline.run_video(VideoJob{write_transcript(dir.path(), t)});
    c.expect(r.status == VideoStatus::Completed, t.video_id + " " + std::string(to_string(r.status)));
    c.expect(r.sentences.size() == t.segments.size(), t.video_id + " aligned size");
    for (const auto& s : r.sentences) {
      c.expect(s.score && s.score->f1_score == 1.0, t.video_id + " f1 != 1");
    }
    sentences += r.sentences.size();
  }

  // Under a translator that merges the first two sentences, multi-sentence
  // videos are excluded and a single-sentence one still completes.
  auto config = test_config();
  config.translation.name = "mutate";
  config.translation.options = {{"mode", "merge-first"}};
  for (int i = 0; i < 2; ++i) {
    Transcript t{"mutated" + std::to_string(i), "en", Millis{9000},
                 {{0, Millis{0}, "First one here."},
                  {1, Millis{3000}, "Second one there."},
                  {2, Millis{6000}, "Third one."}}};
    write_transcript(dir.path(), t);
  }
  write_transcript(dir.path(), Transcript{"solo", "en", Millis{3000}, {{0, Millis{0}, "Only one."}}});
  write_file(dir / "manifest.json",
             R"([{"transcript":"mutated0.json","subject":"math","grade":"3","language":"es","model":"mutate"},
                 {"transcript":"mutated1.json","subject":"math","grade":"3","language":"es","model":"mutate"},
                 {"transcript":"solo.json","subject":"math","grade":"3","language":"es","model":"mutate"}])");
  Pipeline mutating(config, dir / "mutated-build");
  const auto run = mutating.run_category(dir / "manifest.json");
  c.expect(run.results.size() == 3, "manifest size");
  std::size_t excluded = 0;
  for (const auto& r : run.results) {
    if (r.video_id.rfind("mutated", 0) == 0) {
      c.expect(r.status == VideoStatus::ExcludedAlignment, r.video_id + " not excluded");
    } else {
      c.expect(r.status == VideoStatus::Completed, r.video_id + " not completed");
    }
  }
  c.expect(run.reports.size() == 1, "one category");
  if (!run.reports.empty()) excluded = run.reports[0].videos_excluded;
  c.expect(excluded == 2, "videos_excluded = " + std::to_string(excluded));
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "took " + fmt(elapsed) + " s");
  return c.outcome("50 videos, " + std::to_string(sentences) + " sentences at f1 1.0; " +
                   std::to_string(excluded) + " mutated videos excluded; " + fmt(elapsed, 2) + " s");
}

Outcome sync_invariants() {
  Checker c;
  Rng rng(6);
  const auto t0 = Clock::now();
  for (int k = 0; k < 1000; ++k) {
    const auto n = uniform(rng, 1, 30);
    const Millis pre{coin(rng) ? 0 : uniform_ms(rng, 1, 9000)};
    std::vector<AlignedSentence> aligned;
    std::vector<AudioAsset> audio;
    std::vector<Millis> slots, clips;
    Millis at = pre;
    for (std::size_t i = 0; i < n; ++i) {
      const Millis slot{uniform_ms(rng, 1, 20000)};
      const Millis clip = coin(rng, 0.33) ? slot : Millis{uniform_ms(rng, 1, 20000)};
      aligned.push_back({i, "s", "t", std::nullopt, at, at + slot});
      audio.push_back({i, "a" + std::to_string(i) + ".wav", clip, "es"});
      slots.push_back(slot);
      clips.push_back(clip);
      at += slot;
    }
    const auto plan = plan_timeline("v", aligned, audio, at);
    const auto streams = stream_durations(plan);
    const std::string id = "instance " + std::to_string(k);
    c.expect(streams.video_stream == streams.audio_stream, id + " streams differ");
    for (const auto& e : plan.entries) {
      c.expect(e.freeze.count() * e.pause.count() == 0, id + " freeze and pause");
    }
    c.expect(plan.total_duration == oracle::expected_total(pre, slots, clips), id + " total");
    c.expect(streams.video_stream == plan.total_duration, id + " stream != total");
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 5.0, "took " + fmt(elapsed) + " s");
  return c.outcome("1000 instances, " + fmt(elapsed, 2) + " s");
}

Outcome edl_determinism() {
  Checker c;
  TempDir dir;
  const auto transcript = fixtures_dir() / "transcripts" / "place_value.json";
  auto config = test_config();
  std::string first_plan, first_edl;
  for (int run = 0; run < 3; ++run) {
    // Fresh build directories so nothing is reused between runs.
    Pipeline pipeline(config, dir / ("build" + std::to_string(run)));
    const auto r = pipeline.run_video(VideoJob{transcript});
    c.expect(r.status == VideoStatus::Completed, "run failed");
    if (!r.artifacts.plan || !r.artifacts.edl) {
      c.expect(false, "missing plan or edl");
      break;
    }
    auto plan = read_file(*r.artifacts.plan);
    auto edl = read_file(*r.artifacts.edl);
    // Audio paths live under the build dir; compare relative to it.
    const auto root = (dir / ("build" + std::to_string(run))).string();
    for (auto* s : {&plan, &edl}) {
      for (auto pos = s->find(root); pos != std::string::npos; pos = s->find(root, pos)) {
        s->replace(pos, root.size(), "<build>");
      }
    }
    if (run == 0) {
      first_plan = plan;
      first_edl = edl;
    } else {
      c.expect(plan == first_plan, "plan.json differs on run " + std::to_string(run));
      c.expect(edl == first_edl, "edl.json differs on run " + std::to_string(run));
    }
  }
  // Rerunning in place must also rewrite identical bytes.
  Pipeline again(config, dir / "build0");
  const auto r = again.run_video(VideoJob{transcript});
  if (r.artifacts.plan && r.artifacts.edl) {
    std::string plan = read_file(*r.artifacts.plan), edl = read_file(*r.artifacts.edl);
    const auto root = (dir / "build0").string();
    for (auto* s : {&plan, &edl}) {
      for (auto pos = s->find(root); pos != std::string::npos; pos = s->find(root, pos)) {
        s->replace(pos, root.size(), "<build>");
      }
    }
    c.expect(plan == first_plan && edl == first_edl, "in-place rerun differs");
  }
  return c.outcome("3 fresh runs + 1 in-place rerun byte-identical");
}

Outcome homonym() {
  Checker c;
  const std::string original = "We'd put the seven in the ones place.";
  const std::string back = "We'll put seven people in one place.";
  TokenOverlapSimilarity scorer;
  const double f1 = scorer.score(original, back, SimilarityMetric::F1);
  c.expect(std::abs(f1 - oracle::kHomonymDistinctF1) < 1e-12, "f1 != hand-tokenized oracle");
  c.expect(std::abs(f1 - 0.571) <= 0.01, "f1 " + fmt(f1) + " not within 0.01 of 0.571");
  for (const auto subject : {Subject::Reading, Subject::Math}) {
    c.expect(classify(f1_only(f1), ThresholdPolicy::defaults(subject)) ==
                 Classification::Flagged,
             "not flagged under " + std::string(to_string(subject)));
  }
  return c.outcome("f1 " + fmt(f1) + ", flagged under reading and math");
}

struct CrawlerWorld {
  TempDir dir;
  OfflineProviders mocks;
  std::unique_ptr<Pipeline> pipeline;
  std::shared_ptr<Store> store = std::make_shared<Store>(":memory:");
  std::unique_ptr<ContributionService> service;

  CrawlerWorld() {
    mocks.back->table["We'd put the seven in the ones place."] = "We'll put seven people in one place.";
    pipeline = std::make_unique<Pipeline>(test_config(), dir / "build", mocks.handles());
    const auto r =
        pipeline->run_video(VideoJob{fixtures_dir() / "transcripts" / "place_value.json"});
    if (r.status != VideoStatus::Completed) throw std::runtime_error("fixture run failed");
    const auto& p = pipeline->providers();
    service = std::make_unique<ContributionService>(
        store, RoundTripProviders{p.back_translator, p.f1, nullptr});
    service->publish(r, ThresholdPolicy::defaults(Subject::Reading), "en", "es");
  }
};

Outcome crawler_semantics() {
  Checker c;
  CrawlerWorld w;
  const Identity alice{"alice", false};
  const auto sentences = w.service->list_sentences(w.service->list_videos().at(0).video_id);
  const SentenceRecord* flagged = nullptr;
  for (const auto& s : sentences) {
    if (s.flagged) flagged = &s;
  }
  if (!flagged) return {Verdict::Fail, "fixture has no flagged sentence"};
  const auto target = *flagged;

  // Equal score: back-translates to the same text as the current one.
  w.mocks.back->table["igual"] = "We'll put seven people in one place.";
  const auto equal = w.service->submit_contribution(alice, target.sentence_id, "igual");
  auto summary = w.service->crawler_pass();
  c.expect(w.store->get_contribution(equal.contribution_id)->state == ContributionState::Rejected,
           "equal score not rejected");
  c.expect(summary.tasks.empty(), "task queued without acceptance");

  // Strictly better.
  w.mocks.back->table["mejor"] = target.original_text;
  const auto better = w.service->submit_contribution(alice, target.sentence_id, "mejor");
  summary = w.service->crawler_pass();
  c.expect(w.store->get_contribution(better.contribution_id)->state == ContributionState::Accepted,
           "better score not accepted");
  c.expect(summary.tasks.size() == 1, "expected one task");
  c.expect(w.store->tasks_for_video(target.video_id).size() == 1, "expected one stored task");
  c.expect(w.store->get_sentence(target.sentence_id)->current_f1 == 1.0, "f1 not updated");

  // No submissions: nothing changes.
  const auto before = w.service->list_sentences(target.video_id);
  summary = w.service->crawler_pass();
  c.expect(summary.evaluated == 0 && summary.tasks.empty(), "idle pass did work");
  c.expect(w.service->list_sentences(target.video_id) == before, "idle pass changed sentences");

  // Randomized passes from a low baseline on every sentence.
  for (auto s : w.service->list_sentences(target.video_id)) {
    s.current_f1 = 0.25;
    s.flagged = true;
    w.store->update_sentence(s);
  }
  Rng rng(9);
  const auto& pool = word_pool();
  int proposal = 0;
  std::size_t accepted = 0;
  for (int pass = 0; pass < 100; ++pass) {
    const auto prev = w.service->list_sentences(target.video_id);
    const auto n = uniform(rng, 0, 5);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& s = prev[uniform(rng, 0, prev.size() - 1)];
      auto words = TokenOverlapSimilarity::tokenize(s.original_text);
      for (auto& word : words) {
        if (coin(rng, 0.25)) word = pool[uniform(rng, 0, pool.size() - 1)];
      }
      std::string back;
      for (const auto& word : words) back += (back.empty() ? "" : " ") + word;
      const auto text = "p" + std::to_string(proposal++);
      w.mocks.back->table[text] = back;
      w.service->submit_contribution(Identity{"u" + std::to_string(uniform(rng, 0, 4)), false},
                                     s.sentence_id, text);
    }
    summary = w.service->crawler_pass();
    accepted += summary.accepted;
    c.expect(summary.tasks.size() <= 1, "more than one task for one video");
    const auto now = w.service->list_sentences(target.video_id);
    for (std::size_t i = 0; i < now.size(); ++i) {
      c.expect(now[i].current_f1 >= prev[i].current_f1,
               "current_f1 decreased on pass " + std::to_string(pass));
    }
  }
  c.expect(accepted > 0, "randomized passes accepted nothing");
  return c.outcome("accept/reject/idle checks; 100 randomized passes, " + std::to_string(accepted) +
                   " acceptances, f1 never decreased");
}

Outcome transcript_fuzz() {
  const auto t0 = Clock::now();
  const auto out = fuzz_parsers(10'000, 20);
  Checker c;
  c.expect(out.violations == 0, out.first_violation);
  return c.outcome("10000 inputs: " + std::to_string(out.parsed) + " parsed, " +
                   std::to_string(out.rejected) + " rejected, " + fmt(seconds_since(t0), 2) + " s");
}

std::optional<std::string> find_ffmpeg() {
  if (const char* env = std::getenv("VIDLOC_FFMPEG"); env && *env) return std::string(env);
  if (run_command("command -v ffmpeg", std::chrono::seconds(10)).exit_code == 0) {
    return std::string("ffmpeg");
  }
  const std::string hint = VIDLOC_FFMPEG_HINT;
  if (!hint.empty() && fs::exists(hint)) return hint;
  return std::nullopt;
}

Outcome render() {
  const auto ffmpeg = find_ffmpeg();
  if (!ffmpeg) return {Verdict::Skip, "ffmpeg not found"};
  const auto ff = shell_quote(*ffmpeg);
  TempDir dir;
  const auto source = dir / "pattern.mp4";
  const auto made = run_command(
      ff + " -hide_banner -loglevel error -y -f lavfi -i testsrc=duration=10:size=320x240:rate=25 "
           "-f lavfi -i sine=frequency=440:duration=10 -c:v libx264 -pix_fmt yuv420p -c:a aac " +
          shell_quote(source.string()),
      std::chrono::minutes(2));
  if (made.exit_code != 0) return {Verdict::Fail, "could not create test video: " + made.err};

  auto config = test_config();
  config.assembly.enabled = true;
  auto& tool = config.assembly.tool;
  tool.command.replace(0, std::string("ffmpeg").size(), ff);
  tool.probe_command = ff + " -hide_banner -i {output} 2>&1 | awk -F'[:, ]+' "
                            "'/Duration:/{printf \"%.3f\\n\", $3*3600+$4*60+$5}'";
  tool.tolerance = Millis{50};

  // Short and long sentences so the plan both pauses and freezes.
  const Transcript t{"pattern", "en", Millis{10000},
                     {{0, Millis{500}, "Hi."},
                      {1, Millis{2000},
                       "This sentence is long enough that its audio overruns the slot."},
                      {2, Millis{4000}, "Short again."},
                      {3, Millis{7500}, "And a final sentence to close the video out."}}};
  Pipeline pipeline(config, dir / "build");
  VideoJob job{write_transcript(dir.path(), t)};
  job.source_video = source;
  const auto r = pipeline.run_video(job);
  if (r.status != VideoStatus::Completed || !r.artifacts.video || !r.artifacts.plan) {
    return {Verdict::Fail, std::string(to_string(r.status)) + ": " + r.diagnostic};
  }
  const auto plan = parse_plan(read_file(*r.artifacts.plan));
  const auto probe = run_command(expand_template(tool.probe_command, source, *r.artifacts.video, ""),
                                 std::chrono::minutes(1));
  const double seconds = std::strtod(probe.out.c_str(), nullptr);
  const Millis rendered{static_cast<std::int64_t>(std::llround(seconds * 1000.0))};
  const auto drift = std::chrono::abs(rendered - plan.total_duration);
  Checker c;
  c.expect(drift <= Millis{50}, "rendered " + std::to_string(rendered.count()) + " ms vs plan " +
                                    std::to_string(plan.total_duration.count()) + " ms");
  return c.outcome("rendered " + std::to_string(rendered.count()) + " ms, plan " +
                   std::to_string(plan.total_duration.count()) + " ms, drift " +
                   std::to_string(drift.count()) + " ms");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fdr identity", fdr_identity},
      {"calibration oracle equivalence", calibration_oracle},
      {"calibration monotonicity", calibration_monotone},
      {"threshold defaults", threshold_defaults},
      {"alignment contract", alignment_contract},
      {"sync invariants", sync_invariants},
      {"edl determinism", edl_determinism},
      {"homonym flagging", homonym},
      {"crawler semantics", crawler_semantics},
      {"transcript fuzzing", transcript_fuzz},
      {"end-to-end render", render},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    if (o.verdict == Verdict::Fail) ++failed;
    std::printf("%s %2zu %s: %s\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
