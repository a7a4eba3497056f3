#include <doctest.h>

#include "support.hpp"
#include "vidloc/assembly.hpp"
#include "vidloc/wav.hpp"

using namespace vidloc;
using namespace vidloc::testing;

namespace {

struct Fixture {
  std::vector<AlignedSentence> aligned;
  std::vector<AudioAsset> audio;
  SyncPlan plan;
};

// Sentence slots and clip lengths in ms, first slot starting at pre_roll.
Fixture make_fixture(Millis pre_roll, const std::vector<std::pair<int, int>>& slots_and_clips,
                     const fs::path& audio_dir = "audio") {
  Fixture f;
  Millis at = pre_roll;
  for (std::size_t i = 0; i < slots_and_clips.size(); ++i) {
    const Millis slot{slots_and_clips[i].first};
    const Millis clip{slots_and_clips[i].second};
    f.aligned.push_back({i, "s", "t", std::nullopt, at, at + slot});
    f.audio.push_back({i, audio_dir / ("c" + std::to_string(i) + ".wav"), clip, "es"});
    at += slot;
  }
  f.plan = plan_timeline("vid", f.aligned, f.audio, at);
  return f;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("assembly") {
  TEST_CASE("freeze entry transcribes to play, hold, clip") {
    const auto f = make_fixture(Millis{0}, {{4000, 6000}});
    const auto edl = emit_edl(f.plan, "src.mp4", f.audio);
    REQUIRE(edl.ops.size() == 3);
    CHECK(edl.ops[0] == EdlOp{PlaySegment{Millis{0}, Millis{4000}}});
    CHECK(edl.ops[1] == EdlOp{HoldFrame{Millis{4000}, Millis{2000}}});
    CHECK(edl.ops[2] == EdlOp{AudioClip{0, f.audio[0].path, Millis{6000}}});
    CHECK(edl.video_track_duration() == Millis{6000});
    CHECK(edl.audio_track_duration() == Millis{6000});
  }

  TEST_CASE("pause entry ends in silence and pre-roll plays over silence") {
    const auto f = make_fixture(Millis{1500}, {{5000, 3000}});
    const auto edl = emit_edl(f.plan, "src.mp4", f.audio);
    REQUIRE(edl.ops.size() == 5);
    CHECK(edl.ops[0] == EdlOp{PlaySegment{Millis{0}, Millis{1500}}});
    CHECK(edl.ops[1] == EdlOp{Silence{Millis{1500}}});
    CHECK(edl.ops[2] == EdlOp{PlaySegment{Millis{1500}, Millis{6500}}});
    CHECK(op_kind(edl.ops[3]) == "audio-clip");
    CHECK(edl.ops[4] == EdlOp{Silence{Millis{2000}}});
    CHECK(edl.video_track_duration() == Millis{6500});
    CHECK(edl.audio_track_duration() == Millis{6500});
  }

  TEST_CASE("op helpers") {
    CHECK(op_kind(EdlOp{HoldFrame{}}) == "hold-frame");
    CHECK(op_kind(EdlOp{Silence{}}) == "silence");
    CHECK(op_kind(EdlOp{PlaySegment{}}) == "play-segment");
    CHECK(is_video_op(EdlOp{HoldFrame{}}));
    CHECK_FALSE(is_video_op(EdlOp{Silence{}}));
    CHECK(op_duration(EdlOp{PlaySegment{Millis{5}, Millis{9}}}) == Millis{4});
  }

  TEST_CASE("missing audio asset") {
    const auto f = make_fixture(Millis{0}, {{1000, 500}, {1000, 500}});
    auto partial = f.audio;
    partial.pop_back();
    CHECK(code_of([&] { emit_edl(f.plan, "src.mp4", partial); }) == ErrorCode::MissingAsset);
  }

  TEST_CASE("tracks agree for random plans and serialization is stable") {
    Rng rng(21);
    for (int i = 0; i < 300; ++i) {
      std::vector<std::pair<int, int>> sc;
      const auto n = uniform(rng, 1, 15);
      for (std::size_t k = 0; k < n; ++k) {
        sc.emplace_back(static_cast<int>(uniform_ms(rng, 1, 9000)),
                        static_cast<int>(uniform_ms(rng, 1, 9000)));
      }
      const auto f = make_fixture(Millis{uniform_ms(rng, 0, 2000)}, sc);
      const auto edl = emit_edl(f.plan, "src.mp4", f.audio);
      CHECK(edl.video_track_duration() == f.plan.total_duration);
      CHECK(edl.audio_track_duration() == f.plan.total_duration);
      CHECK_NOTHROW(validate_edl(edl));
      const auto text = serialize_edl(edl);
      const auto back = parse_edl(text);
      CHECK(back == edl);
      CHECK(serialize_edl(back) == text);
    }
  }

  TEST_CASE("validate_edl rejects malformed lists") {
    EditDecisionList empty;
    CHECK_THROWS_AS(validate_edl(empty), Error);
    EditDecisionList orphan{"v", "s", {HoldFrame{Millis{0}, Millis{100}}, Silence{Millis{100}}}};
    CHECK_THROWS_AS(validate_edl(orphan), Error);
    EditDecisionList wrong_frame{
        "v", "s",
        {PlaySegment{Millis{0}, Millis{100}}, HoldFrame{Millis{50}, Millis{100}}, Silence{Millis{200}}}};
    CHECK_THROWS_AS(validate_edl(wrong_frame), Error);
    EditDecisionList uneven{"v", "s", {PlaySegment{Millis{0}, Millis{100}}, Silence{Millis{99}}}};
    CHECK_THROWS_AS(validate_edl(uneven), Error);
  }

  TEST_CASE("filter script") {
    const auto f = make_fixture(Millis{1000}, {{4000, 6000}, {3000, 1000}});
    const auto script = render_filter_script(emit_edl(f.plan, "src.mp4", f.audio));
    CHECK(script.find("trim=start=0.000:end=1.000") != std::string::npos);
    CHECK(script.find("tpad=stop_mode=clone:stop_duration=2.000") != std::string::npos);
    CHECK(script.find("amovie=") != std::string::npos);
    CHECK(script.find("anullsrc") != std::string::npos);
    CHECK(script.find("concat=n=3:v=1:a=0") != std::string::npos);
    CHECK(script.find("[vout]") != std::string::npos);
    CHECK(script.find("[aout]") != std::string::npos);
  }

  TEST_CASE("template expansion quotes paths") {
    CHECK(expand_template("tool {input} {script} -o {output} {other}", "a b.mp4", "o.mp4", "s") ==
          "tool 'a b.mp4' 's' -o 'o.mp4' {other}");
  }

  TEST_CASE("assemble drives the tool and checks the duration") {
    TempDir dir;
    const auto f = make_fixture(Millis{0}, {{4000, 6000}}, dir.path());
    for (const auto& a : f.audio) wav::write_silence(a.path, a.duration);
    write_file(dir / "src.mp4", "video");
    const auto edl = emit_edl(f.plan, dir / "src.mp4", f.audio);

    ToolConfig tool;
    tool.command = "cp {script} {output}";
    tool.probe_command = "echo 6.02";
    const auto out = assemble(edl, tool, dir / "out.mp4");
    CHECK(fs::exists(out));
    CHECK(read_file(out) == render_filter_script(edl));

    tool.probe_command = "echo 6.2";
    CHECK(code_of([&] { assemble(edl, tool, dir / "out.mp4"); }) == ErrorCode::DurationDrift);
    tool.probe_command = "echo nothing";
    CHECK(code_of([&] { assemble(edl, tool, dir / "out.mp4"); }) == ErrorCode::ToolFailure);
    tool.command = "echo failing >&2; exit 1";
    CHECK(code_of([&] { assemble(edl, tool, dir / "out.mp4"); }) == ErrorCode::ToolFailure);

    auto no_source = edl;
    no_source.source_video = dir / "missing.mp4";
    tool.command = "touch {output}";
    CHECK(code_of([&] { assemble(no_source, tool, dir / "out.mp4"); }) == ErrorCode::ToolFailure);

    fs::remove(f.audio[0].path);
    CHECK(code_of([&] { assemble(edl, tool, dir / "out.mp4"); }) == ErrorCode::MissingAsset);
  }
}
