#include "vidloc/assembly.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vidloc/error.hpp"
#include "vidloc/process.hpp"
#include "vidloc/util.hpp"

namespace vidloc {

using ordered_json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string ff_seconds(Millis ms) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%03lld", static_cast<long long>(ms.count() / 1000),
                static_cast<long long>(ms.count() % 1000));
  return buf;
}

// Single-quoted filter option value.
std::string ff_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

}  // namespace

std::string_view op_kind(const EdlOp& op) {
  return std::visit(overloaded{[](const PlaySegment&) { return std::string_view("play-segment"); },
                               [](const HoldFrame&) { return std::string_view("hold-frame"); },
                               [](const AudioClip&) { return std::string_view("audio-clip"); },
                               [](const Silence&) { return std::string_view("silence"); }},
                    op);
}

Millis op_duration(const EdlOp& op) {
  return std::visit(overloaded{[](const PlaySegment& p) { return p.end - p.start; },
                               [](const HoldFrame& h) { return h.duration; },
                               [](const AudioClip& a) { return a.duration; },
                               [](const Silence& s) { return s.duration; }},
                    op);
}

bool is_video_op(const EdlOp& op) {
  return std::holds_alternative<PlaySegment>(op) || std::holds_alternative<HoldFrame>(op);
}

Millis EditDecisionList::video_track_duration() const {
  Millis total{0};
  for (const auto& op : ops) {
    if (is_video_op(op)) total += op_duration(op);
  }
  return total;
}

Millis EditDecisionList::audio_track_duration() const {
  Millis total{0};
  for (const auto& op : ops) {
    if (!is_video_op(op)) total += op_duration(op);
  }
  return total;
}

EditDecisionList emit_edl(const SyncPlan& plan, const std::filesystem::path& source_video,
                          const std::vector<AudioAsset>& audio_assets) {
  validate_plan(plan);
  EditDecisionList edl;
  edl.video_id = plan.video_id;
  edl.source_video = source_video;
  if (plan.pre_roll.count() > 0) {
    edl.ops.emplace_back(PlaySegment{Millis{0}, plan.pre_roll});
    edl.ops.emplace_back(Silence{plan.pre_roll});
  }
  for (const auto& e : plan.entries) {
    const auto found = std::find_if(audio_assets.begin(), audio_assets.end(), [&](const auto& a) {
      return a.sentence_index == e.sentence_index && a.path == e.audio.path;
    });
    if (found == audio_assets.end()) {
      throw Error(ErrorCode::MissingAsset, "no audio asset for sentence " +
                                               std::to_string(e.sentence_index) + " (" +
                                               e.audio.path.string() + ")");
    }
    edl.ops.emplace_back(PlaySegment{e.source_start, e.source_end});
    if (e.freeze.count() > 0) edl.ops.emplace_back(HoldFrame{e.source_end, e.freeze});
    edl.ops.emplace_back(AudioClip{e.sentence_index, found->path, e.audio.duration});
    if (e.pause.count() > 0) edl.ops.emplace_back(Silence{e.pause});
  }
  validate_edl(edl);
  return edl;
}

void validate_edl(const EditDecisionList& edl) {
  if (edl.ops.empty()) throw Error(ErrorCode::InputMismatch, "EDL has no ops");
  const PlaySegment* last_play = nullptr;
  bool play_just_ended = false;
  for (const auto& op : edl.ops) {
    if (op_duration(op).count() <= 0) {
      throw Error(ErrorCode::InputMismatch, "EDL op with non-positive duration");
    }
    if (const auto* p = std::get_if<PlaySegment>(&op)) {
      last_play = p;
      play_just_ended = true;
    } else if (const auto* h = std::get_if<HoldFrame>(&op)) {
      if (!play_just_ended || !last_play || last_play->end != h->at) {
        throw Error(ErrorCode::InputMismatch, "hold-frame does not extend a play-segment");
      }
      play_just_ended = false;
    }
  }
  if (edl.video_track_duration() != edl.audio_track_duration()) {
    throw Error(ErrorCode::InputMismatch,
                "EDL tracks differ: video " + text::format_seconds(edl.video_track_duration()) +
                    "s, audio " + text::format_seconds(edl.audio_track_duration()) + "s");
  }
}

std::string serialize_edl(const EditDecisionList& edl) {
  ordered_json doc;
  doc["video_id"] = edl.video_id;
  doc["source_video"] = edl.source_video.generic_string();
  doc["track_duration_ms"] = edl.video_track_duration().count();
  auto& ops = doc["ops"] = ordered_json::array();
  for (const auto& op : edl.ops) {
    ordered_json j;
    j["kind"] = op_kind(op);
    std::visit(overloaded{[&](const PlaySegment& p) {
                            j["start_ms"] = p.start.count();
                            j["end_ms"] = p.end.count();
                          },
                          [&](const HoldFrame& h) {
                            j["at_ms"] = h.at.count();
                            j["duration_ms"] = h.duration.count();
                          },
                          [&](const AudioClip& a) {
                            j["sentence_index"] = a.sentence_index;
                            j["path"] = a.path.generic_string();
                            j["duration_ms"] = a.duration.count();
                          },
                          [&](const Silence& s) { j["duration_ms"] = s.duration.count(); }},
               op);
    ops.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

EditDecisionList parse_edl(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::InputMismatch, "EDL: not a JSON object");
  }
  EditDecisionList edl;
  try {
    edl.video_id = doc.at("video_id").get<std::string>();
    edl.source_video = doc.at("source_video").get<std::string>();
    for (const auto& j : doc.at("ops")) {
      const auto kind = j.at("kind").get<std::string>();
      auto ms = [&](const char* key) { return Millis{j.at(key).get<std::int64_t>()}; };
      if (kind == "play-segment") {
        edl.ops.emplace_back(PlaySegment{ms("start_ms"), ms("end_ms")});
      } else if (kind == "hold-frame") {
        edl.ops.emplace_back(HoldFrame{ms("at_ms"), ms("duration_ms")});
      } else if (kind == "audio-clip") {
        edl.ops.emplace_back(AudioClip{j.at("sentence_index").get<std::size_t>(),
                                       j.at("path").get<std::string>(), ms("duration_ms")});
      } else if (kind == "silence") {
        edl.ops.emplace_back(Silence{ms("duration_ms")});
      } else {
        throw Error(ErrorCode::InputMismatch, "EDL: unknown op kind " + kind);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InputMismatch, std::string("EDL: ") + e.what());
  }
  validate_edl(edl);
  return edl;
}

std::string render_filter_script(const EditDecisionList& edl) {
  validate_edl(edl);
  std::string graph;
  std::vector<std::string> video_labels;
  std::vector<std::string> audio_labels;

  for (std::size_t k = 0; k < edl.ops.size(); ++k) {
    const auto& op = edl.ops[k];
    if (const auto* p = std::get_if<PlaySegment>(&op)) {
      // A hold on the segment's last frame is folded into the same chain.
      Millis hold{0};
      for (std::size_t n = k + 1; n < edl.ops.size(); ++n) {
        if (const auto* h = std::get_if<HoldFrame>(&edl.ops[n])) {
          hold = h->duration;
          break;
        }
        if (std::holds_alternative<PlaySegment>(edl.ops[n])) break;
      }
      const std::string label = "v" + std::to_string(video_labels.size());
      graph += "[0:v]trim=start=" + ff_seconds(p->start) + ":end=" + ff_seconds(p->end) +
               ",setpts=PTS-STARTPTS";
      if (hold.count() > 0) {
        graph += ",tpad=stop_mode=clone:stop_duration=" + ff_seconds(hold);
      }
      graph += "[" + label + "];\n";
      video_labels.push_back(label);
    } else if (const auto* a = std::get_if<AudioClip>(&op)) {
      const std::string label = "a" + std::to_string(audio_labels.size());
      graph += "amovie=filename=" + ff_quote(a->path.string()) +
               ",aresample=24000,aformat=sample_fmts=s16:channel_layouts=mono"
               ",apad,atrim=duration=" + ff_seconds(a->duration) +
               ",asetpts=PTS-STARTPTS[" + label + "];\n";
      audio_labels.push_back(label);
    } else if (const auto* s = std::get_if<Silence>(&op)) {
      const std::string label = "a" + std::to_string(audio_labels.size());
      graph += "anullsrc=r=24000:cl=mono,aformat=sample_fmts=s16,atrim=duration=" +
               ff_seconds(s->duration) + ",asetpts=PTS-STARTPTS[" + label + "];\n";
      audio_labels.push_back(label);
    }
  }
  // Both tracks end pinned to the EDL length.
  const std::string total = ff_seconds(edl.video_track_duration());
  for (const auto& l : video_labels) graph += "[" + l + "]";
  graph += "concat=n=" + std::to_string(video_labels.size()) +
           ":v=1:a=0,tpad=stop_mode=clone:stop_duration=1,trim=duration=" + total + "[vout];\n";
  for (const auto& l : audio_labels) graph += "[" + l + "]";
  graph += "concat=n=" + std::to_string(audio_labels.size()) +
           ":v=0:a=1,apad,atrim=duration=" + total + "[aout]\n";
  return graph;
}

std::string expand_template(std::string_view tmpl, const std::filesystem::path& input,
                            const std::filesystem::path& output,
                            const std::filesystem::path& script) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find('{', i);
    if (open == std::string_view::npos) {
      out += tmpl.substr(i);
      break;
    }
    out += tmpl.substr(i, open - i);
    const auto close = tmpl.find('}', open);
    const auto name = close == std::string_view::npos ? std::string_view{}
                                                      : tmpl.substr(open + 1, close - open - 1);
    if (name == "input") {
      out += shell_quote(input.string());
    } else if (name == "output") {
      out += shell_quote(output.string());
    } else if (name == "script") {
      out += shell_quote(script.string());
    } else {
      out.push_back('{');
      i = open + 1;
      continue;
    }
    i = close + 1;
  }
  return out;
}

std::filesystem::path assemble(const EditDecisionList& edl, const ToolConfig& tool,
                               const std::filesystem::path& output) {
  validate_edl(edl);
  if (!std::filesystem::is_regular_file(edl.source_video)) {
    throw Error(ErrorCode::ToolFailure, "source video not found: " + edl.source_video.string());
  }
  for (const auto& op : edl.ops) {
    if (const auto* a = std::get_if<AudioClip>(&op)) {
      if (!std::filesystem::is_regular_file(a->path)) {
        throw Error(ErrorCode::MissingAsset, "audio clip not found: " + a->path.string());
      }
    }
  }

  auto script = output;
  script += ".filter";
  write_file(script, render_filter_script(edl));

  const auto command = expand_template(tool.command, edl.source_video, output, script);
  spdlog::info("assemble {}: {}", edl.video_id, command);
  const auto run = run_command(command, tool.timeout);
  if (run.exit_code != 0) {
    throw Error(ErrorCode::ToolFailure,
                "media tool exited with " + std::to_string(run.exit_code) +
                    (run.timed_out ? " (timed out)" : "") + ": " + run.err);
  }

  const auto probe = run_command(expand_template(tool.probe_command, edl.source_video, output, script),
                                 std::chrono::minutes(2));
  if (probe.exit_code != 0) {
    throw Error(ErrorCode::ToolFailure, "duration probe failed: " + probe.err);
  }
  char* end = nullptr;
  const double seconds = std::strtod(probe.out.c_str(), &end);
  if (end == probe.out.c_str() || !std::isfinite(seconds)) {
    throw Error(ErrorCode::ToolFailure, "duration probe printed no number: " + probe.out);
  }
  const Millis rendered{static_cast<std::int64_t>(std::llround(seconds * 1000.0))};
  const Millis expected = edl.video_track_duration();
  if (std::chrono::abs(rendered - expected) > tool.tolerance) {
    throw Error(ErrorCode::DurationDrift, "rendered " + text::format_seconds(rendered) +
                                              "s, expected " + text::format_seconds(expected) +
                                              "s");
  }
  return output;
}

}  // namespace vidloc
