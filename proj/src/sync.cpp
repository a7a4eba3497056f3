#include "vidloc/sync.hpp"

#include <json.hpp>

#include "vidloc/error.hpp"

namespace vidloc {

using ordered_json = nlohmann::ordered_json;

SyncPlan plan_timeline(std::string_view video_id, const std::vector<AlignedSentence>& aligned,
                       const std::vector<AudioAsset>& audio, Millis video_duration) {
  if (aligned.empty() || aligned.size() != audio.size()) {
    throw Error(ErrorCode::InputMismatch, "plan_timeline: " + std::to_string(aligned.size()) +
                                              " sentences vs " + std::to_string(audio.size()) +
                                              " audio assets");
  }
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (audio[i].sentence_index != aligned[i].index) {
      throw Error(ErrorCode::InputMismatch,
                  "plan_timeline: audio " + std::to_string(i) + " belongs to sentence " +
                      std::to_string(audio[i].sentence_index) + ", expected " +
                      std::to_string(aligned[i].index));
    }
    if (audio[i].duration.count() <= 0) {
      throw Error(ErrorCode::InputMismatch,
                  "plan_timeline: audio for sentence " + std::to_string(aligned[i].index) +
                      " has no duration");
    }
  }

  SyncPlan plan;
  plan.video_id = std::string(video_id);
  plan.pre_roll = aligned.front().slot_start;
  plan.video_duration = video_duration;
  plan.total_duration = plan.pre_roll;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const auto& s = aligned[i];
    SyncEntry e;
    e.sentence_index = s.index;
    e.source_start = s.slot_start;
    e.source_end = s.slot_end;
    e.audio = audio[i];
    const Millis slot = s.slot();
    const Millis spoken = audio[i].duration;
    if (spoken > slot) {
      e.freeze = spoken - slot;
    } else {
      e.pause = slot - spoken;
    }
    plan.total_duration += std::max(slot, spoken);
    plan.entries.push_back(std::move(e));
  }
  validate_plan(plan);
  return plan;
}

void validate_plan(const SyncPlan& plan) {
  if (plan.entries.empty()) throw Error(ErrorCode::InputMismatch, "plan has no entries");
  if (plan.pre_roll.count() < 0) throw Error(ErrorCode::SlotCoverage, "negative pre-roll");
  Millis cursor = plan.pre_roll;
  Millis total = plan.pre_roll;
  for (const auto& e : plan.entries) {
    if (e.source_start != cursor) {
      throw Error(ErrorCode::SlotCoverage,
                  "sentence " + std::to_string(e.sentence_index) + " starts at " +
                      text::format_seconds(e.source_start) + "s; expected " +
                      text::format_seconds(cursor) + "s");
    }
    if (e.source_end <= e.source_start) {
      throw Error(ErrorCode::SlotCoverage,
                  "sentence " + std::to_string(e.sentence_index) + " has an empty slot");
    }
    if (e.freeze.count() < 0 || e.pause.count() < 0 ||
        (e.freeze.count() > 0 && e.pause.count() > 0)) {
      throw Error(ErrorCode::InputMismatch, "sentence " + std::to_string(e.sentence_index) +
                                                " has an invalid freeze/pause pair");
    }
    if (e.slot() + e.freeze != e.audio.duration + e.pause) {
      throw Error(ErrorCode::InputMismatch,
                  "sentence " + std::to_string(e.sentence_index) + " tracks do not line up");
    }
    cursor = e.source_end;
    total += e.output_duration();
  }
  if (cursor != plan.video_duration) {
    throw Error(ErrorCode::SlotCoverage, "slots end at " + text::format_seconds(cursor) +
                                             "s, video ends at " +
                                             text::format_seconds(plan.video_duration) + "s");
  }
  if (total != plan.total_duration) {
    throw Error(ErrorCode::InputMismatch, "total_duration disagrees with entries");
  }
}

StreamDurations stream_durations(const SyncPlan& plan) {
  StreamDurations d{plan.pre_roll, plan.pre_roll};
  for (const auto& e : plan.entries) {
    d.video_stream += e.slot() + e.freeze;
    d.audio_stream += e.audio.duration + e.pause;
  }
  return d;
}

Millis entry_offset(const SyncPlan& plan, std::size_t i) {
  Millis offset = plan.pre_roll;
  for (std::size_t k = 0; k < i && k < plan.entries.size(); ++k) {
    offset += plan.entries[k].output_duration();
  }
  return offset;
}

std::string serialize_plan(const SyncPlan& plan) {
  ordered_json doc;
  doc["video_id"] = plan.video_id;
  doc["pre_roll_ms"] = plan.pre_roll.count();
  doc["video_duration_ms"] = plan.video_duration.count();
  doc["total_duration_ms"] = plan.total_duration.count();
  auto& entries = doc["entries"] = ordered_json::array();
  for (const auto& e : plan.entries) {
    ordered_json j;
    j["sentence_index"] = e.sentence_index;
    j["source_start_ms"] = e.source_start.count();
    j["source_end_ms"] = e.source_end.count();
    j["audio"] = {{"path", e.audio.path.generic_string()},
                  {"duration_ms", e.audio.duration.count()},
                  {"language", e.audio.language}};
    j["freeze_ms"] = e.freeze.count();
    j["pause_ms"] = e.pause.count();
    entries.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

SyncPlan parse_plan(std::string_view json_text) {
  const auto doc = nlohmann::json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::InputMismatch, "plan: not a JSON object");
  }
  SyncPlan plan;
  try {
    plan.video_id = doc.at("video_id").get<std::string>();
    plan.pre_roll = Millis{doc.at("pre_roll_ms").get<std::int64_t>()};
    plan.video_duration = Millis{doc.at("video_duration_ms").get<std::int64_t>()};
    plan.total_duration = Millis{doc.at("total_duration_ms").get<std::int64_t>()};
    for (const auto& j : doc.at("entries")) {
      SyncEntry e;
      e.sentence_index = j.at("sentence_index").get<std::size_t>();
      e.source_start = Millis{j.at("source_start_ms").get<std::int64_t>()};
      e.source_end = Millis{j.at("source_end_ms").get<std::int64_t>()};
      const auto& a = j.at("audio");
      e.audio.sentence_index = e.sentence_index;
      e.audio.path = a.at("path").get<std::string>();
      e.audio.duration = Millis{a.at("duration_ms").get<std::int64_t>()};
      e.audio.language = a.at("language").get<std::string>();
      e.freeze = Millis{j.at("freeze_ms").get<std::int64_t>()};
      e.pause = Millis{j.at("pause_ms").get<std::int64_t>()};
      plan.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InputMismatch, std::string("plan: ") + e.what());
  }
  validate_plan(plan);
  return plan;
}

}  // namespace vidloc
