#include "vidloc/config.hpp"

#include "vidloc/error.hpp"
#include "vidloc/util.hpp"

namespace vidloc {

using json = nlohmann::json;

namespace {

std::map<Subject, ThresholdPolicy> default_policies() {
  return {{Subject::Reading, ThresholdPolicy::defaults(Subject::Reading)},
          {Subject::Math, ThresholdPolicy::defaults(Subject::Math)},
          {Subject::Other, ThresholdPolicy::defaults(Subject::Other)}};
}

Subject parse_subject(const std::string& name) {
  const auto s = subject_from_string(name);
  if (!s) throw Error(ErrorCode::InvalidConfig, "unknown subject: " + name);
  return *s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

const ThresholdPolicy& PipelineConfig::policy_for(Subject s) const {
  const auto it = policies.find(s);
  if (it == policies.end()) {
    throw Error(ErrorCode::InvalidConfig,
                "no threshold policy for subject " + std::string(to_string(s)));
  }
  return it->second;
}

RetryPolicy PipelineConfig::retry_policy() const {
  RetryPolicy r;
  r.max_attempts = retry_attempts;
  r.base_delay = retry_base_delay;
  return r;
}

PipelineConfig PipelineConfig::offline(std::string source, std::string target) {
  PipelineConfig c;
  c.source_language = std::move(source);
  c.target_language = std::move(target);
  c.translation.kind = ProviderKind::Translation;
  c.translation.name = "identity";
  c.speech.kind = ProviderKind::Speech;
  c.speech.name = "mock";
  c.similarity.kind = ProviderKind::Similarity;
  c.similarity.name = "token-overlap";
  c.cosine = c.similarity;
  c.policies = default_policies();
  c.assembly.enabled = false;
  return c;
}

void PipelineConfig::validate() const {
  if (text::trim(source_language).empty() || text::trim(target_language).empty()) {
    throw Error(ErrorCode::InvalidConfig, "source and target languages are required");
  }
  if (source_language == target_language) {
    throw Error(ErrorCode::InvalidConfig, "source and target languages must differ");
  }
  if (workers == 0 || sentence_workers == 0) {
    throw Error(ErrorCode::InvalidConfig, "worker counts must be positive");
  }
  if (retry_attempts < 1) throw Error(ErrorCode::InvalidConfig, "retry.max_attempts must be >= 1");
  vidloc::validate(translation);
  if (back_translation) vidloc::validate(*back_translation);
  vidloc::validate(speech);
  vidloc::validate(similarity);
  if (cosine) vidloc::validate(*cosine);
  for (const auto& [s, p] : policies) p.validate();
  policy();
}

PipelineConfig pipeline_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  PipelineConfig c;
  c.policies = default_policies();
  try {
    c.source_language = j.value("source", c.source_language);
    c.target_language = j.value("target", c.target_language);
    if (j.contains("subject")) c.subject = parse_subject(j["subject"].get<std::string>());

    const auto& providers = j.at("providers");
    c.translation = provider_config_from_json(providers.at("translation"), ProviderKind::Translation);
    if (providers.contains("back_translation")) {
      c.back_translation =
          provider_config_from_json(providers["back_translation"], ProviderKind::Translation);
    }
    c.speech = provider_config_from_json(providers.at("speech"), ProviderKind::Speech);
    c.similarity = provider_config_from_json(providers.at("similarity"), ProviderKind::Similarity);
    if (providers.contains("cosine")) {
      c.cosine = provider_config_from_json(providers["cosine"], ProviderKind::Similarity);
    }

    if (j.contains("policies")) {
      for (const auto& [name, pj] : j["policies"].items()) {
        const auto s = parse_subject(name);
        c.policies[s] = threshold_policy_from_json(pj, s);
      }
    }

    c.workers = j.value("workers", c.workers);
    c.sentence_workers = j.value("sentence_workers", c.sentence_workers);
    if (j.contains("retry")) {
      const auto& r = j["retry"];
      c.retry_attempts = r.value("max_attempts", c.retry_attempts);
      c.retry_base_delay =
          std::chrono::milliseconds(r.value("base_delay_ms", c.retry_base_delay.count()));
    }
    if (j.contains("abbreviations")) {
      c.abbreviations = resolve(base_dir, j["abbreviations"].get<std::string>());
    }
    if (j.contains("assembly")) {
      const auto& a = j["assembly"];
      c.assembly.enabled = a.value("enabled", c.assembly.enabled);
      c.assembly.tool.command = a.value("command", c.assembly.tool.command);
      c.assembly.tool.probe_command = a.value("probe_command", c.assembly.tool.probe_command);
      c.assembly.tool.container = a.value("container", c.assembly.tool.container);
      c.assembly.tool.tolerance = Millis(a.value("tolerance_ms", c.assembly.tool.tolerance.count()));
      if (a.contains("timeout_s")) {
        c.assembly.tool.timeout = std::chrono::seconds(a["timeout_s"].get<std::int64_t>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const auto raw = read_file(path);
  const auto j = json::parse(raw, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config is not JSON: " + path.string());
  return pipeline_config_from_json(j, path.parent_path());
}

json to_json(const PipelineConfig& c) {
  json providers{{"translation", to_json(c.translation)},
                 {"speech", to_json(c.speech)},
                 {"similarity", to_json(c.similarity)}};
  if (c.back_translation) providers["back_translation"] = to_json(*c.back_translation);
  if (c.cosine) providers["cosine"] = to_json(*c.cosine);
  json policies = json::object();
  for (const auto& [s, p] : c.policies) policies[std::string(to_string(s))] = to_json(p);
  json j{{"source", c.source_language},
         {"target", c.target_language},
         {"subject", to_string(c.subject)},
         {"providers", providers},
         {"policies", policies},
         {"workers", c.workers},
         {"sentence_workers", c.sentence_workers},
         {"retry", {{"max_attempts", c.retry_attempts},
                    {"base_delay_ms", c.retry_base_delay.count()}}},
         {"assembly", {{"enabled", c.assembly.enabled},
                       {"command", c.assembly.tool.command},
                       {"probe_command", c.assembly.tool.probe_command},
                       {"container", c.assembly.tool.container},
                       {"tolerance_ms", c.assembly.tool.tolerance.count()},
                       {"timeout_s", std::chrono::duration_cast<std::chrono::seconds>(
                                         c.assembly.tool.timeout)
                                         .count()}}}};
  if (c.abbreviations) j["abbreviations"] = c.abbreviations->string();
  return j;
}

}  // namespace vidloc
