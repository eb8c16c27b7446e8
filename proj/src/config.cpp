#include <fstream>

#include "eventbench/error.hpp"
#include "eventbench/harness.hpp"

namespace eventbench {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::ConfigError, message);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    config_error(std::string("field \"") + key + "\" has the wrong type");
  }
}

Date config_date(const json& v, const char* what) {
  if (!v.is_string()) config_error(std::string(what) + " must be an ISO date string");
  const auto d = parse_date(v.get<std::string>());
  if (!d) config_error(std::string(what) + " is not a valid date");
  return *d;
}

BackendDescriptor parse_backend(const json& obj, const std::filesystem::path& base) {
  if (!obj.is_object()) config_error("backend entries must be objects");
  BackendDescriptor b;
  b.name = get_or<std::string>(obj, "name", "");
  const auto kind = get_or<std::string>(obj, "kind", "predictions-file");
  if (kind == "predictions-file") {
    b.kind = BackendDescriptor::Kind::PredictionsFile;
    auto file = get_or<std::string>(obj, "file", get_or<std::string>(obj, "predictions", ""));
    if (!file.empty()) b.predictions_path = resolve(base, file);
  } else if (kind == "http-chat") {
    b.kind = BackendDescriptor::Kind::HttpChat;
    auto& e = b.chat.endpoint;
    e.base_url = get_or<std::string>(obj, "base_url", "");
    e.path = get_or<std::string>(obj, "path", e.path);
    e.model = get_or<std::string>(obj, "model", "");
    e.api_key_env = get_or<std::string>(obj, "api_key_env", "");
    e.timeout_seconds = get_or<double>(obj, "timeout_seconds", e.timeout_seconds);
    e.max_attempts = get_or<int>(obj, "max_attempts", e.max_attempts);
    e.backoff_base = std::chrono::duration<double>(
        get_or<double>(obj, "backoff_seconds", e.backoff_base.count()));
    b.chat.max_tokens = get_or<int>(obj, "max_tokens", b.chat.max_tokens);
    b.chat.temperature = get_or<double>(obj, "temperature", b.chat.temperature);
    b.chat.entity_types = get_or<std::vector<std::string>>(obj, "entity_types", {});
    if (auto it = obj.find("batch_size"); it != obj.end()) {
      b.chat.batch_size = get_or<std::size_t>(obj, "batch_size", 0);
    } else {
      b.chat.batch_size = 0;  // inherit the run-level batch size
    }
  } else {
    config_error("backend \"" + b.name + "\": unknown kind \"" + kind + "\"");
  }
  return b;
}

}  // namespace

std::string_view to_string(BackendDescriptor::Kind kind) {
  return kind == BackendDescriptor::Kind::PredictionsFile ? "predictions-file" : "http-chat";
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) config_error("configuration must be a JSON object");
  RunConfig c;
  try {
    c.task = parse_task(get_or<std::string>(doc, "task", "binary"));
  } catch (const Error& e) {
    config_error(e.what());
  }

  if (auto it = doc.find("corpus"); it != doc.end()) {
    const auto& corpus = *it;
    if (!corpus.is_object()) config_error("\"corpus\" must be an object");
    if (auto p = get_or<std::string>(corpus, "documents", ""); !p.empty()) {
      c.documents = resolve(base_dir, p);
    }
    const auto format = get_or<std::string>(corpus, "format", "");
    if (format == "csv" || (format.empty() && c.documents && c.documents->extension() == ".csv")) {
      c.documents_format = DocumentFormat::Csv;
    } else if (!format.empty() && format != "jsonl") {
      config_error("unknown document format \"" + format + "\"");
    }
    if (auto p = get_or<std::string>(corpus, "conll", ""); !p.empty()) c.conll = resolve(base_dir, p);
    if (auto p = get_or<std::string>(corpus, "aliases", ""); !p.empty()) {
      c.alias_file = resolve(base_dir, p);
    }
    c.entity_types = get_or<std::vector<std::string>>(corpus, "entity_types", {});
  }

  if (auto it = doc.find("split"); it != doc.end() && !it->is_null()) {
    SplitSpec s;
    s.cutoff_year = get_or<int>(*it, "cutoff_year", s.cutoff_year);
    s.end_year = get_or<int>(*it, "end_year", s.end_year);
    c.split = s;
  }

  if (auto it = doc.find("backends"); it != doc.end()) {
    if (!it->is_array()) config_error("\"backends\" must be an array");
    for (const auto& b : *it) c.backends.push_back(parse_backend(b, base_dir));
  }

  c.threshold = get_or<double>(doc, "threshold", c.threshold);
  c.batch_size = get_or<std::size_t>(doc, "batch_size", c.batch_size);
  c.concurrency = get_or<std::size_t>(doc, "concurrency", c.concurrency);
  if (auto p = get_or<std::string>(doc, "output_dir", ""); !p.empty()) {
    c.output_dir = resolve(base_dir, p);
  }
  c.seed = get_or<std::uint64_t>(doc, "seed", c.seed);
  if (auto it = doc.find("sample"); it != doc.end() && !it->is_null()) {
    c.sample = get_or<std::size_t>(doc, "sample", 0);
  }
  const auto bucketing = get_or<std::string>(doc, "bucketing", "month");
  if (bucketing == "day") {
    c.bucketing = Bucketing::Day;
  } else if (bucketing != "month") {
    config_error("bucketing must be \"day\" or \"month\"");
  }
  if (auto it = doc.find("window"); it != doc.end() && !it->is_null()) {
    if (!it->is_object() || !it->contains("start") || !it->contains("end")) {
      config_error("\"window\" needs start and end");
    }
    c.window = DateWindow{config_date((*it)["start"], "window.start"),
                          config_date((*it)["end"], "window.end")};
  }
  c.reproducible = get_or<bool>(doc, "reproducible", false);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

void validate(const RunConfig& c) {
  if (c.backends.empty()) config_error("at least one backend is required");
  if (!(c.threshold > 0.0 && c.threshold < 1.0)) {
    config_error("threshold must lie in (0, 1), got " + std::to_string(c.threshold));
  }
  if (c.batch_size == 0) config_error("batch size must be at least 1");
  if (c.concurrency == 0) config_error("concurrency must be at least 1");
  if (c.task == Task::Ner && !c.conll) config_error("the ner task needs corpus.conll");
  if (c.task != Task::Ner && !c.documents) {
    config_error("the " + std::string(to_string(c.task)) + " task needs corpus.documents");
  }
  if (c.split && c.split->end_year < c.split->cutoff_year) {
    config_error("split end_year precedes cutoff_year");
  }
  if (c.window && c.window->end < c.window->start) config_error("window ends before it starts");
  std::map<std::string, int> names;
  for (const auto& b : c.backends) {
    if (b.name.empty()) config_error("every backend needs a name");
    if (names[file_slug(b.name)]++ > 0) {
      config_error("backend names must be distinct after slugging: \"" + b.name + "\"");
    }
    if (b.kind == BackendDescriptor::Kind::PredictionsFile && b.predictions_path.empty()) {
      config_error("backend \"" + b.name + "\" needs a predictions file");
    }
    if (b.kind == BackendDescriptor::Kind::HttpChat &&
        (b.chat.endpoint.base_url.empty() || b.chat.endpoint.model.empty())) {
      config_error("backend \"" + b.name + "\" needs base_url and model");
    }
  }
}

nlohmann::ordered_json RunConfig::snapshot() const {
  nlohmann::ordered_json j;
  j["task"] = to_string(task);
  auto& corpus = j["corpus"];
  corpus = nlohmann::ordered_json::object();
  if (documents) {
    corpus["documents"] = documents->generic_string();
    corpus["format"] = documents_format == DocumentFormat::Csv ? "csv" : "jsonl";
  }
  if (conll) corpus["conll"] = conll->generic_string();
  if (alias_file) corpus["aliases"] = alias_file->generic_string();
  if (!entity_types.empty()) corpus["entity_types"] = entity_types;
  if (split) j["split"] = {{"cutoff_year", split->cutoff_year}, {"end_year", split->end_year}};
  j["backends"] = nlohmann::ordered_json::array();
  for (const auto& b : backends) {
    nlohmann::ordered_json o;
    o["name"] = b.name;
    o["kind"] = to_string(b.kind);
    if (b.kind == BackendDescriptor::Kind::PredictionsFile) {
      o["file"] = b.predictions_path.generic_string();
    } else {
      const auto& e = b.chat.endpoint;
      o["base_url"] = e.base_url;
      o["path"] = e.path;
      o["model"] = e.model;
      o["api_key_env"] = e.api_key_env;
      o["timeout_seconds"] = e.timeout_seconds;
      o["max_tokens"] = b.chat.max_tokens;
      o["temperature"] = b.chat.temperature;
      o["batch_size"] = b.chat.batch_size == 0 ? batch_size : b.chat.batch_size;
    }
    j["backends"].push_back(std::move(o));
  }
  j["threshold"] = threshold;
  j["batch_size"] = batch_size;
  j["concurrency"] = concurrency;
  j["output_dir"] = output_dir.generic_string();
  j["seed"] = seed;
  if (sample) j["sample"] = *sample;
  j["bucketing"] = bucketing == Bucketing::Day ? "day" : "month";
  if (window) j["window"] = {{"start", window->start.iso()}, {"end", window->end.iso()}};
  j["reproducible"] = reproducible;
  return j;
}

}  // namespace eventbench
