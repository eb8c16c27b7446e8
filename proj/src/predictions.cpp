#include <algorithm>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "eventbench/backends.hpp"
#include "eventbench/error.hpp"

namespace eventbench {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Binary: return "binary";
    case Task::Attack: return "attack";
    case Task::Ner: return "ner";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "binary") return Task::Binary;
  if (name == "attack") return Task::Attack;
  if (name == "ner") return Task::Ner;
  throw Error(ErrorCode::ConfigError, "unknown task \"" + std::string(name) + "\"");
}

Prediction zero_prediction(const Document& doc, Task task, std::string reason) {
  Prediction p;
  p.doc_id = doc.id;
  p.task = task;
  p.failed = true;
  p.failure = std::move(reason);
  switch (task) {
    case Task::Binary:
      p.binary_score = 0.0;
      break;
    case Task::Attack:
      p.attack_scores = attack_vector_template();
      break;
    case Task::Ner: {
      TagSequence seq;
      for (const auto& t : doc.tokens) seq.tokens.push_back(t.text);
      seq.tags.assign(seq.tokens.size(), "O");
      p.tag_sequence = std::move(seq);
      break;
    }
  }
  return p;
}

void PredictionSet::add(Prediction p) {
  if (p.task != task_) {
    if (items_.empty()) {
      task_ = p.task;
    } else {
      throw Error(ErrorCode::MixedTasks, "prediction for \"" + p.doc_id + "\" is a " +
                                             std::string(to_string(p.task)) + " prediction in a " +
                                             std::string(to_string(task_)) + " set");
    }
  }
  if (!index_.emplace(p.doc_id, items_.size()).second) {
    throw Error(ErrorCode::DuplicateId, "duplicate prediction id \"" + p.doc_id + "\"");
  }
  items_.push_back(std::move(p));
}

const Prediction* PredictionSet::find(std::string_view doc_id) const {
  auto it = index_.find(doc_id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

std::size_t PredictionSet::failures() const {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [](const Prediction& p) { return p.failed; }));
}

namespace {

double probability(const nlohmann::json& v, std::size_t row) {
  if (!v.is_number()) {
    throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": score must be a number");
  }
  const double x = v.get<double>();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::FormatError,
                "row " + std::to_string(row) + ": score outside [0,1]");
  }
  return x;
}

Prediction prediction_from_json(const nlohmann::json& obj, std::size_t row,
                                const Taxonomy& taxonomy) {
  if (!obj.is_object() || !obj.contains("id")) {
    throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": missing \"id\"");
  }
  Prediction p;
  const auto& id = obj["id"];
  p.doc_id = id.is_string() ? id.get<std::string>() : id.dump();

  const int kinds = int(obj.contains("score")) + int(obj.contains("scores")) +
                    int(obj.contains("tags"));
  if (kinds != 1) {
    throw Error(ErrorCode::FormatError, "row " + std::to_string(row) +
                                            ": need exactly one of score, scores, tags");
  }
  if (auto it = obj.find("score"); it != obj.end()) {
    p.task = Task::Binary;
    p.binary_score = probability(*it, row);
  } else if (auto it = obj.find("scores"); it != obj.end()) {
    p.task = Task::Attack;
    if (!it->is_object()) {
      throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": scores must be an object");
    }
    CategoryVector v = attack_vector_template();
    for (const auto& [label, value] : it->items()) {
      const auto t = taxonomy.try_attack_label(label);
      if (!t) {
        spdlog::warn("predictions row {}: dropping unknown category \"{}\"", row, label);
        continue;
      }
      v[ordinal(*t)] = std::max(v[ordinal(*t)], probability(value, row));
    }
    p.attack_scores = v;
  } else {
    p.task = Task::Ner;
    const auto& tags = obj["tags"];
    if (!tags.is_array()) {
      throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": tags must be an array");
    }
    TagSequence seq;
    for (const auto& t : tags) {
      if (!t.is_string()) {
        throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": tags must be strings");
      }
      seq.tags.push_back(taxonomy.canonical_tag(t.get<std::string>()));
    }
    p.tag_sequence = std::move(seq);
  }
  if (auto it = obj.find("latency"); it != obj.end() && it->is_number()) {
    p.latency = std::chrono::duration<double>(it->get<double>());
  }
  return p;
}

}  // namespace

PredictionSet parse_predictions(std::string_view content, std::string backend_name,
                                const Taxonomy& taxonomy) {
  PredictionSet set(std::move(backend_name), Task::Binary);
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = content.substr(start, nl - start);
    start = nl + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::FormatError, "row " + std::to_string(row) + ": " + e.what());
    }
    set.add(prediction_from_json(obj, row, taxonomy));
  }
  return set;
}

PredictionSet load_predictions_file(const std::filesystem::path& path, const Taxonomy& taxonomy,
                                    std::string backend_name) {
  if (backend_name.empty()) backend_name = path.stem().string();
  return parse_predictions(read_file(path), std::move(backend_name), taxonomy);
}

PredictionsFileBackend::PredictionsFileBackend(std::string name, PredictionSet predictions)
    : name_(std::move(name)), predictions_(std::move(predictions)) {}

PredictionsFileBackend::PredictionsFileBackend(std::string name, const std::filesystem::path& path,
                                               const Taxonomy& taxonomy)
    : name_(std::move(name)), predictions_(load_predictions_file(path, taxonomy, name_)) {}

std::vector<Prediction> PredictionsFileBackend::predict(std::span<const Document> batch, Task task) {
  if (predictions_.size() > 0 && predictions_.task() != task) {
    throw Error(ErrorCode::ConfigError, "backend " + name_ + " holds " +
                                            std::string(to_string(predictions_.task())) +
                                            " predictions, run needs " +
                                            std::string(to_string(task)));
  }
  std::vector<Prediction> out;
  out.reserve(batch.size());
  for (const auto& doc : batch) {
    const Prediction* p = predictions_.find(doc.id);
    if (!p) {
      out.push_back(zero_prediction(doc, task, "no prediction in file"));
      continue;
    }
    Prediction copy = *p;
    if (task == Task::Ner) {
      if (copy.tag_sequence->tags.size() != doc.tokens.size()) {
        out.push_back(zero_prediction(doc, task, "tag count does not match token count"));
        continue;
      }
      copy.tag_sequence->tokens.clear();
      for (const auto& t : doc.tokens) copy.tag_sequence->tokens.push_back(t.text);
    }
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace eventbench
