#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eventbench/corpus.hpp"
#include "eventbench/taxonomy.hpp"

namespace eventbench {

enum class Task { Binary, Attack, Ner };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

struct Prediction {
  std::string doc_id;
  Task task = Task::Binary;
  std::optional<double> binary_score;
  std::optional<CategoryVector> attack_scores;
  std::optional<TagSequence> tag_sequence;
  std::optional<std::chrono::duration<double>> latency;
  /// Set when the backend produced nothing usable; the payload is then the
  /// all-zero (or all-O) prediction.
  bool failed = false;
  std::string failure;
};

/// Zero prediction for a document: score 0, zero vector, or all-O tags.
Prediction zero_prediction(const Document& doc, Task task, std::string reason);

struct Timing {
  double total_seconds = 0.0;
  double per_document_seconds = 0.0;
};

class PredictionSet {
 public:
  PredictionSet() = default;
  PredictionSet(std::string backend_name, Task task) : backend_(std::move(backend_name)), task_(task) {}

  /// Throws DuplicateId, or MixedTasks when the prediction's task differs.
  void add(Prediction p);

  const std::string& backend_name() const { return backend_; }
  Task task() const { return task_; }
  std::span<const Prediction> predictions() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const Prediction* find(std::string_view doc_id) const;
  std::size_t failures() const;

  Timing timing;

 private:
  std::string backend_;
  Task task_ = Task::Binary;
  std::vector<Prediction> items_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// ---------------------------------------------------------------------------
// Prompt protocol

inline constexpr std::size_t kDefaultBatchSize = 1;

/// The fixed classification instruction block, ending with "Events:".
std::string_view classification_prompt_header();

/// Header followed by one numbered line per event ("1. ...").
std::string render_classification_prompt(std::span<const std::string> events,
                                         std::size_t max_batch = kDefaultBatchSize);

struct ClassificationParse {
  std::vector<CategoryVector> vectors;
  std::vector<bool> parse_failure;
  std::size_t dropped_keys = 0;

  std::size_t failures() const;
};

/// Extracts up to `expected_n` category objects from free model text.
ClassificationParse parse_classification_output(std::string_view text, std::size_t expected_n,
                                                const Taxonomy& taxonomy = default_taxonomy());

/// Prompt asking for a JSON array of {"text", "type"} objects. Throws InvalidTypes
/// on an empty type list.
std::string render_ner_prompt(std::string_view text, std::span<const std::string> entity_types);

struct ExtractedEntity {
  std::string surface;
  EntityType type;
};

/// Entities from the first JSON array in the text. Types outside `allowed`
/// (when non-empty) or unknown to the taxonomy are dropped.
std::vector<ExtractedEntity> parse_ner_output(std::string_view text,
                                              std::span<const std::string> allowed,
                                              const Taxonomy& taxonomy = default_taxonomy(),
                                              bool* found_json = nullptr);

struct Alignment {
  TagSequence tags;
  std::size_t unmatched = 0;
};

/// Places each surface at its first case-insensitive occurrence that does not
/// overlap an already placed one, then tags tokens via spans_to_bio.
Alignment align_ner_output(std::string_view text, std::span<const Token> tokens,
                           std::span<const ExtractedEntity> entities);

/// Relevance prompt for generative models on the binary task.
std::string render_binary_prompt(std::string_view text);
/// Probability under a "conflict" (or "probability"/"score") key of the first
/// JSON object carrying one; nullopt when none is found.
std::optional<double> parse_binary_output(std::string_view text);

// ---------------------------------------------------------------------------
// JSON extraction

/// Balanced JSON values ('{...}' or '[...]') embedded in arbitrary text, in
/// order of appearance. Brace matching skips string literals; candidates that
/// fail to parse are skipped and scanning resumes after their opening bracket.
std::vector<std::string> extract_json_values(std::string_view text, std::size_t limit = 0);

// ---------------------------------------------------------------------------
// HTTP chat generation

struct EndpointConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;
  double timeout_seconds = 120.0;
  int max_attempts = 3;
  std::chrono::duration<double> backoff_base{1.0};
  double backoff_factor = 2.0;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct GenerationRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  int max_tokens = 512;
  double temperature = 0.0;
};

struct GenerationResponse {
  std::string text;
  std::optional<long long> prompt_tokens;
  std::optional<long long> completion_tokens;
  int attempts = 1;
};

/// Request body sent to the endpoint.
std::string generation_request_body(const GenerationRequest& request);
/// First choice's message content; throws MalformedResponse.
GenerationResponse parse_generation_response(std::string_view body);

/// POSTs the request, retrying transport errors, 429 and 5xx with exponential
/// backoff. Throws Transport, BadStatus or MalformedResponse.
GenerationResponse http_generate(const EndpointConfig& endpoint, const GenerationRequest& request);

// ---------------------------------------------------------------------------
// Backends

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& name() const = 0;
  /// One prediction per input document, same order. Must be callable
  /// concurrently. Throwing ConfigError aborts the run; other errors fail the
  /// batch.
  virtual std::vector<Prediction> predict(std::span<const Document> batch, Task task) = 0;
  virtual std::size_t batch_size(Task) const { return 1; }
};

/// Reads {id, score} | {id, scores:{label: prob}} | {id, tags:[...]} JSONL.
PredictionSet load_predictions_file(const std::filesystem::path& path,
                                    const Taxonomy& taxonomy = default_taxonomy(),
                                    std::string backend_name = {});
PredictionSet parse_predictions(std::string_view content, std::string backend_name,
                                const Taxonomy& taxonomy = default_taxonomy());

class PredictionsFileBackend final : public Backend {
 public:
  PredictionsFileBackend(std::string name, PredictionSet predictions);
  PredictionsFileBackend(std::string name, const std::filesystem::path& path,
                         const Taxonomy& taxonomy = default_taxonomy());

  const std::string& name() const override { return name_; }
  std::vector<Prediction> predict(std::span<const Document> batch, Task task) override;
  std::size_t batch_size(Task) const override { return 256; }

 private:
  std::string name_;
  PredictionSet predictions_;
};

struct ChatBackendOptions {
  EndpointConfig endpoint;
  std::size_t batch_size = kDefaultBatchSize;
  int max_tokens = 512;
  double temperature = 0.0;
  std::vector<std::string> entity_types;
};

class ChatBackend final : public Backend {
 public:
  using Generator = std::function<GenerationResponse(const GenerationRequest&)>;

  ChatBackend(std::string name, ChatBackendOptions options,
              const Taxonomy& taxonomy = default_taxonomy());
  /// Test seam: replaces the HTTP transport.
  ChatBackend(std::string name, ChatBackendOptions options, Generator generator,
              const Taxonomy& taxonomy = default_taxonomy());

  const std::string& name() const override { return name_; }
  std::vector<Prediction> predict(std::span<const Document> batch, Task task) override;
  std::size_t batch_size(Task task) const override;

 private:
  GenerationResponse generate(const std::string& prompt) const;

  std::string name_;
  ChatBackendOptions options_;
  Generator generator_;
  const Taxonomy* taxonomy_;
};

/// Runs the backend over the documents with at most `concurrency` batches in
/// flight. Predictions come back in input order; wall time wraps the whole run.
PredictionSet run_backend(Backend& backend, std::span<const Document> docs, Task task,
                          std::size_t concurrency = 1);

}  // namespace eventbench
