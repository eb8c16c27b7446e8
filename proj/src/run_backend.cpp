#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "eventbench/backends.hpp"
#include "eventbench/error.hpp"

namespace eventbench {

ChatBackend::ChatBackend(std::string name, ChatBackendOptions options, const Taxonomy& taxonomy)
    : name_(std::move(name)), options_(std::move(options)), taxonomy_(&taxonomy) {
  generator_ = [endpoint = options_.endpoint](const GenerationRequest& r) {
    return http_generate(endpoint, r);
  };
}

ChatBackend::ChatBackend(std::string name, ChatBackendOptions options, Generator generator,
                         const Taxonomy& taxonomy)
    : name_(std::move(name)),
      options_(std::move(options)),
      generator_(std::move(generator)),
      taxonomy_(&taxonomy) {}

std::size_t ChatBackend::batch_size(Task task) const {
  return task == Task::Attack ? std::max<std::size_t>(1, options_.batch_size) : 1;
}

GenerationResponse ChatBackend::generate(const std::string& prompt) const {
  GenerationRequest request;
  request.model = options_.endpoint.model;
  request.messages.push_back({"user", prompt});
  request.max_tokens = options_.max_tokens;
  request.temperature = options_.temperature;
  return generator_(request);
}

std::vector<Prediction> ChatBackend::predict(std::span<const Document> batch, Task task) {
  using clock = std::chrono::steady_clock;
  std::vector<Prediction> out;
  if (batch.empty()) return out;

  if (task == Task::Attack) {
    std::vector<std::string> events;
    for (const auto& d : batch) events.push_back(d.text);
    const auto t0 = clock::now();
    const auto response = generate(render_classification_prompt(events, batch_size(task)));
    const std::chrono::duration<double> latency = clock::now() - t0;
    const auto parsed = parse_classification_output(response.text, batch.size(), *taxonomy_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Prediction p;
      if (parsed.parse_failure[i]) {
        p = zero_prediction(batch[i], task, "no category object in model output");
      } else {
        p.doc_id = batch[i].id;
        p.task = task;
        p.attack_scores = parsed.vectors[i];
      }
      p.latency = latency;
      out.push_back(std::move(p));
    }
    return out;
  }

  for (const auto& doc : batch) {
    const auto t0 = clock::now();
    Prediction p;
    if (task == Task::Binary) {
      const auto response = generate(render_binary_prompt(doc.text));
      if (const auto score = parse_binary_output(response.text)) {
        p.doc_id = doc.id;
        p.task = task;
        p.binary_score = *score;
      } else {
        p = zero_prediction(doc, task, "no conflict probability in model output");
      }
    } else {
      const auto response = generate(render_ner_prompt(doc.text, options_.entity_types));
      bool found = false;
      const auto entities =
          parse_ner_output(response.text, options_.entity_types, *taxonomy_, &found);
      if (!found) {
        p = zero_prediction(doc, task, "no entity array in model output");
      } else {
        std::vector<Token> tokens = doc.tokens;
        if (tokens.empty()) tokens = WhitespacePunctTokenizer().tokenize(doc.text);
        p.doc_id = doc.id;
        p.task = task;
        p.tag_sequence = align_ner_output(doc.text, tokens, entities).tags;
      }
    }
    p.latency = clock::now() - t0;
    out.push_back(std::move(p));
  }
  return out;
}

PredictionSet run_backend(Backend& backend, std::span<const Document> docs, Task task,
                          std::size_t concurrency) {
  if (docs.empty()) throw Error(ErrorCode::InvalidArgument, "no documents to run");
  const std::size_t batch = std::max<std::size_t>(1, backend.batch_size(task));
  const std::size_t num_batches = (docs.size() + batch - 1) / batch;
  std::vector<std::vector<Prediction>> results(num_batches);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= num_batches || abort.load()) return;
      const auto slice = docs.subspan(b * batch, std::min(batch, docs.size() - b * batch));
      std::vector<Prediction> preds;
      std::string failure;
      try {
        preds = backend.predict(slice, task);
        if (preds.size() != slice.size()) {
          failure = "backend returned " + std::to_string(preds.size()) + " predictions for " +
                    std::to_string(slice.size()) + " documents";
        } else {
          for (std::size_t i = 0; i < slice.size(); ++i) {
            if (preds[i].doc_id != slice[i].id || preds[i].task != task) {
              failure = "backend returned a prediction for the wrong document or task";
              break;
            }
          }
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) {
          std::lock_guard lock(fatal_mutex);
          if (!fatal) fatal = std::current_exception();
          abort = true;
          return;
        }
        failure = e.what();
      } catch (const std::exception& e) {
        failure = e.what();
      }
      if (!failure.empty()) {
        spdlog::warn("backend {}: batch {} failed: {}", backend.name(), b, failure);
        preds.clear();
        for (const auto& d : slice) preds.push_back(zero_prediction(d, task, failure));
      }
      results[b] = std::move(preds);
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  {
    const std::size_t workers = std::clamp<std::size_t>(concurrency, 1, num_batches);
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
  if (fatal) std::rethrow_exception(fatal);

  PredictionSet set(backend.name(), task);
  for (auto& r : results) {
    for (auto& p : r) set.add(std::move(p));
  }
  set.timing.total_seconds = elapsed.count();
  set.timing.per_document_seconds = elapsed.count() / static_cast<double>(docs.size());
  return set;
}

}  // namespace eventbench
