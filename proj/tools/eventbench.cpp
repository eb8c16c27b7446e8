// eventbench: compare event-classification and NER backends on a shared corpus.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "eventbench/error.hpp"
#include "eventbench/harness.hpp"

namespace eb = eventbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitBackendFailed = 3;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<double> threshold;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> concurrency;
  bool reproducible = false;
  std::string task;
  std::string documents;
  std::string format;
  std::string conll;
  std::string aliases;
  std::vector<std::string> predictions;  // NAME=PATH
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sample;
};

eb::RunConfig build_config(const Overrides& o) {
  eb::RunConfig config;
  if (!o.config.empty()) config = eb::load_run_config(o.config);
  if (!o.task.empty()) config.task = eb::parse_task(o.task);
  if (!o.documents.empty()) config.documents = o.documents;
  if (!o.format.empty()) {
    if (o.format == "jsonl") {
      config.documents_format = eb::DocumentFormat::Jsonl;
    } else if (o.format == "csv") {
      config.documents_format = eb::DocumentFormat::Csv;
    } else {
      throw eb::Error(eb::ErrorCode::ConfigError, "unknown format \"" + o.format + "\"");
    }
  }
  if (!o.conll.empty()) config.conll = o.conll;
  if (!o.aliases.empty()) config.alias_file = o.aliases;
  for (const auto& spec : o.predictions) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw eb::Error(eb::ErrorCode::ConfigError, "--predictions expects NAME=PATH, got \"" + spec + "\"");
    }
    eb::BackendDescriptor d;
    d.name = spec.substr(0, eq);
    d.kind = eb::BackendDescriptor::Kind::PredictionsFile;
    d.predictions_path = spec.substr(eq + 1);
    config.backends.push_back(std::move(d));
  }
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.threshold) config.threshold = *o.threshold;
  if (o.batch_size) config.batch_size = *o.batch_size;
  if (o.concurrency) config.concurrency = *o.concurrency;
  if (o.seed) config.seed = *o.seed;
  if (o.sample) config.sample = *o.sample;
  if (o.reproducible) config.reproducible = true;
  return config;
}

void print_summary(const eb::ComparisonReport& report) {
  std::printf("%-24s %-8s %10s %10s %12s %10s\n", "backend", "status", "docs", "failures",
              "sec/doc", "speed");
  for (const auto& b : report.backends) {
    const auto speed = report.relative_speed.find(b.name);
    std::string speed_text = "-";
    if (speed != report.relative_speed.end() && speed->second) {
      speed_text = eb::format_fixed(*speed->second, 2) + "x";
    }
    std::printf("%-24s %-8s %10zu %10zu %12.4g %10s\n", b.name.c_str(), b.failed ? "FAILED" : "ok",
                b.documents, b.parse_failures, b.timing.per_document_seconds, speed_text.c_str());
    if (b.failed) std::printf("  %s\n", b.failure.c_str());
  }
  std::printf("wrote %zu file(s) to output directory\n", report.files.size());
}

int run_stages(const Overrides& o, unsigned stages, bool offline_only) {
  auto config = build_config(o);
  if (offline_only) {
    for (const auto& b : config.backends) {
      if (b.kind != eb::BackendDescriptor::Kind::PredictionsFile) {
        throw eb::Error(eb::ErrorCode::ConfigError,
                        "backend \"" + b.name + "\" is not a predictions file; use `run`");
      }
    }
  }
  const auto report = eb::run(config, stages);
  print_summary(report);
  return report.any_failed() ? kExitBackendFailed : kExitOk;
}

// ingest ---------------------------------------------------------------------

struct IngestOptions {
  std::string documents;
  std::string format = "jsonl";
  std::string conll;
  std::string annotations;
  std::string texts;
  std::string aliases;
  std::string output;
  double min_confidence = eb::kDefaultConfidenceThreshold;
  std::optional<int> cutoff_year;
  std::optional<int> end_year;
};

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    eb::write_atomic(path, content);
  }
}

std::string documents_jsonl(const std::vector<eb::Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text;
    if (d.date) j["date"] = d.date->iso();
    if (d.binary_label) j["label"] = static_cast<int>(*d.binary_label);
    if (d.attack_labels) {
      auto labels = nlohmann::ordered_json::array();
      for (auto t : eb::kAllAttackTypes) {
        if (d.attack_labels->test(eb::ordinal(t))) labels.push_back(std::string(eb::display(t)));
      }
      j["labels"] = labels;
    }
    out += j.dump() + "\n";
  }
  return out;
}

int ingest(const IngestOptions& o) {
  const auto taxonomy = o.aliases.empty() ? eb::Taxonomy() : eb::Taxonomy::from_json_file(o.aliases);
  if (!o.documents.empty()) {
    const auto format = o.format == "csv" ? eb::DocumentFormat::Csv : eb::DocumentFormat::Jsonl;
    const auto docs = eb::load_documents(o.documents, format, taxonomy);
    std::size_t dated = 0;
    for (const auto& d : docs) dated += d.date ? 1 : 0;
    spdlog::info("{} documents, {} dated", docs.size(), dated);
    if (o.cutoff_year || o.end_year) {
      eb::SplitSpec spec;
      if (o.cutoff_year) spec.cutoff_year = *o.cutoff_year;
      if (o.end_year) spec.end_year = *o.end_year;
      const auto split = eb::temporal_split(docs, spec);
      spdlog::info("split: {} train, {} test, {} dateless, {} outside window", split.train.size(),
                   split.test.size(), split.dateless, split.out_of_window);
    }
    if (!o.output.empty()) emit(o.output, documents_jsonl(docs));
    return kExitOk;
  }
  if (!o.conll.empty()) {
    const auto seqs = eb::parse_conll(eb::read_file(o.conll), taxonomy);
    std::size_t tokens = 0;
    for (const auto& s : seqs) tokens += s.size();
    spdlog::info("{} sentences, {} tokens", seqs.size(), tokens);
    if (!o.output.empty()) emit(o.output, eb::write_conll(seqs));
    return kExitOk;
  }
  if (!o.annotations.empty()) {
    if (o.texts.empty()) {
      throw eb::Error(eb::ErrorCode::ConfigError, "--annotations requires --texts");
    }
    const auto docs = eb::load_documents(o.texts, eb::DocumentFormat::Jsonl, taxonomy);
    const auto anns = eb::load_annotations(o.annotations);
    eb::WhitespacePunctTokenizer tokenizer;
    std::vector<eb::TagSequence> seqs;
    for (const auto& d : docs) {
      std::vector<eb::RawEntityAnnotation> mine;
      for (const auto& a : anns) {
        if (a.doc_id == d.id) mine.push_back(a);
      }
      const auto spans = eb::resolve_annotations(mine, o.min_confidence, taxonomy);
      const auto tokens = tokenizer.tokenize(d.text);
      seqs.push_back(eb::spans_to_bio(tokens, spans));
    }
    emit(o.output, eb::write_conll(seqs));
    return kExitOk;
  }
  throw eb::Error(eb::ErrorCode::ConfigError, "ingest needs --documents, --conll or --annotations");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark event classifiers and entity taggers against gold corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(eb::kToolVersion));

  Overrides o;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Run configuration (JSON)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--threshold", o.threshold, "Decision threshold in (0,1)");
    cmd->add_option("--batch-size", o.batch_size, "Events per classification prompt");
    cmd->add_option("--concurrency", o.concurrency, "Batches in flight per backend");
    cmd->add_flag("--reproducible", o.reproducible, "Omit timestamps and timing from artifacts");
    cmd->add_option("--task", o.task, "binary | attack | ner");
    cmd->add_option("--documents", o.documents, "Labeled documents (JSONL or CSV)");
    cmd->add_option("--format", o.format, "jsonl | csv");
    cmd->add_option("--conll", o.conll, "Gold CoNLL file (ner task)");
    cmd->add_option("--aliases", o.aliases, "Alias table (JSON)");
    cmd->add_option("--predictions", o.predictions, "Predictions file backend, NAME=PATH")
        ->take_all();
    cmd->add_option("--seed", o.seed, "Sampling seed");
    cmd->add_option("--sample", o.sample, "Score a seeded sample of N documents");
  };

  auto* run_cmd = app.add_subcommand("run", "Full pipeline: predict, score, curves, timeline, timing");
  auto* score_cmd = app.add_subcommand("score", "Metrics from existing prediction files");
  auto* curves_cmd = app.add_subcommand("curves", "ROC, precision-recall and F-vs-cutoff CSVs");
  auto* timeline_cmd = app.add_subcommand("timeline", "Cumulative gold vs predicted series");
  auto* bench_cmd = app.add_subcommand("bench", "Wall time and relative speed only");
  for (auto* cmd : {run_cmd, score_cmd, curves_cmd, timeline_cmd, bench_cmd}) add_run_flags(cmd);

  IngestOptions ing;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate or convert corpora");
  ingest_cmd->add_option("--documents", ing.documents, "Labeled documents to validate");
  ingest_cmd->add_option("--format", ing.format, "jsonl | csv")->check(CLI::IsMember({"jsonl", "csv"}));
  ingest_cmd->add_option("--conll", ing.conll, "CoNLL file to validate and canonicalize");
  ingest_cmd->add_option("--annotations", ing.annotations, "Raw span annotations (JSONL)");
  ingest_cmd->add_option("--texts", ing.texts, "Documents the annotations refer to (JSONL)");
  ingest_cmd->add_option("--min-confidence", ing.min_confidence, "Annotation confidence floor");
  ingest_cmd->add_option("--aliases", ing.aliases, "Alias table (JSON)");
  ingest_cmd->add_option("--cutoff-year", ing.cutoff_year, "Report a temporal split at this year");
  ingest_cmd->add_option("--end-year", ing.end_year, "Last test year for the split report");
  ingest_cmd->add_option("-o,--output", ing.output, "Write normalized output here ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("eventbench"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*ingest_cmd) return ingest(ing);
    const auto metrics = static_cast<unsigned>(eb::Stage::Metrics);
    if (*run_cmd) return run_stages(o, static_cast<unsigned>(eb::Stage::All), false);
    if (*score_cmd) return run_stages(o, metrics, true);
    if (*curves_cmd) return run_stages(o, static_cast<unsigned>(eb::Stage::Curves), true);
    if (*timeline_cmd) return run_stages(o, static_cast<unsigned>(eb::Stage::Timeline), true);
    if (*bench_cmd) return run_stages(o, static_cast<unsigned>(eb::Stage::Timing), false);
  } catch (const eb::Error& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
