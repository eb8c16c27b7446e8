#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "eventbench/backends.hpp"
#include "eventbench/corpus.hpp"
#include "eventbench/curves.hpp"
#include "eventbench/metrics.hpp"
#include "eventbench/timeseries.hpp"

namespace eventbench {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct BackendDescriptor {
  enum class Kind { PredictionsFile, HttpChat };

  std::string name;
  Kind kind = Kind::PredictionsFile;
  std::filesystem::path predictions_path;
  ChatBackendOptions chat;
};

std::string_view to_string(BackendDescriptor::Kind kind);

struct RunConfig {
  Task task = Task::Binary;
  std::optional<std::filesystem::path> documents;
  DocumentFormat documents_format = DocumentFormat::Jsonl;
  std::optional<std::filesystem::path> conll;
  std::optional<std::filesystem::path> alias_file;
  std::vector<std::string> entity_types;  // extensions to the builtin set
  std::optional<SplitSpec> split;
  std::vector<BackendDescriptor> backends;
  double threshold = kDefaultThreshold;
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t concurrency = 1;
  std::filesystem::path output_dir = "eventbench-out";
  std::uint64_t seed = 0;
  std::optional<std::size_t> sample;
  Bucketing bucketing = Bucketing::Month;
  std::optional<DateWindow> window;
  bool reproducible = false;

  nlohmann::ordered_json snapshot() const;
};

/// Parses a JSON run configuration; relative paths resolve against `base_dir`.
/// Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Throws ConfigError on a violated invariant (no backends, threshold outside (0,1), ...).
void validate(const RunConfig& config);

// ---------------------------------------------------------------------------
// Reports

struct BinaryReport {
  CountMatrix matrix;
  std::vector<ClassScore> per_class;
  ClassScore macro;
  ClassScore weighted;
  double accuracy = 0.0;
  CurveSeries<double> roc;
  CurveSeries<double> pr;
  CurveSeries<double> f1;
};

struct AttackReport {
  OneVsRestReport one_vs_rest;
  MultiLabelScores multilabel;
  std::array<CurveSeries<double>, kNumAttackTypes> roc;
  std::array<CurveSeries<double>, kNumAttackTypes> pr;
  std::array<CurveSeries<double>, kNumAttackTypes> f1;
};

struct NerReport {
  NerTokenReport token;
  NerSpanReport span;
};

struct BackendReport {
  std::string name;
  BackendDescriptor::Kind kind = BackendDescriptor::Kind::PredictionsFile;
  bool failed = false;
  std::string failure;
  std::size_t documents = 0;
  std::size_t parse_failures = 0;
  Timing timing;
  std::variant<std::monostate, BinaryReport, AttackReport, NerReport> metrics;
};

struct TimelineReport {
  std::vector<CumulativeSeries> gold;                     // one per attack type
  std::map<std::string, std::vector<CumulativeSeries>> predicted;  // backend -> per type
  std::vector<BiasSummary> bias;
};

struct ComparisonReport {
  Task task = Task::Binary;
  double threshold = kDefaultThreshold;
  std::size_t documents = 0;
  std::vector<std::string> tag_universe;
  std::vector<BackendReport> backends;
  /// Empty for backends whose timing is unavailable (failed or zero).
  std::map<std::string, std::optional<double>> relative_speed;
  std::optional<TimelineReport> timeline;
  std::vector<std::string> files;

  bool any_failed() const;
};

/// max(per-document time) / per-document time for each backend; the slowest
/// reports 1.0. Non-positive times yield no multiplier.
std::map<std::string, std::optional<double>> relative_speed(
    const std::map<std::string, double>& per_document_seconds);

struct RunManifest {
  nlohmann::ordered_json config;
  std::string tool_version{kToolVersion};
  std::string started_at;
  std::string finished_at;
  std::map<std::string, Timing> timing;
  std::map<std::string, std::size_t> parse_failures;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path -> sha256
  std::string corpus_digest;

  nlohmann::ordered_json to_json(bool reproducible) const;
};

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Half-to-even rounding to `places` decimals, formatted with fixed precision.
std::string format_fixed(double value, int places = 4);

enum class Stage : unsigned {
  Metrics = 1u << 0,
  Curves = 1u << 1,
  Timeline = 1u << 2,
  Timing = 1u << 3,
  All = 0xFu,
};

/// Loads corpora, runs every backend on the test documents, scores them and
/// writes the requested artifacts. Per-backend failures are recorded in the
/// report rather than thrown.
ComparisonReport run(const RunConfig& config, unsigned stages = static_cast<unsigned>(Stage::All));

nlohmann::ordered_json metrics_json(const ComparisonReport& report, bool include_timing);
std::string metrics_csv(const ComparisonReport& report);
std::string curve_csv(const CurveSeries<double>& curve);
std::string timing_csv(const ComparisonReport& report);

/// Writes via a temporary file and rename so readers never see partial files.
void write_atomic(const std::filesystem::path& path, std::string_view content);

/// Lower-case [a-z0-9_-] form used in artifact filenames.
std::string file_slug(std::string_view name);

}  // namespace eventbench
