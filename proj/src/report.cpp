#include <cfenv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "eventbench/error.hpp"
#include "eventbench/harness.hpp"

namespace eventbench {

using ojson = nlohmann::ordered_json;

bool ComparisonReport::any_failed() const {
  for (const auto& b : backends) {
    if (b.failed) return true;
  }
  return false;
}

std::map<std::string, std::optional<double>> relative_speed(
    const std::map<std::string, double>& per_document_seconds) {
  double slowest = 0.0;
  for (const auto& [name, t] : per_document_seconds) {
    if (t > 0.0) slowest = std::max(slowest, t);
  }
  std::map<std::string, std::optional<double>> out;
  for (const auto& [name, t] : per_document_seconds) {
    out[name] = t > 0.0 ? std::optional<double>(slowest / t) : std::nullopt;
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string format_fixed(double value, int places) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  const double scale = std::pow(10.0, places);
  // nearbyint honours the current rounding mode, which defaults to ties-to-even.
  double r = std::nearbyint(value * scale) / scale;
  if (r == 0.0) r = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, r);
  return buf;
}

std::string file_slug(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '-' || c == '_') {
      out.push_back(static_cast<char>(c));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "backend" : out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

namespace {

ojson score_json(const ClassScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

ojson nullable(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

ojson binary_json(const BinaryReport& r) {
  ojson j;
  j["per_class"] = ojson::object();
  const char* names[] = {"0", "1"};
  for (std::size_t k = 0; k < r.per_class.size(); ++k) j["per_class"][names[k]] = score_json(r.per_class[k]);
  j["macro_avg"] = score_json(r.macro);
  j["weighted_avg"] = score_json(r.weighted);
  j["accuracy"] = r.accuracy;
  j["confusion_matrix"] = {{r.matrix(0, 0), r.matrix(0, 1)}, {r.matrix(1, 0), r.matrix(1, 1)}};
  j["roc_auc"] = r.roc.summary_defined ? nullable(r.roc.summary) : ojson(nullptr);
  j["average_precision"] = r.pr.summary_defined ? nullable(r.pr.summary) : ojson(nullptr);
  j["best_f1"] = r.f1.summary;
  return j;
}

ojson attack_json(const AttackReport& r) {
  ojson j;
  j["per_type"] = ojson::object();
  for (std::size_t t = 0; t < kNumAttackTypes; ++t) {
    const auto& s = r.one_vs_rest.per_type[t];
    ojson o = score_json(s.positive);
    o["accuracy"] = s.accuracy;
    o["tp"] = s.tp;
    o["fp"] = s.fp;
    o["fn"] = s.fn;
    o["tn"] = s.tn;
    o["roc_auc"] = r.roc[t].summary_defined ? nullable(r.roc[t].summary) : ojson(nullptr);
    o["average_precision"] = r.pr[t].summary_defined ? nullable(r.pr[t].summary) : ojson(nullptr);
    j["per_type"][std::string(display(s.type))] = std::move(o);
  }
  j["macro_avg"] = {{"accuracy", r.one_vs_rest.macro_accuracy},
                    {"precision", r.one_vs_rest.macro_precision},
                    {"recall", r.one_vs_rest.macro_recall},
                    {"f1", r.one_vs_rest.macro_f1}};
  const auto& m = r.multilabel;
  j["multilabel"] = {{"subset_accuracy", m.subset_accuracy},
                     {"hamming_loss", m.hamming_loss},
                     {"partial_match", m.partial_match},
                     {"cardinality_true", m.cardinality_true},
                     {"cardinality_pred", m.cardinality_pred}};
  return j;
}

ojson ner_json(const NerReport& r) {
  ojson j;
  j["token"]["per_tag"] = ojson::object();
  for (std::size_t k = 0; k < r.token.tags.size(); ++k) {
    j["token"]["per_tag"][r.token.tags[k]] = score_json(r.token.per_tag[k]);
  }
  j["token"]["macro_universe"] = r.token.macro_universe;
  j["token"]["macro_avg"] = score_json(r.token.macro);
  j["token"]["weighted_avg"] = score_json(r.token.weighted);
  j["token"]["accuracy"] = r.token.accuracy;
  j["span"]["per_type"] = ojson::object();
  for (const auto& [type, s] : r.span.per_type) {
    ojson o = score_json(s);
    o["tp"] = r.span.tp.at(type);
    o["fp"] = r.span.fp.at(type);
    o["fn"] = r.span.fn.at(type);
    j["span"]["per_type"][type] = std::move(o);
  }
  j["span"]["micro"] = score_json(r.span.micro);
  return j;
}

struct CsvRow {
  std::string backend, task, level, label;
  std::optional<ClassScore> score;
  std::optional<double> accuracy, auc, value;
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string opt(const std::optional<double>& x) {
  return x && std::isfinite(*x) ? format_fixed(*x) : "";
}

}  // namespace

ojson metrics_json(const ComparisonReport& report, bool include_timing) {
  ojson j;
  j["task"] = to_string(report.task);
  j["threshold"] = report.threshold;
  j["documents"] = report.documents;
  if (report.task == Task::Ner) j["tag_universe"] = report.tag_universe;
  if (report.task == Task::Ner) {
    j["notes"] = {"Generative NER output is elicited with this tool's own extraction prompt."};
  }
  j["backends"] = ojson::array();
  for (const auto& b : report.backends) {
    ojson o;
    o["name"] = b.name;
    o["kind"] = to_string(b.kind);
    o["status"] = b.failed ? "failed" : "ok";
    if (b.failed) o["failure"] = b.failure;
    o["documents"] = b.documents;
    o["parse_failures"] = b.parse_failures;
    if (include_timing && !b.failed) {
      o["timing"] = {{"total_seconds", b.timing.total_seconds},
                     {"per_document_seconds", b.timing.per_document_seconds}};
    }
    if (const auto* r = std::get_if<BinaryReport>(&b.metrics)) o["metrics"] = binary_json(*r);
    if (const auto* r = std::get_if<AttackReport>(&b.metrics)) o["metrics"] = attack_json(*r);
    if (const auto* r = std::get_if<NerReport>(&b.metrics)) o["metrics"] = ner_json(*r);
    j["backends"].push_back(std::move(o));
  }
  if (include_timing) {
    j["relative_speed"] = ojson::object();
    for (const auto& [name, x] : report.relative_speed) {
      j["relative_speed"][name] = x ? ojson(*x) : ojson(nullptr);
    }
  }
  if (report.timeline) {
    j["timeline_bias"] = ojson::array();
    for (const auto& b : report.timeline->bias) {
      j["timeline_bias"].push_back({{"type", display(b.type)},
                                    {"backend", b.backend},
                                    {"final_ratio", b.final_ratio ? ojson(*b.final_ratio) : ojson(nullptr)},
                                    {"max_abs_gap", b.max_abs_gap},
                                    {"direction", to_string(b.direction)}});
    }
  }
  return j;
}

std::string metrics_csv(const ComparisonReport& report) {
  std::vector<CsvRow> rows;
  const std::string task(to_string(report.task));
  for (const auto& b : report.backends) {
    auto row = [&](std::string level, std::string label) {
      CsvRow r;
      r.backend = b.name;
      r.task = task;
      r.level = std::move(level);
      r.label = std::move(label);
      return r;
    };
    if (const auto* r = std::get_if<BinaryReport>(&b.metrics)) {
      for (std::size_t k = 0; k < r->per_class.size(); ++k) {
        auto x = row("class", std::to_string(k));
        x.score = r->per_class[k];
        rows.push_back(x);
      }
      auto macro = row("aggregate", "macro_avg");
      macro.score = r->macro;
      rows.push_back(macro);
      auto weighted = row("aggregate", "weighted_avg");
      weighted.score = r->weighted;
      weighted.accuracy = r->accuracy;
      if (r->roc.summary_defined) weighted.auc = r->roc.summary;
      rows.push_back(weighted);
    } else if (const auto* r = std::get_if<AttackReport>(&b.metrics)) {
      for (std::size_t t = 0; t < kNumAttackTypes; ++t) {
        const auto& s = r->one_vs_rest.per_type[t];
        auto x = row("type", std::string(display(s.type)));
        x.score = s.positive;
        x.accuracy = s.accuracy;
        if (r->roc[t].summary_defined) x.auc = r->roc[t].summary;
        rows.push_back(x);
      }
      auto macro = row("aggregate", "macro_avg");
      macro.score = ClassScore{r->one_vs_rest.macro_precision, r->one_vs_rest.macro_recall,
                               r->one_vs_rest.macro_f1, 0};
      macro.accuracy = r->one_vs_rest.macro_accuracy;
      rows.push_back(macro);
      const auto& m = r->multilabel;
      for (const auto& [name, v] : {std::pair{"subset_accuracy", m.subset_accuracy},
                                    {"hamming_loss", m.hamming_loss},
                                    {"partial_match", m.partial_match},
                                    {"cardinality_true", m.cardinality_true},
                                    {"cardinality_pred", m.cardinality_pred}}) {
        auto x = row("multilabel", name);
        x.value = v;
        rows.push_back(x);
      }
    } else if (const auto* r = std::get_if<NerReport>(&b.metrics)) {
      for (std::size_t k = 0; k < r->token.tags.size(); ++k) {
        auto x = row("tag", r->token.tags[k]);
        x.score = r->token.per_tag[k];
        rows.push_back(x);
      }
      auto macro = row("aggregate", "token_macro_avg");
      macro.score = r->token.macro;
      rows.push_back(macro);
      auto weighted = row("aggregate", "token_weighted_avg");
      weighted.score = r->token.weighted;
      weighted.accuracy = r->token.accuracy;
      rows.push_back(weighted);
      for (const auto& [type, s] : r->span.per_type) {
        auto x = row("span_type", type);
        x.score = s;
        rows.push_back(x);
      }
      auto micro = row("aggregate", "span_micro");
      micro.score = r->span.micro;
      rows.push_back(micro);
    } else {
      rows.push_back(row("failed", b.failure));
    }
  }

  std::string out = "backend,task,level,label,precision,recall,f1,support,accuracy,auc,value\n";
  for (const auto& r : rows) {
    out += csv_escape(r.backend) + ',' + r.task + ',' + r.level + ',' + csv_escape(r.label) + ',';
    if (r.score) {
      out += format_fixed(r.score->precision) + ',' + format_fixed(r.score->recall) + ',' +
             format_fixed(r.score->f1) + ',' + std::to_string(r.score->support);
    } else {
      out += ",,,";
    }
    out += ',' + opt(r.accuracy) + ',' + opt(r.auc) + ',' + opt(r.value) + '\n';
  }
  return out;
}

std::string curve_csv(const CurveSeries<double>& curve) {
  std::string out = "threshold,x,y\n";
  for (Eigen::Index i = 0; i < curve.size(); ++i) {
    out += format_fixed(curve.threshold(i)) + ',' + format_fixed(curve.x(i)) + ',' +
           format_fixed(curve.y(i)) + '\n';
  }
  return out;
}

std::string timing_csv(const ComparisonReport& report) {
  std::string out = "backend,status,documents,total_seconds,per_document_seconds,relative_speed\n";
  for (const auto& b : report.backends) {
    const auto it = report.relative_speed.find(b.name);
    const bool has_speed = it != report.relative_speed.end() && it->second;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,", b.timing.total_seconds,
                  b.timing.per_document_seconds);
    out += csv_escape(b.name) + ',' + (b.failed ? "failed" : "ok") + ',' +
           std::to_string(b.documents) + ',' + buf +
           (has_speed ? format_fixed(*it->second, 2) + "x" : "") + '\n';
  }
  return out;
}

ojson RunManifest::to_json(bool reproducible) const {
  ojson j;
  j["tool_version"] = tool_version;
  if (!reproducible) {
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
  }
  j["config"] = config;
  j["inputs"] = ojson::array();
  for (const auto& [path, digest] : input_digests) {
    j["inputs"].push_back({{"path", path}, {"sha256", digest}});
  }
  j["corpus_digest"] = corpus_digest;
  j["backends"] = ojson::object();
  for (const auto& [name, failures] : parse_failures) {
    ojson o;
    o["parse_failures"] = failures;
    if (!reproducible) {
      const auto& t = timing.at(name);
      o["total_seconds"] = t.total_seconds;
      o["per_document_seconds"] = t.per_document_seconds;
    }
    j["backends"][name] = std::move(o);
  }
  return j;
}

}  // namespace eventbench
