#include <algorithm>
#include <chrono>
#include <ctime>
#include <numeric>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "eventbench/error.hpp"
#include "eventbench/harness.hpp"

namespace eventbench {
namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Corpus {
  std::vector<Document> docs;
  std::vector<TagSequence> gold_tags;  // NER only, aligned with docs
  std::vector<std::pair<std::string, std::string>> digests;
  std::string combined_digest;
};

void add_digest(Corpus& c, const std::filesystem::path& path) {
  c.digests.emplace_back(path.generic_string(), sha256_hex(read_file(path)));
}

Taxonomy load_taxonomy(const RunConfig& config) {
  Taxonomy tax = config.alias_file ? Taxonomy::from_json_file(*config.alias_file) : Taxonomy();
  return tax.with_entity_types(config.entity_types);
}

std::vector<Document> sample_docs(std::vector<Document> docs, std::size_t n, std::uint64_t seed) {
  if (n >= docs.size()) return docs;
  std::vector<std::size_t> idx(docs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Document> out;
  for (auto i : idx) out.push_back(std::move(docs[i]));
  return out;
}

Corpus load_corpus(const RunConfig& config, const Taxonomy& taxonomy) {
  Corpus c;
  try {
    if (config.task == Task::Ner) {
      add_digest(c, *config.conll);
      c.gold_tags = parse_conll(read_file(*config.conll), taxonomy);
      for (std::size_t i = 0; i < c.gold_tags.size(); ++i) {
        c.docs.push_back(document_from_sequence(std::to_string(i), c.gold_tags[i]));
      }
    } else {
      add_digest(c, *config.documents);
      auto docs = load_documents(*config.documents, config.documents_format, taxonomy);
      if (config.split) docs = temporal_split(docs, *config.split).test;
      const std::size_t before = docs.size();
      std::erase_if(docs, [&](const Document& d) {
        return config.task == Task::Binary ? !d.binary_label : !d.attack_labels;
      });
      if (docs.size() != before) {
        spdlog::warn("{} document(s) without gold labels for the {} task excluded",
                     before - docs.size(), to_string(config.task));
      }
      c.docs = std::move(docs);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::CorpusError, e.what());
  }
  if (config.sample) {
    c.docs = sample_docs(std::move(c.docs), *config.sample, config.seed);
    if (config.task == Task::Ner) {
      std::vector<TagSequence> kept;
      for (const auto& d : c.docs) kept.push_back(c.gold_tags[std::stoul(d.id)]);
      c.gold_tags = std::move(kept);
    }
  }
  if (c.docs.empty()) throw Error(ErrorCode::CorpusError, "no test documents with gold labels");
  return c;
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d, const RunConfig& config,
                                      const Taxonomy& taxonomy,
                                      const std::vector<std::string>& default_entity_types) {
  if (d.kind == BackendDescriptor::Kind::PredictionsFile) {
    return std::make_unique<PredictionsFileBackend>(d.name, d.predictions_path, taxonomy);
  }
  ChatBackendOptions opts = d.chat;
  if (opts.batch_size == 0) opts.batch_size = config.batch_size;
  if (opts.entity_types.empty()) opts.entity_types = default_entity_types;
  return std::make_unique<ChatBackend>(d.name, std::move(opts), taxonomy);
}

BinaryReport score_binary(std::span<const Document> docs, const PredictionSet& preds,
                          double threshold) {
  const auto n = static_cast<Eigen::Index>(docs.size());
  Eigen::VectorXi gold(n), pred(n);
  Eigen::VectorXd scores(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& d = docs[static_cast<std::size_t>(i)];
    const double s = preds.predictions()[static_cast<std::size_t>(i)].binary_score.value_or(0.0);
    gold(i) = static_cast<int>(*d.binary_label);
    scores(i) = s;
    pred(i) = s >= threshold ? 1 : 0;
  }
  BinaryReport r;
  const auto counts = confusion(gold, pred, 2);
  r.matrix = *counts.matrix;
  r.per_class = class_scores(counts);
  r.macro = macro_avg(r.per_class);
  r.weighted = weighted_avg(r.per_class);
  r.accuracy = accuracy(counts);
  const Eigen::ArrayX<bool> positive = gold.array() == 1;
  r.roc = roc_curve(scores, positive);
  r.pr = pr_curve(scores, positive);
  r.f1 = f1_vs_threshold(scores, positive);
  return r;
}

ScoreMatrix prediction_matrix(const PredictionSet& preds) {
  std::vector<CategoryVector> rows;
  for (const auto& p : preds.predictions()) rows.push_back(p.attack_scores.value_or(attack_vector_template()));
  return stack_scores(rows);
}

AttackReport score_attack(std::span<const Document> docs, const PredictionSet& preds,
                          double threshold) {
  std::vector<AttackSet> gold_sets;
  for (const auto& d : docs) gold_sets.push_back(*d.attack_labels);
  const IndicatorMatrix gold = indicators(gold_sets);
  const ScoreMatrix scores = prediction_matrix(preds);

  AttackReport r;
  r.one_vs_rest = one_vs_rest(scores, gold, threshold);
  r.multilabel = multilabel(gold, threshold_scores(scores, threshold));
  for (std::size_t t = 0; t < kNumAttackTypes; ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    r.roc[t] = roc_curve(scores.col(col), gold.col(col));
    r.pr[t] = pr_curve(scores.col(col), gold.col(col));
    r.f1[t] = f1_vs_threshold(scores.col(col), gold.col(col));
  }
  return r;
}

NerReport score_ner(const Corpus& corpus, const PredictionSet& preds) {
  std::vector<std::vector<std::string>> gold, pred;
  std::vector<EntitySpan> gold_spans, pred_spans;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const auto& id = corpus.docs[i].id;
    gold.push_back(corpus.gold_tags[i].tags);
    pred.push_back(preds.predictions()[i].tag_sequence->tags);
    for (auto& s : bio_to_spans(corpus.gold_tags[i], id)) gold_spans.push_back(std::move(s));
    for (auto& s : bio_to_spans(*preds.predictions()[i].tag_sequence, id)) {
      pred_spans.push_back(std::move(s));
    }
  }
  return {ner_token_metrics(gold, pred), ner_span_metrics(gold_spans, pred_spans)};
}

std::vector<std::string> gold_entity_types(const Corpus& corpus, const Taxonomy& taxonomy) {
  std::set<std::string> seen;
  for (const auto& seq : corpus.gold_tags) {
    for (const auto& t : seq.tags) {
      if (t != "O") seen.insert(t.substr(2));
    }
  }
  std::vector<std::string> out;
  for (const auto& name : taxonomy.entity_types()) {
    if (seen.count(name)) out.push_back(name);
  }
  return out.empty() ? taxonomy.entity_types() : out;
}

std::optional<DateWindow> timeline_window(const RunConfig& config, std::span<const Document> docs) {
  if (config.window) return config.window;
  if (config.split) return year_window(config.split->cutoff_year + 1, config.split->end_year);
  std::optional<DateWindow> w;
  for (const auto& d : docs) {
    if (!d.date) continue;
    if (!w) {
      w = DateWindow{*d.date, *d.date};
    } else {
      w->start = std::min(w->start, *d.date);
      w->end = std::max(w->end, *d.date);
    }
  }
  return w;
}

TimelineReport build_timeline(const RunConfig& config, std::span<const Document> docs,
                              const std::vector<std::pair<std::string, const PredictionSet*>>& sets,
                              const DateWindow& window) {
  std::vector<DatedLabels> gold;
  std::vector<std::size_t> dated;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].date) continue;
    dated.push_back(i);
    gold.push_back({*docs[i].date, *docs[i].attack_labels});
  }
  TimelineReport r;
  for (AttackType t : kAllAttackTypes) {
    r.gold.push_back(cumulative_series(gold, t, config.bucketing, window, "gold"));
  }
  for (const auto& [name, preds] : sets) {
    std::vector<DatedLabels> items;
    for (auto i : dated) {
      const auto& v = preds->predictions()[i].attack_scores.value_or(attack_vector_template());
      AttackSet s;
      for (std::size_t t = 0; t < kNumAttackTypes; ++t) s.set(t, v[static_cast<Eigen::Index>(t)] >= config.threshold);
      items.push_back({*docs[i].date, s});
    }
    auto& series = r.predicted[name];
    for (AttackType t : kAllAttackTypes) {
      series.push_back(cumulative_series(items, t, config.bucketing, window, name));
      r.bias.push_back(bias_summary(r.gold[ordinal(t)], series.back()));
    }
  }
  return r;
}

std::string timeline_csv(const TimelineReport& tl, AttackType t) {
  const auto& gold = tl.gold[ordinal(t)];
  std::string out = "date,gold_cumulative";
  for (const auto& [name, series] : tl.predicted) out += "," + file_slug(name) + "_cumulative";
  out += '\n';
  for (std::size_t i = 0; i < gold.dates.size(); ++i) {
    out += gold.dates[i].iso() + "," + std::to_string(gold.counts[i]);
    for (const auto& [name, series] : tl.predicted) {
      out += "," + std::to_string(series[ordinal(t)].counts[i]);
    }
    out += '\n';
  }
  return out;
}

std::string bias_csv(const TimelineReport& tl) {
  std::string out = "type,backend,final_ratio,max_abs_gap,direction\n";
  for (const auto& b : tl.bias) {
    out += std::string(slug(b.type)) + "," + file_slug(b.backend) + "," +
           (b.final_ratio ? format_fixed(*b.final_ratio) : "") + "," +
           std::to_string(b.max_abs_gap) + "," + std::string(to_string(b.direction)) + "\n";
  }
  return out;
}

}  // namespace

ComparisonReport run(const RunConfig& config, unsigned stages) {
  validate(config);
  const auto has = [&](Stage s) { return (stages & static_cast<unsigned>(s)) != 0; };

  RunManifest manifest;
  manifest.config = config.snapshot();
  manifest.started_at = utc_now();

  Taxonomy taxonomy;
  try {
    taxonomy = load_taxonomy(config);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  Corpus corpus = load_corpus(config, taxonomy);
  if (config.alias_file) add_digest(corpus, *config.alias_file);

  ComparisonReport report;
  report.task = config.task;
  report.threshold = config.threshold;
  report.documents = corpus.docs.size();
  if (config.task == Task::Ner) {
    std::set<std::string> tags;
    for (const auto& seq : corpus.gold_tags) tags.insert(seq.tags.begin(), seq.tags.end());
    report.tag_universe.assign(tags.begin(), tags.end());
  }
  const auto entity_types = config.task == Task::Ner ? gold_entity_types(corpus, taxonomy)
                                                     : std::vector<std::string>{};

  std::vector<PredictionSet> sets(config.backends.size());
  std::map<std::string, double> per_doc;
  for (std::size_t i = 0; i < config.backends.size(); ++i) {
    const auto& desc = config.backends[i];
    BackendReport b;
    b.name = desc.name;
    b.kind = desc.kind;
    b.documents = corpus.docs.size();
    try {
      if (desc.kind == BackendDescriptor::Kind::PredictionsFile) add_digest(corpus, desc.predictions_path);
      auto backend = make_backend(desc, config, taxonomy, entity_types);
      sets[i] = run_backend(*backend, corpus.docs, config.task, config.concurrency);
      b.timing = sets[i].timing;
      b.parse_failures = sets[i].failures();
      switch (config.task) {
        case Task::Binary: b.metrics = score_binary(corpus.docs, sets[i], config.threshold); break;
        case Task::Attack: b.metrics = score_attack(corpus.docs, sets[i], config.threshold); break;
        case Task::Ner: b.metrics = score_ner(corpus, sets[i]); break;
      }
      per_doc[b.name] = b.timing.per_document_seconds;
    } catch (const std::exception& e) {
      spdlog::error("backend {} failed: {}", desc.name, e.what());
      b.failed = true;
      b.failure = e.what();
    }
    manifest.timing[b.name] = b.timing;
    manifest.parse_failures[b.name] = b.parse_failures;
    report.backends.push_back(std::move(b));
  }
  report.relative_speed = relative_speed(per_doc);

  manifest.input_digests = corpus.digests;
  std::string all;
  for (const auto& [path, digest] : corpus.digests) all += digest;
  manifest.corpus_digest = sha256_hex(all);

  if (config.task == Task::Attack && has(Stage::Timeline)) {
    std::vector<std::pair<std::string, const PredictionSet*>> ok;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (!report.backends[i].failed) ok.emplace_back(report.backends[i].name, &sets[i]);
    }
    if (const auto window = timeline_window(config, corpus.docs)) {
      try {
        report.timeline = build_timeline(config, corpus.docs, ok, *window);
      } catch (const Error& e) {
        spdlog::warn("timeline skipped: {}", e.what());
      }
    } else {
      spdlog::warn("timeline skipped: no dated documents");
    }
  }
  manifest.finished_at = utc_now();

  // Emission. The manifest goes first.
  const auto& out = config.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "cannot create output directory " + out.string());
  auto emit = [&](const std::filesystem::path& rel, std::string_view content) {
    write_atomic(out / rel, content);
    report.files.push_back(rel.generic_string());
  };

  emit("manifest.json", manifest.to_json(config.reproducible).dump(2) + "\n");
  if (has(Stage::Metrics)) {
    emit("metrics.json", metrics_json(report, !config.reproducible).dump(2) + "\n");
    emit("metrics.csv", metrics_csv(report));
  }
  if (has(Stage::Curves)) {
    const std::string task(to_string(config.task));
    for (const auto& b : report.backends) {
      const auto prefix = "curves/" + file_slug(b.name) + "_" + task;
      if (const auto* r = std::get_if<BinaryReport>(&b.metrics)) {
        emit(prefix + "_roc.csv", curve_csv(r->roc));
        emit(prefix + "_pr.csv", curve_csv(r->pr));
        emit(prefix + "_f1.csv", curve_csv(r->f1));
      } else if (const auto* r = std::get_if<AttackReport>(&b.metrics)) {
        for (AttackType t : kAllAttackTypes) {
          const auto stem = prefix + "_" + std::string(slug(t));
          emit(stem + "_roc.csv", curve_csv(r->roc[ordinal(t)]));
          emit(stem + "_pr.csv", curve_csv(r->pr[ordinal(t)]));
          emit(stem + "_f1.csv", curve_csv(r->f1[ordinal(t)]));
        }
      }
    }
  }
  if (report.timeline) {
    const auto& tl = *report.timeline;
    for (AttackType t : kAllAttackTypes) {
      std::vector<CumulativeSeries> preds;
      for (const auto& [name, series] : tl.predicted) preds.push_back(series[ordinal(t)]);
      const auto stem = "timeline/attack_" + std::string(slug(t));
      emit(stem + ".csv", timeline_csv(tl, t));
      emit(stem + ".svg", timeline_svg(tl.gold[ordinal(t)], preds));
    }
    emit("timeline/bias.csv", bias_csv(tl));
  }
  if (has(Stage::Timing)) emit("timing.csv", timing_csv(report));
  return report;
}

}  // namespace eventbench
