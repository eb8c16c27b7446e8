// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "eventbench/backends.hpp"
#include "eventbench/corpus.hpp"
#include "eventbench/curves.hpp"
#include "eventbench/error.hpp"
#include "eventbench/harness.hpp"
#include "eventbench/metrics.hpp"
#include "eventbench/timeseries.hpp"
#include "support.hpp"

using namespace eventbench;
namespace fs = std::filesystem;

namespace {

// Collects failed expectations for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ += ok ? 0 : 1;
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(total_ - failed_) + "/" + std::to_string(total_) + " checks";
    for (const auto& f : failures_) s += "\n        " + f;
    return s;
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol + 1e-12; }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Binary table reproduction

struct PrintedRow {
  double p, r, f1;
};

struct PrintedModel {
  const char* name;
  int c00, c01, c10, c11;
  PrintedRow class0, class1, macro, weighted;
};

// Confusion matrices solved from recall x support on the printed rows.
const PrintedModel kBinaryTable[] = {
    {"ConfliBERT", 227, 42, 4, 49,
     {0.9827, 0.8439, 0.9080}, {0.5385, 0.9245, 0.6806}, {0.7606, 0.8842, 0.7943}, {0.9096, 0.8571, 0.8706}},
    {"Gemma 2 (9B)", 269, 0, 53, 0,
     {0.8354, 1.0000, 0.9103}, {0.0000, 0.0000, 0.0000}, {0.4177, 0.5000, 0.4552}, {0.6979, 0.8354, 0.7605}},
    {"Llama 3.1 (8B)", 268, 1, 52, 1,
     {0.8375, 0.9963, 0.9100}, {0.5000, 0.0189, 0.0364}, {0.6688, 0.5076, 0.4732}, {0.7819, 0.8354, 0.7662}},
};

void expect_row(Check& c, const std::string& label, const ClassScore& got, const PrintedRow& want) {
  c.expect(near(got.precision, want.p, 1e-4), label + " precision " + fmt(got.precision));
  c.expect(near(got.recall, want.r, 1e-4), label + " recall " + fmt(got.recall));
  c.expect(near(got.f1, want.f1, 1e-4), label + " f1 " + fmt(got.f1));
}

Check binary_table() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& m : kBinaryTable) {
    const int n = m.c00 + m.c01 + m.c10 + m.c11;
    Eigen::VectorXi gold(n), pred(n);
    int k = 0;
    auto fill = [&](int g, int p, int count) {
      for (int i = 0; i < count; ++i, ++k) {
        gold(k) = g;
        pred(k) = p;
      }
    };
    fill(0, 0, m.c00);
    fill(0, 1, m.c01);
    fill(1, 0, m.c10);
    fill(1, 1, m.c11);
    const auto counts = confusion(gold, pred, 2);
    const auto per_class = class_scores(counts);
    const std::string name(m.name);
    expect_row(c, name + " class 0", per_class[0], m.class0);
    expect_row(c, name + " class 1", per_class[1], m.class1);
    expect_row(c, name + " macro", macro_avg(per_class), m.macro);
    expect_row(c, name + " weighted", weighted_avg(per_class), m.weighted);
    c.expect(per_class[0].support == 269 && per_class[1].support == 53, name + " supports");
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  return c;
}

// ---------------------------------------------------------------------------
// 2. Aggregation identities

Check aggregation() {
  Check c;
  const std::vector<ClassScore> printed{{0, 0, 0.9080, 269}, {0, 0, 0.6806, 53}};
  c.expect(format_fixed(macro_avg(printed).f1) == "0.7943", "macro " + fmt(macro_avg(printed).f1));
  c.expect(format_fixed(weighted_avg(printed).f1) == "0.8706",
           "weighted " + fmt(weighted_avg(printed).f1));

  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 8);
    const int n = 1 + static_cast<int>(rng() % 200);
    Eigen::VectorXi gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold(i) = static_cast<int>(rng() % k);
      pred(i) = rng() % 3 == 0 ? gold(i) : static_cast<int>(rng() % k);
    }
    const auto counts = confusion(gold, pred, k);
    const double acc = accuracy(counts);
    const double wr = weighted_avg(class_scores(counts)).recall;
    c.expect(near(acc, wr, 1e-12), "trial " + std::to_string(trial) + ": " + fmt(acc) + " vs " + fmt(wr));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 3. AUC against the pairwise oracle

Check auc_oracle() {
  Check c;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    std::vector<double> s(n);
    std::vector<int> g(n);
    const int levels = 2 + static_cast<int>(rng() % 20);  // few levels -> many ties
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % levels) / levels;
      g[i] = static_cast<int>(rng() % 2);
    }
    g[0] = 1;  // both classes present
    g[1] = 0;
    std::shuffle(g.begin(), g.end(), rng);

    const Eigen::Map<Eigen::VectorXd> sv(s.data(), n);
    const Eigen::ArrayX<bool> gv = Eigen::Map<Eigen::VectorXi>(g.data(), n).array() != 0;
    const double auc = roc_curve(sv, gv).summary;
    const double oracle = support::pairwise_auc(s, g);
    c.expect(std::abs(auc - oracle) <= 1e-12, "trial " + std::to_string(trial) + ": " + fmt(auc) +
                                                  " vs " + fmt(oracle));
  }
  const Eigen::Array<bool, 6, 1> gold(true, false, true, false, false, true);
  const double constant = roc_curve(Eigen::VectorXd::Constant(6, 0.42), gold).summary;
  c.expect(constant == 0.5, "constant scores " + fmt(constant));
  Eigen::VectorXd perfect(6);
  perfect << 0.9, 0.2, 0.8, 0.1, 0.3, 0.7;
  const double best = roc_curve(perfect, gold).summary;
  c.expect(best == 1.0, "perfect ranking " + fmt(best));
  return c;
}

// ---------------------------------------------------------------------------
// 4. Multi-label conventions

IndicatorMatrix rows_of(const std::vector<std::set<int>>& sets) {
  std::vector<AttackSet> v;
  for (const auto& s : sets) v.push_back(support::to_attack_set(s));
  return indicators(v);
}

Check multilabel_conventions() {
  Check c;
  using Sets = std::vector<std::set<int>>;
  struct Fixture {
    const char* name;
    Sets gold, pred;
  };
  const std::vector<Fixture> fixtures{
      {"identity", {{0}, {1, 2}, {8}, {3}, {4, 5}}, {{0}, {1, 2}, {8}, {3}, {4, 5}}},
      {"subsets", {{0}, {1, 2}, {2}, {1}, {0, 8}}, {{0}, {1}, {2, 6}, {7}, {8}}},
      {"disjoint", {{0}, {1}, {2}, {3}, {4}}, {{5}, {6}, {7}, {8}, {0}}},
      {"empty predictions", {{0}, {1, 2}, {2}, {1}, {3}}, {{}, {}, {}, {}, {}}},
      {"cap of three", {{0, 1, 2}, {3}, {4, 5}, {6, 7, 8}, {1}}, {{0, 1}, {3, 4, 5}, {4, 5}, {6}, {1, 2}}},
      {"empty-empty", {{}, {1}, {2}, {0, 1}, {8}}, {{}, {0}, {3}, {2}, {8}}},
  };
  for (const auto& f : fixtures) {
    const auto m = multilabel(rows_of(f.gold), rows_of(f.pred));
    const auto o = support::multilabel_oracle(f.gold, f.pred);
    const std::string n(f.name);
    c.expect(m.subset_accuracy == o.subset(), n + " subset " + fmt(m.subset_accuracy));
    c.expect(m.hamming_loss == o.hamming(), n + " hamming " + fmt(m.hamming_loss));
    c.expect(m.partial_match == o.partial(), n + " partial " + fmt(m.partial_match));
    c.expect(m.cardinality_true == o.card_true(), n + " true cardinality");
    c.expect(m.cardinality_pred == o.card_pred(), n + " predicted cardinality");
  }
  // A predictor that abstains on a label-less instance scores it as an exact
  // subset match but not as a partial match.
  const auto inv = multilabel(rows_of(fixtures.back().gold), rows_of(fixtures.back().pred));
  c.expect(inv.subset_accuracy > inv.partial_match,
           "inversion " + fmt(inv.subset_accuracy) + " <= " + fmt(inv.partial_match));
  return c;
}

// ---------------------------------------------------------------------------
// 5. Prompt protocol

constexpr const char* kReferencePrompt =
    "Classify each of the following events into up to three of these categories, providing "
    "probabilities for each:\n"
    "Assassination, Armed Assault, Bombing/Explosion, Hijacking,\n"
    "Hostage Taking (Barricade Incident), Hostage Taking (Kidnapping),\n"
    "Facility/Infrastructure Attack, Unarmed Assault, Unknown\n"
    "\n"
    "For each event, return only a JSON object with category names as keys and probabilities as "
    "values.\n"
    "Example format: {\"Armed Assault\": 0.7, \"Bombing/Explosion\": 0.2, \"Unknown\": 0.1}\n"
    "\n"
    "Events:";

CategoryVector vector_of(std::initializer_list<std::pair<AttackType, double>> entries) {
  CategoryVector v = attack_vector_template();
  for (const auto& [t, p] : entries) v[static_cast<Eigen::Index>(ordinal(t))] = p;
  return v;
}

Check prompt_protocol() {
  Check c;
  const std::vector<std::string> events{"Gunmen stormed a police post.", "A car bomb exploded."};
  const auto prompt = render_classification_prompt(events, 2);
  c.expect(prompt.starts_with(kReferencePrompt), "reference prompt is not a byte-for-byte prefix");
  c.expect(prompt == std::string(kReferencePrompt) + "\n1. " + events[0] + "\n2. " + events[1],
           "event numbering");

  const auto example =
      parse_classification_output(R"({"Armed Assault": 0.7, "Bombing/Explosion": 0.2, "Unknown": 0.1})", 1);
  const auto want = vector_of({{AttackType::ArmedAssault, 0.7},
                               {AttackType::BombingExplosion, 0.2},
                               {AttackType::Unknown, 0.1}});
  c.expect(example.failures() == 0 && example.vectors[0] == want, "example format line");

  using AT = AttackType;
  struct Case {
    const char* name;
    std::string text;
    std::optional<CategoryVector> expected;  // nullopt: parse failure
  };
  const std::vector<Case> cases{
      {"code fence", "```json\n{\"Armed Assault\": 0.7}\n```", vector_of({{AT::ArmedAssault, 0.7}})},
      {"prose around", "Here is the classification:\n{\"Hijacking\": 0.9}\nLet me know if you need more.",
       vector_of({{AT::Hijacking, 0.9}})},
      {"first object wins", "{\"Armed Assault\": 0.6} then {\"Hijacking\": 1.0}",
       vector_of({{AT::ArmedAssault, 0.6}})},
      {"array wrapper", "[{\"Unarmed Assault\": 0.5}]", vector_of({{AT::UnarmedAssault, 0.5}})},
      {"keyed by event", "{\"1\": {\"Bombing/Explosion\": 0.9}}", vector_of({{AT::BombingExplosion, 0.9}})},
      {"percent strings", "{\"Armed Assault\": \"70%\"}", vector_of({{AT::ArmedAssault, 0.7}})},
      {"numeric strings", "{\"Armed Assault\": \"0.25\"}", vector_of({{AT::ArmedAssault, 0.25}})},
      {"broken candidate first", "Maybe {not json} but {\"Hijacking\": 0.5}", vector_of({{AT::Hijacking, 0.5}})},
      {"braces inside strings", "{\"note\": \"a } and a {\", \"Armed Assault\": 0.6}",
       vector_of({{AT::ArmedAssault, 0.6}})},
      {"alias folding", "{\"armed assault\": 0.5, \"BOMBING OR EXPLOSION\": 0.4}",
       vector_of({{AT::ArmedAssault, 0.5}, {AT::BombingExplosion, 0.4}})},
      {"clamped", "{\"Armed Assault\": 1.4, \"Unknown\": -0.3}", vector_of({{AT::ArmedAssault, 1.0}})},
      {"top three", "{\"Assassination\": 0.4, \"Armed Assault\": 0.3, \"Hijacking\": 0.2, \"Unknown\": 0.1}",
       vector_of({{AT::Assassination, 0.4}, {AT::ArmedAssault, 0.3}, {AT::Hijacking, 0.2}})},
      {"integer value", "Output:\n\n\t{\"Unknown\": 1}", vector_of({{AT::Unknown, 1.0}})},
      {"stray closing brace after", "{\"Armed Assault\": 0.7} } trailing", vector_of({{AT::ArmedAssault, 0.7}})},
      {"unknown key dropped", "{\"Cyber Attack\": 0.9, \"Hijacking\": 0.1}", vector_of({{AT::Hijacking, 0.1}})},
      {"no json", "I am unable to classify these events.", std::nullopt},
      {"truncated", "```\n{\"Armed Assault\": 0.7,\n```", std::nullopt},
      {"empty object", "{}", std::nullopt},
      {"label without probability", "{\"category\": \"Armed Assault\"}", std::nullopt},
      {"array of numbers", "[0.7, 0.2, 0.1]", std::nullopt},
  };
  for (const auto& k : cases) {
    const auto p = parse_classification_output(k.text, 1);
    if (k.expected) {
      c.expect(p.failures() == 0 && p.vectors[0] == *k.expected, std::string(k.name) + " should parse");
    } else {
      c.expect(p.failures() == 1 && p.vectors[0].isZero(), std::string(k.name) + " should fail");
    }
  }
  c.expect(cases.size() == 20, "expected 20 adversarial cases");
  return c;
}

// ---------------------------------------------------------------------------
// 6. Raw annotation preprocessing

Check annotation_preprocessing() {
  Check c;
  const auto& tax = default_taxonomy();
  const std::vector<RawEntityAnnotation> weak{{"d", 0, 5, "Person", 0.4}, {"d", 10, 15, "Location", 0.5}};
  const auto kept = resolve_annotations(weak);
  c.expect(kept.size() == 1 && kept[0].begin == 10, "confidence 0.4 span not removed at default 0.5");

  const std::vector<RawEntityAnnotation> nested{{"d", 0, 10, "ORG", 0.9}, {"d", 3, 8, "PER", 0.99}};
  const auto largest = resolve_annotations(nested);
  c.expect(largest.size() == 1 && largest[0].end - largest[0].begin == 10, "largest span not kept");

  const std::vector<std::string> labels{"Person", "Organisation", "Location", "Temporal", "Victim"};
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RawEntityAnnotation> anns;
    const int n = 1 + static_cast<int>(rng() % 25);
    for (int i = 0; i < n; ++i) {
      const std::size_t b = rng() % 100;
      const std::size_t len = 1 + rng() % 15;
      anns.push_back({"d", b, b + len, labels[rng() % labels.size()], static_cast<double>(rng() % 11) / 10});
    }
    const auto out = resolve_annotations(anns);
    const std::string t = "set " + std::to_string(trial);

    for (std::size_t i = 1; i < out.size(); ++i) {
      c.expect(out[i - 1].end <= out[i].begin, t + ": overlapping or unsorted output");
    }
    // Every kept span comes from an annotation at or above the threshold.
    for (const auto& s : out) {
      const bool sourced = std::any_of(anns.begin(), anns.end(), [&](const RawEntityAnnotation& a) {
        return a.confidence >= kDefaultConfidenceThreshold && a.begin == s.begin && a.end == s.end &&
               tax.normalize_entity_label(a.label) == s.type;
      });
      c.expect(sourced, t + ": kept span without a confident source");
    }
    // Every dropped confident annotation overlaps a kept span at least as long.
    for (const auto& a : anns) {
      if (a.confidence < kDefaultConfidenceThreshold) continue;
      const bool dominated = std::any_of(out.begin(), out.end(), [&](const CharSpan& s) {
        const bool overlaps = s.begin < a.end && a.begin < s.end;
        return overlaps && s.end - s.begin >= a.end - a.begin;
      });
      c.expect(dominated, t + ": dropped span not covered by a larger kept span");
    }
    auto shuffled = anns;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    c.expect(resolve_annotations(shuffled) == out, t + ": result depends on input order");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 7. Round trips

Check round_trips() {
  Check c;
  const auto& tax = default_taxonomy();
  const auto text = read_file(support::fixture("sample.conll"));
  const auto parsed = parse_conll(text);
  c.expect(parse_conll(write_conll(parsed)) == parsed, "sample.conll parse/write/parse");
  const auto canonical = write_conll(parsed);
  c.expect(write_conll(parse_conll(canonical)) == canonical, "sample.conll write/parse/write");

  const auto& types = tax.entity_types();
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<Token> tokens;
    std::string sentence;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) sentence += ' ';
      std::string w(1 + rng() % 8, static_cast<char>('a' + rng() % 26));
      tokens.push_back({w, sentence.size(), sentence.size() + w.size()});
      sentence += w;
    }
    // Non-overlapping token spans, adjacent spans allowed.
    std::vector<EntitySpan> spans;
    std::vector<CharSpan> chars;
    std::size_t i = 0;
    while (i < n) {
      if (rng() % 3 == 0) {
        const std::size_t len = 1 + rng() % std::min<std::size_t>(4, n - i);
        const auto& type = types[rng() % types.size()];
        spans.push_back({"s", i, i + len, type});
        chars.push_back({tokens[i].begin, tokens[i + len - 1].end, tax.normalize_entity_label(type)});
        i += len;
      } else {
        ++i;
      }
    }
    const auto tags = spans_to_bio(tokens, chars);
    const auto back = bio_to_spans(tags, "s");
    c.expect(back == spans, "span set " + std::to_string(trial) + " did not survive BIO");
    const std::vector<TagSequence> one{tags};
    c.expect(parse_conll(write_conll(one)) == one, "random sequence " + std::to_string(trial) + " CoNLL");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 8. Relative speed

Check speed() {
  Check c;
  const double docs = 1000;
  const auto x = relative_speed({{"ConfliBERT", 27.6 / docs}, {"Llama 3.1", 20880.0 / docs}});
  const double fast = x.at("ConfliBERT").value_or(0);
  c.expect(std::abs(fast / 759.49 - 1) < 0.01, "multiplier " + fmt(fast));
  c.expect(x.at("Llama 3.1") == 1.0, "slowest is not 1.00x");
  c.expect(format_fixed(*x.at("Llama 3.1"), 2) == "1.00", "slowest formatting");

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> secs(1e-4, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, double> times;
    const int k = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < k; ++i) times["b" + std::to_string(i)] = secs(rng);
    const auto r = relative_speed(times);
    const auto slowest = std::max_element(times.begin(), times.end(),
                                          [](const auto& a, const auto& b) { return a.second < b.second; });
    c.expect(r.at(slowest->first) == 1.0, "trial " + std::to_string(trial) + " slowest");
    for (const auto& [name, v] : r) c.expect(v && *v >= 1.0, "trial " + std::to_string(trial) + " >= 1");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 9. Cumulative series

Check time_series() {
  Check c;
  std::mt19937_64 rng(9);
  const auto window = year_window(2017, 2020);
  const auto span_days = (window.end.sys_days() - window.start.sys_days()).count() + 1;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DatedLabels> gold;
    const int n = 1 + static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      const auto d = window.start.sys_days() + std::chrono::days(static_cast<long>(rng() % span_days));
      gold.push_back({Date::from_sys_days(d), support::to_attack_set(support::random_label_set(rng, 0.3))});
    }
    const auto pred = gold;
    for (auto t : kAllAttackTypes) {
      std::int64_t total = 0;
      for (const auto& g : gold) total += g.labels.test(ordinal(t));
      for (auto b : {Bucketing::Month, Bucketing::Day}) {
        const auto s = cumulative_series(gold, t, b, window, "gold");
        const bool monotone = std::is_sorted(s.counts.begin(), s.counts.end());
        c.expect(monotone, "trial " + std::to_string(trial) + " not monotone");
        c.expect(s.final_count() == total, "trial " + std::to_string(trial) + " final count");
        const auto p = cumulative_series(pred, t, b, window, "pred");
        c.expect(p.counts == s.counts && p.dates == s.dates, "pred = gold curves differ");
        const auto bias = bias_summary(s, p);
        c.expect(bias.max_abs_gap == 0 && bias.direction == BiasDirection::Exact, "identity bias");
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 10. Throughput and determinism

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Check throughput() {
  Check c;
  const auto dir = support::scratch_dir("acceptance_perf");
  std::mt19937_64 rng(10);
  {
    std::ofstream docs(dir / "docs.jsonl"), preds(dir / "preds.jsonl");
    for (int i = 0; i < 40000; ++i) {
      const auto gold = support::random_label_set(rng, 0.15);
      nlohmann::json d{{"id", "e" + std::to_string(i)}, {"text", "event"}, {"labels", nlohmann::json::array()}};
      d["date"] = Date::from_sys_days(year_window(2017, 2020).start.sys_days() +
                                      std::chrono::days(static_cast<long>(rng() % 1461)))
                      .iso();
      nlohmann::json scores = nlohmann::json::object();
      for (auto t : kAllAttackTypes) {
        const bool in = gold.count(static_cast<int>(ordinal(t))) > 0;
        if (in) d["labels"].push_back(std::string(display(t)));
        const double noise = static_cast<double>(rng() % 1000) / 1000.0;
        scores[std::string(display(t))] = in ? 0.3 + 0.7 * noise : 0.6 * noise;
      }
      docs << d.dump() << '\n';
      preds << nlohmann::json{{"id", "e" + std::to_string(i)}, {"scores", scores}}.dump() << '\n';
    }
  }
  auto config = [&](const std::string& out, std::size_t concurrency) {
    RunConfig cfg;
    cfg.task = Task::Attack;
    cfg.documents = dir / "docs.jsonl";
    BackendDescriptor b;
    b.name = "synthetic";
    b.predictions_path = dir / "preds.jsonl";
    cfg.backends = {b};
    cfg.output_dir = dir / out;
    cfg.concurrency = concurrency;
    cfg.reproducible = true;
    return cfg;
  };
  const auto stages = static_cast<unsigned>(Stage::Metrics) | static_cast<unsigned>(Stage::Curves);

  // Scoring alone, on already-loaded records.
  const auto docs = load_documents(dir / "docs.jsonl", DocumentFormat::Jsonl);
  const auto set = load_predictions_file(dir / "preds.jsonl");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<AttackSet> gold;
  std::vector<CategoryVector> rows;
  for (const auto& d : docs) {
    gold.push_back(*d.attack_labels);
    rows.push_back(*set.find(d.id)->attack_scores);
  }
  const ScoreMatrix scores = stack_scores(rows);
  const IndicatorMatrix g = indicators(gold);
  const auto ovr = one_vs_rest(scores, g);
  const auto ml = multilabel(g, threshold_scores(scores));
  double checksum = ovr.macro_f1 + ml.subset_accuracy;
  for (Eigen::Index t = 0; t < scores.cols(); ++t) {
    checksum += roc_curve(scores.col(t), g.col(t)).summary;
    checksum += pr_curve(scores.col(t), g.col(t)).summary;
    checksum += f1_vs_threshold(scores.col(t), g.col(t)).summary;
  }
  const double scoring = seconds_since(t0);
  c.expect(std::isfinite(checksum), "non-finite metrics");
  c.expect(scoring < 10.0, "scoring took " + fmt(scoring) + " s");

  // End to end, including parsing and artifact emission.
  const auto t1 = std::chrono::steady_clock::now();
  const auto r1 = run(config("c1", 1), stages);
  const double pipeline = seconds_since(t1);
  c.expect(pipeline < 10.0, "pipeline took " + fmt(pipeline) + " s");
  const auto r8 = run(config("c8", 8), stages);
  c.expect(r1.files == r8.files, "different artifact sets");
  for (const auto& f : r1.files) {
    if (f == "manifest.json") continue;  // records the concurrency limit itself
    c.expect(read_all(dir / "c1" / f) == read_all(dir / "c8" / f), f + " differs across concurrency");
  }
  std::printf("        scoring %.3f s, pipeline %.3f s, %zu artifacts\n", scoring, pipeline, r1.files.size());
  fs::remove_all(dir);
  return c;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
      {"binary table reproduction", binary_table},
      {"aggregation identities", aggregation},
      {"AUC oracle equivalence", auc_oracle},
      {"multi-label conventions", multilabel_conventions},
      {"prompt protocol", prompt_protocol},
      {"annotation preprocessing", annotation_preprocessing},
      {"round trips", round_trips},
      {"relative speed", speed},
      {"cumulative series", time_series},
      {"throughput and determinism", throughput},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.expect(false, std::string("threw: ") + e.what());
    }
    std::printf("%s  %2zu  %-28s %s\n", c.ok() ? "PASS" : "FAIL", i + 1, criteria[i].first,
                c.summary().c_str());
    std::fflush(stdout);
    failed += c.ok() ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
