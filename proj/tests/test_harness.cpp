#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "eventbench/error.hpp"
#include "eventbench/harness.hpp"
#include "support.hpp"

#include <httplib.h>

using namespace eventbench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BackendDescriptor file_backend(const std::string& name, const std::string& fixture) {
  BackendDescriptor d;
  d.name = name;
  d.predictions_path = support::fixture(fixture);
  return d;
}

RunConfig binary_config(const fs::path& out) {
  RunConfig c;
  c.task = Task::Binary;
  c.documents = support::fixture("binary_docs.jsonl");
  c.backends = {file_backend("alpha", "binary_alpha.jsonl"), file_backend("beta", "binary_beta.jsonl")};
  c.output_dir = out;
  c.reproducible = true;
  return c;
}

RunConfig attack_config(const fs::path& out) {
  RunConfig c;
  c.task = Task::Attack;
  c.documents = support::fixture("attack_docs.jsonl");
  c.backends = {file_backend("Alpha Model", "attack_alpha.jsonl")};
  c.output_dir = out;
  c.reproducible = true;
  c.window = year_window(2017, 2020);
  return c;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const auto doc = nlohmann::json::parse(R"({
    "task": "attack",
    "corpus": {"documents": "docs.csv"},
    "split": {"cutoff_year": 2016, "end_year": 2021},
    "backends": [
      {"name": "file", "kind": "predictions-file", "file": "p.jsonl"},
      {"name": "chat", "kind": "http-chat", "base_url": "http://localhost:8000", "model": "m",
       "api_key_env": "KEY", "batch_size": 4}
    ],
    "threshold": 0.4, "concurrency": 3, "bucketing": "day",
    "window": {"start": "2017-01-01", "end": "2021-12-31"}
  })");
  const auto c = parse_run_config(doc, "/data");
  CHECK(c.task == Task::Attack);
  CHECK(c.documents == fs::path("/data/docs.csv"));
  CHECK(c.documents_format == DocumentFormat::Csv);
  CHECK(c.split->end_year == 2021);
  REQUIRE(c.backends.size() == 2);
  CHECK(c.backends[0].predictions_path == fs::path("/data/p.jsonl"));
  CHECK(c.backends[1].kind == BackendDescriptor::Kind::HttpChat);
  CHECK(c.backends[1].chat.batch_size == 4);
  CHECK(c.backends[1].chat.endpoint.api_key_env == "KEY");
  CHECK(c.threshold == 0.4);
  CHECK(c.bucketing == Bucketing::Day);
  CHECK(c.window->end == Date::ymd(2021, 12, 31));
  validate(c);

  auto bad = c;
  bad.threshold = 1.5;
  CHECK(code_of([&] { validate(bad); }) == ErrorCode::ConfigError);
  bad = c;
  bad.backends.clear();
  CHECK(code_of([&] { validate(bad); }) == ErrorCode::ConfigError);
  bad = c;
  bad.backends[1].name = "FILE";
  CHECK(code_of([&] { validate(bad); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_run_config(nlohmann::json::parse(R"({"task": "poetry"})")); }) ==
        ErrorCode::ConfigError);
}

TEST_CASE("relative speed") {
  const auto published = relative_speed({{"slow", 20880.0 / 100}, {"fast", 27.6 / 100}});
  CHECK(*published.at("slow") == 1.0);
  CHECK(std::abs(*published.at("fast") / 759.49 - 1) < 0.01);
  const auto equal = relative_speed({{"a", 2.0}, {"b", 2.0}});
  CHECK(*equal.at("a") == 1.0);
  CHECK(*equal.at("b") == 1.0);
  const auto two = relative_speed({{"a", 1.0}, {"b", 0.5}});
  CHECK(*two.at("a") == 1.0);
  CHECK(*two.at("b") == 2.0);
  CHECK_FALSE(relative_speed({{"a", 1.0}, {"z", 0.0}}).at("z").has_value());
}

TEST_CASE("fixed formatting rounds half to even") {
  CHECK(format_fixed(0.12345) == "0.1234");
  CHECK(format_fixed(0.12355) == "0.1236");
  CHECK(format_fixed(756.5217, 2) == "756.52");
  CHECK(format_fixed(std::nan("")) == "nan");
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("binary run with two prediction files") {
  const auto out = support::scratch_dir("binary");
  const auto report = run(binary_config(out));
  REQUIRE(report.backends.size() == 2);
  CHECK_FALSE(report.any_failed());
  CHECK(report.documents == 24);
  for (const auto* f : {"manifest.json", "metrics.json", "metrics.csv", "timing.csv"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK(fs::exists(out / "curves/alpha_binary_roc.csv"));
  const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
  CHECK(metrics["backends"].size() == 2);
  CHECK(metrics["backends"][1]["metrics"]["per_class"]["1"]["recall"] == 0.0);

  const auto& beta = std::get<BinaryReport>(report.backends[1].metrics);
  CHECK(beta.matrix(0, 0) == 16);
  CHECK(beta.matrix(1, 0) == 8);

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["tool_version"] == std::string(kToolVersion));
  CHECK_FALSE(manifest.contains("started_at"));
  CHECK(manifest["inputs"].size() == 3);
}

TEST_CASE("reruns are byte-identical and concurrency-independent") {
  const auto a = support::scratch_dir("rerun_a");
  const auto b = support::scratch_dir("rerun_b");
  auto ca = attack_config(a);
  auto cb = attack_config(b);
  cb.concurrency = 8;
  const auto ra = run(ca);
  const auto rb = run(cb);
  CHECK(ra.files == rb.files);
  for (const auto& f : ra.files) {
    // The manifest records the concurrency setting; timing.csv is wall time.
    if (f == "manifest.json" || f == "timing.csv") continue;
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  CHECK(ma["corpus_digest"] == mb["corpus_digest"]);

  const auto again = run(ca);
  CHECK(again.files == ra.files);
  CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
}

TEST_CASE("attack run emits per-type curves and timelines") {
  const auto out = support::scratch_dir("attack");
  const auto report = run(attack_config(out));
  std::size_t roc = 0, pr = 0, f1 = 0;
  for (const auto& f : report.files) {
    roc += f.ends_with("_roc.csv");
    pr += f.ends_with("_pr.csv");
    f1 += f.ends_with("_f1.csv");
  }
  CHECK(roc == 9);
  CHECK(pr == 9);
  CHECK(f1 == 9);
  CHECK(fs::exists(out / "curves/alpha_model_attack_armed_assault_roc.csv"));
  CHECK(fs::exists(out / "timeline/attack_armed_assault.csv"));
  CHECK(fs::exists(out / "timeline/attack_armed_assault.svg"));
  CHECK(fs::exists(out / "timeline/bias.csv"));
  REQUIRE(report.timeline);
  CHECK(report.timeline->gold.size() == 9);
  CHECK(report.timeline->gold[0].dates.size() == 48);

  const auto csv = slurp(out / "timeline/attack_armed_assault.csv");
  CHECK(csv.starts_with("date,gold_cumulative,alpha_model_cumulative\n2017-01-01,"));
}

TEST_CASE("stages limit the emitted artifacts") {
  const auto out = support::scratch_dir("stages");
  const auto report = run(attack_config(out), static_cast<unsigned>(Stage::Metrics));
  CHECK_FALSE(report.timeline.has_value());
  CHECK(report.files == std::vector<std::string>{"manifest.json", "metrics.json", "metrics.csv"});
}

TEST_CASE("a failing backend is isolated and reported") {
  const auto out = support::scratch_dir("failing");
  auto c = binary_config(out);
  c.backends.push_back(file_backend("ghost", "does_not_exist.jsonl"));
  const auto report = run(c);
  CHECK(report.any_failed());
  CHECK(report.backends[2].failed);
  CHECK_FALSE(report.backends[0].failed);
  CHECK_FALSE(report.relative_speed.count("ghost"));
  CHECK(fs::exists(out / "metrics.json"));
}

TEST_CASE("corpus problems surface as CorpusError") {
  auto c = binary_config(support::scratch_dir("corpus"));
  c.documents = support::fixture("missing.jsonl");
  CHECK(code_of([&] { run(c); }) == ErrorCode::CorpusError);
}

TEST_CASE("NER run") {
  const auto out = support::scratch_dir("ner");
  RunConfig c;
  c.task = Task::Ner;
  c.conll = support::fixture("sample.conll");
  c.backends = {file_backend("tagger", "ner_alpha.jsonl")};
  c.output_dir = out;
  c.reproducible = true;
  const auto report = run(c);
  REQUIRE_FALSE(report.any_failed());
  const auto& ner = std::get<NerReport>(report.backends[0].metrics);
  CHECK(ner.token.accuracy == 1.0);
  CHECK(ner.span.micro.f1 == 1.0);
  CHECK(report.tag_universe.front() == "B-Location");
}

TEST_CASE("seeded sampling is reproducible") {
  auto c = attack_config(support::scratch_dir("sample_a"));
  c.sample = 10;
  c.seed = 42;
  const auto first_dir = c.output_dir;
  const auto a = run(c, static_cast<unsigned>(Stage::Metrics));
  c.output_dir = support::scratch_dir("sample_b");
  const auto b = run(c, static_cast<unsigned>(Stage::Metrics));
  CHECK(a.documents == 10);
  CHECK(b.documents == 10);
  CHECK(slurp(first_dir / "metrics.json") == slurp(c.output_dir / "metrics.json"));
}

TEST_CASE("chat backends run through the pipeline against a local endpoint") {
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    const auto body = nlohmann::json::parse(req.body);
    const auto prompt = body["messages"].back()["content"].get<std::string>();
    std::string answer;
    for (int i = 1; prompt.find("\n" + std::to_string(i) + ". ") != std::string::npos; ++i) {
      answer += R"({"Armed Assault": 0.9, "Unknown": 0.2})" "\n";
    }
    res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", answer}}}}}}}.dump(),
                    "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto c = attack_config(support::scratch_dir("chat"));
  BackendDescriptor chat;
  chat.name = "chat";
  chat.kind = BackendDescriptor::Kind::HttpChat;
  chat.chat.endpoint.base_url = "http://127.0.0.1:" + std::to_string(port);
  chat.chat.endpoint.model = "local";
  chat.chat.endpoint.backoff_base = std::chrono::duration<double>(0.001);
  chat.chat.batch_size = 4;
  BackendDescriptor broken = chat;
  broken.name = "broken";
  broken.chat.endpoint.path = "/broken";
  c.backends = {chat, broken};
  c.concurrency = 3;
  const auto report = run(c, static_cast<unsigned>(Stage::Metrics));
  server.stop();
  listener.join();

  REQUIRE(report.backends.size() == 2);
  CHECK(report.backends[0].parse_failures == 0);
  CHECK(requests >= 10);
  const auto& ok = std::get<AttackReport>(report.backends[0].metrics);
  const auto armed = ok.one_vs_rest.per_type[ordinal(AttackType::ArmedAssault)];
  CHECK(armed.tp + armed.fp == 40);
  CHECK(ok.one_vs_rest.per_type[ordinal(AttackType::Unknown)].fp == 0);
  // Transport failures become flagged zero predictions, not a failed run.
  CHECK(report.backends[1].parse_failures == 40);
  CHECK(report.relative_speed.size() == 2);
}
