#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixture_server.hpp"
#include "fnd/cli.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "fnd");
  return fnd::run_cli(args);
}

const char* kSmallModel = R"({
  "model": {"max_len": 24, "d_model": 16, "n_layers": 1, "n_heads": 2, "d_ff": 32,
            "head_hidden": [16, 8]},
  "train": {"max_epochs": 2, "batch_size": 16}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("full pipeline in process") {
  test::TempDir tmp;
  const auto p = [&](const std::string& name) { return (tmp.path / name).string(); };
  test::spit(tmp.path / "config.json", kSmallModel);

  REQUIRE(run({"synth", "--n", "120", "--seed", "3", "--out", p("raw.jsonl")}) == 0);
  CHECK(test::count_lines(tmp.path / "raw.jsonl") == 120);
  REQUIRE(run({"preprocess", "--in", p("raw.jsonl"), "--out", p("clean.jsonl")}) == 0);
  CHECK(fs::exists(tmp.path / "clean.jsonl.report.json"));
  REQUIRE(run({"train-vocab", "--in", p("clean.jsonl"), "--out", p("vocab.txt"), "--vocab-size",
               "200", "--coverage", p("coverage.json")}) == 0);
  CHECK(fs::exists(tmp.path / "coverage.json"));

  for (const auto* dir : {"run1", "run2"})
    REQUIRE(run({"train", "--data", p("clean.jsonl"), "--vocab", p("vocab.txt"), "--out-dir",
                 p(dir), "--config", p("config.json")}) == 0);
  for (const auto* f : {"model.fnd", "checkpoint.fnd", "loss.csv", "epochs.csv", "test.jsonl",
                        "config.json", "manifest.json"})
    CHECK(fs::exists(tmp.path / "run1" / f));
  CHECK(test::slurp(tmp.path / "run1" / "checkpoint.fnd") ==
        test::slurp(tmp.path / "run2" / "checkpoint.fnd"));
  CHECK(test::slurp(tmp.path / "run1" / "loss.csv") == test::slurp(tmp.path / "run2" / "loss.csv"));
  CHECK(test::count_lines(tmp.path / "run1" / "loss.csv") == 1 + 2 * 6);
  CHECK(test::count_lines(tmp.path / "run1" / "test.jsonl") == 24);

  const auto resolved = nlohmann::json::parse(test::slurp(tmp.path / "run1" / "config.json"));
  CHECK(resolved["model"]["d_model"] == 16);
  CHECK(resolved["train"]["max_epochs"] == 2);

  REQUIRE(run({"evaluate", "--model", p("run1/model.fnd"), "--vocab", p("vocab.txt"), "--data",
               p("run1/test.jsonl"), "--out-dir", p("eval"), "--name", "toy"}) == 0);
  const auto metrics = nlohmann::json::parse(test::slurp(tmp.path / "eval" / "metrics.json"));
  CHECK(metrics["model"] == "toy");
  std::size_t bucket_lines = 0;
  for (const auto* b : {"tp.jsonl", "tn.jsonl", "fp.jsonl", "fn.jsonl"})
    bucket_lines += test::count_lines(tmp.path / "eval" / b);
  CHECK(bucket_lines == 24);

  if (test::count_lines(tmp.path / "eval" / "tp.jsonl") > 0 &&
      test::count_lines(tmp.path / "eval" / "tn.jsonl") > 0) {
    CHECK(run({"keywords", "--audit-dir", p("eval"), "--top-k", "5"}) == 0);
    CHECK(fs::exists(tmp.path / "eval" / "keywords.json"));
  }

  REQUIRE(run({"report", p("eval/metrics.json"), p("eval/metrics.json"), "--out-md", p("t.md"),
               "--out-csv", p("t.csv")}) == 0);
  CHECK(test::count_lines(tmp.path / "t.md") == 4);
  CHECK(test::count_lines(tmp.path / "t.csv") == 3);

  const auto manifest = nlohmann::json::parse(test::slurp(tmp.path / "run1" / "manifest.json"));
  CHECK(manifest.contains("train"));
  CHECK(manifest["train"]["outputs"].contains("model.fnd"));
}

TEST_CASE("flag overrides and presets") {
  test::TempDir tmp;
  const auto p = [&](const std::string& name) { return (tmp.path / name).string(); };
  test::spit(tmp.path / "config.json", kSmallModel);
  REQUIRE(run({"synth", "--n", "40", "--out", p("raw.jsonl")}) == 0);
  REQUIRE(run({"train-vocab", "--in", p("raw.jsonl"), "--out", p("vocab.txt"), "--vocab-size",
               "150", "--coverage", p("cov.json")}) == 0);
  REQUIRE(run({"train", "--data", p("raw.jsonl"), "--vocab", p("vocab.txt"), "--out-dir", p("r"),
               "--config", p("config.json"), "--epochs", "1", "--lr", "0.002", "--optimizer",
               "sgd", "--split", "0.5"}) == 0);
  const auto resolved = nlohmann::json::parse(test::slurp(tmp.path / "r" / "config.json"));
  CHECK(resolved["train"]["max_epochs"] == 1);
  CHECK(resolved["train"]["learning_rate"] == 0.002);
  CHECK(resolved["train"]["optimizer"] == "sgd");
  CHECK(resolved["split"]["train_fraction"] == 0.5);
  CHECK(test::count_lines(tmp.path / "r" / "test.jsonl") == 20);

  CHECK(run({"train", "--data", p("raw.jsonl"), "--vocab", p("vocab.txt"), "--out-dir", p("x"),
             "--preset", "huge"}) == 2);
  CHECK(run({"train", "--data", p("raw.jsonl"), "--vocab", p("vocab.txt"), "--out-dir", p("x"),
             "--optimizer", "rmsprop"}) == 2);
}

TEST_CASE("exit codes") {
  test::TempDir tmp;
  const auto p = [&](const std::string& name) { return (tmp.path / name).string(); };
  CHECK(run({"synth"}) == 2);
  CHECK(run({"nonsense"}) == 2);
  CHECK(run({"preprocess", "--in", p("absent.jsonl"), "--out", p("o.jsonl")}) == 2);
  CHECK(run({"--help"}) == 0);
  CHECK(run({"--version"}) == 0);
  test::spit(tmp.path / "bad.csv", "id,text,label\n1,x,7\n");
  CHECK(run({"ingest", "--csv", p("bad.csv"), "--out", p("o.jsonl")}) == 2);
  test::spit(tmp.path / "urls.txt", "http://127.0.0.1:1/closed\n");
  CHECK(run({"ingest", "--urls", p("urls.txt"), "--selector", "p", "--timeout", "1", "--out",
             p("o.jsonl")}) == 4);
}

TEST_CASE("ingest from urls and csv with translation") {
  test::TempDir tmp;
  const auto p = [&](const std::string& name) { return (tmp.path / name).string(); };
  test::FixtureServer server;
  test::spit(tmp.path / "urls.txt", "# fixture\n" + server.url("/a.html") + "\n" +
                                        server.url("/missing") + "\n" + server.url("/b.html") + "\n");
  REQUIRE(run({"ingest", "--urls", p("urls.txt"), "--selector", "article p", "--label", "1",
               "--out", p("web.jsonl")}) == 0);
  CHECK(test::count_lines(tmp.path / "web.jsonl") == 2);
  const auto log = nlohmann::json::parse(test::slurp(tmp.path / "web.jsonl.log.json"));
  REQUIRE(log["fetch_errors"].size() == 1);
  CHECK(log["fetch_errors"][0]["reason"] == "HTTP 404");

  test::spit(tmp.path / "en.csv",
             "id,text,label\n1,breaking news,1\n2,\"Привет мир\",0\n3,breaking news,1\n");
  REQUIRE(run({"ingest", "--csv", p("en.csv"), "--translate", "mock", "--dedup", "--out",
               p("ar.jsonl")}) == 0);
  CHECK(test::count_lines(tmp.path / "ar.jsonl") == 1);
  const auto tlog = nlohmann::json::parse(test::slurp(tmp.path / "ar.jsonl.log.json"));
  REQUIRE(tlog["translation_dropped"].size() == 1);
  CHECK(tlog["translation_dropped"][0]["code"] == "untranslatable_script");
  CHECK(tlog["duplicates_removed"] == 1);
}

TEST_CASE("installed binary answers --help") {
  const std::string cmd = std::string("\"") + FND_CLI_PATH + "\" --help > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  const std::string bad = std::string("\"") + FND_CLI_PATH + "\" synth > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 2);
}

}  // TEST_SUITE
