#include <cmath>
#include <sstream>

#include "chronogaze/cli.hpp"
#include "chronogaze/features.hpp"
#include "chronogaze/synth.hpp"
#include "doctest.h"
#include "test_support.hpp"
#include "json.hpp"

using namespace chronogaze;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t data_rows(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n - 1;
}

void write_small_config(const std::filesystem::path& path) {
  auto c = testing::small_config();
  c.n_participants = 3;
  c.trials_per_participant = 6;
  c.class_shift_sigma = 6.0;
  testing::write_file(path, synth::config_to_json(c));
}

}  // namespace

TEST_CASE("sha256 of known strings") {
  CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("usage and data errors have distinct exit codes") {
  testing::TempDir dir;
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"synth"}).code == cli::kExitUsage);  // --seed is mandatory
  CHECK(run({"extract", "--out-dir", dir.path().string()}).code == cli::kExitUsage);
  CHECK(run({"extract", "--tw", "0", "--data-dir", dir.path().string()}).code == cli::kExitUsage);
  const auto missing = run({"extract", "--data-dir", (dir / "nowhere").string(), "--out-dir", dir.path().string()});
  CHECK(missing.code == cli::kExitDataError);
  CHECK(missing.err.find("error") != std::string::npos);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("synth, extract, label, automl") {
  testing::TempDir dir;
  const auto config = dir / "synth.json";
  write_small_config(config);
  const auto data = (dir / "data").string();
  const auto work = (dir / "work").string();

  auto r = run({"synth", "--config", config.string(), "--seed", "3", "--out-dir", data});
  REQUIRE(r.code == 0);
  const auto manifest = nlohmann::json::parse(r.out);
  CHECK(manifest["command"] == "synth");
  CHECK(manifest["outputs"].size() == 5);

  r = run({"extract", "--data-dir", data, "--tw", "2,10", "--out-dir", work});
  REQUIRE(r.code == 0);
  const auto dataset = load_dataset(DatasetPaths::in_directory(data));
  std::size_t expected = 0;
  for (const auto& t : dataset.trials) expected += static_cast<std::size_t>(std::floor(t.planned_duration / 2 + 1e-9));
  CHECK(data_rows(testing::read_file(dir / "work/features_tw2.csv")) == expected);
  // The manifest records the digest of every output.
  const auto em = nlohmann::json::parse(r.out);
  for (const auto& o : em["outputs"])
    CHECK(o["sha256"] == cli::sha256_hex(testing::read_file(o["path"].get<std::string>())));

  r = run({"label", "--data-dir", data, "--tw", "10", "--settings", "duration_2,ppot_3", "--out-dir", work});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "work/labels_tw10_duration_2.csv"));
  CHECK(std::filesystem::exists(dir / "work/labels_tw10_ppot_3.csv"));

  r = run({"automl", "--tw", "10", "--max-hpo-steps", "16", "--seed", "4", "--out-dir", work});
  REQUIRE(r.code == 0);
  const auto ledger = testing::read_file(dir / "work/search_ledger_duration_2_tw10.csv");
  std::size_t phase1 = 0, phase2 = 0;
  std::istringstream lines(ledger);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) (line.rfind("1,", 0) == 0 ? phase1 : phase2)++;
  CHECK(phase1 == 12);
  CHECK(phase2 <= 16);
  CHECK(std::filesystem::exists(dir / "work/best_pipeline_duration_2_tw10.json"));

  r = run({"eval", "--tw", "10", "--reps", "3", "--seed", "5", "--out-dir", work});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(testing::read_file(dir / "work/report.json"));
  CHECK(report["format"] == "chronogaze.report");

  r = run({"finetune", "--tw", "10", "--reps", "2", "--seed", "6", "--out-dir", work});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "work/finetune_duration_2.csv"));

  // automl refuses to run without labels for the requested window.
  r = run({"automl", "--tw", "30", "--seed", "4", "--out-dir", work});
  CHECK(r.code == cli::kExitDataError);
}

TEST_CASE("the chain is deterministic") {
  std::string reports[2];
  for (int i = 0; i < 2; ++i) {
    testing::TempDir dir;
    write_small_config(dir / "synth.json");
    const auto out = dir.path().string();
    REQUIRE(run({"synth", "--config", (dir / "synth.json").string(), "--seed", "8", "--out-dir", out}).code == 0);
    REQUIRE(run({"extract", "--data-dir", out, "--tw", "10", "--out-dir", out}).code == 0);
    REQUIRE(run({"label", "--data-dir", out, "--tw", "10", "--out-dir", out}).code == 0);
    REQUIRE(run({"automl", "--tw", "10", "--max-hpo-steps", "8", "--seed", "1", "--out-dir", out,
                 "--threads", i ? "3" : "1"})
                .code == 0);
    REQUIRE(run({"eval", "--tw", "10", "--reps", "4", "--seed", "2", "--out-dir", out}).code == 0);
    reports[i] = testing::read_file(dir / "report.json") + testing::read_file(dir / "report.csv");
  }
  CHECK(reports[0] == reports[1]);
}
