// Runs the built tempr binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("tempr_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Invocation run(const std::string& args) {
  const fs::path err_path = scratch_dir() / "stderr.txt";
  const std::string cmd = std::string("\"") + TEMPR_CLI + "\" " + args + " 2>\"" + err_path.string() + "\"";
  Invocation r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_path);
  return r;
}

std::string fixture(const std::string& name) { return std::string("\"") + TEMPR_FIXTURES + "/" + name + "\""; }
std::string scenario(const std::string& name) { return std::string("\"") + TEMPR_SCENARIOS + "/" + name + "\""; }

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

TEST(CliEvalTest, MatchesGoldenReport) {
  const Invocation a = run("eval " + fixture("mixed_corpus.jsonl"));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, slurp(std::string(TEMPR_FIXTURES) + "/mixed_corpus.report.json"));
  EXPECT_EQ(run("eval " + fixture("mixed_corpus.jsonl")).out, a.out);
}

TEST(CliEvalTest, OutFileMatchesStdout) {
  const fs::path out = scratch_dir() / "report.json";
  const Invocation r = run("eval " + fixture("mixed_corpus.jsonl") + " --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(out), run("eval " + fixture("mixed_corpus.jsonl")).out);
}

TEST(CliEvalTest, BadLineExitsTwoAndNamesLine) {
  const Invocation r = run("eval " + fixture("bad_line.jsonl"));
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(CliEvalTest, EmptyDataset) {
  const Invocation r = run("eval " + fixture("empty.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["tasks"].size(), 5u);
  for (const auto& b : j["tasks"]) EXPECT_EQ(b["n_samples"], 0);
}

TEST(CliEvalTest, MissingFileIsInternalError) {
  EXPECT_EQ(run("eval /nonexistent/data.jsonl").code, 1);
}

TEST(CliEvalTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("eval").code, 2);
  EXPECT_EQ(run("eval " + fixture("empty.jsonl") + " --bogus").code, 2);
  EXPECT_EQ(run("eval " + fixture("empty.jsonl") + " --sigma 1").code, 2);
  EXPECT_EQ(run("reward " + fixture("reward_cases.jsonl") + " --sigma -1").code, 2);
  EXPECT_EQ(run("reward " + fixture("reward_cases.jsonl") + " --sigma 0").code, 2);
}

TEST(CliEvalTest, ConfigFileAndFlags) {
  const fs::path cfg = scratch_dir() / "cfg.json";
  std::ofstream(cfg) << R"({"strict_parse": true})";
  const Invocation strict = run("eval " + fixture("mixed_corpus.jsonl") + " --config \"" + cfg.string() + "\"");
  ASSERT_EQ(strict.code, 0) << strict.err;
  EXPECT_EQ(strict.out, run("eval " + fixture("mixed_corpus.jsonl") + " --strict-parse").out);

  std::ofstream(cfg) << R"({"unknown": 1})";
  EXPECT_EQ(run("eval " + fixture("empty.jsonl") + " --config \"" + cfg.string() + "\"").code, 2);
}

TEST(CliRewardTest, WorkedCases) {
  const Invocation r = run("reward " + fixture("reward_cases.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = json_lines(r.out);
  ASSERT_EQ(rows.size(), 4u);

  EXPECT_EQ(rows[0]["id"], "tg-perfect");
  EXPECT_EQ(rows[0]["total"], 2.0);

  EXPECT_EQ(rows[1]["tal"]["f1"], 0.1667);
  EXPECT_EQ(rows[1]["tal"]["num_reward"], 0.3679);
  EXPECT_EQ(rows[1]["localization"], 0.5345);
  EXPECT_EQ(rows[1]["tal"]["pairs"], json::parse("[[1, 0]]"));

  EXPECT_EQ(rows[2]["classification"], 0);
  EXPECT_EQ(rows[2]["localization"], 0.5);

  EXPECT_EQ(rows[3]["format"], 0);
  EXPECT_EQ(rows[3]["parse_error"], "MissingTags");
  EXPECT_EQ(rows[3]["total"], 0.0);
}

TEST(CliRewardTest, NormalizeHalvesTalLocalization) {
  const auto rows = json_lines(run("reward " + fixture("reward_cases.jsonl") + " --tal-normalize").out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[1]["localization"].get<double>(), 0.2673, 1e-9);
  EXPECT_EQ(rows[0]["total"], 2.0);
}

TEST(CliMatchTest, WorkedExample) {
  const Invocation r = run("match --preds \"0 to 4, 6 to 10\" --gts \"2 to 8\" --compare");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dp matching:\npairs: (p1, g0)\nsIoU 0.2500  P 0.1250  R 0.2500  F1 0.1667\n"),
            std::string::npos)
      << r.out;
  EXPECT_NE(r.out.find("sequential matching:\npairs: (p0, g0)\n"), std::string::npos);
  EXPECT_NE(r.out.find("dp sIoU - sequential sIoU = 0.0000"), std::string::npos);
}

TEST(CliMatchTest, IdentityAndDpAdvantage) {
  Invocation r = run("match --preds \"[[0,1],[2,3]]\" --gts \"[[2,3],[0,1]]\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("pairs: (p0, g0) (p1, g1)\nsIoU 2.0000  P 1.0000  R 1.0000  F1 1.0000"), std::string::npos)
      << r.out;

  // A spurious early prediction shifts positional matching off by one.
  r = run("match --preds \"0 to 1, 10 to 20, 30 to 40\" --gts \"10 to 20, 30 to 40\" --compare");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dp sIoU - sequential sIoU = 2.0000"), std::string::npos) << r.out;
}

TEST(CliMatchTest, BadInput) {
  EXPECT_EQ(run("match --preds \"1 to 2\" --gts \"\"").code, 2);
  EXPECT_EQ(run("match --preds \"2 to 1\" --gts \"1 to 2\"").code, 2);
  EXPECT_EQ(run("match --preds \"[[1]]\" --gts \"1 to 2\"").code, 2);
  EXPECT_EQ(run("match --preds \"[[1,2]\" --gts \"1 to 2\"").code, 2);
}

TEST(CliSimulateTest, TgImprovesAndIsDeterministic) {
  const Invocation a = run("simulate " + scenario("tg.json") + " --steps 200");
  ASSERT_EQ(a.code, 0) << a.err;
  const auto rows = json_lines(a.out);
  ASSERT_EQ(rows.size(), 201u);
  const json& s = rows.back()["summary"];
  EXPECT_EQ(s["steps"], 200);
  EXPECT_GT(s["final_mean_reward"].get<double>(), s["initial_mean_reward"].get<double>());
  EXPECT_EQ(run("simulate " + scenario("tg.json") + " --steps 200").out, a.out);
  EXPECT_NE(run("simulate " + scenario("tg.json") + " --steps 200 --seed 8").out, a.out);
}

TEST(CliSimulateTest, BadScenario) {
  const fs::path p = scratch_dir() / "bad_scenario.json";
  std::ofstream(p) << R"({"prompts": [{"task": "TG", "duration": 10, "gt_intervals": [[1, 2]]}], "gridres": 3})";
  const Invocation r = run("simulate \"" + p.string() + "\"");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("'gridres'"), std::string::npos) << r.err;
  EXPECT_EQ(run("simulate " + scenario("tg.json") + " --group-size 1").code, 2);
}

}  // namespace
