#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "tas/metrics.hpp"
#include "tas/table_store.hpp"
#include "tas_cli/cli.hpp"
#include "tas_test/fixtures.hpp"

using namespace tas;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir = tas_test::temp_dir("cli"); }
  void TearDown() override { fs::remove_all(dir); }

  Outcome run_fixture(const std::string& name, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"run", (tas_test::fixture(name) / "task.json").string(), "--corpus",
                                  (tas_test::fixture(name) / "corpus.json").string(), "--output",
                                  (dir / name).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  }

  fs::path dir;
};

}  // namespace

TEST_F(CliTest, RunTedWritesElevenRows) {
  const auto r = run_fixture("ted", {"--policy", "oracle"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  TableStore store;
  const TableId id = store.load(dir / "ted" / "table.snapshot");
  EXPECT_EQ(store.count_table(id, json::object()), 11);
  EXPECT_EQ(read_json(dir / "ted" / "score.json")["success"], true);
  EXPECT_EQ(read_json(dir / "ted" / "trace.json")["partial"], false);
  for (const char* f : {"answer.json", "usage.json"}) EXPECT_TRUE(fs::exists(dir / "ted" / f));
}

TEST_F(CliTest, MaxStepsOneFlagsPartial) {
  const auto r = run_fixture("ted", {"--max-steps", "1"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto trace = read_json(dir / "ted" / "trace.json");
  EXPECT_EQ(trace["partial"], true);
  EXPECT_EQ(trace["stop_reason"], "max_planner_steps");
  EXPECT_NE(r.out.find("(partial)"), std::string::npos);
}

TEST_F(CliTest, SingerPrintsAnswer) {
  const auto r = run_fixture("singer");
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("answer:  Shan Yichun"), std::string::npos);
  EXPECT_NE(r.out.find("correct: true"), std::string::npos);
}

TEST_F(CliTest, MissingCorpusNamesThePath) {
  const auto r = run_cli({"run", (tas_test::fixture("ted") / "task.json").string(), "--corpus",
                          (dir / "nope.json").string(), "--output", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("nope.json"), std::string::npos);
}

TEST_F(CliTest, ModelPolicyWithoutProviderFails) {
  EXPECT_EQ(run_fixture("ted", {"--policy", "model"}).code, cli::kExitError);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitError);
  EXPECT_EQ(run_cli({"bogus"}).code, cli::kExitError);
  EXPECT_EQ(run_cli({"run"}).code, cli::kExitError);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, ScoreIdenticalPrintsOnes) {
  const auto gt = tas_test::fixture("merchants") / "gt.json";
  const auto r = run_cli({"score", gt.string(), gt.string(), "--output", (dir / "s").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("column  P 1.0000  R 1.0000  F1 1.0000"), std::string::npos) << r.out;
  EXPECT_EQ(read_json(dir / "s" / "score.json")["item_f1"], 1.0);
}

TEST_F(CliTest, ScoreToyInstance) {
  const json gt = {{"key_columns", {"K"}},
                   {"columns", {"K", "A", "B"}},
                   {"rows",
                    {{{"K", "b"}, {"A", "1"}, {"B", "x"}},
                     {{"K", "c"}, {"A", "2"}, {"B", "y"}},
                     {{"K", "d"}, {"A", "3"}, {"B", "z"}}}}};
  json pred = gt;
  pred["rows"][0]["K"] = "a";
  pred["rows"][1]["K"] = "b";
  pred["rows"][1]["A"] = "1";
  pred["rows"][1]["B"] = "x";
  pred["rows"][2]["K"] = "c";
  pred["rows"][2]["A"] = "2";
  pred["rows"][2]["B"] = "y";
  write_json(dir / "gt.json", gt);
  write_json(dir / "pred.json", pred);
  const auto r = run_cli({"score", (dir / "pred.json").string(), (dir / "gt.json").string(), "--output",
                          (dir / "s").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto score = read_json(dir / "s" / "score.json");
  EXPECT_NEAR(score["col_f1"].get<double>(), 2.0 / 3, 1e-9);
  EXPECT_NEAR(score["item_p"].get<double>(), 4.0 / 6, 1e-9);
}

TEST_F(CliTest, ScoreColumnMismatchExitsTwo) {
  const json gt = {{"key_columns", {"K"}}, {"columns", {"K", "A"}}, {"rows", {{{"K", "b"}, {"A", "1"}}}}};
  const json pred = {{"key_columns", {"K"}}, {"columns", {"K"}}, {"rows", {{{"K", "b"}}}}};
  write_json(dir / "gt.json", gt);
  write_json(dir / "pred.json", pred);
  const auto r = run_cli({"score", (dir / "pred.json").string(), (dir / "gt.json").string(), "--output",
                          (dir / "s").string()});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("ColumnMismatch"), std::string::npos);
}

TEST_F(CliTest, ScoreTrialsComputesNumAtK) {
  const json gt = {{"key_columns", {"K"}},
                   {"columns", {"K", "A"}},
                   {"rows", {{{"K", "a"}, {"A", "1"}}, {{"K", "b"}, {"A", "2"}}, {{"K", "c"}, {"A", "3"}}}}};
  write_json(dir / "gt.json", gt);
  json t1 = gt;
  t1["rows"][1]["A"] = "9";
  t1["rows"][2]["A"] = "9";
  json t2 = gt;
  t2["rows"][2]["A"] = "9";
  fs::create_directories(dir / "trials" / "t1");
  fs::create_directories(dir / "trials" / "t2");
  write_json(dir / "trials" / "t1" / "table.snapshot", t1);
  write_json(dir / "trials" / "t2" / "table.snapshot", t2);
  const auto r = run_cli({"score", (dir / "gt.json").string(), "--trials", (dir / "trials").string(), "--output",
                          (dir / "s").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("Num@2: 2"), std::string::npos) << r.out;
  const auto s = read_json(dir / "s" / "score.json");
  EXPECT_EQ(s["num_at_k"], 2);
  EXPECT_NEAR(s["avg"]["item_p"].get<double>(), 0.5, 1e-12);
}

TEST_F(CliTest, ShowMatchesShowTable) {
  ASSERT_EQ(run_fixture("ted").code, cli::kExitOk);
  const auto snap = dir / "ted" / "table.snapshot";
  TableStore store;
  const TableId id = store.load(snap);
  const auto r = run_cli({"show", snap.string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(r.out, store.show_table(id, 50));
  const auto limited = run_cli({"show", snap.string(), "--limit", "3"});
  EXPECT_EQ(limited.out, store.show_table(id, 3));

  const auto pending = run_cli({"show", snap.string(), "--pending-only"});
  ASSERT_EQ(pending.code, cli::kExitOk);
  EXPECT_EQ(pending.out, render_markdown(store.schema(id), {}, 50));
}

TEST_F(CliTest, ShowPendingOnlyListsUnfilledRows) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  store.add_records(id, json::parse(R"([{"Name": "Ann", "City": "Oslo", "Email": "a@x"}, {"Name": "Bo"}])"));
  store.snapshot(id, dir / "t.snapshot");
  const auto r = run_cli({"show", (dir / "t.snapshot").string(), "--pending-only"});
  ASSERT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("| Bo |"), std::string::npos);
  EXPECT_EQ(r.out.find("| Ann |"), std::string::npos);
}

TEST_F(CliTest, ShowCorruptSnapshotExitsTwo) {
  std::ofstream(dir / "bad.snapshot") << "{\"checksum\": \"00000000\", \"body\": {}}";
  const auto r = run_cli({"show", (dir / "bad.snapshot").string()});
  EXPECT_EQ(r.code, cli::kExitError);
}

TEST_F(CliTest, CorpusValidate) {
  const auto ok = run_cli({"corpus-validate", (tas_test::fixture("merchants") / "corpus.json").string()});
  EXPECT_EQ(ok.code, cli::kExitOk);
  write_json(dir / "dup.json", {{"max_doc_chars", 100},
                                {"documents", {{{"url", "u"}, {"title", "a"}, {"text", "x"}},
                                               {{"url", "u"}, {"title", "b"}, {"text", "y"}}}}});
  const auto bad = run_cli({"corpus-validate", (dir / "dup.json").string()});
  EXPECT_EQ(bad.code, cli::kExitError);
  EXPECT_NE(bad.err.find("DuplicateUrl"), std::string::npos);
}
