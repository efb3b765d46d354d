#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "tas/error.hpp"
#include "tas/table_store.hpp"
#include "tas_test/fixtures.hpp"

using namespace tas;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::PreconditionViolation;
}

}  // namespace

TEST(TableStore, CreateValidatesSchema) {
  TableStore store;
  Schema bad;
  EXPECT_EQ(code_of([&] { store.create_table(bad); }), ErrorCode::InvalidSchema);
  const TableId id = store.create_table(tas_test::people_schema());
  EXPECT_EQ(store.count_table(id, json::object()), 0);
  EXPECT_EQ(store.state(id).revision, 0);
}

TEST(TableStore, UnknownTable) {
  TableStore store;
  EXPECT_EQ(code_of([&] { store.count_table(TableId{"nope"}, json::object()); }), ErrorCode::TableNotFound);
}

TEST(TableStore, AddDeduplicatesOnNormalizedKeys) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  auto r = store.add_records(id, json::array({{{"Name", "Ada"}}, {{"Name", " ada. "}}, {{"Name", "Bob"}, {"City", "Paris"}}}));
  EXPECT_EQ(r.inserted, 2);
  EXPECT_EQ(r.deduplicated, 1);
  r = store.add_records(id, json::array({{{"Name", "ADA"}}}));
  EXPECT_EQ(r.inserted, 0);
  EXPECT_EQ(store.state(id).revision, 1);
  const auto rows = store.filter_records(id, json{{"City", "Paris"}});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].key.at("Name"), "Bob");
  EXPECT_TRUE(is_pending(rows[0].cells.at("Email")));
}

TEST(TableStore, BatchIsAtomicOnError) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  EXPECT_EQ(code_of([&] { store.add_records(id, json::array({{{"Name", "Ada"}}, {{"City", "x"}}})); }),
            ErrorCode::MissingKey);
  EXPECT_EQ(code_of([&] { store.add_records(id, json::array({{{"Name", "Ada"}, {"Phone", "1"}}})); }),
            ErrorCode::UnknownColumn);
  EXPECT_EQ(store.count_table(id, json::object()), 0);
}

TEST(TableStore, UpdateCountsOnlyChangedRecords) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  store.add_records(id, json::array({{{"Name", "Ada"}}, {{"Name", "Bob"}}}));
  auto u = store.update_records(id, json{{"Name", "Ada"}}, json{{"$set", {{"City", "London"}}}});
  EXPECT_EQ(u.matched, 1);
  EXPECT_EQ(u.modified, 1);
  const auto rev = store.state(id).revision;
  u = store.update_records(id, json{{"Name", "Ada"}}, json{{"$set", {{"City", "London"}}}});
  EXPECT_EQ(u.modified, 0);
  EXPECT_EQ(store.state(id).revision, rev);
  u = store.update_records(id, json{{"City", {{"$exists", false}}}}, json{{"$set", {{"City", "NA"}}}});
  EXPECT_EQ(u.modified, 1);
  EXPECT_EQ(store.count_table(id, json{{"City", "NA"}}), 1);
}

TEST(TableStore, ShowRendersMarkdown) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  store.add_records(id, json::array({{{"Name", "A|B"}, {"City", "NA"}}, {{"Name", "Bob"}}}));
  const std::string md = store.show_table(id, 10);
  EXPECT_EQ(md,
            "| Name | City | Email |\n| --- | --- | --- |\n| A\\|B | NA |  |\n| Bob |  |  |\n");
  EXPECT_NE(store.show_table(id, 1).find("(showing 1 of 2 rows)"), std::string::npos);
}

TEST(TableStore, SnapshotRoundTripAndCorruption) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  store.add_records(id, json::array({{{"Name", "Ada"}, {"City", {{"value", "London"}, {"source_url", "https://x"}}}}}));
  const auto dir = tas_test::temp_dir("store");
  store.snapshot(id, dir / "t.snapshot");

  TableStore other;
  const TableId loaded = other.load(dir / "t.snapshot");
  EXPECT_EQ(other.state(loaded).records, store.state(id).records);
  EXPECT_EQ(encode_snapshot(other.state(loaded)), encode_snapshot(store.state(id)));

  std::string bytes = encode_snapshot(store.state(id));
  bytes[bytes.size() / 2] ^= 0x01;
  EXPECT_EQ(code_of([&] { decode_snapshot(bytes); }), ErrorCode::CorruptSnapshot);
  EXPECT_EQ(code_of([&] { decode_snapshot(""); }), ErrorCode::CorruptSnapshot);
  std::filesystem::remove_all(dir);
}

TEST(TableStore, LoadMissingFileIsIoFailure) {
  TableStore store;
  EXPECT_EQ(code_of([&] { store.load("/nonexistent/x.snapshot"); }), ErrorCode::IoFailure);
}

TEST(TableStore, ConcurrentAppendsKeepDistinctCount) {
  TableStore store;
  const TableId id = store.create_table(tas_test::people_schema());
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        const int n = (t * 7 + i) % 60;
        store.add_records(id, json::array({{{"Name", "N" + std::to_string(n)}}}));
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto st = store.state(id);
  std::set<std::string> keys;
  for (const auto& r : st.records) keys.insert(r.dedup_key);
  EXPECT_EQ(keys.size(), st.records.size());
  EXPECT_EQ(st.records.size(), 60u);
}
