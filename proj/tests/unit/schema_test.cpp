#include <gtest/gtest.h>

#include "tas/error.hpp"
#include "tas/schema.hpp"
#include "tas_test/fixtures.hpp"

using namespace tas;
using tas_test::col;

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

TEST(ValidateSchema, AcceptsWellFormed) { EXPECT_NO_THROW(validate_schema(tas_test::people_schema())); }

TEST(ValidateSchema, RejectsCaseInsensitiveDuplicates) {
  Schema s = tas_test::people_schema();
  s.columns.push_back(col("city", ColumnKind::Info));
  EXPECT_EQ(code_of([&] { validate_schema(s); }), ErrorCode::DuplicateColumn);
}

TEST(ValidateSchema, RequiresKeyColumn) {
  Schema s;
  s.columns = {col("City", ColumnKind::Info)};
  EXPECT_EQ(code_of([&] { validate_schema(s); }), ErrorCode::InvalidSchema);
}

TEST(ValidateSchema, ModeNeedsMatchingColumns) {
  Schema s = tas_test::people_schema();
  s.task_mode = TaskMode::Deep;
  EXPECT_EQ(code_of([&] { validate_schema(s); }), ErrorCode::InvalidSchema);
  s.columns.push_back(col("Country", ColumnKind::Constraint, "US"));
  EXPECT_NO_THROW(validate_schema(s));
  s.task_mode = TaskMode::DeepWide;
  EXPECT_NO_THROW(validate_schema(s));
  s.columns = {col("Name", ColumnKind::Key), col("Country", ColumnKind::Constraint, "US")};
  EXPECT_EQ(code_of([&] { validate_schema(s); }), ErrorCode::InvalidSchema);
}

TEST(ValidateSchema, RejectsNonPositiveTarget) {
  Schema s = tas_test::people_schema();
  s.target_count = 0;
  EXPECT_EQ(code_of([&] { validate_schema(s); }), ErrorCode::InvalidSchema);
}

TEST(ValidateSchema, RejectsEmptyName) {
  Schema s = tas_test::people_schema();
  s.columns.push_back(col("", ColumnKind::Info));
  EXPECT_EQ(code_of([&] { validate_schema(s); }), ErrorCode::InvalidSchema);
}

TEST(Schema, FindIsCaseInsensitive) {
  const Schema s = tas_test::people_schema();
  ASSERT_NE(s.find("EMAIL"), nullptr);
  EXPECT_EQ(s.find("EMAIL")->name, "Email");
  EXPECT_EQ(s.find("Phone"), nullptr);
}

TEST(DedupKey, NormalizesEachKeyAndJoinsInSchemaOrder) {
  Schema s;
  s.columns = {col("Year", ColumnKind::Key), col("Winner", ColumnKind::Key), col("City", ColumnKind::Info)};
  const std::string k = make_dedup_key(s, {{"Winner", "  Sylvia EARLE. "}, {"Year", "2009"}});
  EXPECT_EQ(k, std::string("2009") + kDedupSeparator + "sylvia earle");
  EXPECT_EQ(k, make_dedup_key(s, {{"Winner", "sylvia earle"}, {"Year", "2009"}}));
}

TEST(Constraint, TokenPhraseAgainstDescription) {
  const ColumnSpec c = col("Country", ColumnKind::Constraint, "local US-based lighting merchant (US)");
  EXPECT_TRUE(satisfies_constraint(c, "US"));
  EXPECT_TRUE(satisfies_constraint(c, "us"));
  EXPECT_FALSE(satisfies_constraint(c, "IL"));
}

TEST(Record, RawValueRendersStates) {
  Record r;
  r.key["Name"] = "Ada";
  r.cells["City"] = Pending{};
  r.cells["Email"] = NotApplicable{};
  r.cells["Phone"] = Filled{"555", "https://a", 1};
  EXPECT_EQ(r.raw_value("Name"), "Ada");
  EXPECT_EQ(r.raw_value("City"), std::nullopt);
  EXPECT_EQ(r.raw_value("Email"), "NA");
  EXPECT_EQ(r.raw_value("Phone"), "555");
}

TEST(SameContent, IgnoresProvenance) {
  EXPECT_TRUE(same_content(Filled{"x", "a", 1}, Filled{"x", "b", 2}));
  EXPECT_FALSE(same_content(Filled{"x", std::nullopt, 0}, Filled{"y", std::nullopt, 0}));
  EXPECT_FALSE(same_content(Pending{}, NotApplicable{}));
}

TEST(SchemaJson, RoundTrips) {
  Schema s = tas_test::people_schema();
  s.target_count = 11;
  s.columns[1].value_hint = ValueHint::Text;
  EXPECT_EQ(schema_from_json(to_json(s)), s);
  EXPECT_EQ(to_json(s)["task_mode"], "wide");
}

TEST(SchemaJson, RejectsUnknownKind) {
  nlohmann::json j = {{"columns", {{{"name", "A"}, {"kind", "primary"}}}}};
  EXPECT_THROW(schema_from_json(j), Error);
}

TEST(TableStateJson, RoundTrips) {
  TableState t;
  t.table_id.value = "t1";
  t.schema = tas_test::people_schema();
  Record r;
  r.record_id.value = "r1";
  r.key["Name"] = "Ada";
  r.cells["City"] = Filled{"London", "https://x", 3};
  r.cells["Email"] = NotApplicable{};
  r.dedup_key = make_dedup_key(t.schema, r.key);
  t.records.push_back(r);
  t.revision = 4;
  EXPECT_EQ(table_state_from_json(to_json(t)), t);
}
