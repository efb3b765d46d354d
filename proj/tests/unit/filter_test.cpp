#include <gtest/gtest.h>

#include "tas/error.hpp"
#include "tas/filter.hpp"
#include "tas_test/fixtures.hpp"

using namespace tas;
using nlohmann::json;

namespace {

Record sample() {
  Record r;
  r.record_id.value = "r1";
  r.key["Name"] = "Ada";
  r.cells["City"] = Filled{"London", std::nullopt, 1};
  r.cells["Email"] = Pending{};
  return r;
}

bool eval(const json& q, const Record& r = sample()) { return eval_filter(q, tas_test::people_schema(), r); }

ErrorCode parse_error(const json& q) {
  try {
    FilterQuery::parse(q, tas_test::people_schema());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected parse failure for " << q.dump();
  return ErrorCode::PreconditionViolation;
}

}  // namespace

TEST(Filter, EmptyMatchesAll) { EXPECT_TRUE(eval(json::object())); }

TEST(Filter, EqualityIsRawAndCaseSensitive) {
  EXPECT_TRUE(eval({{"City", "London"}}));
  EXPECT_FALSE(eval({{"City", "london"}}));
  EXPECT_TRUE(eval({{"Name", "Ada"}}));
}

TEST(Filter, PendingFailsEqualityAndNe) {
  EXPECT_FALSE(eval({{"Email", "x"}}));
  EXPECT_FALSE(eval({{"Email", {{"$ne", "x"}}}}));
}

TEST(Filter, ExistsTracksPending) {
  EXPECT_TRUE(eval({{"Email", {{"$exists", false}}}}));
  EXPECT_FALSE(eval({{"Email", {{"$exists", true}}}}));
  EXPECT_TRUE(eval({{"City", {{"$exists", true}}}}));
}

TEST(Filter, NotApplicableComparesAsNA) {
  Record r = sample();
  r.cells["Email"] = NotApplicable{};
  EXPECT_TRUE(eval({{"Email", "NA"}}, r));
  EXPECT_FALSE(eval({{"Email", {{"$ne", "NA"}}}}, r));
  EXPECT_TRUE(eval({{"Email", {{"$exists", true}}}}, r));
}

TEST(Filter, ImplicitAndOfMembers) {
  EXPECT_TRUE(eval({{"City", "London"}, {"Name", "Ada"}}));
  EXPECT_FALSE(eval({{"City", "London"}, {"Name", "Bob"}}));
}

TEST(Filter, NestedAndOr) {
  json q = {{"$or", {{{"Name", "Bob"}}, {{"$and", {{{"City", "London"}}, {{"Email", {{"$exists", false}}}}}}}}}};
  EXPECT_TRUE(eval(q));
}

TEST(Filter, NumbersCompareByJsonText) {
  Record r = sample();
  r.cells["City"] = Filled{"42", std::nullopt, 0};
  EXPECT_TRUE(eval({{"City", 42}}, r));
  EXPECT_FALSE(eval({{"City", 42.5}}, r));
}

TEST(FilterErrors, UnknownOperator) { EXPECT_EQ(parse_error({{"City", {{"$gt", 1}}}}), ErrorCode::MalformedOperator); }

TEST(FilterErrors, UnknownColumn) { EXPECT_EQ(parse_error({{"Phone", "1"}}), ErrorCode::UnknownColumn); }

TEST(FilterErrors, EmptyOrAndNonArray) {
  EXPECT_EQ(parse_error({{"$or", json::array()}}), ErrorCode::MalformedOperator);
  EXPECT_EQ(parse_error({{"$and", {{"City", "x"}}}}), ErrorCode::MalformedOperator);
}

TEST(Update, OnlySetIsAccepted) {
  const Schema s = tas_test::people_schema();
  EXPECT_NO_THROW(UpdateSpec::parse({{"$set", {{"City", "Paris"}}}}, s));
  EXPECT_THROW(UpdateSpec::parse({{"$unset", {{"City", ""}}}}, s), Error);
  EXPECT_THROW(UpdateSpec::parse({{"$set", json::object()}}, s), Error);
}

TEST(Update, KeyColumnsAreImmutable) {
  try {
    UpdateSpec::parse({{"$set", {{"Name", "Bob"}}}}, tas_test::people_schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KeyColumnUpdate);
  }
}

TEST(CellLiteral, Forms) {
  EXPECT_TRUE(is_na(parse_cell_literal("N/A", false)));
  EXPECT_TRUE(is_pending(parse_cell_literal(nullptr, true)));
  EXPECT_THROW(parse_cell_literal(" ", false), Error);
  EXPECT_EQ(as_filled(parse_cell_literal(7, false))->value, "7");
  const auto c = parse_cell_literal({{"value", "x"}, {"source_url", "https://s"}, {"filled_at_step", 2}}, false);
  ASSERT_NE(as_filled(c), nullptr);
  EXPECT_EQ(as_filled(c)->source_url, "https://s");
  EXPECT_EQ(as_filled(c)->filled_at_step, 2);
}
