#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <variant>

#include "sefun/adjudicate.hpp"
#include "sefun/corpus.hpp"
#include "sefun/errors.hpp"

using namespace sefun;

namespace {

ConversationPair two_segment_pair() {
  ConversationPair pair;
  pair.query_segments = {make_segment("苹果吗？")};
  pair.response_segments = {make_segment("很好。")};
  return pair;
}

AnnotationRecord record(const std::string& id,
                        const std::vector<std::vector<Level2>>& per_segment) {
  AnnotationRecord rec;
  rec.annotator_id = id;
  for (const auto& labels : per_segment) {
    SegmentAnnotation a;
    a.level2 = labels;
    if (!labels.empty()) a.level1 = level1_of(labels[0]);
    rec.segments.push_back(a);
  }
  return rec;
}

}  // namespace

TEST_CASE("validate_record enforces the annotation shape") {
  AnnotationRecord rec = record("a1", {{Level2::YesNoIn}});
  CHECK_NOTHROW(validate_record(rec));

  AnnotationRecord three = rec;
  three.segments[0].level2 = {Level2::YesNoIn, Level2::WhStyleIn, Level2::Rhetorical};
  CHECK_THROWS_AS(validate_record(three), Error);

  AnnotationRecord repeated = rec;
  repeated.segments[0].level2 = {Level2::YesNoIn, Level2::YesNoIn};
  CHECK_THROWS_AS(validate_record(repeated), Error);

  AnnotationRecord wrong_parent = rec;
  wrong_parent.segments[0].level1 = Level1::Declarative;  // Yes-no IN is not a DE
  CHECK_THROWS_AS(validate_record(wrong_parent), Error);

  AnnotationRecord split_parents = rec;
  split_parents.segments[0].level1.reset();
  split_parents.segments[0].level2 = {Level2::YesNoIn, Level2::PositiveDe};
  CHECK_THROWS_AS(validate_record(split_parents), Error);
}

TEST_CASE("aggregate needs exactly three covering records") {
  ConversationPair pair = two_segment_pair();
  std::vector<AnnotationRecord> two = {record("a", {{Level2::YesNoIn}, {Level2::PositiveDe}}),
                                       record("b", {{Level2::YesNoIn}, {Level2::PositiveDe}})};
  CHECK_THROWS_AS(aggregate_annotations(pair, two), RecordCountMismatchError);

  std::vector<AnnotationRecord> short_cover = {
      record("a", {{Level2::YesNoIn}}), record("b", {{Level2::YesNoIn}}),
      record("c", {{Level2::YesNoIn}})};
  CHECK_THROWS_AS(aggregate_annotations(pair, short_cover), SegmentMismatchError);
}

TEST_CASE("unanimous annotations are accepted as-is") {
  ConversationPair pair = two_segment_pair();
  auto rec = [&](const std::string& id) {
    return record(id, {{Level2::YesNoIn}, {Level2::PositiveDe, Level2::OtherDe}});
  };
  AggregationOutcome out = aggregate_annotations(pair, {rec("a"), rec("b"), rec("c")});
  REQUIRE(std::holds_alternative<Accepted>(out));
  const Accepted& acc = std::get<Accepted>(out);
  REQUIRE(acc.labels.size() == 2);
  CHECK(acc.labels[0] == std::vector<SentenceFunction>{make_sf(Level2::YesNoIn)});
  CHECK(acc.labels[1].size() == 2);

  ConversationPair labeled = apply_labels(pair, acc);
  CHECK(labeled.query_segments[0].primary().level2 == Level2::YesNoIn);
  CHECK(labeled.response_segments[0].functions.size() == 2);
}

TEST_CASE("pairwise-disjoint labels drop the pair") {
  ConversationPair pair = two_segment_pair();
  AggregationOutcome out = aggregate_annotations(
      pair, {record("a", {{Level2::YesNoIn}, {Level2::PositiveDe}}),
             record("b", {{Level2::WhStyleIn}, {Level2::PositiveDe}}),
             record("c", {{Level2::Rhetorical}, {Level2::PositiveDe}})});
  REQUIRE(std::holds_alternative<Dropped>(out));
  CHECK(std::get<Dropped>(out).reason == DropReason::NoOverlap);
}

TEST_CASE("a segment nobody labeled drops the pair") {
  ConversationPair pair = two_segment_pair();
  AggregationOutcome out =
      aggregate_annotations(pair, {record("a", {{Level2::YesNoIn}, {}}),
                                   record("b", {{Level2::YesNoIn}, {}}),
                                   record("c", {{Level2::YesNoIn}, {}})});
  REQUIRE(std::holds_alternative<Dropped>(out));
  CHECK(std::get<Dropped>(out).reason == DropReason::NoLabel);
}

TEST_CASE("two-vs-one goes back to the dissenter, then accept or drop") {
  ConversationPair pair = two_segment_pair();
  AggregationOutcome out = aggregate_annotations(
      pair, {record("ann-a", {{Level2::YesNoIn}, {Level2::PositiveDe}}),
             record("ann-b", {{Level2::YesNoIn}, {Level2::PositiveDe}}),
             record("ann-c", {{Level2::YesNoIn, Level2::Rhetorical}, {Level2::PositiveDe}})});
  REQUIRE(std::holds_alternative<NeedsConfirmation>(out));
  const auto& pending = std::get<NeedsConfirmation>(out);
  CHECK(pending.dissenter_id == "ann-c");
  CHECK(pending.majority_labels[0] == std::vector<SentenceFunction>{make_sf(Level2::YesNoIn)});

  AggregationOutcome agreed = confirm_annotation(out, true);
  REQUIRE(std::holds_alternative<Accepted>(agreed));

  AggregationOutcome refused = confirm_annotation(out, false);
  REQUIRE(std::holds_alternative<Dropped>(refused));
  CHECK(std::get<Dropped>(refused).reason == DropReason::DissenterRefused);

  CHECK_THROWS_AS(confirm_annotation(agreed, true), InvalidStateError);
}

TEST_CASE("level-1-only annotations contribute no adjudicable label") {
  ConversationPair pair = two_segment_pair();
  AnnotationRecord l1_only = record("c", {{}, {Level2::PositiveDe}});
  l1_only.segments[0].level1 = Level1::Interrogative;  // level-1 vote only
  AggregationOutcome out = aggregate_annotations(
      pair, {record("a", {{Level2::YesNoIn}, {Level2::PositiveDe}}),
             record("b", {{Level2::YesNoIn}, {Level2::PositiveDe}}), l1_only});
  // a and b agree; c's empty level-2 set dissents.
  REQUIRE(std::holds_alternative<NeedsConfirmation>(out));
  CHECK(std::get<NeedsConfirmation>(out).dissenter_id == "c");
}

TEST_CASE("plurality overlap caps at two labels, ordered by support then code") {
  // No two sets equal; labels 1 and 2 have two votes each, label 9 one vote.
  std::vector<std::vector<std::vector<int>>> itemsets = {
      {{1, 2}, {1, 9}, {2}},
  };
  GenericOutcome out = adjudicate_generic(itemsets, 2);
  CHECK(out.kind == 2);
  CHECK(out.labels[0] == std::vector<int>{1, 2});
}

TEST_CASE("dissenter is the annotator disagreeing on the most segments") {
  // Segment 1: b dissents. Segments 2 and 3: c dissents.
  std::vector<std::vector<std::vector<int>>> itemsets = {
      {{1}, {2}, {1}},
      {{3}, {3}, {4}},
      {{5}, {5}, {6}},
  };
  GenericOutcome out = adjudicate_generic(itemsets, 2);
  CHECK(out.kind == 2);
  CHECK(out.dissenter == 2);
}

TEST_CASE("generic outcome labels are sorted") {
  std::vector<std::vector<std::vector<int>>> itemsets = {{{9, 1}, {9, 1}, {9, 1}}};
  GenericOutcome out = adjudicate_generic(itemsets, 2);
  CHECK(out.kind == 0);
  CHECK(out.labels[0] == std::vector<int>{1, 9});
}
