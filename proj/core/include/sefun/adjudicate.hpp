#ifndef SEFUN_ADJUDICATE_HPP
#define SEFUN_ADJUDICATE_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sefun/corpus.hpp"
#include "sefun/taxonomy.hpp"

namespace sefun {

// One annotator's labels for one segment: at most one level-1 label and two
// level-2 labels. When both are present every level-2 parent must equal the
// level-1 choice.
struct SegmentAnnotation {
  std::optional<Level1> level1;
  std::vector<Level2> level2;  // 0..2 entries

  bool empty() const { return !level1.has_value() && level2.empty(); }
};

struct AnnotationRecord {
  std::string annotator_id;
  std::vector<SegmentAnnotation> segments;  // covers query then response segments
};

// Throws Error if an annotation breaks the one-level-1/two-level-2 shape or
// pairs a level-2 label with the wrong parent.
void validate_record(const AnnotationRecord& record);

enum class DropReason {
  NoOverlap,        // labels from all annotators have no overlap on a segment
  NoLabel,          // a segment got no label from any annotator
  DissenterRefused  // the dissenting annotator did not accept the majority
};

std::string_view drop_reason_text(DropReason r);

struct Accepted {
  // Final labels per segment (query segments first), each 1..2 entries.
  std::vector<std::vector<SentenceFunction>> labels;
};

struct Dropped {
  DropReason reason;
};

struct NeedsConfirmation {
  std::vector<std::vector<SentenceFunction>> majority_labels;
  std::string dissenter_id;
};

using AggregationOutcome = std::variant<Accepted, Dropped, NeedsConfirmation>;

// Adjudicates exactly three annotation records against the pair's segment
// layout. Unanimous labels are accepted as-is; a segment whose three label
// sets are pairwise disjoint (or empty) drops the pair; anything else goes
// back to the dissenting annotator for confirmation.
//
// Throws RecordCountMismatchError unless exactly 3 records are given and
// SegmentMismatchError when a record does not cover the pair's segments.
AggregationOutcome aggregate_annotations(const ConversationPair& pair,
                                         const std::vector<AnnotationRecord>& records);

// Resolves a NeedsConfirmation outcome. Throws InvalidStateError when called
// on anything else.
AggregationOutcome confirm_annotation(const AggregationOutcome& outcome, bool dissenter_agrees);

// Applies accepted labels to a copy of the pair.
ConversationPair apply_labels(ConversationPair pair, const Accepted& accepted);

// The adjudication decision procedure over opaque label ids, shared by the
// taxonomy-typed API above and directly testable against a brute-force
// oracle on a toy label space.
//
// `itemsets[segment][annotator]` is that annotator's label set (deduplicated
// ids). Outcome kinds: 0 = accepted, 1 = dropped, 2 = needs confirmation.
struct GenericOutcome {
  int kind = 0;
  DropReason reason = DropReason::NoOverlap;        // kind == 1
  std::vector<std::vector<int>> labels;             // kind == 0 or 2, per segment, sorted
  int dissenter = -1;                               // kind == 2, annotator index
};

GenericOutcome adjudicate_generic(const std::vector<std::vector<std::vector<int>>>& itemsets,
                                  std::size_t max_labels_per_segment = 2);

}  // namespace sefun

#endif  // SEFUN_ADJUDICATE_HPP
