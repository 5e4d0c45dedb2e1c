#include "sefun/adjudicate.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "sefun/errors.hpp"

namespace sefun {

void validate_record(const AnnotationRecord& record) {
  for (std::size_t i = 0; i < record.segments.size(); ++i) {
    const SegmentAnnotation& a = record.segments[i];
    if (a.level2.size() > 2) {
      throw Error("annotator \"" + record.annotator_id + "\" assigned more than two level-2 labels to segment " +
                  std::to_string(i));
    }
    if (a.level2.size() == 2 && a.level2[0] == a.level2[1]) {
      throw Error("annotator \"" + record.annotator_id + "\" repeated a level-2 label on segment " +
                  std::to_string(i));
    }
    for (Level2 l2 : a.level2) {
      const Level1 parent = level1_of(l2);
      if (a.level1.has_value() && *a.level1 != parent) {
        throw Error("annotator \"" + record.annotator_id + "\" paired level-2 \"" +
                    std::string(level2_name(l2)) + "\" with level-1 \"" +
                    std::string(level1_name(*a.level1)) + "\" on segment " + std::to_string(i));
      }
      if (level1_of(a.level2[0]) != parent) {
        throw Error("annotator \"" + record.annotator_id +
                    "\" assigned level-2 labels with different parents on segment " +
                    std::to_string(i));
      }
    }
  }
}

std::string_view drop_reason_text(DropReason r) {
  switch (r) {
    case DropReason::NoOverlap:
      return "labels from all annotators have no overlap";
    case DropReason::NoLabel:
      return "a segment has no annotated label at all";
    case DropReason::DissenterRefused:
      return "the dissenting annotator rejected the majority labels";
  }
  return "unknown";
}

GenericOutcome adjudicate_generic(const std::vector<std::vector<std::vector<int>>>& itemsets,
                                  std::size_t max_labels_per_segment) {
  GenericOutcome out;
  const std::size_t n_segments = itemsets.size();
  std::vector<std::vector<int>> final_labels(n_segments);
  // Count of segments on which each annotator disagrees with the majority.
  std::array<int, 3> dissent_count{0, 0, 0};
  bool all_unanimous = true;

  for (std::size_t s = 0; s < n_segments; ++s) {
    std::array<std::set<int>, 3> sets;
    for (int a = 0; a < 3; ++a) {
      sets[a] = std::set<int>(itemsets[s][a].begin(), itemsets[s][a].end());
    }
    const bool all_empty = sets[0].empty() && sets[1].empty() && sets[2].empty();
    if (all_empty) {
      out.kind = 1;
      out.reason = DropReason::NoLabel;
      return out;
    }
    auto overlap = [&](int a, int b) {
      for (int x : sets[a]) {
        if (sets[b].count(x)) return true;
      }
      return false;
    };
    if (!overlap(0, 1) && !overlap(0, 2) && !overlap(1, 2)) {
      out.kind = 1;
      out.reason = DropReason::NoOverlap;
      return out;
    }
    if (sets[0] == sets[1] && sets[1] == sets[2]) {
      final_labels[s].assign(sets[0].begin(), sets[0].end());
      continue;
    }
    all_unanimous = false;
    // Two identical non-empty sets form the majority; otherwise fall back to
    // the labels supported by at least two annotators (plurality overlap).
    std::set<int> majority;
    int pair_dissenter = -1;
    if (sets[0] == sets[1]) {
      majority = sets[0];
      pair_dissenter = 2;
    } else if (sets[0] == sets[2]) {
      majority = sets[0];
      pair_dissenter = 1;
    } else if (sets[1] == sets[2]) {
      majority = sets[1];
      pair_dissenter = 0;
    } else {
      std::map<int, int> support;
      for (int a = 0; a < 3; ++a) {
        for (int x : sets[a]) support[x]++;
      }
      std::vector<std::pair<int, int>> shared;  // (label, support >= 2)
      for (auto& [label, count] : support) {
        if (count >= 2) shared.emplace_back(label, count);
      }
      std::stable_sort(shared.begin(), shared.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      if (shared.size() > max_labels_per_segment) shared.resize(max_labels_per_segment);
      for (auto& [label, count] : shared) majority.insert(label);
    }
    if (pair_dissenter >= 0) {
      dissent_count[static_cast<std::size_t>(pair_dissenter)]++;
    } else {
      for (int a = 0; a < 3; ++a) {
        if (sets[a] != majority) dissent_count[static_cast<std::size_t>(a)]++;
      }
    }
    final_labels[s].assign(majority.begin(), majority.end());
  }

  out.labels = std::move(final_labels);
  if (all_unanimous) {
    out.kind = 0;
    return out;
  }
  out.kind = 2;
  // Single dissenter for the whole pair: the annotator disagreeing on the
  // most segments, earliest record on ties.
  int best = 0;
  for (int a = 1; a < 3; ++a) {
    if (dissent_count[static_cast<std::size_t>(a)] > dissent_count[static_cast<std::size_t>(best)]) {
      best = a;
    }
  }
  out.dissenter = best;
  return out;
}

namespace {

std::vector<std::vector<SentenceFunction>> to_functions(
    const std::vector<std::vector<int>>& label_ids) {
  std::vector<std::vector<SentenceFunction>> out;
  out.reserve(label_ids.size());
  for (const auto& seg : label_ids) {
    std::vector<SentenceFunction> fs;
    for (int id : seg) fs.push_back(make_sf(static_cast<Level2>(id)));
    out.push_back(std::move(fs));
  }
  return out;
}

}  // namespace

AggregationOutcome aggregate_annotations(const ConversationPair& pair,
                                         const std::vector<AnnotationRecord>& records) {
  if (records.size() != 3) {
    throw RecordCountMismatchError("aggregate_annotations needs exactly 3 records, got " +
                                   std::to_string(records.size()));
  }
  const std::size_t n_segments = pair.total_segments();
  for (const AnnotationRecord& r : records) {
    if (r.segments.size() != n_segments) {
      throw SegmentMismatchError("annotator \"" + r.annotator_id + "\" covered " +
                                 std::to_string(r.segments.size()) + " segments, pair has " +
                                 std::to_string(n_segments));
    }
    validate_record(r);
  }
  // Adjudication compares level-2 label sets; a level-1-only annotation
  // contributes no adjudicable label.
  std::vector<std::vector<std::vector<int>>> itemsets(n_segments);
  for (std::size_t s = 0; s < n_segments; ++s) {
    itemsets[s].resize(3);
    for (std::size_t a = 0; a < 3; ++a) {
      for (Level2 l2 : records[a].segments[s].level2) {
        itemsets[s][a].push_back(static_cast<int>(l2));
      }
    }
  }
  const GenericOutcome g = adjudicate_generic(itemsets, 2);
  switch (g.kind) {
    case 0:
      return Accepted{to_functions(g.labels)};
    case 1:
      return Dropped{g.reason};
    default:
      return NeedsConfirmation{to_functions(g.labels),
                               records[static_cast<std::size_t>(g.dissenter)].annotator_id};
  }
}

AggregationOutcome confirm_annotation(const AggregationOutcome& outcome, bool dissenter_agrees) {
  const auto* pending = std::get_if<NeedsConfirmation>(&outcome);
  if (pending == nullptr) {
    throw InvalidStateError("confirm_annotation requires a NeedsConfirmation outcome");
  }
  if (dissenter_agrees) return Accepted{pending->majority_labels};
  return Dropped{DropReason::DissenterRefused};
}

ConversationPair apply_labels(ConversationPair pair, const Accepted& accepted) {
  if (accepted.labels.size() != pair.total_segments()) {
    throw SegmentMismatchError("accepted labels cover " + std::to_string(accepted.labels.size()) +
                               " segments, pair has " + std::to_string(pair.total_segments()));
  }
  std::size_t i = 0;
  for (Segment& s : pair.query_segments) s.functions = accepted.labels[i++];
  for (Segment& s : pair.response_segments) s.functions = accepted.labels[i++];
  return pair;
}

}  // namespace sefun
