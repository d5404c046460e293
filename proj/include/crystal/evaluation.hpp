// Held-out evaluation: apply a dictionary, score recall/precision against
// buffer labels, and sweep tolerance / training-size settings over random
// document partitions.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crystal/definition.hpp"
#include "crystal/induction.hpp"
#include "crystal/instances.hpp"

namespace crystal {

struct Metrics {
  std::int64_t possible = 0;   // labeled buffers in the test set
  std::int64_t extracted = 0;  // distinct extractions
  std::int64_t correct = 0;    // extractions whose buffer carries the label

  double recall() const {
    return possible == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(possible);
  }
  double precision() const {
    return extracted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(extracted);
  }
};

struct SplitSpec {
  double train_fraction = 0.9;  // in (0,1); documents are the partition unit
  int trials = 1;
  std::uint64_t seed = 0;
};

// Every extraction any definition produces, deduplicated per (instance,
// buffer, label) and sorted in corpus order.
std::vector<Extraction> apply_dictionary(const Dictionary& dict, const InstanceDb& db,
                                         const Lexicon& lex, const SemanticHierarchy& h);

// Scores extractions against `target` (empty subtype scores by type only).
Metrics score(const std::vector<Extraction>& extractions, const InstanceDb& db,
              const CnLabel& target);

// Induce on the train side, filter by coverage on the train side, score on
// the test side.
Metrics evaluate_split(const InstanceDb& train, const InstanceDb& test,
                       const CnLabel& target, const InductionConfig& cfg,
                       const Lexicon& lex, const SemanticHierarchy& h);

struct SweepRow {
  double tolerance = 0.0;
  double mean_recall = 0.0;
  double mean_precision = 0.0;
};

// One row per tolerance, averaging over the same `split.trials` random
// document partitions. Deterministic given split.seed.
std::vector<SweepRow> tolerance_sweep(const InstanceDb& db, const CnLabel& target,
                                      const std::vector<double>& tolerances,
                                      const SplitSpec& split, const InductionConfig& base,
                                      const Lexicon& lex, const SemanticHierarchy& h);

struct CurveRow {
  double train_fraction = 0.0;
  double mean_positive_instances = 0.0;  // per training partition
  double mean_recall = 0.0;
  double mean_precision = 0.0;
};

// One row per training fraction, averaging over `trials` partitions each.
std::vector<CurveRow> learning_curve(const InstanceDb& db, const CnLabel& target,
                                     const std::vector<double>& fractions, int trials,
                                     std::uint64_t seed, const InductionConfig& cfg,
                                     const Lexicon& lex, const SemanticHierarchy& h);

// Random document partition: shuffles doc ordinals with the given seed
// sequence index and splits at round(train_fraction * doc_count), clamped so
// both sides are non-empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_docs(
    std::size_t doc_count, double train_fraction, std::uint64_t seed,
    std::uint64_t trial);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);
std::string curve_to_csv(const std::vector<CurveRow>& rows);

}  // namespace crystal
