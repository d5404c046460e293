// Dictionary induction: build maximally specific definitions from labeled
// buffers, then greedily relax them by unifying each with its most similar
// neighbor, keeping a unification only while its training error rate stays
// within tolerance. The dictionary is indexed by verb and by extraction
// buffer so similarity search and error testing touch a small slice of the
// candidate space.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crystal/definition.hpp"
#include "crystal/instances.hpp"
#include "crystal/semantics.hpp"

namespace crystal {

struct ErrorReport {
  std::int64_t hits = 0;    // extractions of a buffer carrying the label
  std::int64_t errors = 0;  // extractions of any other buffer
  double rate() const {
    const auto total = hits + errors;
    return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
  }
};

struct InductionConfig {
  double tolerance = 0.0;    // max training error rate of an accepted unification
  int min_coverage = 1;      // reporting filter, applied outside induce
  std::uint64_t seed = 0;    // evaluation-side partitions; induce itself is order-deterministic
  bool retry_next_similar = false;  // on a failed unification, try the next candidate
};

// The evolving definition set with its two indexes. Erasing keeps both
// indexes consistent; iteration orders are insertion order throughout.
class Dictionary {
 public:
  using DefId = std::int32_t;

  DefId insert(CnDefinition def);
  void erase(DefId id);
  bool contains(DefId id) const;
  const CnDefinition& at(DefId id) const;

  std::size_t size() const { return live_; }
  bool empty() const { return live_ == 0; }
  std::vector<DefId> ids() const;
  std::vector<const CnDefinition*> definitions() const;

  // Live definitions in the bucket; keys are verb words, kNullVerbKey, or
  // kAnyVerbKey.
  std::vector<DefId> verb_bucket(std::string_view key) const;
  // Live definitions sharing label + extraction buffer with `d` (the only
  // ones it can be unified with or subsumed by).
  std::vector<DefId> extraction_bucket(const CnDefinition& d) const;

  std::string to_json(const SemanticHierarchy& h) const;
  static Dictionary from_json(std::string_view text, const SemanticHierarchy& h);

 private:
  struct ExtractKey {
    CnLabel label;
    BufferKey from;
    auto operator<=>(const ExtractKey&) const = default;
  };

  // Drops dead ids from a bucket and returns the live ones. Buckets are not
  // touched on erase; they self-clean on the next read.
  std::vector<DefId> prune(std::vector<DefId>& bucket) const;

  std::vector<std::optional<CnDefinition>> defs_;
  mutable std::map<std::string, std::vector<DefId>, std::less<>> by_verb_;
  mutable std::map<ExtractKey, std::vector<DefId>> by_extract_;
  std::size_t live_ = 0;
};

// The maximally specific definition encoding one labeled buffer: extraction
// target, the instance's voice, and for every buffer its full word sequence
// plus head/modifier class sets (class slots omitted when empty). Guaranteed
// to match its motivating instance. Throws when the target buffer does not
// carry the label.
CnDefinition build_initial_definition(const Instance& inst, const BufferRole& target,
                                      const CnLabel& label, const Lexicon& lex,
                                      const SemanticHierarchy& h);

// Relaxation cost to unify two definitions, or nullopt when they are
// incompatible (different label, extraction buffer, or constrained voice).
// Lower is more similar; 0 means identical constraints.
std::optional<int> similarity(const CnDefinition& a, const CnDefinition& b,
                              const SemanticHierarchy& h);

// The compatible definition in `dict` with minimal relaxation cost. The
// definition's own verb bucket is searched first; candidates whose
// unification would drop the verb word constraint are considered only when
// the bucket has no compatible candidate. Ties break on earliest provenance.
std::optional<Dictionary::DefId> find_most_similar(const CnDefinition& d,
                                                   const Dictionary& dict,
                                                   const SemanticHierarchy& h);

// Most restrictive definition covering both inputs: common voice, word
// constraints intersected to their longest common contiguous subsequence
// (longest common suffix for the verb buffer), class constraints lifted
// pairwise to least common ancestors (root-reaching classes dropped),
// one-sided constraints dropped. Coverage adds; provenance unions.
// Precondition: similarity(a, b) is compatible.
CnDefinition unify(const CnDefinition& a, const CnDefinition& b,
                   const SemanticHierarchy& h);

// Applies `d` across the database (using the verb indexes when the
// definition pins a verb word) and counts extractions of buffers carrying
// the label as hits, all other extractions as errors.
ErrorReport error_rate(const CnDefinition& d, const InstanceDb& db,
                       const Lexicon& lex, const SemanticHierarchy& h);

// Observer invoked with every accepted unification and its error report.
using AcceptTrace =
    std::function<void(const CnDefinition& unified, const ErrorReport& report)>;

// The induction loop. `target` may leave the subtype empty to learn the type
// across all subtypes. Deterministic: initial definitions are processed in
// ascending (doc_id, instance_id, buffer role) order.
Dictionary induce(const InstanceDb& db, const CnLabel& target,
                  const InductionConfig& cfg, const Lexicon& lex,
                  const SemanticHierarchy& h, const AcceptTrace& trace = {});

// Per-definition correct training extractions (error_rate hits).
std::vector<std::int64_t> recomputed_coverage(const Dictionary& dict,
                                              const InstanceDb& db, const Lexicon& lex,
                                              const SemanticHierarchy& h);

// Keeps definitions whose recomputed training coverage meets the threshold.
Dictionary filter_by_coverage(const Dictionary& dict, int min_coverage,
                              const InstanceDb& db, const Lexicon& lex,
                              const SemanticHierarchy& h);

}  // namespace crystal
