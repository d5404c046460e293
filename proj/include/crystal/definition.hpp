// Concept-node definitions: extraction rules over clause buffers. A
// definition names a label, the buffer to extract, a voice requirement, and
// per-buffer constraints (word sequence, conjunctive head/modifier classes,
// preposition). Definitions are immutable values; matching is pure.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crystal/instances.hpp"
#include "crystal/semantics.hpp"

namespace crystal {

// Ordered token sequence that must appear contiguously in the buffer.
struct WordConstraint {
  std::vector<std::string> tokens;  // non-empty, uppercased

  bool operator==(const WordConstraint&) const = default;
};

// Conjunctive class set: every member must be satisfied by some head (resp.
// modifier) token of the buffer. Normalized: no Root Class, no member an
// ancestor of another.
struct ClassConstraint {
  std::vector<ClassId> classes;  // sorted, unique, non-empty

  bool operator==(const ClassConstraint&) const = default;
};

// Removes duplicates and redundant ancestors, keeping most-specific classes.
// Idempotent. The root class is always removed.
std::vector<ClassId> normalize_classes(std::vector<ClassId> classes,
                                       const SemanticHierarchy& h);

// How a definition names a buffer: non-PP buffers by kind, PPs by
// preposition (any ordinal).
struct BufferKey {
  BufferKind kind = BufferKind::Subject;
  std::string prep;  // non-empty iff PP

  bool operator==(const BufferKey&) const = default;
  auto operator<=>(const BufferKey&) const = default;
};

struct BufferConstraints {
  BufferKey key;
  std::optional<WordConstraint> words;
  std::optional<ClassConstraint> head;
  std::optional<ClassConstraint> mods;

  bool operator==(const BufferConstraints&) const = default;
  // A constraint entry must constrain something; for PPs the preposition
  // itself counts.
  bool vacuous() const {
    return !words && !head && !mods && key.kind != BufferKind::Pp;
  }
};

enum class VoiceConstraint : int { Active = 0, Passive, None, Unconstrained };

std::string_view to_string(VoiceConstraint v);
VoiceConstraint voice_constraint_from(std::string_view s);
VoiceConstraint to_voice_constraint(Voice v);

struct CnDefinition {
  CnLabel label;
  BufferKey extract_from;
  VoiceConstraint voice = VoiceConstraint::Unconstrained;
  std::vector<BufferConstraints> constraints;  // sorted by key
  int coverage = 1;
  // Motivating instances as (doc_id, instance_id), sorted.
  std::vector<std::pair<std::string, std::string>> provenance;

  const BufferConstraints* find_constraints(const BufferKey& key) const;
  // Verb bucket key: last token of the verb word constraint, kNullVerbKey
  // for null-verb definitions, kAnyVerbKey otherwise.
  std::string verb_key() const;

  bool operator==(const CnDefinition&) const = default;
};

inline constexpr std::string_view kAnyVerbKey = "<ANY>";

struct Extraction {
  InstanceId instance = -1;  // ordinal in the database that produced it
  std::string doc_id;
  std::string instance_id;
  BufferRole buffer;
  CnLabel label;

  auto operator<=>(const Extraction&) const = default;
};

// True iff the instance satisfies every constraint of the definition:
// matching voice, every constrained buffer present and satisfied (PPs by
// preposition, any ordinal), and the extraction buffer present.
// Unconstrained instance buffers are ignored.
bool matches(const CnDefinition& d, const Instance& inst, const Lexicon& lex,
             const SemanticHierarchy& h);

// The extraction this definition produces from the instance, or nullopt when
// it does not match. For PP extraction the lowest-ordinal preposition match
// satisfying the constraints is used.
std::optional<Extraction> extract(const CnDefinition& d, const Instance& inst,
                                  const Lexicon& lex, const SemanticHierarchy& h);

// Structural subsumption: true iff every constraint of `general` is a
// relaxation of a counterpart in `specific` (same label, extraction buffer,
// compatible voice; word constraints contained contiguously; every class
// ancestor-or-equal of a counterpart class). Implies that every instance
// matched by `specific` is matched by `general`.
bool subsumes(const CnDefinition& general, const CnDefinition& specific,
              const SemanticHierarchy& h);

// JSON serialization of a definition list ({"definitions": [...]}); class
// constraints are written as class names, stable field order.
std::string definitions_to_json(std::span<const CnDefinition> defs,
                                const SemanticHierarchy& h);
std::vector<CnDefinition> definitions_from_json(std::string_view text,
                                                const SemanticHierarchy& h);

}  // namespace crystal
