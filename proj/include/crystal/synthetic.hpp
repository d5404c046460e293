// Synthetic corpus generation with known ground-truth rules. Every labeled
// buffer is derivable from a hidden rule; distractors are structurally
// similar unlabeled near-misses that differ from the rule in exactly one
// guarded dimension (head class, verb, or voice). The generator doubles as
// a verification oracle: a dictionary induced from a noise-free sample must
// recover the hidden rules.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crystal/definition.hpp"
#include "crystal/instances.hpp"

namespace crystal {

// One hidden extraction pattern over the built-in toy hierarchy/lexicon.
struct HiddenRule {
  CnLabel label;
  VoiceConstraint voice = VoiceConstraint::Active;  // None = null-verb fragment rule
  std::string verb;              // main verb word; empty for null-verb rules
  BufferKey extract_from;        // where the labeled phrase lives
  std::string head_class;        // hierarchy class whose subtree supplies head words
};

struct SyntheticSpec {
  std::vector<HiddenRule> hidden_rules;  // empty selects default_hidden_rules(5)
  int n_instances = 200;
  double distractor_fraction = 0.3;  // unlabeled near-miss share
  double label_noise = 0.0;          // fraction of positives whose label is dropped
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::string hierarchy_text;
  std::string lexicon_text;
  std::string corpus_json;
  std::string gold_json;  // hidden rules in the dictionary format
};

// Built-in rule pool, all labeling the same concept (a dictionary is induced
// per label); rules differ in verb, voice, extraction buffer, and class.
std::vector<HiddenRule> default_hidden_rules(int n);

// The fixed toy hierarchy/lexicon the rules are written against.
std::string toy_hierarchy_text();
std::string toy_lexicon_text();

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace crystal
