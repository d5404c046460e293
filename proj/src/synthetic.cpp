#include "crystal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "crystal/induction.hpp"
#include "crystal/instances.hpp"

namespace crystal {

namespace {

// Single source for the toy lexicon; the text format and the generator's
// word pools are both derived from this table.
struct LexEntry {
  const char* word;
  const char* cls;
};

constexpr LexEntry kLexTable[] = {
    {"HEADACHE", "Pain Symptom"},       {"SORENESS", "Pain Symptom"},
    {"STINGING", "Pain Symptom"},       {"WHEEZING", "Respiratory Symptom"},
    {"COUGHING", "Respiratory Symptom"},{"DYSPNEA", "Respiratory Symptom"},
    {"NAUSEA", "Digestive Symptom"},    {"BLOATING", "Digestive Symptom"},
    {"HEARTBURN", "Digestive Symptom"}, {"LEUKOCYTOSIS", "Blood Result"},
    {"HYPOKALEMIA", "Blood Result"},    {"HYPERGLYCEMIA", "Blood Result"},
    {"OPACITY", "Imaging Result"},      {"LESION", "Imaging Result"},
    {"EFFUSION", "Imaging Result"},     {"INFLUENZA", "Viral Infection"},
    {"SHINGLES", "Viral Infection"},    {"MEASLES", "Viral Infection"},
    {"CELLULITIS", "Bacterial Infection"},
    {"TUBERCULOSIS", "Bacterial Infection"},
    {"PNEUMONIA", "Bacterial Infection"},
    {"ANGINA", "Heart Disease"},        {"ARRHYTHMIA", "Heart Disease"},
    {"CARDIOMYOPATHY", "Heart Disease"},{"ASTHMA", "Lung Disease"},
    {"EMPHYSEMA", "Lung Disease"},      {"FIBROSIS", "Lung Disease"},
    {"AMOXICILLIN", "Antibiotic"},      {"DOXYCYCLINE", "Antibiotic"},
    {"CIPROFLOXACIN", "Antibiotic"},    {"IBUPROFEN", "Analgesic"},
    {"ACETAMINOPHEN", "Analgesic"},     {"NAPROXEN", "Analgesic"},
    {"PHYSICIAN", "Clinician"},         {"NURSE", "Clinician"},
    {"SURGEON", "Clinician"},           {"MOTHER", "Relative"},
    {"BROTHER", "Relative"},            {"SISTER", "Relative"},
    {"ANKLE", "Limb"},                  {"WRIST", "Limb"},
    {"SHOULDER", "Limb"},               {"LIVER", "Organ"},
    {"KIDNEY", "Organ"},                {"SPLEEN", "Organ"},
};

const std::vector<std::vector<std::string>> kSubjects = {
    {"THE", "PATIENT"}, {"THE", "WOMAN"}, {"SHE"},           {"HE"},
    {"THE", "MAN"},     {"THIS", "PATIENT"}, {"OUR", "PATIENT"},
};

const std::vector<std::string> kDeterminers = {"", "THE", "A", "NO", "ANY", "SOME"};
const std::vector<std::string> kModifiers = {"",        "MILD",      "SEVERE",
                                             "CHRONIC", "RECURRENT", "INTERMITTENT"};
const std::vector<std::string> kAuxiliaries = {"WAS", "IS"};
// Verbs and prepositions no hidden rule uses; near-miss instances built from
// them punish any unification that lets the verb constraint go.
const std::vector<std::string> kOffVerbs = {"MENTIONED", "DESCRIBED", "RECALLED"};
const std::vector<std::string> kExtraPreps = {"AFTER", "DURING", "BEFORE"};
const std::vector<std::vector<std::string>> kExtraPhrases = {
    {"ADMISSION"}, {"SURGERY"}, {"THE", "PROCEDURE"}, {"DISCHARGE"}};

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::string toy_hierarchy_text() {
  return "# toy clinical class tree: child<TAB>parent, root alone\n"
         "Entity\n"
         "Finding\tEntity\n"
         "Symptom\tFinding\n"
         "Pain Symptom\tSymptom\n"
         "Respiratory Symptom\tSymptom\n"
         "Digestive Symptom\tSymptom\n"
         "Test Result\tFinding\n"
         "Blood Result\tTest Result\n"
         "Imaging Result\tTest Result\n"
         "Disorder\tEntity\n"
         "Infection\tDisorder\n"
         "Viral Infection\tInfection\n"
         "Bacterial Infection\tInfection\n"
         "Chronic Disease\tDisorder\n"
         "Heart Disease\tChronic Disease\n"
         "Lung Disease\tChronic Disease\n"
         "Substance\tEntity\n"
         "Medication\tSubstance\n"
         "Antibiotic\tMedication\n"
         "Analgesic\tMedication\n"
         "Person\tEntity\n"
         "Clinician\tPerson\n"
         "Relative\tPerson\n"
         "Bodypart\tEntity\n"
         "Limb\tBodypart\n"
         "Organ\tBodypart\n";
}

std::string toy_lexicon_text() {
  std::string out = "# toy lexicon: word<TAB>class\n";
  for (const LexEntry& e : kLexTable) {
    out += e.word;
    out += '\t';
    out += e.cls;
    out += '\n';
  }
  return out;
}

std::vector<HiddenRule> default_hidden_rules(int n) {
  const std::vector<HiddenRule> pool = {
      {{"FINDING", "PRESENT"}, VoiceConstraint::Active, "REPORTS",
       BufferKey{BufferKind::DirectObject, ""}, "Symptom"},
      {{"FINDING", "PRESENT"}, VoiceConstraint::Passive, "DIAGNOSED",
       BufferKey{BufferKind::Pp, "WITH"}, "Disorder"},
      {{"FINDING", "PRESENT"}, VoiceConstraint::Active, "DENIES",
       BufferKey{BufferKind::DirectObject, ""}, "Test Result"},
      {{"FINDING", "PRESENT"}, VoiceConstraint::Active, "RECEIVED",
       BufferKey{BufferKind::DirectObject, ""}, "Medication"},
      {{"FINDING", "PRESENT"}, VoiceConstraint::None, "",
       BufferKey{BufferKind::Pp, "OF"}, "Chronic Disease"},
      {{"FINDING", "PRESENT"}, VoiceConstraint::Passive, "TREATED",
       BufferKey{BufferKind::Pp, "FOR"}, "Infection"},
  };
  if (n < 0 || static_cast<std::size_t>(n) > pool.size()) {
    throw std::invalid_argument("default_hidden_rules: supported range is 0.." +
                                std::to_string(pool.size()));
  }
  return {pool.begin(), pool.begin() + n};
}

namespace {

struct GeneratorState {
  SemanticHierarchy h;
  std::vector<HiddenRule> rules;
  std::vector<std::vector<std::string>> class_pools;  // per rule: in-class head words
  std::vector<std::string> off_heads;                 // words outside every rule class
  std::mt19937_64 rng;
  // Deterministic cycling keeps every pool fully visited, so accidental
  // regularities cannot survive induction.
  std::vector<std::size_t> head_cycle;
  std::vector<std::size_t> subject_cycle;
  std::size_t off_head_cycle = 0;
  std::size_t off_verb_cycle = 0;

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng() % n); }
  bool chance(double prob) { return unit_draw(rng) < prob; }
};

void validate_rule(const HiddenRule& r, const SemanticHierarchy& h) {
  if ((r.voice == VoiceConstraint::None) != r.verb.empty()) {
    throw std::invalid_argument("hidden rule: verb must be empty exactly for null-verb voice");
  }
  if (r.voice == VoiceConstraint::Unconstrained) {
    throw std::invalid_argument("hidden rule: voice must be active, passive, or none");
  }
  if ((r.extract_from.kind == BufferKind::Pp) != !r.extract_from.prep.empty()) {
    throw std::invalid_argument("hidden rule: preposition required exactly for pp extraction");
  }
  if (r.extract_from.kind == BufferKind::Verb) {
    throw std::invalid_argument("hidden rule: cannot extract from the verb buffer");
  }
  if (r.label.type.empty() || r.label.subtype.empty()) {
    throw std::invalid_argument("hidden rule: label needs type and subtype");
  }
  h.require(r.head_class);
}

GeneratorState make_state(const SyntheticSpec& spec) {
  GeneratorState g;
  g.h = SemanticHierarchy::parse(toy_hierarchy_text());
  g.rules = spec.hidden_rules.empty() ? default_hidden_rules(5) : spec.hidden_rules;
  for (const HiddenRule& r : g.rules) validate_rule(r, g.h);

  std::vector<ClassId> rule_classes;
  for (const HiddenRule& r : g.rules) rule_classes.push_back(g.h.require(r.head_class));

  for (ClassId rc : rule_classes) {
    std::vector<std::string> pool;
    for (const LexEntry& e : kLexTable) {
      const ClassId wc = g.h.require(e.cls);
      if (wc != rc && g.h.is_ancestor_or_equal(rc, wc)) pool.push_back(e.word);
    }
    if (pool.size() < 2) {
      throw std::invalid_argument("hidden rule: class has too few descendant words");
    }
    g.class_pools.push_back(std::move(pool));
  }

  for (const LexEntry& e : kLexTable) {
    const ClassId wc = g.h.require(e.cls);
    bool inside = false;
    for (ClassId rc : rule_classes) {
      if (g.h.is_ancestor_or_equal(rc, wc)) {
        inside = true;
        break;
      }
    }
    if (!inside) g.off_heads.push_back(e.word);
  }
  if (g.off_heads.empty()) {
    throw std::invalid_argument("synthetic spec: no lexicon words left for near-misses");
  }

  g.rng.seed(spec.seed);
  g.head_cycle.assign(g.rules.size(), 0);
  g.subject_cycle.assign(g.rules.size(), 0);
  return g;
}

Buffer make_phrase_buffer(GeneratorState& g, const BufferKey& where,
                          const std::string& head_word,
                          const std::optional<CnLabel>& label) {
  Buffer b;
  b.role.kind = where.kind;
  b.prep = where.prep;
  const std::string& det = kDeterminers[g.pick(kDeterminers.size())];
  const std::string& mod = kModifiers[g.pick(kModifiers.size())];
  if (!det.empty()) b.tokens.push_back(det);
  if (!mod.empty()) {
    b.mods.push_back(static_cast<int>(b.tokens.size()));
    b.tokens.push_back(mod);
  }
  b.heads.push_back(static_cast<int>(b.tokens.size()));
  b.tokens.push_back(head_word);
  b.label = label;
  return b;
}

// One clause following the rule's template. `head_word` decides positive vs.
// near-miss content; `voice`/`verb` may deviate from the rule for near-miss
// variants; only positives carry the label.
Instance make_instance(GeneratorState& g, std::size_t rule_idx, VoiceConstraint voice,
                       const std::string& verb, const std::string& head_word,
                       bool labeled) {
  const HiddenRule& r = g.rules[rule_idx];
  Instance inst;

  if (r.extract_from.kind != BufferKind::Subject) {
    Buffer subj;
    subj.role.kind = BufferKind::Subject;
    subj.tokens = kSubjects[g.subject_cycle[rule_idx]++ % kSubjects.size()];
    subj.heads.push_back(static_cast<int>(subj.tokens.size()) - 1);
    inst.buffers.push_back(std::move(subj));
  }

  switch (voice) {
    case VoiceConstraint::Active:
      inst.voice = Voice::Active;
      break;
    case VoiceConstraint::Passive:
      inst.voice = Voice::Passive;
      break;
    case VoiceConstraint::None:
      inst.voice = Voice::None;
      break;
    case VoiceConstraint::Unconstrained:
      throw std::logic_error("synthetic template voice cannot be unconstrained");
  }
  if (voice != VoiceConstraint::None) {
    Buffer vb;
    vb.role.kind = BufferKind::Verb;
    if (voice == VoiceConstraint::Passive) {
      vb.tokens.push_back(kAuxiliaries[g.pick(kAuxiliaries.size())]);
    }
    vb.tokens.push_back(verb);
    inst.buffers.push_back(std::move(vb));
  }

  std::optional<CnLabel> label;
  if (labeled) label = r.label;
  inst.buffers.push_back(make_phrase_buffer(g, r.extract_from, head_word, label));

  if (g.chance(0.35)) {
    Buffer extra;
    extra.role.kind = BufferKind::Pp;
    extra.prep = kExtraPreps[g.pick(kExtraPreps.size())];
    extra.tokens = kExtraPhrases[g.pick(kExtraPhrases.size())];
    extra.heads.push_back(static_cast<int>(extra.tokens.size()) - 1);
    inst.buffers.push_back(std::move(extra));
  }

  int pp_ordinal = 0;
  for (Buffer& b : inst.buffers) {
    if (b.role.kind == BufferKind::Pp) b.role.pp_index = pp_ordinal++;
  }
  return inst;
}

Instance make_positive(GeneratorState& g, std::size_t rule_idx) {
  const HiddenRule& r = g.rules[rule_idx];
  const std::vector<std::string>& pool = g.class_pools[rule_idx];
  const std::string& head = pool[g.head_cycle[rule_idx]++ % pool.size()];
  return make_instance(g, rule_idx, r.voice, r.verb, head, true);
}

enum class NearMiss { OffClass, OffVerb, OffVoice };

Instance make_near_miss(GeneratorState& g, NearMiss kind, std::size_t rule_idx) {
  const HiddenRule& r = g.rules[rule_idx];
  switch (kind) {
    case NearMiss::OffClass: {
      const std::string& head = g.off_heads[g.off_head_cycle++ % g.off_heads.size()];
      return make_instance(g, rule_idx, r.voice, r.verb, head, false);
    }
    case NearMiss::OffVerb: {
      const std::vector<std::string>& pool = g.class_pools[rule_idx];
      const std::string& head = pool[g.head_cycle[rule_idx]++ % pool.size()];
      const std::string& verb = kOffVerbs[g.off_verb_cycle++ % kOffVerbs.size()];
      return make_instance(g, rule_idx, r.voice, verb, head, false);
    }
    case NearMiss::OffVoice: {
      const std::vector<std::string>& pool = g.class_pools[rule_idx];
      const std::string& head = pool[g.head_cycle[rule_idx]++ % pool.size()];
      const VoiceConstraint flipped = r.voice == VoiceConstraint::Active
                                          ? VoiceConstraint::Passive
                                          : VoiceConstraint::Active;
      return make_instance(g, rule_idx, flipped, r.verb, head, false);
    }
  }
  throw std::logic_error("bad NearMiss kind");
}

std::vector<CnDefinition> gold_definitions(const GeneratorState& g) {
  std::vector<CnDefinition> gold;
  for (std::size_t i = 0; i < g.rules.size(); ++i) {
    const HiddenRule& r = g.rules[i];
    CnDefinition d;
    d.label = r.label;
    d.extract_from = r.extract_from;
    d.voice = r.voice;
    if (!r.verb.empty()) {
      d.constraints.push_back(BufferConstraints{
          BufferKey{BufferKind::Verb, ""}, WordConstraint{{r.verb}}, {}, {}});
    }
    BufferConstraints ec;
    ec.key = r.extract_from;
    ec.head = ClassConstraint{{g.h.require(r.head_class)}};
    d.constraints.push_back(std::move(ec));
    std::sort(d.constraints.begin(), d.constraints.end(),
              [](const BufferConstraints& a, const BufferConstraints& b) {
                return a.key < b.key;
              });
    d.coverage = 1;
    gold.push_back(std::move(d));
  }
  return gold;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_instances < 0) {
    throw std::invalid_argument("synthetic spec: negative instance count");
  }
  if (spec.distractor_fraction < 0.0 || spec.distractor_fraction > 1.0 ||
      spec.label_noise < 0.0 || spec.label_noise > 1.0) {
    throw std::invalid_argument("synthetic spec: fractions must lie in [0,1]");
  }

  GeneratorState g = make_state(spec);

  const auto n_total = static_cast<std::size_t>(spec.n_instances);
  const auto n_near = static_cast<std::size_t>(
      std::llround(spec.distractor_fraction * static_cast<double>(n_total)));
  const std::size_t n_pos = n_total - n_near;

  std::vector<Instance> instances;
  instances.reserve(n_total);
  for (std::size_t i = 0; i < n_pos; ++i) {
    instances.push_back(make_positive(g, i % g.rules.size()));
  }

  // Every near-miss variant of every rule appears in round-robin order, so
  // any sample large enough to generalize from also contains the guards that
  // keep generalization honest.
  std::vector<std::pair<NearMiss, std::size_t>> variants;
  for (std::size_t r = 0; r < g.rules.size(); ++r) {
    variants.emplace_back(NearMiss::OffClass, r);
    if (!g.rules[r].verb.empty()) {
      variants.emplace_back(NearMiss::OffVerb, r);
      variants.emplace_back(NearMiss::OffVoice, r);
    }
  }
  for (std::size_t i = 0; i < n_near; ++i) {
    const auto& [kind, rule_idx] = variants[i % variants.size()];
    instances.push_back(make_near_miss(g, kind, rule_idx));
  }

  if (spec.label_noise > 0.0) {
    for (std::size_t i = 0; i < n_pos; ++i) {
      if (!g.chance(spec.label_noise)) continue;
      for (Buffer& b : instances[i].buffers) b.label.reset();
    }
  }

  for (std::size_t i = instances.size(); i > 1; --i) {
    const std::size_t j = g.pick(i);
    std::swap(instances[i - 1], instances[j]);
  }

  constexpr std::size_t kDocSize = 8;
  char id[32];
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::snprintf(id, sizeof(id), "d%05zu", i / kDocSize + 1);
    instances[i].doc_id = id;
    std::snprintf(id, sizeof(id), "s%02zu", i % kDocSize + 1);
    instances[i].instance_id = id;
  }

  SyntheticCorpus out;
  out.hierarchy_text = toy_hierarchy_text();
  out.lexicon_text = toy_lexicon_text();
  const Lexicon lex = Lexicon::parse(out.lexicon_text, g.h);
  out.corpus_json = InstanceDb::build(std::move(instances), lex, g.h).to_json();
  out.gold_json = definitions_to_json(gold_definitions(g), g.h);
  return out;
}

}  // namespace crystal
