#include "crystal/definition.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "crystal/util.hpp"

namespace crystal {

using nlohmann::json;

std::vector<ClassId> normalize_classes(std::vector<ClassId> classes,
                                       const SemanticHierarchy& h) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::erase(classes, h.root());
  // Keep only most-specific members: drop any class that is a strict
  // ancestor of another member.
  std::vector<ClassId> out;
  for (ClassId c : classes) {
    bool redundant = false;
    for (ClassId d : classes) {
      if (c != d && h.is_ancestor_or_equal(c, d)) {
        redundant = true;
        break;
      }
    }
    if (!redundant) out.push_back(c);
  }
  return out;
}

std::string_view to_string(VoiceConstraint v) {
  switch (v) {
    case VoiceConstraint::Active: return "active";
    case VoiceConstraint::Passive: return "passive";
    case VoiceConstraint::None: return "none";
    case VoiceConstraint::Unconstrained: return "unconstrained";
  }
  throw std::logic_error("bad VoiceConstraint");
}

VoiceConstraint voice_constraint_from(std::string_view s) {
  const std::string k = to_upper(trim(s));
  if (k == "ACTIVE") return VoiceConstraint::Active;
  if (k == "PASSIVE") return VoiceConstraint::Passive;
  if (k == "NONE") return VoiceConstraint::None;
  if (k == "UNCONSTRAINED") return VoiceConstraint::Unconstrained;
  throw std::runtime_error("unknown voice constraint '" + std::string(s) + "'");
}

VoiceConstraint to_voice_constraint(Voice v) {
  switch (v) {
    case Voice::Active: return VoiceConstraint::Active;
    case Voice::Passive: return VoiceConstraint::Passive;
    case Voice::None: return VoiceConstraint::None;
  }
  throw std::logic_error("bad Voice");
}

const BufferConstraints* CnDefinition::find_constraints(const BufferKey& key) const {
  for (const BufferConstraints& bc : constraints) {
    if (bc.key == key) return &bc;
  }
  return nullptr;
}

std::string CnDefinition::verb_key() const {
  if (voice == VoiceConstraint::None) return std::string(kNullVerbKey);
  const BufferConstraints* v = find_constraints(BufferKey{BufferKind::Verb, ""});
  if (v != nullptr && v->words) return v->words->tokens.back();
  return std::string(kAnyVerbKey);
}

namespace {

bool voice_ok(VoiceConstraint c, Voice v) {
  switch (c) {
    case VoiceConstraint::Unconstrained: return true;
    case VoiceConstraint::Active: return v == Voice::Active;
    case VoiceConstraint::Passive: return v == Voice::Passive;
    case VoiceConstraint::None: return v == Voice::None;
  }
  return false;
}

bool contiguous_subsequence(const std::vector<std::string>& needle,
                            const std::vector<std::string>& haystack) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  for (std::size_t start = 0; start + needle.size() <= haystack.size(); ++start) {
    if (std::equal(needle.begin(), needle.end(), haystack.begin() + start)) return true;
  }
  return false;
}

// A conjunctive class constraint is satisfied when each required class has a
// buffer class at-or-below it.
bool classes_satisfied(const ClassConstraint& required,
                       const std::vector<ClassId>& buffer_classes,
                       const SemanticHierarchy& h) {
  for (ClassId c : required.classes) {
    bool ok = false;
    for (ClassId d : buffer_classes) {
      if (h.is_ancestor_or_equal(c, d)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

bool buffer_satisfies(const BufferConstraints& bc, const Buffer& b, const Lexicon& lex,
                      const SemanticHierarchy& h) {
  if (bc.words && !contiguous_subsequence(bc.words->tokens, b.tokens)) return false;
  if (bc.head && !classes_satisfied(*bc.head, head_classes(b, lex, h), h)) return false;
  if (bc.mods && !classes_satisfied(*bc.mods, mod_classes(b, lex, h), h)) return false;
  return true;
}

// True iff the instance has a buffer under `key` meeting `bc` (which may be
// null, meaning existence only). PPs are matched by preposition, any ordinal.
bool key_satisfied(const BufferKey& key, const BufferConstraints* bc,
                   const Instance& inst, const Lexicon& lex,
                   const SemanticHierarchy& h) {
  if (key.kind != BufferKind::Pp) {
    const Buffer* b = inst.find(key.kind);
    return b != nullptr && (bc == nullptr || buffer_satisfies(*bc, *b, lex, h));
  }
  for (const Buffer& b : inst.buffers) {
    if (b.role.kind != BufferKind::Pp || b.prep != key.prep) continue;
    if (bc == nullptr || buffer_satisfies(*bc, b, lex, h)) return true;
  }
  return false;
}

// The buffer an extraction would name, or nullopt when the extraction buffer
// is absent or (for PPs) no ordinal with the right preposition satisfies the
// definition's own constraints on it. Lowest satisfying ordinal wins.
std::optional<BufferRole> extraction_role(const CnDefinition& d, const Instance& inst,
                                          const Lexicon& lex, const SemanticHierarchy& h) {
  const BufferConstraints* bc = d.find_constraints(d.extract_from);
  if (d.extract_from.kind != BufferKind::Pp) {
    const Buffer* b = inst.find(d.extract_from.kind);
    if (b == nullptr) return std::nullopt;
    if (bc != nullptr && !buffer_satisfies(*bc, *b, lex, h)) return std::nullopt;
    return b->role;
  }
  for (const Buffer& b : inst.buffers) {
    if (b.role.kind != BufferKind::Pp || b.prep != d.extract_from.prep) continue;
    if (bc == nullptr || buffer_satisfies(*bc, b, lex, h)) return b.role;
  }
  return std::nullopt;
}

}  // namespace

bool matches(const CnDefinition& d, const Instance& inst, const Lexicon& lex,
             const SemanticHierarchy& h) {
  if (!voice_ok(d.voice, inst.voice)) return false;
  for (const BufferConstraints& bc : d.constraints) {
    if (!key_satisfied(bc.key, &bc, inst, lex, h)) return false;
  }
  return extraction_role(d, inst, lex, h).has_value();
}

std::optional<Extraction> extract(const CnDefinition& d, const Instance& inst,
                                  const Lexicon& lex, const SemanticHierarchy& h) {
  if (!voice_ok(d.voice, inst.voice)) return std::nullopt;
  for (const BufferConstraints& bc : d.constraints) {
    if (!key_satisfied(bc.key, &bc, inst, lex, h)) return std::nullopt;
  }
  const std::optional<BufferRole> role = extraction_role(d, inst, lex, h);
  if (!role) return std::nullopt;
  return Extraction{-1, inst.doc_id, inst.instance_id, *role, d.label};
}

namespace {

// Every class of `general` must sit at-or-above some class of `specific`.
bool classes_relax(const ClassConstraint& general, const ClassConstraint& specific,
                   const SemanticHierarchy& h) {
  for (ClassId g : general.classes) {
    bool ok = false;
    for (ClassId s : specific.classes) {
      if (h.is_ancestor_or_equal(g, s)) {
        ok = true;
        break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

bool subsumes(const CnDefinition& general, const CnDefinition& specific,
              const SemanticHierarchy& h) {
  if (general.label != specific.label) return false;
  if (general.extract_from != specific.extract_from) return false;
  if (general.voice != VoiceConstraint::Unconstrained &&
      general.voice != specific.voice) {
    return false;
  }
  for (const BufferConstraints& gc : general.constraints) {
    const BufferConstraints* sc = specific.find_constraints(gc.key);
    if (sc == nullptr) {
      // The specific side requires its extraction buffer to exist even
      // without a constraint entry for it, so a content-free entry on that
      // key relaxes it; any other missing counterpart breaks subsumption.
      if (gc.key == specific.extract_from && !gc.words && !gc.head && !gc.mods) {
        continue;
      }
      return false;
    }
    if (gc.words &&
        (!sc->words || !contiguous_subsequence(gc.words->tokens, sc->words->tokens))) {
      return false;
    }
    if (gc.head && (!sc->head || !classes_relax(*gc.head, *sc->head, h))) return false;
    if (gc.mods && (!sc->mods || !classes_relax(*gc.mods, *sc->mods, h))) return false;
  }
  return true;
}

namespace {

json classes_to_json(const ClassConstraint& cc, const SemanticHierarchy& h) {
  json arr = json::array();
  for (ClassId c : cc.classes) arr.push_back(h.name(c));
  return arr;
}

std::optional<ClassConstraint> classes_from_json(const json& arr,
                                                 const SemanticHierarchy& h) {
  if (!arr.is_array()) throw std::runtime_error("dictionary: class list must be an array");
  std::vector<ClassId> classes;
  for (const json& v : arr) {
    if (!v.is_string()) throw std::runtime_error("dictionary: class names must be strings");
    classes.push_back(h.require(v.get<std::string>()));
  }
  classes = normalize_classes(std::move(classes), h);
  if (classes.empty()) return std::nullopt;
  return ClassConstraint{std::move(classes)};
}

CnDefinition definition_from_json(const json& jd, const SemanticHierarchy& h) {
  if (!jd.is_object()) throw std::runtime_error("dictionary: definition must be an object");
  CnDefinition d;

  const json& jl = jd.at("label");
  d.label.type = to_upper(trim(jl.at("type").get<std::string>()));
  d.label.subtype = to_upper(trim(jl.at("subtype").get<std::string>()));
  if (d.label.type.empty()) throw std::runtime_error("dictionary: empty label type");

  const json& jex = jd.at("extract_from");
  d.extract_from.kind = buffer_kind_from(jex.at("role").get<std::string>());
  if (d.extract_from.kind == BufferKind::Pp) {
    d.extract_from.prep = to_upper(trim(jex.at("prep").get<std::string>()));
    if (d.extract_from.prep.empty()) {
      throw std::runtime_error("dictionary: pp extraction without preposition");
    }
  } else if (jex.contains("prep")) {
    throw std::runtime_error("dictionary: preposition on non-pp extraction buffer");
  }

  d.voice = voice_constraint_from(jd.at("voice").get<std::string>());

  for (const json& jc : jd.value("constraints", json::array())) {
    BufferConstraints bc;
    bc.key.kind = buffer_kind_from(jc.at("role").get<std::string>());
    if (bc.key.kind == BufferKind::Pp) {
      bc.key.prep = to_upper(trim(jc.at("prep").get<std::string>()));
      if (bc.key.prep.empty()) {
        throw std::runtime_error("dictionary: pp constraint without preposition");
      }
    } else if (jc.contains("prep")) {
      throw std::runtime_error("dictionary: preposition on non-pp constraint");
    }
    if (jc.contains("words")) {
      WordConstraint wc;
      for (const json& t : jc.at("words")) {
        wc.tokens.push_back(to_upper(trim(t.get<std::string>())));
      }
      if (wc.tokens.empty()) throw std::runtime_error("dictionary: empty word constraint");
      bc.words = std::move(wc);
    }
    if (jc.contains("head")) bc.head = classes_from_json(jc.at("head"), h);
    if (jc.contains("mods")) bc.mods = classes_from_json(jc.at("mods"), h);
    if (bc.vacuous()) {
      throw std::runtime_error("dictionary: constraint entry with no constraints on " +
                               std::string(to_string(bc.key.kind)));
    }
    d.constraints.push_back(std::move(bc));
  }
  std::sort(d.constraints.begin(), d.constraints.end(),
            [](const BufferConstraints& a, const BufferConstraints& b) {
              return a.key < b.key;
            });
  for (std::size_t i = 1; i < d.constraints.size(); ++i) {
    if (d.constraints[i].key == d.constraints[i - 1].key) {
      throw std::runtime_error("dictionary: duplicate constraint entry");
    }
  }

  d.coverage = jd.value("coverage", 1);
  if (d.coverage < 1) throw std::runtime_error("dictionary: coverage must be >= 1");
  for (const json& jp : jd.value("provenance", json::array())) {
    d.provenance.emplace_back(jp.at("doc_id").get<std::string>(),
                              jp.at("instance_id").get<std::string>());
  }
  std::sort(d.provenance.begin(), d.provenance.end());
  d.provenance.erase(std::unique(d.provenance.begin(), d.provenance.end()),
                     d.provenance.end());
  return d;
}

}  // namespace

std::string definitions_to_json(std::span<const CnDefinition> defs,
                                const SemanticHierarchy& h) {
  json jdefs = json::array();
  for (const CnDefinition& d : defs) {
    json jd;
    jd["label"] = {{"type", d.label.type}, {"subtype", d.label.subtype}};
    json jex;
    jex["role"] = std::string(to_string(d.extract_from.kind));
    if (d.extract_from.kind == BufferKind::Pp) jex["prep"] = d.extract_from.prep;
    jd["extract_from"] = std::move(jex);
    jd["voice"] = std::string(to_string(d.voice));
    json jcs = json::array();
    for (const BufferConstraints& bc : d.constraints) {
      json jc;
      jc["role"] = std::string(to_string(bc.key.kind));
      if (bc.key.kind == BufferKind::Pp) jc["prep"] = bc.key.prep;
      if (bc.words) jc["words"] = bc.words->tokens;
      if (bc.head) jc["head"] = classes_to_json(*bc.head, h);
      if (bc.mods) jc["mods"] = classes_to_json(*bc.mods, h);
      jcs.push_back(std::move(jc));
    }
    jd["constraints"] = std::move(jcs);
    jd["coverage"] = d.coverage;
    json jprov = json::array();
    for (const auto& [doc, inst] : d.provenance) {
      jprov.push_back({{"doc_id", doc}, {"instance_id", inst}});
    }
    jd["provenance"] = std::move(jprov);
    jdefs.push_back(std::move(jd));
  }
  json root;
  root["definitions"] = std::move(jdefs);
  return root.dump(2) + "\n";
}

std::vector<CnDefinition> definitions_from_json(std::string_view text,
                                                const SemanticHierarchy& h) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("dictionary: invalid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("definitions") ||
      !root["definitions"].is_array()) {
    throw std::runtime_error("dictionary: expected {\"definitions\": [...]}");
  }

  std::vector<CnDefinition> defs;
  try {
    for (const json& jd : root["definitions"]) {
      defs.push_back(definition_from_json(jd, h));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("dictionary: malformed definition: ") + e.what());
  }
  return defs;
}

}  // namespace crystal
