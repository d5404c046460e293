#include "crystal/instances.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "crystal/util.hpp"

namespace crystal {

using nlohmann::json;

bool label_covers(const CnLabel& pattern, const CnLabel& concrete) {
  if (pattern.type != concrete.type) return false;
  return pattern.subtype.empty() || pattern.subtype == concrete.subtype;
}

std::string_view to_string(BufferKind k) {
  switch (k) {
    case BufferKind::Subject: return "subject";
    case BufferKind::Verb: return "verb";
    case BufferKind::DirectObject: return "dobj";
    case BufferKind::IndirectObject: return "iobj";
    case BufferKind::Pp: return "pp";
  }
  throw std::logic_error("bad BufferKind");
}

BufferKind buffer_kind_from(std::string_view s) {
  const std::string k = to_upper(trim(s));
  if (k == "SUBJECT") return BufferKind::Subject;
  if (k == "VERB") return BufferKind::Verb;
  if (k == "DOBJ") return BufferKind::DirectObject;
  if (k == "IOBJ") return BufferKind::IndirectObject;
  if (k == "PP") return BufferKind::Pp;
  throw std::runtime_error("unknown buffer role '" + std::string(s) + "'");
}

std::string_view to_string(Voice v) {
  switch (v) {
    case Voice::Active: return "active";
    case Voice::Passive: return "passive";
    case Voice::None: return "none";
  }
  throw std::logic_error("bad Voice");
}

Voice voice_from(std::string_view s) {
  const std::string k = to_upper(trim(s));
  if (k == "ACTIVE") return Voice::Active;
  if (k == "PASSIVE") return Voice::Passive;
  if (k == "NONE") return Voice::None;
  throw std::runtime_error("unknown voice '" + std::string(s) + "'");
}

const Buffer* Instance::find(BufferKind kind) const {
  for (const Buffer& b : buffers) {
    if (b.role.kind == kind) return &b;
  }
  return nullptr;
}

const Buffer* Instance::find_pp(int ordinal) const {
  for (const Buffer& b : buffers) {
    if (b.role.kind == BufferKind::Pp && b.role.pp_index == ordinal) return &b;
  }
  return nullptr;
}

const Buffer* Instance::find_role(const BufferRole& role) const {
  for (const Buffer& b : buffers) {
    if (b.role == role) return &b;
  }
  return nullptr;
}

std::string_view Instance::verb_head() const {
  const Buffer* v = find(BufferKind::Verb);
  if (v == nullptr || v->tokens.empty()) return {};
  return v->tokens.back();
}

namespace {

std::vector<ClassId> classes_over(const std::vector<std::string>& tokens,
                                  const std::vector<int>& indices, const Lexicon& lex) {
  std::vector<ClassId> out;
  for (int i : indices) {
    const auto& cs = lex.classes_of(tokens[static_cast<std::size_t>(i)]);
    out.insert(out.end(), cs.begin(), cs.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<ClassId> head_classes(const Buffer& b, const Lexicon& lex,
                                  const SemanticHierarchy&) {
  if (b.annotated) return b.head_classes;
  return classes_over(b.tokens, b.heads, lex);
}

std::vector<ClassId> mod_classes(const Buffer& b, const Lexicon& lex,
                                 const SemanticHierarchy&) {
  if (b.annotated) return b.mod_classes;
  return classes_over(b.tokens, b.mods, lex);
}

namespace {

[[noreturn]] void fail_at(const std::string& doc, const std::string& inst,
                          const std::string& msg) {
  std::string where = "corpus";
  if (!doc.empty()) where += " doc '" + doc + "'";
  if (!inst.empty()) where += " instance '" + inst + "'";
  throw std::runtime_error(where + ": " + msg);
}

// Canonicalizes one instance in place: uppercase tokens / prepositions /
// labels, sorted deduplicated head and modifier index lists, buffers in
// subject, verb, dobj, iobj, pp#0.. order. Throws on any structural problem.
void canonicalize(Instance& inst) {
  const std::string& doc = inst.doc_id;
  const std::string& id = inst.instance_id;
  if (doc.empty()) fail_at(doc, id, "empty doc_id");
  if (id.empty()) fail_at(doc, id, "empty instance_id");
  if (inst.buffers.empty()) fail_at(doc, id, "instance has no buffers");

  for (Buffer& b : inst.buffers) {
    const std::string role_name(to_string(b.role.kind));
    if (b.role.kind == BufferKind::Pp) {
      if (b.role.pp_index < 0) fail_at(doc, id, "pp buffer without pp_index");
      if (trim(b.prep).empty()) fail_at(doc, id, "pp buffer without preposition");
      b.prep = to_upper(trim(b.prep));
    } else {
      if (b.role.pp_index != -1) fail_at(doc, id, role_name + " buffer with pp_index");
      if (!b.prep.empty()) fail_at(doc, id, role_name + " buffer with preposition");
    }

    for (std::string& t : b.tokens) {
      t = to_upper(trim(t));
      if (t.empty()) fail_at(doc, id, role_name + " buffer with empty token");
    }
    if (b.tokens.empty() && b.role.kind != BufferKind::Verb) {
      fail_at(doc, id, role_name + " buffer with no tokens");
    }

    for (std::vector<int>* idx : {&b.heads, &b.mods}) {
      std::sort(idx->begin(), idx->end());
      idx->erase(std::unique(idx->begin(), idx->end()), idx->end());
      for (int i : *idx) {
        if (i < 0 || static_cast<std::size_t>(i) >= b.tokens.size()) {
          fail_at(doc, id, role_name + " buffer index " + std::to_string(i) +
                               " out of range");
        }
      }
    }
    std::vector<int> overlap;
    std::set_intersection(b.heads.begin(), b.heads.end(), b.mods.begin(), b.mods.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty()) {
      fail_at(doc, id, role_name + " buffer with overlapping head and modifier indices");
    }

    if (b.label) {
      if (b.role.kind == BufferKind::Verb) fail_at(doc, id, "label on verb buffer");
      b.label->type = to_upper(trim(b.label->type));
      b.label->subtype = to_upper(trim(b.label->subtype));
      if (b.label->type.empty() || b.label->subtype.empty()) {
        fail_at(doc, id, "label with empty type or subtype");
      }
    }
  }

  // An empty verb buffer is just notation for the null verb; drop it.
  std::erase_if(inst.buffers, [](const Buffer& b) {
    return b.role.kind == BufferKind::Verb && b.tokens.empty();
  });
  if (inst.buffers.empty()) fail_at(doc, id, "instance has no buffers");

  std::sort(inst.buffers.begin(), inst.buffers.end(),
            [](const Buffer& a, const Buffer& b) { return a.role < b.role; });
  for (std::size_t i = 1; i < inst.buffers.size(); ++i) {
    if (inst.buffers[i].role == inst.buffers[i - 1].role) {
      fail_at(doc, id, "duplicate " + std::string(to_string(inst.buffers[i].role.kind)) +
                           " buffer");
    }
  }
  int expected_pp = 0;
  for (const Buffer& b : inst.buffers) {
    if (b.role.kind != BufferKind::Pp) continue;
    if (b.role.pp_index != expected_pp) {
      fail_at(doc, id, "pp ordinals not contiguous from 0");
    }
    ++expected_pp;
  }

  const bool has_verb = inst.find(BufferKind::Verb) != nullptr;
  if (has_verb && inst.voice == Voice::None) {
    fail_at(doc, id, "voice 'none' with a non-empty verb buffer");
  }
  if (!has_verb && inst.voice != Voice::None) {
    fail_at(doc, id, "voice '" + std::string(to_string(inst.voice)) +
                         "' without a verb buffer");
  }
}

const json& member(const json& obj, const char* key, const std::string& doc,
                   const std::string& inst) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail_at(doc, inst, std::string("missing field '") + key + "'");
  return *it;
}

std::string string_member(const json& obj, const char* key, const std::string& doc,
                          const std::string& inst) {
  const json& v = member(obj, key, doc, inst);
  if (!v.is_string()) fail_at(doc, inst, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Buffer parse_buffer(const json& jb, const std::string& doc, const std::string& inst) {
  if (!jb.is_object()) fail_at(doc, inst, "buffer must be an object");
  Buffer b;
  b.role.kind = buffer_kind_from(string_member(jb, "role", doc, inst));
  if (const auto it = jb.find("pp_index"); it != jb.end()) {
    if (!it->is_number_integer()) fail_at(doc, inst, "pp_index must be an integer");
    b.role.pp_index = it->get<int>();
  }
  if (const auto it = jb.find("prep"); it != jb.end()) {
    if (!it->is_string()) fail_at(doc, inst, "prep must be a string");
    b.prep = it->get<std::string>();
  }
  const json& jt = member(jb, "tokens", doc, inst);
  if (!jt.is_array()) fail_at(doc, inst, "tokens must be an array");
  for (const json& t : jt) {
    if (!t.is_string()) fail_at(doc, inst, "tokens must be strings");
    b.tokens.push_back(t.get<std::string>());
  }
  for (const auto& [key, dst] :
       {std::pair{"heads", &b.heads}, std::pair{"mods", &b.mods}}) {
    const auto it = jb.find(key);
    if (it == jb.end()) continue;
    if (!it->is_array()) fail_at(doc, inst, std::string(key) + " must be an array");
    for (const json& v : *it) {
      if (!v.is_number_integer()) fail_at(doc, inst, std::string(key) + " must be integers");
      dst->push_back(v.get<int>());
    }
  }
  if (const auto it = jb.find("label"); it != jb.end()) {
    if (!it->is_object()) fail_at(doc, inst, "label must be an object");
    b.label = CnLabel{string_member(*it, "type", doc, inst),
                      string_member(*it, "subtype", doc, inst)};
  }
  return b;
}

}  // namespace

InstanceDb InstanceDb::load(std::string_view corpus_json, const Lexicon& lex,
                            const SemanticHierarchy& h) {
  json root;
  try {
    root = json::parse(corpus_json);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("corpus: invalid JSON: ") + e.what());
  }
  if (!root.is_array()) throw std::runtime_error("corpus: top level must be an array of documents");

  std::vector<Instance> instances;
  for (const json& jd : root) {
    if (!jd.is_object()) throw std::runtime_error("corpus: document must be an object");
    const std::string doc_id = string_member(jd, "doc_id", "", "");
    const json& ji = member(jd, "instances", doc_id, "");
    if (!ji.is_array()) fail_at(doc_id, "", "instances must be an array");
    for (const json& jinst : ji) {
      if (!jinst.is_object()) fail_at(doc_id, "", "instance must be an object");
      Instance inst;
      inst.doc_id = doc_id;
      inst.instance_id = string_member(jinst, "instance_id", doc_id, "");
      inst.voice = voice_from(string_member(jinst, "voice", doc_id, inst.instance_id));
      const json& jbufs = member(jinst, "buffers", doc_id, inst.instance_id);
      if (!jbufs.is_array()) fail_at(doc_id, inst.instance_id, "buffers must be an array");
      for (const json& jb : jbufs) {
        inst.buffers.push_back(parse_buffer(jb, doc_id, inst.instance_id));
      }
      instances.push_back(std::move(inst));
    }
  }
  return build(std::move(instances), lex, h);
}

InstanceDb InstanceDb::build(std::vector<Instance> instances, const Lexicon& lex,
                             const SemanticHierarchy& h) {
  InstanceDb db;
  db.instances_ = std::move(instances);
  std::map<std::string, std::size_t> doc_pos;
  for (std::size_t i = 0; i < db.instances_.size(); ++i) {
    Instance& inst = db.instances_[i];
    canonicalize(inst);
    for (Buffer& b : inst.buffers) {
      b.head_classes = classes_over(b.tokens, b.heads, lex);
      b.mod_classes = classes_over(b.tokens, b.mods, lex);
      b.annotated = true;
    }
    (void)h;
    const auto [it, fresh] = doc_pos.try_emplace(inst.doc_id, db.docs_.size());
    if (fresh) db.docs_.push_back(Doc{inst.doc_id, {}});
    db.docs_[it->second].members.push_back(static_cast<InstanceId>(i));
  }
  db.index();
  return db;
}

void InstanceDb::index() {
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const InstanceId id = static_cast<InstanceId>(i);
    const Instance& inst = instances_[i];

    const auto [it, fresh] =
        by_name_.try_emplace({inst.doc_id, inst.instance_id}, id);
    if (!fresh) {
      fail_at(inst.doc_id, inst.instance_id, "duplicate instance id");
    }

    const std::string_view head = inst.verb_head();
    verb_index_[head.empty() ? std::string(kNullVerbKey) : std::string(head)].push_back(id);

    if (const Buffer* v = inst.find(BufferKind::Verb)) {
      std::set<std::string_view> seen;
      for (const std::string& t : v->tokens) {
        if (seen.insert(t).second) verb_token_index_[t].push_back(id);
      }
    }

    for (std::size_t pos = 0; pos < inst.buffers.size(); ++pos) {
      const Buffer& b = inst.buffers[pos];
      if (b.label) label_index_[*b.label].emplace_back(id, static_cast<int>(pos));
    }
  }
}

const std::vector<InstanceId>& InstanceDb::query_by_verb(std::string_view verb) const {
  static const std::vector<InstanceId> kEmpty;
  const auto it = verb_index_.find(verb);
  return it == verb_index_.end() ? kEmpty : it->second;
}

const std::vector<InstanceId>& InstanceDb::with_verb_token(std::string_view token) const {
  static const std::vector<InstanceId> kEmpty;
  const auto it = verb_token_index_.find(token);
  return it == verb_token_index_.end() ? kEmpty : it->second;
}

std::vector<std::pair<InstanceId, BufferRole>> InstanceDb::positive_buffers(
    const CnLabel& pattern) const {
  std::vector<std::pair<InstanceId, int>> hits;
  auto it = label_index_.lower_bound(CnLabel{pattern.type, ""});
  for (; it != label_index_.end() && it->first.type == pattern.type; ++it) {
    if (!label_covers(pattern, it->first)) continue;
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::pair<InstanceId, BufferRole>> out;
  out.reserve(hits.size());
  for (const auto& [id, pos] : hits) {
    out.emplace_back(id, instances_[static_cast<std::size_t>(id)]
                             .buffers[static_cast<std::size_t>(pos)]
                             .role);
  }
  return out;
}

std::int64_t InstanceDb::positive_instance_count(const CnLabel& pattern) const {
  std::set<InstanceId> ids;
  auto it = label_index_.lower_bound(CnLabel{pattern.type, ""});
  for (; it != label_index_.end() && it->first.type == pattern.type; ++it) {
    if (!label_covers(pattern, it->first)) continue;
    for (const auto& [id, pos] : it->second) ids.insert(id);
  }
  return static_cast<std::int64_t>(ids.size());
}

InstanceDb InstanceDb::subset(const std::vector<std::size_t>& docs) const {
  std::vector<InstanceId> members;
  for (std::size_t d : docs) {
    const Doc& doc = docs_.at(d);
    members.insert(members.end(), doc.members.begin(), doc.members.end());
  }
  std::sort(members.begin(), members.end());

  InstanceDb db;
  std::map<std::string, std::size_t> doc_pos;
  for (InstanceId id : members) {
    const Instance& inst = instances_[static_cast<std::size_t>(id)];
    db.instances_.push_back(inst);
    const auto [it, fresh] = doc_pos.try_emplace(inst.doc_id, db.docs_.size());
    if (fresh) db.docs_.push_back(Doc{inst.doc_id, {}});
    db.docs_[it->second].members.push_back(static_cast<InstanceId>(db.instances_.size() - 1));
  }
  db.index();
  return db;
}

InstanceId InstanceDb::find_instance(std::string_view doc_id,
                                     std::string_view instance_id) const {
  const auto it = by_name_.find({std::string(doc_id), std::string(instance_id)});
  return it == by_name_.end() ? InstanceId{-1} : it->second;
}

std::string InstanceDb::to_json() const {
  json root = json::array();
  for (const Doc& doc : docs_) {
    json jd;
    jd["doc_id"] = doc.id;
    json jinsts = json::array();
    for (InstanceId id : doc.members) {
      const Instance& inst = instances_[static_cast<std::size_t>(id)];
      json ji;
      ji["instance_id"] = inst.instance_id;
      ji["voice"] = std::string(to_string(inst.voice));
      json jbufs = json::array();
      for (const Buffer& b : inst.buffers) {
        json jb;
        jb["role"] = std::string(to_string(b.role.kind));
        if (b.role.kind == BufferKind::Pp) {
          jb["pp_index"] = b.role.pp_index;
          jb["prep"] = b.prep;
        }
        jb["tokens"] = b.tokens;
        jb["heads"] = b.heads;
        jb["mods"] = b.mods;
        if (b.label) {
          jb["label"] = {{"type", b.label->type}, {"subtype", b.label->subtype}};
        }
        jbufs.push_back(std::move(jb));
      }
      ji["buffers"] = std::move(jbufs);
      jinsts.push_back(std::move(ji));
    }
    jd["instances"] = std::move(jinsts);
    root.push_back(std::move(jd));
  }
  return root.dump(2) + "\n";
}

}  // namespace crystal
