// Segmented clause instances and the verb-indexed instance database.
// An instance is one clause split into syntactic buffers (subject, verb
// phrase, objects, prepositional phrases); annotations attach a concept-node
// label to whole buffers. The database is immutable after load and indexed
// by verb head word so that definitions constraining the verb are tested
// against a small slice of the corpus.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crystal/semantics.hpp"

namespace crystal {

// Concept-node label. Both parts are canonicalized to uppercase; instance
// labels always carry a non-empty subtype, while a definition or query may
// leave the subtype empty to mean "any subtype of this type".
struct CnLabel {
  std::string type;
  std::string subtype;

  bool operator==(const CnLabel&) const = default;
  auto operator<=>(const CnLabel&) const = default;
};

// True iff `concrete` falls under `pattern` (type equal; subtype equal or
// pattern subtype empty).
bool label_covers(const CnLabel& pattern, const CnLabel& concrete);

enum class BufferKind : int { Subject = 0, Verb, DirectObject, IndirectObject, Pp };

std::string_view to_string(BufferKind k);
BufferKind buffer_kind_from(std::string_view s);

struct BufferRole {
  BufferKind kind = BufferKind::Subject;
  int pp_index = -1;  // >= 0 iff kind == Pp

  bool operator==(const BufferRole&) const = default;
  auto operator<=>(const BufferRole&) const = default;
};

enum class Voice : int { Active = 0, Passive, None };

std::string_view to_string(Voice v);
Voice voice_from(std::string_view s);

struct Buffer {
  BufferRole role;
  std::string prep;                 // non-empty iff PP
  std::vector<std::string> tokens;  // uppercased
  std::vector<int> heads;           // indices into tokens, sorted
  std::vector<int> mods;            // indices into tokens, sorted, disjoint from heads
  std::optional<CnLabel> label;

  // Class sets resolved against the lexicon once at database build time.
  std::vector<ClassId> head_classes;
  std::vector<ClassId> mod_classes;
  bool annotated = false;
};

struct Instance {
  std::string doc_id;
  std::string instance_id;
  Voice voice = Voice::None;
  std::vector<Buffer> buffers;  // canonical order: subject, verb, dobj, iobj, pp#0..

  const Buffer* find(BufferKind kind) const;  // non-PP kinds
  const Buffer* find_pp(int ordinal) const;
  const Buffer* find_role(const BufferRole& role) const;
  // Last token of the verb buffer; empty for the null verb.
  std::string_view verb_head() const;
};

using InstanceId = std::int32_t;

// Sentinel key for the null-verb bucket of the verb index.
inline constexpr std::string_view kNullVerbKey = "<NULL>";

// Union of word classes over head (resp. modifier) tokens; Root-mapped and
// unknown words contribute nothing. Uses the cached sets when the buffer
// came out of an InstanceDb.
std::vector<ClassId> head_classes(const Buffer& b, const Lexicon& lex,
                                  const SemanticHierarchy& h);
std::vector<ClassId> mod_classes(const Buffer& b, const Lexicon& lex,
                                 const SemanticHierarchy& h);

class InstanceDb {
 public:
  // Parses the JSON corpus format (array of documents, each with an array of
  // instances), validates every structural invariant, canonicalizes token
  // case, and builds the indexes. Throws std::runtime_error with document /
  // instance context on malformed records.
  static InstanceDb load(std::string_view corpus_json, const Lexicon& lex,
                         const SemanticHierarchy& h);

  // Same validation and indexing for instances built in memory.
  static InstanceDb build(std::vector<Instance> instances, const Lexicon& lex,
                          const SemanticHierarchy& h);

  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const Instance& at(InstanceId id) const { return instances_.at(static_cast<std::size_t>(id)); }
  const std::vector<Instance>& instances() const { return instances_; }

  // Instances whose verb head equals `verb` (kNullVerbKey for the null
  // verb); empty list for unseen verbs.
  const std::vector<InstanceId>& query_by_verb(std::string_view verb) const;

  // Instances whose verb buffer contains `token` anywhere. Superset of the
  // head bucket; used to prune matching candidates soundly.
  const std::vector<InstanceId>& with_verb_token(std::string_view token) const;

  // All labeled buffers matching `pattern`, in corpus order.
  std::vector<std::pair<InstanceId, BufferRole>> positive_buffers(
      const CnLabel& pattern) const;

  // Count of instances holding at least one buffer labeled under `pattern`.
  std::int64_t positive_instance_count(const CnLabel& pattern) const;

  std::size_t doc_count() const { return docs_.size(); }
  const std::string& doc_id(std::size_t doc) const { return docs_.at(doc).id; }
  // New database restricted to the given documents (by doc ordinal),
  // preserving corpus order.
  InstanceDb subset(const std::vector<std::size_t>& docs) const;

  InstanceId find_instance(std::string_view doc_id, std::string_view instance_id) const;

  std::string to_json() const;

 private:
  struct Doc {
    std::string id;
    std::vector<InstanceId> members;
  };

  void index();

  std::vector<Instance> instances_;
  std::vector<Doc> docs_;
  std::map<std::string, std::vector<InstanceId>, std::less<>> verb_index_;
  std::map<std::string, std::vector<InstanceId>, std::less<>> verb_token_index_;
  std::map<CnLabel, std::vector<std::pair<InstanceId, int>>> label_index_;  // buffer pos
  std::map<std::pair<std::string, std::string>, InstanceId> by_name_;
};

}  // namespace crystal
