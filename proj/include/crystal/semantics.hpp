// Semantic hierarchy and lexicon: a single-rooted tree of semantic classes
// plus a word -> classes mapping. Constraint generalization walks this tree
// (ancestor tests, least common ancestors), so both structures are immutable
// after load and safe for concurrent readers.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace crystal {

using ClassId = std::int32_t;
inline constexpr ClassId kNoClass = -1;

class SemanticHierarchy {
 public:
  // Parses the hierarchy text format: one class per line, `child<TAB>parent`;
  // the root is declared alone on its own line. `#` starts a comment line.
  // Throws std::runtime_error naming the offending line for duplicate
  // classes, unknown parents, cycles, and multiple (or missing) roots.
  static SemanticHierarchy parse(std::string_view text);

  ClassId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }

  // Case-insensitive name lookup; kNoClass when absent.
  ClassId find(std::string_view name) const;
  // Like find, but throws on unknown names.
  ClassId require(std::string_view name) const;

  const std::string& name(ClassId c) const { return node(c).name; }
  ClassId parent(ClassId c) const { return node(c).parent; }
  // Parent steps from c down from the root; root has depth 0.
  int depth(ClassId c) const { return node(c).depth; }

  // True iff a lies on b's parent chain or a == b.
  bool is_ancestor_or_equal(ClassId a, ClassId b) const;

  // Deepest class that is ancestor-or-equal of both; the root is a universal
  // ancestor, so this is total.
  ClassId lca(ClassId a, ClassId b) const;

  // Number of parent steps from `from` up to `to`; throws when `to` is not
  // an ancestor-or-equal of `from`.
  int hops_to_ancestor(ClassId from, ClassId to) const;

  std::string serialize() const;

 private:
  struct Node {
    std::string name;
    ClassId parent = kNoClass;
    int depth = 0;
  };

  const Node& node(ClassId c) const;

  std::vector<Node> nodes_;
  std::map<std::string, ClassId> by_key_;  // folded name -> id
  ClassId root_ = kNoClass;
};

class Lexicon {
 public:
  // Parses `word<TAB>class[;class...]` lines; `#` starts a comment line.
  // Repeated words merge their class sets. Classes must exist in `h`.
  static Lexicon parse(std::string_view text, const SemanticHierarchy& h);

  // Classes of a word with the Root Class filtered out (a root-only mapping
  // is vacuous). Unknown words yield the empty set; the caller treats that
  // as "no class constraint", never as an error.
  const std::vector<ClassId>& classes_of(std::string_view word) const;

  std::size_t size() const { return entries_.size(); }
  void add(std::string_view word, std::vector<ClassId> classes,
           const SemanticHierarchy& h);

  std::string serialize(const SemanticHierarchy& h) const;

 private:
  std::map<std::string, std::vector<ClassId>> entries_;  // folded word -> sorted ids
};

}  // namespace crystal
