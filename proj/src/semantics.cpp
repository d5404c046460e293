#include "crystal/semantics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "crystal/util.hpp"

namespace crystal {

namespace {

[[noreturn]] void fail_line(std::size_t line_no, const std::string& msg) {
  throw std::runtime_error("hierarchy line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

const SemanticHierarchy::Node& SemanticHierarchy::node(ClassId c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= nodes_.size()) {
    throw std::invalid_argument("unknown semantic class id " + std::to_string(c));
  }
  return nodes_[static_cast<std::size_t>(c)];
}

ClassId SemanticHierarchy::find(std::string_view name) const {
  const auto it = by_key_.find(to_upper(trim(name)));
  return it == by_key_.end() ? kNoClass : it->second;
}

ClassId SemanticHierarchy::require(std::string_view name) const {
  const ClassId c = find(name);
  if (c == kNoClass) {
    throw std::runtime_error("unknown semantic class: " + std::string(name));
  }
  return c;
}

SemanticHierarchy SemanticHierarchy::parse(std::string_view text) {
  SemanticHierarchy h;
  struct Decl {
    std::string parent_name;  // empty = root declaration
    std::size_t line_no = 0;
  };
  std::vector<Decl> decls;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    const std::size_t tab = stripped.find('\t');
    std::string_view child = trim(stripped.substr(0, tab));
    std::string_view parent =
        tab == std::string_view::npos ? std::string_view{} : trim(stripped.substr(tab + 1));
    if (child.empty()) fail_line(line_no, "missing class name");
    if (parent.find('\t') != std::string_view::npos) {
      fail_line(line_no, "too many fields (expected child<TAB>parent)");
    }

    const std::string key = to_upper(child);
    if (h.by_key_.contains(key)) {
      fail_line(line_no, "duplicate class '" + std::string(child) + "'");
    }
    const ClassId id = static_cast<ClassId>(h.nodes_.size());
    h.nodes_.push_back(Node{std::string(child), kNoClass, 0});
    h.by_key_.emplace(key, id);
    decls.push_back(Decl{std::string(parent), line_no});
  }

  if (h.nodes_.empty()) throw std::runtime_error("hierarchy: no classes declared");

  // Resolve parents, then check tree shape.
  for (std::size_t i = 0; i < h.nodes_.size(); ++i) {
    const Decl& d = decls[i];
    if (d.parent_name.empty()) continue;
    const auto it = h.by_key_.find(to_upper(d.parent_name));
    if (it == h.by_key_.end()) {
      fail_line(d.line_no, "unknown parent '" + d.parent_name + "'");
    }
    h.nodes_[i].parent = it->second;
  }

  // Cycle check: walk each parent chain with three-color marking.
  std::vector<int> state(h.nodes_.size(), 0);  // 0 fresh, 1 on path, 2 done
  for (std::size_t i = 0; i < h.nodes_.size(); ++i) {
    std::vector<ClassId> path;
    ClassId cur = static_cast<ClassId>(i);
    while (cur != kNoClass && state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = h.nodes_[static_cast<std::size_t>(cur)].parent;
    }
    if (cur != kNoClass && state[static_cast<std::size_t>(cur)] == 1) {
      fail_line(decls[static_cast<std::size_t>(cur)].line_no,
                "cycle detected through class '" +
                    h.nodes_[static_cast<std::size_t>(cur)].name + "'");
    }
    for (ClassId c : path) state[static_cast<std::size_t>(c)] = 2;
  }

  for (std::size_t i = 0; i < h.nodes_.size(); ++i) {
    if (h.nodes_[i].parent != kNoClass) continue;
    if (h.root_ != kNoClass) {
      fail_line(decls[i].line_no, "multiple roots ('" +
                                       h.nodes_[static_cast<std::size_t>(h.root_)].name +
                                       "' and '" + h.nodes_[i].name + "')");
    }
    h.root_ = static_cast<ClassId>(i);
  }
  // A cycle-free forest with no root is impossible, but guard anyway.
  if (h.root_ == kNoClass) throw std::runtime_error("hierarchy: no root class");

  // Depths, parents-first. Parent chains are acyclic so this terminates.
  std::vector<int> depth(h.nodes_.size(), -1);
  for (std::size_t i = 0; i < h.nodes_.size(); ++i) {
    std::vector<std::size_t> chain;
    std::size_t cur = i;
    while (depth[cur] < 0) {
      chain.push_back(cur);
      const ClassId p = h.nodes_[cur].parent;
      if (p == kNoClass) {
        depth[cur] = 0;
        chain.pop_back();
        break;
      }
      cur = static_cast<std::size_t>(p);
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      depth[*it] = depth[static_cast<std::size_t>(h.nodes_[*it].parent)] + 1;
    }
  }
  for (std::size_t i = 0; i < h.nodes_.size(); ++i) h.nodes_[i].depth = depth[i];
  return h;
}

bool SemanticHierarchy::is_ancestor_or_equal(ClassId a, ClassId b) const {
  node(a);
  ClassId cur = b;
  while (cur != kNoClass) {
    if (cur == a) return true;
    cur = node(cur).parent;
  }
  return false;
}

ClassId SemanticHierarchy::lca(ClassId a, ClassId b) const {
  int da = depth(a);
  int db = depth(b);
  while (da > db) {
    a = parent(a);
    --da;
  }
  while (db > da) {
    b = parent(b);
    --db;
  }
  while (a != b) {
    a = parent(a);
    b = parent(b);
  }
  return a;
}

int SemanticHierarchy::hops_to_ancestor(ClassId from, ClassId to) const {
  node(to);
  int hops = 0;
  ClassId cur = from;
  while (cur != kNoClass) {
    if (cur == to) return hops;
    cur = node(cur).parent;
    ++hops;
  }
  throw std::invalid_argument("'" + name(to) + "' is not an ancestor of '" +
                              name(from) + "'");
}

std::string SemanticHierarchy::serialize() const {
  std::ostringstream out;
  for (const Node& n : nodes_) {
    if (n.parent == kNoClass) {
      out << n.name << '\n';
    } else {
      out << n.name << '\t' << nodes_[static_cast<std::size_t>(n.parent)].name << '\n';
    }
  }
  return std::move(out).str();
}

Lexicon Lexicon::parse(std::string_view text, const SemanticHierarchy& h) {
  Lexicon lex;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;

    const std::size_t tab = stripped.find('\t');
    if (tab == std::string_view::npos) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": expected word<TAB>class[;class...]");
    }
    const std::string_view word = trim(stripped.substr(0, tab));
    if (word.empty()) {
      throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                               ": missing word");
    }
    std::vector<ClassId> classes;
    std::string_view rest = stripped.substr(tab + 1);
    while (!rest.empty()) {
      const std::size_t semi = rest.find(';');
      const std::string_view cname =
          trim(semi == std::string_view::npos ? rest : rest.substr(0, semi));
      rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
      if (cname.empty()) continue;
      const ClassId c = h.find(cname);
      if (c == kNoClass) {
        throw std::runtime_error("lexicon line " + std::to_string(line_no) +
                                 ": unknown class '" + std::string(cname) + "'");
      }
      classes.push_back(c);
    }
    lex.add(word, std::move(classes), h);
  }
  return lex;
}

void Lexicon::add(std::string_view word, std::vector<ClassId> classes,
                  const SemanticHierarchy& h) {
  // The root class is vacuous and never stored.
  std::erase(classes, h.root());
  auto& entry = entries_[to_upper(trim(word))];
  entry.insert(entry.end(), classes.begin(), classes.end());
  std::sort(entry.begin(), entry.end());
  entry.erase(std::unique(entry.begin(), entry.end()), entry.end());
}

const std::vector<ClassId>& Lexicon::classes_of(std::string_view word) const {
  static const std::vector<ClassId> kEmpty;
  const auto it = entries_.find(to_upper(trim(word)));
  return it == entries_.end() ? kEmpty : it->second;
}

std::string Lexicon::serialize(const SemanticHierarchy& h) const {
  std::ostringstream out;
  for (const auto& [word, classes] : entries_) {
    out << word << '\t';
    if (classes.empty()) {
      out << h.name(h.root());
    } else {
      for (std::size_t i = 0; i < classes.size(); ++i) {
        if (i > 0) out << ';';
        out << h.name(classes[i]);
      }
    }
    out << '\n';
  }
  return std::move(out).str();
}

}  // namespace crystal
