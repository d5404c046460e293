#include "crystal/induction.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include "crystal/util.hpp"

namespace crystal {

Dictionary::DefId Dictionary::insert(CnDefinition def) {
  const DefId id = static_cast<DefId>(defs_.size());
  by_verb_[def.verb_key()].push_back(id);
  by_extract_[ExtractKey{def.label, def.extract_from}].push_back(id);
  defs_.push_back(std::move(def));
  ++live_;
  return id;
}

void Dictionary::erase(DefId id) {
  if (!contains(id)) return;
  defs_[static_cast<std::size_t>(id)].reset();
  --live_;
  // Bucket entries are pruned lazily on the next bucket read.
}

bool Dictionary::contains(DefId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < defs_.size() &&
         defs_[static_cast<std::size_t>(id)].has_value();
}

const CnDefinition& Dictionary::at(DefId id) const {
  if (!contains(id)) throw std::invalid_argument("no such definition id");
  return *defs_[static_cast<std::size_t>(id)];
}

std::vector<Dictionary::DefId> Dictionary::ids() const {
  std::vector<DefId> out;
  out.reserve(live_);
  for (std::size_t i = 0; i < defs_.size(); ++i) {
    if (defs_[i]) out.push_back(static_cast<DefId>(i));
  }
  return out;
}

std::vector<const CnDefinition*> Dictionary::definitions() const {
  std::vector<const CnDefinition*> out;
  out.reserve(live_);
  for (const auto& d : defs_) {
    if (d) out.push_back(&*d);
  }
  return out;
}

std::vector<Dictionary::DefId> Dictionary::prune(std::vector<DefId>& bucket) const {
  std::erase_if(bucket, [this](DefId id) { return !contains(id); });
  return bucket;
}

std::vector<Dictionary::DefId> Dictionary::verb_bucket(std::string_view key) const {
  const auto it = by_verb_.find(key);
  if (it == by_verb_.end()) return {};
  return prune(it->second);
}

std::vector<Dictionary::DefId> Dictionary::extraction_bucket(const CnDefinition& d) const {
  const auto it = by_extract_.find(ExtractKey{d.label, d.extract_from});
  if (it == by_extract_.end()) return {};
  return prune(it->second);
}

std::string Dictionary::to_json(const SemanticHierarchy& h) const {
  std::vector<CnDefinition> defs;
  defs.reserve(live_);
  for (const auto& d : defs_) {
    if (d) defs.push_back(*d);
  }
  return definitions_to_json(defs, h);
}

Dictionary Dictionary::from_json(std::string_view text, const SemanticHierarchy& h) {
  Dictionary dict;
  for (CnDefinition& d : definitions_from_json(text, h)) {
    dict.insert(std::move(d));
  }
  return dict;
}

CnDefinition build_initial_definition(const Instance& inst, const BufferRole& target,
                                      const CnLabel& label, const Lexicon& lex,
                                      const SemanticHierarchy& h) {
  const Buffer* tb = inst.find_role(target);
  if (tb == nullptr || !tb->label || !label_covers(label, *tb->label)) {
    throw std::invalid_argument("initial definition: target buffer of " + inst.doc_id +
                                "/" + inst.instance_id + " does not carry the label");
  }

  CnDefinition d;
  d.label = label;
  d.extract_from =
      BufferKey{target.kind, target.kind == BufferKind::Pp ? tb->prep : std::string{}};
  d.voice = to_voice_constraint(inst.voice);
  d.coverage = 1;
  d.provenance = {{inst.doc_id, inst.instance_id}};

  for (const Buffer& b : inst.buffers) {
    BufferConstraints bc;
    bc.key = BufferKey{b.role.kind, b.role.kind == BufferKind::Pp ? b.prep : std::string{}};
    if (!b.tokens.empty()) bc.words = WordConstraint{b.tokens};
    if (auto hc = normalize_classes(head_classes(b, lex, h), h); !hc.empty()) {
      bc.head = ClassConstraint{std::move(hc)};
    }
    if (auto mc = normalize_classes(mod_classes(b, lex, h), h); !mc.empty()) {
      bc.mods = ClassConstraint{std::move(mc)};
    }
    const auto existing =
        std::find_if(d.constraints.begin(), d.constraints.end(),
                     [&](const BufferConstraints& e) { return e.key == bc.key; });
    if (existing == d.constraints.end()) {
      d.constraints.push_back(std::move(bc));
    } else if (&b == tb) {
      // Two prepositional phrases sharing a preposition collapse onto one
      // constraint entry; the extraction phrase's own constraints win.
      *existing = std::move(bc);
    }
  }
  std::sort(d.constraints.begin(), d.constraints.end(),
            [](const BufferConstraints& a, const BufferConstraints& b) {
              return a.key < b.key;
            });
  return d;
}

namespace {

// Longest common contiguous subsequence; ties resolve to the longest match
// starting earliest in w1, then earliest in w2.
std::vector<std::string> common_subsequence(const std::vector<std::string>& w1,
                                            const std::vector<std::string>& w2) {
  std::size_t best_len = 0;
  std::size_t best_end = 0;  // exclusive end in w1
  std::vector<std::size_t> prev(w2.size() + 1, 0);
  std::vector<std::size_t> cur(w2.size() + 1, 0);
  for (std::size_t i = 1; i <= w1.size(); ++i) {
    for (std::size_t j = 1; j <= w2.size(); ++j) {
      cur[j] = w1[i - 1] == w2[j - 1] ? prev[j - 1] + 1 : 0;
      if (cur[j] > best_len) {
        best_len = cur[j];
        best_end = i;
      }
    }
    std::swap(prev, cur);
  }
  return {w1.begin() + static_cast<std::ptrdiff_t>(best_end - best_len),
          w1.begin() + static_cast<std::ptrdiff_t>(best_end)};
}

std::vector<std::string> common_suffix(const std::vector<std::string>& w1,
                                       const std::vector<std::string>& w2) {
  std::size_t k = 0;
  while (k < w1.size() && k < w2.size() &&
         w1[w1.size() - 1 - k] == w2[w2.size() - 1 - k]) {
    ++k;
  }
  return {w1.end() - static_cast<std::ptrdiff_t>(k), w1.end()};
}

// The word constraint both sides can keep. Verb phrases generalize from the
// back (auxiliaries fall away before the verb head does); other buffers keep
// their longest common contiguous run.
std::vector<std::string> unified_words(const BufferKey& key,
                                       const std::vector<std::string>& w1,
                                       const std::vector<std::string>& w2) {
  if (key.kind == BufferKind::Verb) return common_suffix(w1, w2);
  return common_subsequence(w1, w2);
}

int full_drop_cost(const SemanticHierarchy& h, const BufferConstraints& bc) {
  int cost = 0;
  if (bc.words) cost += static_cast<int>(bc.words->tokens.size()) + 1;
  for (const auto& cc : {bc.head, bc.mods}) {
    if (!cc) continue;
    for (ClassId c : cc->classes) cost += h.depth(c);
    cost += 1;
  }
  if (bc.key.kind == BufferKind::Pp) cost += 1;  // the preposition slot
  return cost;
}

// Generalization distance between two class constraints: every pair is
// lifted to its least common ancestor, paying the hops on both sides; a pair
// that only meets at the root pays both full depths (the constraint pair is
// dropped outright).
int class_pair_cost(const SemanticHierarchy& h, const ClassConstraint& a,
                    const ClassConstraint& b) {
  int cost = 0;
  for (ClassId x : a.classes) {
    for (ClassId y : b.classes) {
      const ClassId u = h.lca(x, y);
      if (u == h.root()) {
        cost += h.depth(x) + h.depth(y);
      } else {
        cost += (h.depth(x) - h.depth(u)) + (h.depth(y) - h.depth(u));
      }
    }
  }
  return cost;
}

int shared_key_cost(const SemanticHierarchy& h, const BufferConstraints& a,
                    const BufferConstraints& b) {
  int cost = 0;
  if (a.words && b.words) {
    const std::size_t keep = unified_words(a.key, a.words->tokens, b.words->tokens).size();
    cost += static_cast<int>(a.words->tokens.size() - keep) +
            static_cast<int>(b.words->tokens.size() - keep);
  } else if (a.words || b.words) {
    const auto& w = a.words ? *a.words : *b.words;
    cost += static_cast<int>(w.tokens.size()) + 1;
  }
  for (const auto& [ca, cb] : {std::pair{&a.head, &b.head}, std::pair{&a.mods, &b.mods}}) {
    if (*ca && *cb) {
      cost += class_pair_cost(h, **ca, **cb);
    } else if (*ca || *cb) {
      const ClassConstraint& cc = *ca ? **ca : **cb;
      for (ClassId c : cc.classes) cost += h.depth(c);
      cost += 1;
    }
  }
  return cost;
}

bool compatible(const CnDefinition& a, const CnDefinition& b) {
  if (a.label != b.label || a.extract_from != b.extract_from) return false;
  const bool a_fixed = a.voice != VoiceConstraint::Unconstrained;
  const bool b_fixed = b.voice != VoiceConstraint::Unconstrained;
  return !(a_fixed && b_fixed && a.voice != b.voice);
}

}  // namespace

std::optional<int> similarity(const CnDefinition& a, const CnDefinition& b,
                              const SemanticHierarchy& h) {
  if (!compatible(a, b)) return std::nullopt;
  int cost = 0;
  if ((a.voice == VoiceConstraint::Unconstrained) !=
      (b.voice == VoiceConstraint::Unconstrained)) {
    cost += 1;
  }
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.constraints.size() || j < b.constraints.size()) {
    if (j == b.constraints.size() ||
        (i < a.constraints.size() && a.constraints[i].key < b.constraints[j].key)) {
      cost += full_drop_cost(h, a.constraints[i]);
      ++i;
    } else if (i == a.constraints.size() || b.constraints[j].key < a.constraints[i].key) {
      cost += full_drop_cost(h, b.constraints[j]);
      ++j;
    } else {
      cost += shared_key_cost(h, a.constraints[i], b.constraints[j]);
      ++i;
      ++j;
    }
  }
  return cost;
}

CnDefinition unify(const CnDefinition& a, const CnDefinition& b,
                   const SemanticHierarchy& h) {
  if (!compatible(a, b)) throw std::invalid_argument("unify: incompatible definitions");

  CnDefinition u;
  u.label = a.label;
  u.extract_from = a.extract_from;
  u.voice = a.voice == b.voice ? a.voice : VoiceConstraint::Unconstrained;
  u.coverage = a.coverage + b.coverage;
  u.provenance = a.provenance;
  u.provenance.insert(u.provenance.end(), b.provenance.begin(), b.provenance.end());
  std::sort(u.provenance.begin(), u.provenance.end());
  u.provenance.erase(std::unique(u.provenance.begin(), u.provenance.end()),
                     u.provenance.end());

  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.constraints.size() && j < b.constraints.size()) {
    const BufferConstraints& ca = a.constraints[i];
    const BufferConstraints& cb = b.constraints[j];
    if (ca.key < cb.key) {
      ++i;  // constrained on one side only: dropped
      continue;
    }
    if (cb.key < ca.key) {
      ++j;
      continue;
    }
    BufferConstraints uc;
    uc.key = ca.key;
    if (ca.words && cb.words) {
      auto words = unified_words(uc.key, ca.words->tokens, cb.words->tokens);
      if (!words.empty()) uc.words = WordConstraint{std::move(words)};
    }
    for (const auto& [xa, xb, slot] :
         {std::tuple{&ca.head, &cb.head, &uc.head}, std::tuple{&ca.mods, &cb.mods, &uc.mods}}) {
      if (!*xa || !*xb) continue;
      std::vector<ClassId> lifted;
      for (ClassId x : (*xa)->classes) {
        for (ClassId y : (*xb)->classes) {
          const ClassId u2 = h.lca(x, y);
          if (u2 != h.root()) lifted.push_back(u2);
        }
      }
      lifted = normalize_classes(std::move(lifted), h);
      if (!lifted.empty()) *slot = ClassConstraint{std::move(lifted)};
    }
    if (!uc.vacuous()) u.constraints.push_back(std::move(uc));
    ++i;
    ++j;
  }
  return u;
}

ErrorReport error_rate(const CnDefinition& d, const InstanceDb& db, const Lexicon& lex,
                       const SemanticHierarchy& h) {
  ErrorReport rep;
  const auto test = [&](InstanceId id) {
    const Instance& inst = db.at(id);
    const std::optional<Extraction> e = extract(d, inst, lex, h);
    if (!e) return;
    const Buffer* b = inst.find_role(e->buffer);
    if (b->label && label_covers(d.label, *b->label)) {
      ++rep.hits;
    } else {
      ++rep.errors;
    }
  };

  const std::string vkey = d.verb_key();
  if (vkey == kNullVerbKey) {
    for (InstanceId id : db.query_by_verb(kNullVerbKey)) test(id);
  } else if (vkey == kAnyVerbKey) {
    for (std::size_t i = 0; i < db.size(); ++i) test(static_cast<InstanceId>(i));
  } else {
    // Every match must contain all the verb constraint's tokens, so the
    // rarest token's bucket is a sound superset of the matches.
    const BufferConstraints* vc = d.find_constraints(BufferKey{BufferKind::Verb, ""});
    const std::vector<InstanceId>* best = nullptr;
    for (const std::string& t : vc->words->tokens) {
      const std::vector<InstanceId>& bucket = db.with_verb_token(t);
      if (best == nullptr || bucket.size() < best->size()) best = &bucket;
    }
    for (InstanceId id : *best) test(id);
  }
  return rep;
}

namespace {

struct RankedCandidate {
  int cost = 0;
  std::pair<std::string, std::string> provenance;
  Dictionary::DefId id = -1;

  bool operator<(const RankedCandidate& o) const {
    return std::tie(cost, provenance, id) < std::tie(o.cost, o.provenance, o.id);
  }
};

// Compatible candidates ordered by ascending relaxation cost. Same-verb
// candidates come first and exclude cross-verb ones entirely when present:
// dropping the verb word constraint is a last resort. Both buckets hold ids
// in ascending order, so the same-verb set is a plain sorted intersection;
// scoring only that set keeps the common case cheap on large dictionaries.
std::vector<Dictionary::DefId> ranked_candidates(const CnDefinition& d,
                                                 const Dictionary& dict,
                                                 const SemanticHierarchy& h) {
  const std::string vkey = d.verb_key();
  const std::vector<Dictionary::DefId> extract_ids = dict.extraction_bucket(d);
  const std::vector<Dictionary::DefId> verb_ids = dict.verb_bucket(vkey);
  std::vector<Dictionary::DefId> same_ids;
  std::set_intersection(extract_ids.begin(), extract_ids.end(), verb_ids.begin(),
                        verb_ids.end(), std::back_inserter(same_ids));

  std::vector<RankedCandidate> ranked;
  const auto score = [&](const std::vector<Dictionary::DefId>& ids, bool cross_only) {
    for (Dictionary::DefId id : ids) {
      const CnDefinition& c = dict.at(id);
      if (cross_only && c.verb_key() == vkey) continue;
      const std::optional<int> cost = similarity(d, c, h);
      if (!cost) continue;
      ranked.push_back(RankedCandidate{
          *cost,
          c.provenance.empty() ? std::pair<std::string, std::string>{}
                               : c.provenance.front(),
          id});
    }
  };
  score(same_ids, false);
  if (ranked.empty()) score(extract_ids, true);

  std::sort(ranked.begin(), ranked.end());
  std::vector<Dictionary::DefId> out;
  out.reserve(ranked.size());
  for (const RankedCandidate& r : ranked) out.push_back(r.id);
  return out;
}

}  // namespace

std::optional<Dictionary::DefId> find_most_similar(const CnDefinition& d,
                                                   const Dictionary& dict,
                                                   const SemanticHierarchy& h) {
  const std::vector<Dictionary::DefId> ranked = ranked_candidates(d, dict, h);
  if (ranked.empty()) return std::nullopt;
  return ranked.front();
}

Dictionary induce(const InstanceDb& db, const CnLabel& target,
                  const InductionConfig& cfg, const Lexicon& lex,
                  const SemanticHierarchy& h, const AcceptTrace& trace) {
  Dictionary dict;

  auto positives = db.positive_buffers(target);
  std::sort(positives.begin(), positives.end(),
            [&](const std::pair<InstanceId, BufferRole>& x,
                const std::pair<InstanceId, BufferRole>& y) {
              const Instance& a = db.at(x.first);
              const Instance& b = db.at(y.first);
              return std::tie(a.doc_id, a.instance_id, x.second) <
                     std::tie(b.doc_id, b.instance_id, y.second);
            });

  std::vector<Dictionary::DefId> queue;
  queue.reserve(positives.size());
  for (const auto& [id, role] : positives) {
    const Instance& inst = db.at(id);
    const Buffer* b = inst.find_role(role);
    queue.push_back(
        dict.insert(build_initial_definition(inst, role, *b->label, lex, h)));
  }

  for (Dictionary::DefId seed : queue) {
    // Skip definitions an earlier accepted unification already covered.
    if (!dict.contains(seed)) continue;
    CnDefinition d = dict.at(seed);
    dict.erase(seed);

    while (true) {
      bool accepted = false;
      for (Dictionary::DefId cand : ranked_candidates(d, dict, h)) {
        CnDefinition u = unify(d, dict.at(cand), h);
        const ErrorReport rep = error_rate(u, db, lex, h);
        if (rep.rate() > cfg.tolerance) {
          if (cfg.retry_next_similar) continue;
          break;
        }
        if (trace) trace(u, rep);
        for (Dictionary::DefId covered : dict.extraction_bucket(u)) {
          if (subsumes(u, dict.at(covered), h)) dict.erase(covered);
        }
        d = std::move(u);
        accepted = true;
        break;
      }
      if (!accepted) break;
    }
    dict.insert(std::move(d));
  }
  return dict;
}

std::vector<std::int64_t> recomputed_coverage(const Dictionary& dict,
                                              const InstanceDb& db, const Lexicon& lex,
                                              const SemanticHierarchy& h) {
  std::vector<std::int64_t> out;
  for (Dictionary::DefId id : dict.ids()) {
    out.push_back(error_rate(dict.at(id), db, lex, h).hits);
  }
  return out;
}

Dictionary filter_by_coverage(const Dictionary& dict, int min_coverage,
                              const InstanceDb& db, const Lexicon& lex,
                              const SemanticHierarchy& h) {
  const std::vector<std::int64_t> cov = recomputed_coverage(dict, db, lex, h);
  Dictionary out;
  std::size_t i = 0;
  for (Dictionary::DefId id : dict.ids()) {
    if (cov[i++] >= min_coverage) out.insert(dict.at(id));
  }
  return out;
}

}  // namespace crystal
