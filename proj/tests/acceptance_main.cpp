// Acceptance gate for the dictionary-induction artifact. Runs every release
// criterion end to end, prints one [PASS]/[FAIL] line per criterion, and
// exits nonzero when any criterion fails.
//
// TESTS_DATA_DIR points at the checked-in fixture corpus; CRYSTAL_BIN at the
// command-line binary used by the determinism criterion.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crystal/definition.hpp"
#include "crystal/evaluation.hpp"
#include "crystal/induction.hpp"
#include "crystal/instances.hpp"
#include "crystal/semantics.hpp"
#include "crystal/synthetic.hpp"
#include "crystal/util.hpp"
#include "invariants.hpp"

namespace {

using namespace crystal;
namespace fs = std::filesystem;

std::string data_path(const std::string& name) {
  return std::string(TESTS_DATA_DIR) + "/" + name;
}

struct ClinicalWorld {
  SemanticHierarchy h;
  Lexicon lex;

  ClinicalWorld()
      : h(SemanticHierarchy::parse(read_file(data_path("clinical_mini.hier")))),
        lex(Lexicon::parse(read_file(data_path("clinical_mini.lex")), h)) {}

  InstanceDb corpus(const std::string& name) const {
    return InstanceDb::load(read_file(data_path(name)), lex, h);
  }
};

struct NoisyWorld {
  SemanticHierarchy h;
  Lexicon lex;
  InstanceDb db;
};

// 800 instances from five hidden rules, 10% of the labels dropped; shared by
// the two directional criteria.
const NoisyWorld& noisy_world() {
  static const NoisyWorld* w = [] {
    SyntheticSpec spec;
    spec.hidden_rules = default_hidden_rules(5);
    spec.n_instances = 800;
    spec.distractor_fraction = 0.3;
    spec.label_noise = 0.1;
    spec.seed = 11;
    const SyntheticCorpus sc = generate_synthetic(spec);
    auto* out = new NoisyWorld{SemanticHierarchy::parse(sc.hierarchy_text), Lexicon{}, InstanceDb{}};
    out->lex = Lexicon::parse(sc.lexicon_text, out->h);
    out->db = InstanceDb::load(sc.corpus_json, out->lex, out->h);
    return out;
  }();
  return *w;
}

const CnLabel kFindingPresent{"FINDING", "PRESENT"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --------------------------------------------------------------------------
// Criterion 1: the hand-written dictionary entry extracts the absent-symptom
// phrase from the first worked sentence and rejects the second.
bool worked_dictionary_example(std::string& detail) {
  const ClinicalWorld w;
  const InstanceDb db = w.corpus("denies_nausea_asthma.json");
  const Dictionary dict =
      Dictionary::from_json(read_file(data_path("symptom_absent.dict.json")), w.h);
  if (dict.size() != 1) {
    detail = "expected exactly one definition in the fixture dictionary";
    return false;
  }
  const CnDefinition& d = *dict.definitions().front();

  const Instance& s1 = db.at(db.find_instance("rpt01", "s1"));
  const Instance& s2 = db.at(db.find_instance("rpt01", "s2"));

  const auto e = extract(d, s1, w.lex, w.h);
  if (!e || e->buffer != BufferRole{BufferKind::DirectObject, -1}) {
    detail = "no direct-object extraction from the first sentence";
    return false;
  }
  const std::string phrase = join_tokens(s1.find_role(e->buffer)->tokens);
  if (phrase != "ANY EPISODES OF NAUSEA") {
    detail = "extracted \"" + phrase + "\"";
    return false;
  }
  if (e->label != CnLabel{"SIGN OR SYMPTOM", "ABSENT"}) {
    detail = "wrong label on the extraction";
    return false;
  }
  if (matches(d, s2, w.lex, w.h)) {
    detail = "the dictionary entry wrongly matches the asthma-history sentence";
    return false;
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 2: the initial definition built from the hand-segmented fragment
// reproduces every constraint of that clause exactly.
bool initial_definition_construction(std::string& detail) {
  const ClinicalWorld w;
  const InstanceDb db = w.corpus("unremarkable_fragment.json");
  const Instance& inst = db.at(0);
  const BufferRole pp0{BufferKind::Pp, 0};
  const CnDefinition got =
      build_initial_definition(inst, pp0, *inst.find_role(pp0)->label, w.lex, w.h);

  const ClassId sos = w.h.require("Sign or Symptom");
  const ClassId blr = w.h.require("Body Location or Region");
  std::vector<ClassId> heads{sos, blr};
  std::sort(heads.begin(), heads.end());

  CnDefinition expected;
  expected.label = {"SIGN OR SYMPTOM", "PRESENT"};
  expected.extract_from = {BufferKind::Pp, "WITH"};
  expected.voice = VoiceConstraint::None;
  expected.constraints = {
      BufferConstraints{{BufferKind::Subject, ""}, WordConstraint{{"UNREMARKABLE"}}, {}, {}},
      BufferConstraints{{BufferKind::Pp, "WITH"},
                        WordConstraint{{"THE", "EXCEPTION", "OF", "MILD", "SHORTNESS", "OF",
                                        "BREATH", "AND", "CHRONICALLY", "SWOLLEN", "ANKLES"}},
                        ClassConstraint{heads},
                        ClassConstraint{{sos}}},
  };
  expected.coverage = 1;
  expected.provenance = {{"rpt02", "s1"}};

  if (got != expected) {
    detail = "constructed definition differs from the hand-checked constraints";
    return false;
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 3: unification generalizes classes to least common ancestors,
// drops root-reaching class pairs, and drops non-intersecting word strings.
bool unification_examples(std::string& detail) {
  const ClinicalWorld w;
  const BufferKey dobj{BufferKind::DirectObject, ""};
  const BufferKey subj{BufferKind::Subject, ""};

  const auto def = [&](std::optional<std::vector<std::string>> words,
                       std::optional<std::vector<ClassId>> head) {
    CnDefinition d;
    d.label = {"SIGN OR SYMPTOM", "ABSENT"};
    d.extract_from = dobj;
    d.voice = VoiceConstraint::Active;
    BufferConstraints c{dobj, {}, {}, {}};
    if (words) c.words = WordConstraint{*words};
    if (head) c.head = ClassConstraint{*head};
    d.constraints = {BufferConstraints{subj, WordConstraint{{"PATIENT"}}, {}, {}}, c};
    return d;
  };
  const auto head_of = [&](const CnDefinition& u) {
    const BufferConstraints* c = u.find_constraints(dobj);
    return c && c->head ? c->head->classes : std::vector<ClassId>{};
  };

  const ClassId sos = w.h.require("Sign or Symptom");
  const ClassId ltr = w.h.require("Laboratory or Test Result");
  const ClassId finding = w.h.require("Finding");
  const ClassId dos = w.h.require("Disease or Syndrome");
  const ClassId aa = w.h.require("Acquired Abnormality");
  const ClassId blr = w.h.require("Body Location or Region");

  if (head_of(unify(def({}, {{sos}}), def({}, {{ltr}}), w.h)) !=
      std::vector<ClassId>{finding}) {
    detail = "sibling classes did not lift to their common parent";
    return false;
  }
  std::vector<ClassId> pair{dos, aa};
  std::sort(pair.begin(), pair.end());
  if (head_of(unify(def({}, pair), def({}, {{dos}}), w.h)) != std::vector<ClassId>{dos}) {
    detail = "conjunct sets did not reduce to the shared class";
    return false;
  }
  const CnDefinition rooted =
      unify(def({{"X"}}, {{blr}}), def({{"X"}}, {{sos}}), w.h);
  const BufferConstraints* rc = rooted.find_constraints(dobj);
  if (!rc || rc->head || !rc->words || rc->words->tokens != std::vector<std::string>{"X"}) {
    detail = "a root-reaching class pair was not dropped";
    return false;
  }
  const CnDefinition worded =
      unify(def({{"EPISODES", "OF"}}, {}), def({{"HISTORY"}}, {}), w.h);
  if (worded.find_constraints(dobj) != nullptr) {
    detail = "non-intersecting word constraints were not dropped";
    return false;
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 4: recall and precision arithmetic on the published counts.
bool metric_arithmetic(std::string& detail) {
  const Metrics recall_case{5000, 3000, 3000};
  const Metrics precision_case{0, 4000, 3000};
  if (recall_case.recall() != 0.60) {
    detail = "recall(5000 possible, 3000 correct) != 60%";
    return false;
  }
  if (precision_case.precision() != 0.75) {
    detail = "precision(4000 extracted, 3000 correct) != 75%";
    return false;
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 5: five hidden rules are recovered perfectly from 200 noise-free
// instances and generalize to a fresh sample, within the time budget.
bool synthetic_recovery(std::string& detail) {
  SyntheticSpec spec;
  spec.hidden_rules = default_hidden_rules(5);
  spec.n_instances = 200;
  spec.distractor_fraction = 0.3;
  spec.label_noise = 0.0;
  spec.seed = 42;
  const SyntheticCorpus train_sc = generate_synthetic(spec);
  spec.seed = 43;
  const SyntheticCorpus fresh_sc = generate_synthetic(spec);

  const SemanticHierarchy h = SemanticHierarchy::parse(train_sc.hierarchy_text);
  const Lexicon lex = Lexicon::parse(train_sc.lexicon_text, h);
  const InstanceDb train = InstanceDb::load(train_sc.corpus_json, lex, h);
  const InstanceDb fresh = InstanceDb::load(fresh_sc.corpus_json, lex, h);

  InductionConfig cfg;
  cfg.tolerance = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  const Dictionary dict = induce(train, kFindingPresent, cfg, lex, h);
  const double dt = seconds_since(t0);

  const Metrics m = score(apply_dictionary(dict, fresh, lex, h), fresh, kFindingPresent);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "recall=%.4f precision=%.4f induce=%.2fs defs=%zu",
                m.recall(), m.precision(), dt, dict.size());
  detail = buf;
  return m.recall() == 1.0 && m.precision() == 1.0 && dt < 5.0;
}

// --------------------------------------------------------------------------
// Criterion 6: the randomized invariant suite, at least 1000 cases each.
bool invariant_suite(std::string& detail) {
  struct Row {
    const char* name;
    test::InvariantResult (*run)(std::uint64_t, std::size_t);
    std::uint64_t seed;
  };
  const Row rows[] = {
      {"relaxation extension", &test::check_relaxation_extension, 96180441},
      {"unification covers inputs", &test::check_unification_covers, 96180442},
      {"induction covers positives", &test::check_induction_covers_positives, 96180443},
      {"accepted error rates", &test::check_accepted_error_rates, 96180444},
      {"least common ancestor oracle", &test::check_lca_oracle, 96180445},
      {"word generalization oracles", &test::check_word_generalization, 96180446},
  };
  std::size_t total = 0;
  for (const Row& row : rows) {
    const test::InvariantResult r = row.run(row.seed, 1000);
    if (!r.ok()) {
      detail = std::string(row.name) + ": " + r.failure;
      return false;
    }
    if (r.cases < 1000) {
      detail = std::string(row.name) + ": only " + std::to_string(r.cases) + " cases";
      return false;
    }
    total += r.cases;
  }
  detail = "6 properties, " + std::to_string(total) + " cases";
  return true;
}

// --------------------------------------------------------------------------
// Criterion 7: on noisy data, mean recall never drops and mean precision
// never rises by more than the band as the tolerance grows.
bool tolerance_direction(std::string& detail) {
  const NoisyWorld& w = noisy_world();
  const SplitSpec split{0.9, 20, 5};
  const std::vector<double> tolerances{0.0, 0.1, 0.2, 0.3, 0.4};
  const std::vector<SweepRow> rows = tolerance_sweep(w.db, kFindingPresent, tolerances,
                                                     split, InductionConfig{}, w.lex, w.h);
  std::string got;
  for (const SweepRow& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), " (%.1f: R=%.3f P=%.3f)", r.tolerance, r.mean_recall,
                  r.mean_precision);
    got += buf;
  }
  detail = "20 trials each" + got;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean_recall < rows[i - 1].mean_recall - 0.02) {
      detail = "mean recall dropped between tolerances" + got;
      return false;
    }
    if (rows[i].mean_precision > rows[i - 1].mean_precision + 0.02) {
      detail = "mean precision rose between tolerances" + got;
      return false;
    }
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 8: raising the coverage filter never increases the extracted
// count in any trial and never decreases mean precision beyond the band.
bool coverage_filter_direction(std::string& detail) {
  const NoisyWorld& w = noisy_world();
  const int coverages[] = {2, 5, 10};
  double precision_sum[3] = {0.0, 0.0, 0.0};
  const int trials = 20;

  InductionConfig cfg;
  cfg.tolerance = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto [train_docs, test_docs] =
        partition_docs(w.db.doc_count(), 0.9, 5, static_cast<std::uint64_t>(trial));
    const InstanceDb train = w.db.subset(train_docs);
    const InstanceDb test = w.db.subset(test_docs);
    const Dictionary dict = induce(train, kFindingPresent, cfg, w.lex, w.h);

    std::int64_t prev_extracted = -1;
    for (int i = 0; i < 3; ++i) {
      const Dictionary kept = filter_by_coverage(dict, coverages[i], train, w.lex, w.h);
      const Metrics m = score(apply_dictionary(kept, test, w.lex, w.h), test, kFindingPresent);
      if (prev_extracted >= 0 && m.extracted > prev_extracted) {
        detail = "extracted count grew when the coverage filter tightened (trial " +
                 std::to_string(trial) + ")";
        return false;
      }
      prev_extracted = m.extracted;
      precision_sum[i] += m.precision();
    }
  }

  char buf[96];
  std::snprintf(buf, sizeof(buf), "mean precision %.3f -> %.3f -> %.3f",
                precision_sum[0] / trials, precision_sum[1] / trials,
                precision_sum[2] / trials);
  detail = buf;
  for (int i = 1; i < 3; ++i) {
    if (precision_sum[i] / trials < precision_sum[i - 1] / trials - 0.02) {
      detail = std::string("mean precision fell when the filter tightened: ") + buf;
      return false;
    }
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 9: induction over a 15,000-instance corpus finishes well inside
// the time budget.
bool scale_run(std::string& detail) {
  SyntheticSpec spec;
  spec.hidden_rules = default_hidden_rules(5);
  spec.n_instances = 15000;
  spec.distractor_fraction = 0.3;
  spec.label_noise = 0.0;
  spec.seed = 7;
  const SyntheticCorpus sc = generate_synthetic(spec);
  const SemanticHierarchy h = SemanticHierarchy::parse(sc.hierarchy_text);
  const Lexicon lex = Lexicon::parse(sc.lexicon_text, h);
  const InstanceDb db = InstanceDb::load(sc.corpus_json, lex, h);

  InductionConfig cfg;
  cfg.tolerance = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  const Dictionary dict = induce(db, kFindingPresent, cfg, lex, h);
  const double dt = seconds_since(t0);

  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu instances, induce=%.1fs, defs=%zu", db.size(), dt,
                dict.size());
  detail = buf;
  return dt < 60.0 && !dict.definitions().empty();
}

// --------------------------------------------------------------------------
// Criterion 10: every command, rerun with identical inputs and seed, writes
// byte-identical outputs (including its stdout).
bool command_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "crystal_acceptance";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir);
  const std::string d = dir.string();
  const std::string bin = CRYSTAL_BIN;
  const std::string inputs = " --corpus " + d + "/data/corpus.json --hierarchy " + d +
                             "/data/hierarchy.txt --lexicon " + d + "/data/lexicon.txt";

  const std::vector<std::string> commands = {
      bin + " gen --seed 5 --out-dir " + d + "/data --instances 80 --rules 3" +
          " --distractor-fraction 0.25 --label-noise 0.1 > " + d + "/gen.out 2>&1",
      bin + " induce" + inputs + " --type FINDING --subtype PRESENT --tolerance 0.1" +
          " --min-coverage 2 --seed 3 --out " + d + "/dict.json > " + d + "/induce.out 2>&1",
      bin + " apply" + inputs + " --dictionary " + d + "/dict.json --out " + d +
          "/applied.csv > " + d + "/apply.out 2>&1",
      bin + " sweep" + inputs + " --type FINDING --subtype PRESENT --tolerances 0.0,0.2" +
          " --train-fraction 0.75 --trials 3 --seed 7 --out " + d + "/sweep.csv > " + d +
          "/sweep.out 2>&1",
      bin + " eval" + inputs + " --type FINDING --tolerance 0.1 --train-fraction 0.75" +
          " --trials 2 --seed 9 --out " + d + "/eval.csv > " + d + "/eval.out 2>&1",
      bin + " curve" + inputs + " --type FINDING --subtype PRESENT --fractions 0.5,0.75" +
          " --trials 2 --seed 4 --out " + d + "/curve.csv > " + d + "/curve.out 2>&1",
  };
  const std::vector<std::string> outputs = {
      "data/hierarchy.txt", "data/lexicon.txt", "data/corpus.json", "data/gold.json",
      "dict.json", "applied.csv", "sweep.csv", "eval.csv", "curve.csv",
      "gen.out", "induce.out", "apply.out", "sweep.out", "eval.out", "curve.out",
  };

  const auto run_all = [&]() -> int {
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (std::system(commands[i].c_str()) != 0) return static_cast<int>(i);
    }
    return -1;
  };

  if (const int failed = run_all(); failed >= 0) {
    detail = "command exited nonzero on the first run: " + commands[failed];
    return false;
  }
  std::map<std::string, std::string> snapshot;
  for (const std::string& name : outputs) snapshot[name] = read_file((dir / name).string());

  if (const int failed = run_all(); failed >= 0) {
    detail = "command exited nonzero on the rerun: " + commands[failed];
    return false;
  }
  for (const std::string& name : outputs) {
    if (read_file((dir / name).string()) != snapshot[name]) {
      detail = name + " changed between identical runs";
      return false;
    }
  }
  detail = std::to_string(commands.size()) + " commands, " +
           std::to_string(outputs.size()) + " outputs compared";
  return true;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    bool (*run)(std::string&);
  };
  const Criterion criteria[] = {
      {"worked dictionary example extracts and rejects correctly", &worked_dictionary_example},
      {"initial definition reproduces the fragment's constraints", &initial_definition_construction},
      {"unification generalization examples hold exactly", &unification_examples},
      {"recall and precision arithmetic is exact", &metric_arithmetic},
      {"hidden rules recovered perfectly from clean data", &synthetic_recovery},
      {"randomized invariant suite holds", &invariant_suite},
      {"recall/precision move the right way as tolerance grows", &tolerance_direction},
      {"coverage filter trades recall for precision", &coverage_filter_direction},
      {"15k-instance induction finishes inside the budget", &scale_run},
      {"commands are byte-identical across reruns", &command_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", c.name, detail.empty() ? "" : " - ",
                detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
