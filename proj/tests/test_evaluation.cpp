#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crystal/evaluation.hpp"
#include "crystal/induction.hpp"
#include "crystal/instances.hpp"
#include "crystal/synthetic.hpp"
#include "crystal/util.hpp"
#include "test_support.hpp"

using namespace crystal;
using namespace crystal::test;

namespace {

const CnLabel kAbsent{"SIGN OR SYMPTOM", "ABSENT"};
const CnLabel kFinding{"FINDING", "PRESENT"};

struct SyntheticFixture {
  SemanticHierarchy h;
  Lexicon lex;
  InstanceDb db;

  explicit SyntheticFixture(const SyntheticSpec& spec)
      : SyntheticFixture(generate_synthetic(spec)) {}

 private:
  explicit SyntheticFixture(const SyntheticCorpus& c)
      : h(SemanticHierarchy::parse(c.hierarchy_text)),
        lex(Lexicon::parse(c.lexicon_text, h)),
        db(InstanceDb::load(c.corpus_json, lex, h)) {}
};

}  // namespace

TEST_CASE("recall and precision follow from the three counters") {
  const Metrics m{5000, 4000, 3000};
  CHECK(m.recall() == 0.6);
  CHECK(m.precision() == 0.75);

  // Conventions for empty denominators.
  CHECK(Metrics{0, 10, 0}.recall() == 0.0);
  CHECK(Metrics{10, 0, 0}.precision() == 0.0);
  CHECK(Metrics{}.recall() == 0.0);
  CHECK(Metrics{}.precision() == 0.0);
}

TEST_CASE("score counts distinct extractions and checks the extracted buffer's label") {
  const ClinicalFixture fx;
  const InstanceDb db = fx.corpus("denies_nausea_asthma.json");
  const BufferRole dobj{BufferKind::DirectObject, -1};

  std::vector<Extraction> extractions = {
      // Right buffer, carries the label: counted and correct.
      Extraction{0, "rpt01", "s1", dobj, kAbsent},
      // Unlabeled buffer: counted, not correct.
      Extraction{1, "rpt01", "s2", dobj, kAbsent},
      // Different concept: invisible to this query.
      Extraction{0, "rpt01", "s1", dobj, CnLabel{"DIAGNOSIS", "X"}},
      // Buffer the instance does not have: counted, not correct.
      Extraction{0, "rpt01", "s1", BufferRole{BufferKind::Pp, 3}, kAbsent},
  };

  const Metrics m = score(extractions, db, kAbsent);
  CHECK(m.possible == 1);
  CHECK(m.extracted == 3);
  CHECK(m.correct == 1);

  // A type-only target covers every subtype of the type.
  const Metrics by_type = score(extractions, db, CnLabel{"SIGN OR SYMPTOM", ""});
  CHECK(by_type.possible == 1);
  CHECK(by_type.extracted == 3);
  CHECK(by_type.correct == 1);

  CHECK(score({}, db, kAbsent).extracted == 0);
}

TEST_CASE("apply_dictionary dedupes across definitions and sorts by corpus order") {
  const ClinicalFixture fx;
  const InstanceDb db = fx.corpus("denies_with_noncompliance.json");

  CnDefinition by_class;
  by_class.label = kAbsent;
  by_class.extract_from = {BufferKind::DirectObject, ""};
  by_class.voice = VoiceConstraint::Active;
  by_class.constraints = {
      BufferConstraints{{BufferKind::DirectObject, ""}, {},
                        ClassConstraint{{fx.h.require("Sign or Symptom")}}, {}},
  };
  CnDefinition by_words = by_class;
  by_words.constraints = {
      BufferConstraints{{BufferKind::DirectObject, ""},
                        WordConstraint{{"NAUSEA"}}, {}, {}},
  };

  Dictionary dict;
  dict.insert(by_class);
  dict.insert(by_words);

  // by_class extracts the object of s1 and s2; by_words extracts s1 again.
  const std::vector<Extraction> out = apply_dictionary(dict, db, fx.lex, fx.h);
  REQUIRE(out.size() == 2);
  CHECK(out[0].instance == 0);
  CHECK(out[0].instance_id == "s1");
  CHECK(out[1].instance == 1);
  CHECK(out[1].instance_id == "s2");
  CHECK(out[0].buffer == BufferRole{BufferKind::DirectObject, -1});
  CHECK(out[0].label == kAbsent);

  CHECK(apply_dictionary(Dictionary{}, db, fx.lex, fx.h).empty());
}

TEST_CASE("evaluate_split induces on train and scores on held-out test") {
  const ClinicalFixture fx;
  const InstanceDb train = fx.corpus("denies_pair.json");
  const InstanceDb test = fx.corpus("denies_nausea_asthma.json");

  // The induced definition pins the subject words THE PATIENT, so it accepts
  // the labeled test clause and rejects the lookalike whose subject is the
  // bare word PATIENT.
  const Metrics m = evaluate_split(train, test, kAbsent, InductionConfig{}, fx.lex, fx.h);
  CHECK(m.possible == 1);
  CHECK(m.extracted == 1);
  CHECK(m.correct == 1);
  CHECK(m.recall() == 1.0);
  CHECK(m.precision() == 1.0);

  SUBCASE("an unreachable coverage floor silences the dictionary") {
    InductionConfig cfg;
    cfg.min_coverage = 3;  // the only definition covers 2 training clauses
    const Metrics none = evaluate_split(train, test, kAbsent, cfg, fx.lex, fx.h);
    CHECK(none.possible == 1);
    CHECK(none.extracted == 0);
    CHECK(none.correct == 0);
    CHECK(none.recall() == 0.0);
    CHECK(none.precision() == 0.0);
  }
}

TEST_CASE("partition_docs splits deterministically with both sides non-empty") {
  const auto [train, test] = partition_docs(10, 0.9, 42, 0);
  CHECK(train.size() == 9);
  CHECK(test.size() == 1);

  // Union is exactly the document range, each side sorted.
  std::vector<std::size_t> all = train;
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  const std::vector<std::size_t> expect = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(all == expect);
  CHECK(std::is_sorted(train.begin(), train.end()));

  // Same arguments, same partition; the trial index changes it.
  CHECK(partition_docs(10, 0.9, 42, 0) == std::make_pair(train, test));
  std::set<std::size_t> test_docs;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto p = partition_docs(10, 0.9, 42, trial);
    test_docs.insert(p.second.at(0));
  }
  CHECK(test_docs.size() > 1);

  SUBCASE("the split point clamps so neither side is empty") {
    CHECK(partition_docs(2, 0.99, 0, 0).first.size() == 1);
    CHECK(partition_docs(2, 0.01, 0, 0).second.size() == 1);
    const auto half = partition_docs(3, 0.5, 0, 0);
    CHECK(half.first.size() == 2);  // round(1.5) rounds away from zero
    CHECK(half.second.size() == 1);
  }
  SUBCASE("degenerate arguments are rejected") {
    CHECK_THROWS_AS(partition_docs(1, 0.5, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(partition_docs(0, 0.5, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(partition_docs(10, 0.0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(partition_docs(10, 1.0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(partition_docs(10, -0.3, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(partition_docs(10, 1.5, 0, 0), std::invalid_argument);
  }
}

TEST_CASE("tolerance_sweep rows equal per-trial evaluation means on shared partitions") {
  SyntheticSpec spec;
  spec.hidden_rules = default_hidden_rules(3);
  spec.n_instances = 48;
  spec.seed = 9;
  const SyntheticFixture fx(spec);

  const std::vector<double> tolerances = {0.0, 0.2};
  SplitSpec split;
  split.train_fraction = 0.75;
  split.trials = 3;
  split.seed = 7;

  const std::vector<SweepRow> rows = tolerance_sweep(
      fx.db, kFinding, tolerances, split, InductionConfig{}, fx.lex, fx.h);
  REQUIRE(rows.size() == tolerances.size());

  for (std::size_t i = 0; i < tolerances.size(); ++i) {
    CHECK(rows[i].tolerance == tolerances[i]);
    double recall_sum = 0.0;
    double precision_sum = 0.0;
    for (int t = 0; t < split.trials; ++t) {
      const auto [train_docs, test_docs] = partition_docs(
          fx.db.doc_count(), split.train_fraction, split.seed,
          static_cast<std::uint64_t>(t));
      InductionConfig cfg;
      cfg.tolerance = tolerances[i];
      const Metrics m = evaluate_split(fx.db.subset(train_docs), fx.db.subset(test_docs),
                                       kFinding, cfg, fx.lex, fx.h);
      recall_sum += m.recall();
      precision_sum += m.precision();
    }
    CHECK(rows[i].mean_recall ==
          doctest::Approx(recall_sum / split.trials).epsilon(1e-12));
    CHECK(rows[i].mean_precision ==
          doctest::Approx(precision_sum / split.trials).epsilon(1e-12));
  }
}

TEST_CASE("learning_curve reports one row per training fraction") {
  SyntheticSpec spec;
  spec.hidden_rules = default_hidden_rules(2);
  spec.n_instances = 40;
  spec.seed = 5;
  const SyntheticFixture fx(spec);

  const std::vector<double> fractions = {0.5, 0.75};
  const std::vector<CurveRow> rows =
      learning_curve(fx.db, kFinding, fractions, 2, 3, InductionConfig{}, fx.lex, fx.h);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].train_fraction == 0.5);
  CHECK(rows[1].train_fraction == 0.75);

  // Cross-check the first row against its two partitions.
  double recall_sum = 0.0;
  double positives_sum = 0.0;
  for (int t = 0; t < 2; ++t) {
    const auto [train_docs, test_docs] =
        partition_docs(fx.db.doc_count(), 0.5, 3, static_cast<std::uint64_t>(t));
    const InstanceDb train = fx.db.subset(train_docs);
    positives_sum += static_cast<double>(train.positive_instance_count(kFinding));
    recall_sum += evaluate_split(train, fx.db.subset(test_docs), kFinding,
                                 InductionConfig{}, fx.lex, fx.h)
                      .recall();
  }
  CHECK(rows[0].mean_positive_instances == doctest::Approx(positives_sum / 2).epsilon(1e-12));
  CHECK(rows[0].mean_recall == doctest::Approx(recall_sum / 2).epsilon(1e-12));
  CHECK(rows[0].mean_positive_instances > 0.0);
}

TEST_CASE("sweep csv uses fixed two and four decimal columns") {
  const std::vector<SweepRow> rows = {
      {0.0, 1.0, 0.9876},
      {0.25, 0.5, 0.3333},
  };
  CHECK(sweep_to_csv(rows) ==
        "tolerance,mean_recall,mean_precision\n"
        "0.00,1.0000,0.9876\n"
        "0.25,0.5000,0.3333\n");
  CHECK(sweep_to_csv({}) == "tolerance,mean_recall,mean_precision\n");
}

TEST_CASE("curve csv uses fixed two and four decimal columns") {
  const std::vector<CurveRow> rows = {{0.9, 12.5, 1.0, 0.875}};
  CHECK(curve_to_csv(rows) ==
        "train_fraction,mean_positive_instances,mean_recall,mean_precision\n"
        "0.90,12.50,1.0000,0.8750\n");
}

TEST_CASE("csv fields quote separators and double embedded quotes") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("") == "");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("join_tokens separates with single spaces") {
  CHECK(join_tokens({}) == "");
  CHECK(join_tokens({"A"}) == "A");
  CHECK(join_tokens({"A", "B", "C"}) == "A B C");
}
