// crystal: induce concept-node extraction dictionaries from buffer-annotated
// clause corpora, apply them, and evaluate extraction quality on held-out
// splits. Every command is deterministic given its inputs and --seed.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "crystal/evaluation.hpp"
#include "crystal/induction.hpp"
#include "crystal/instances.hpp"
#include "crystal/semantics.hpp"
#include "crystal/synthetic.hpp"
#include "crystal/util.hpp"

namespace {

using namespace crystal;

struct Opts {
  std::string corpus;
  std::string hierarchy;
  std::string lexicon;
  std::string test_corpus;
  std::string dictionary;
  std::string out;
  std::string out_dir;
  std::string type;
  std::string subtype;
  double tolerance = 0.0;
  int min_coverage = 1;
  bool retry_next_similar = false;
  std::uint64_t seed = 0;
  double train_fraction = 0.9;
  int trials = 1;
  std::vector<double> tolerances = {0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<double> fractions = {0.1, 0.25, 0.5, 0.75, 0.9};
  int instances = 200;
  int rules = 5;
  double distractor_fraction = 0.3;
  double label_noise = 0.0;
};

struct Loaded {
  SemanticHierarchy h;
  Lexicon lex;
  InstanceDb db;
};

// Every flag can be overridden by an environment variable named
// CRYSTAL_<FLAG> with dashes turned into underscores.
CLI::Option* env(CLI::Option* opt) {
  std::string name = opt->get_single_name();
  for (char& c : name) c = c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return opt->envname("CRYSTAL_" + name);
}

void add_input_options(CLI::App* cmd, Opts& o) {
  env(cmd->add_option("--corpus", o.corpus, "Corpus JSON file")
          ->required()
          ->check(CLI::ExistingFile));
  env(cmd->add_option("--hierarchy", o.hierarchy, "Class hierarchy file (child<TAB>parent)")
          ->required()
          ->check(CLI::ExistingFile));
  env(cmd->add_option("--lexicon", o.lexicon, "Lexicon file (word<TAB>class;class...)")
          ->required()
          ->check(CLI::ExistingFile));
}

void add_label_options(CLI::App* cmd, Opts& o) {
  env(cmd->add_option("--type", o.type, "Concept-node type to learn")->required());
  env(cmd->add_option("--subtype", o.subtype,
                      "Concept-node subtype; omit to learn the type across all subtypes"));
}

void add_seed_option(CLI::App* cmd, Opts& o) {
  env(cmd->add_option("--seed", o.seed, "Random seed for document partitions"));
}

Loaded load_inputs(const Opts& o) {
  Loaded L;
  L.h = SemanticHierarchy::parse(read_file(o.hierarchy));
  L.lex = Lexicon::parse(read_file(o.lexicon), L.h);
  L.db = InstanceDb::load(read_file(o.corpus), L.lex, L.h);
  return L;
}

CnLabel target_label(const Opts& o) { return {to_upper(o.type), to_upper(o.subtype)}; }

InductionConfig induction_config(const Opts& o) {
  InductionConfig cfg;
  cfg.tolerance = o.tolerance;
  cfg.min_coverage = o.min_coverage;
  cfg.seed = o.seed;
  cfg.retry_next_similar = o.retry_next_similar;
  return cfg;
}

void cmd_induce(const Opts& o) {
  const Loaded L = load_inputs(o);
  Dictionary dict = induce(L.db, target_label(o), induction_config(o), L.lex, L.h);
  if (o.min_coverage > 1) {
    dict = filter_by_coverage(dict, o.min_coverage, L.db, L.lex, L.h);
  }
  write_file_atomic(o.out, dict.to_json(L.h));

  int ge10 = 0, from3to9 = 0, eq2 = 0, eq1 = 0;
  for (std::int64_t c : recomputed_coverage(dict, L.db, L.lex, L.h)) {
    if (c >= 10) {
      ++ge10;
    } else if (c >= 3) {
      ++from3to9;
    } else if (c == 2) {
      ++eq2;
    } else {
      ++eq1;
    }
  }
  std::printf("definitions: %zu\n", dict.size());
  std::printf("coverage: >=10: %d  3-9: %d  =2: %d  =1: %d\n", ge10, from3to9, eq2, eq1);
}

void cmd_apply(const Opts& o) {
  const Loaded L = load_inputs(o);
  const Dictionary dict = Dictionary::from_json(read_file(o.dictionary), L.h);
  const std::vector<Extraction> found = apply_dictionary(dict, L.db, L.lex, L.h);

  std::string csv = "doc_id,instance_id,role,pp_index,prep,text,cn_type,cn_subtype\n";
  for (const Extraction& e : found) {
    const Buffer* b = L.db.at(e.instance).find_role(e.buffer);
    csv += csv_escape(e.doc_id) + ',' + csv_escape(e.instance_id) + ',';
    csv += std::string(to_string(e.buffer.kind)) + ',';
    if (e.buffer.kind == BufferKind::Pp) csv += std::to_string(e.buffer.pp_index);
    csv += ',';
    csv += csv_escape(b->prep) + ',' + csv_escape(join_tokens(b->tokens)) + ',';
    csv += csv_escape(e.label.type) + ',' + csv_escape(e.label.subtype) + '\n';
  }
  if (o.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file_atomic(o.out, csv);
    std::printf("extractions: %zu\n", found.size());
  }
}

void cmd_eval(const Opts& o) {
  const Loaded L = load_inputs(o);
  const CnLabel target = target_label(o);
  const InductionConfig cfg = induction_config(o);

  if (!o.test_corpus.empty()) {
    const InstanceDb test = InstanceDb::load(read_file(o.test_corpus), L.lex, L.h);
    const Metrics m = evaluate_split(L.db, test, target, cfg, L.lex, L.h);
    std::printf("possible=%lld extracted=%lld correct=%lld recall=%.2f%% precision=%.2f%%\n",
                static_cast<long long>(m.possible), static_cast<long long>(m.extracted),
                static_cast<long long>(m.correct), 100.0 * m.recall(),
                100.0 * m.precision());
    if (!o.out.empty()) {
      char row[160];
      std::snprintf(row, sizeof(row), "%lld,%lld,%lld,%.4f,%.4f\n",
                    static_cast<long long>(m.possible), static_cast<long long>(m.extracted),
                    static_cast<long long>(m.correct), m.recall(), m.precision());
      write_file_atomic(o.out, "possible,extracted,correct,recall,precision\n" +
                                   std::string(row));
    }
    return;
  }

  const SplitSpec split{o.train_fraction, o.trials, o.seed};
  const std::vector<SweepRow> rows =
      tolerance_sweep(L.db, target, {o.tolerance}, split, cfg, L.lex, L.h);
  std::printf("tolerance=%.2f trials=%d mean_recall=%.2f%% mean_precision=%.2f%%\n",
              rows.front().tolerance, o.trials, 100.0 * rows.front().mean_recall,
              100.0 * rows.front().mean_precision);
  if (!o.out.empty()) write_file_atomic(o.out, sweep_to_csv(rows));
}

void cmd_sweep(const Opts& o) {
  const Loaded L = load_inputs(o);
  const SplitSpec split{o.train_fraction, o.trials, o.seed};
  const std::vector<SweepRow> rows = tolerance_sweep(
      L.db, target_label(o), o.tolerances, split, induction_config(o), L.lex, L.h);
  const std::string csv = sweep_to_csv(rows);
  if (o.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file_atomic(o.out, csv);
    std::printf("wrote %s (%zu rows)\n", o.out.c_str(), rows.size());
  }
}

void cmd_curve(const Opts& o) {
  const Loaded L = load_inputs(o);
  const std::vector<CurveRow> rows =
      learning_curve(L.db, target_label(o), o.fractions, o.trials, o.seed,
                     induction_config(o), L.lex, L.h);
  const std::string csv = curve_to_csv(rows);
  if (o.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file_atomic(o.out, csv);
    std::printf("wrote %s (%zu rows)\n", o.out.c_str(), rows.size());
  }
}

void cmd_gen(const Opts& o) {
  SyntheticSpec spec;
  spec.hidden_rules = default_hidden_rules(o.rules);
  spec.n_instances = o.instances;
  spec.distractor_fraction = o.distractor_fraction;
  spec.label_noise = o.label_noise;
  spec.seed = o.seed;
  const SyntheticCorpus sc = generate_synthetic(spec);

  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  const auto path = [&](const char* name) { return (fs::path(o.out_dir) / name).string(); };
  write_file_atomic(path("hierarchy.txt"), sc.hierarchy_text);
  write_file_atomic(path("lexicon.txt"), sc.lexicon_text);
  write_file_atomic(path("corpus.json"), sc.corpus_json);
  write_file_atomic(path("gold.json"), sc.gold_json);
  std::printf("wrote %s: corpus.json (%d instances), hierarchy.txt, lexicon.txt, gold.json\n",
              o.out_dir.c_str(), o.instances);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crystal: concept-node dictionary induction over clause corpora"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* induce_cmd =
      app.add_subcommand("induce", "Induce a dictionary from labeled instances");
  add_input_options(induce_cmd, o);
  add_label_options(induce_cmd, o);
  add_seed_option(induce_cmd, o);
  env(induce_cmd->add_option("--out", o.out, "Dictionary JSON output path")->required());
  env(induce_cmd->add_option("--tolerance", o.tolerance, "Max training error rate")
          ->check(CLI::Range(0.0, 1.0)));
  env(induce_cmd->add_option("--min-coverage", o.min_coverage,
                             "Drop definitions covering fewer training extractions")
          ->check(CLI::PositiveNumber));
  env(induce_cmd->add_flag("--retry-next-similar", o.retry_next_similar,
                           "Try the next-most-similar candidate after a rejected unification"));
  induce_cmd->callback([&] { cmd_induce(o); });

  CLI::App* apply_cmd =
      app.add_subcommand("apply", "Apply a dictionary and report extractions as CSV");
  add_input_options(apply_cmd, o);
  add_seed_option(apply_cmd, o);
  env(apply_cmd->add_option("--dictionary", o.dictionary, "Dictionary JSON file")
          ->required()
          ->check(CLI::ExistingFile));
  env(apply_cmd->add_option("--out", o.out, "Report CSV path (stdout when omitted)"));
  apply_cmd->callback([&] { cmd_apply(o); });

  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Induce on training data and score recall/precision on held-out data");
  add_input_options(eval_cmd, o);
  add_label_options(eval_cmd, o);
  add_seed_option(eval_cmd, o);
  env(eval_cmd->add_option("--test-corpus", o.test_corpus,
                           "Score on this corpus instead of random partitions")
          ->check(CLI::ExistingFile));
  env(eval_cmd->add_option("--tolerance", o.tolerance, "Max training error rate")
          ->check(CLI::Range(0.0, 1.0)));
  env(eval_cmd->add_option("--min-coverage", o.min_coverage,
                           "Coverage filter applied after induction")
          ->check(CLI::PositiveNumber));
  env(eval_cmd->add_option("--train-fraction", o.train_fraction,
                           "Document share of each training partition")
          ->check(CLI::Range(0.0, 1.0)));
  env(eval_cmd->add_option("--trials", o.trials, "Random partitions to average over")
          ->check(CLI::PositiveNumber));
  env(eval_cmd->add_option("--out", o.out, "CSV output path"));
  eval_cmd->callback([&] { cmd_eval(o); });

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Mean recall/precision per tolerance over shared random partitions "
               "(CSV: tolerance,mean_recall,mean_precision)");
  add_input_options(sweep_cmd, o);
  add_label_options(sweep_cmd, o);
  add_seed_option(sweep_cmd, o);
  env(sweep_cmd->add_option("--tolerances", o.tolerances, "Tolerance settings to sweep")
          ->delimiter(',')
          ->check(CLI::Range(0.0, 1.0)));
  env(sweep_cmd->add_option("--min-coverage", o.min_coverage,
                            "Coverage filter applied after each induction")
          ->check(CLI::PositiveNumber));
  env(sweep_cmd->add_option("--train-fraction", o.train_fraction,
                            "Document share of each training partition")
          ->check(CLI::Range(0.0, 1.0)));
  env(sweep_cmd->add_option("--trials", o.trials, "Random partitions per tolerance")
          ->check(CLI::PositiveNumber));
  env(sweep_cmd->add_option("--out", o.out, "CSV output path (stdout when omitted)"));
  sweep_cmd->callback([&] { cmd_sweep(o); });

  CLI::App* curve_cmd = app.add_subcommand(
      "curve", "Recall/precision as training size grows "
               "(CSV: train_fraction,mean_positive_instances,mean_recall,mean_precision)");
  add_input_options(curve_cmd, o);
  add_label_options(curve_cmd, o);
  add_seed_option(curve_cmd, o);
  env(curve_cmd->add_option("--fractions", o.fractions, "Training fractions to plot")
          ->delimiter(',')
          ->check(CLI::Range(0.0, 1.0)));
  env(curve_cmd->add_option("--tolerance", o.tolerance, "Max training error rate")
          ->check(CLI::Range(0.0, 1.0)));
  env(curve_cmd->add_option("--min-coverage", o.min_coverage,
                            "Coverage filter applied after each induction")
          ->check(CLI::PositiveNumber));
  env(curve_cmd->add_option("--trials", o.trials, "Random partitions per fraction")
          ->check(CLI::PositiveNumber));
  env(curve_cmd->add_option("--out", o.out, "CSV output path (stdout when omitted)"));
  curve_cmd->callback([&] { cmd_curve(o); });

  CLI::App* gen_cmd = app.add_subcommand(
      "gen", "Generate a synthetic corpus with known ground-truth rules");
  add_seed_option(gen_cmd, o);
  env(gen_cmd->add_option("--out-dir", o.out_dir, "Directory for the generated files")
          ->required());
  env(gen_cmd->add_option("--instances", o.instances, "Total instances to generate")
          ->check(CLI::NonNegativeNumber));
  env(gen_cmd->add_option("--rules", o.rules, "How many built-in hidden rules to use")
          ->check(CLI::NonNegativeNumber));
  env(gen_cmd->add_option("--distractor-fraction", o.distractor_fraction,
                          "Share of unlabeled near-miss instances")
          ->check(CLI::Range(0.0, 1.0)));
  env(gen_cmd->add_option("--label-noise", o.label_noise,
                          "Share of positives whose label is dropped")
          ->check(CLI::Range(0.0, 1.0)));
  gen_cmd->callback([&] { cmd_gen(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
