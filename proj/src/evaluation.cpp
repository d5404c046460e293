#include "crystal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

namespace crystal {

std::vector<Extraction> apply_dictionary(const Dictionary& dict, const InstanceDb& db,
                                         const Lexicon& lex, const SemanticHierarchy& h) {
  std::set<Extraction> out;
  for (const CnDefinition* d : dict.definitions()) {
    for (std::size_t i = 0; i < db.size(); ++i) {
      const InstanceId id = static_cast<InstanceId>(i);
      std::optional<Extraction> e = extract(*d, db.at(id), lex, h);
      if (!e) continue;
      e->instance = id;
      out.insert(std::move(*e));
    }
  }
  return {out.begin(), out.end()};
}

Metrics score(const std::vector<Extraction>& extractions, const InstanceDb& db,
              const CnLabel& target) {
  Metrics m;
  m.possible = static_cast<std::int64_t>(db.positive_buffers(target).size());
  for (const Extraction& e : extractions) {
    if (!label_covers(target, e.label)) continue;  // extraction for another label
    ++m.extracted;
    const Instance& inst = db.at(e.instance);
    const Buffer* b = inst.find_role(e.buffer);
    if (b != nullptr && b->label && label_covers(target, *b->label)) ++m.correct;
  }
  return m;
}

Metrics evaluate_split(const InstanceDb& train, const InstanceDb& test,
                       const CnLabel& target, const InductionConfig& cfg,
                       const Lexicon& lex, const SemanticHierarchy& h) {
  Dictionary dict = induce(train, target, cfg, lex, h);
  if (cfg.min_coverage > 1) {
    dict = filter_by_coverage(dict, cfg.min_coverage, train, lex, h);
  }
  return score(apply_dictionary(dict, test, lex, h), test, target);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_docs(
    std::size_t doc_count, double train_fraction, std::uint64_t seed,
    std::uint64_t trial) {
  if (doc_count < 2) {
    throw std::invalid_argument("partition_docs: need at least 2 documents");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("partition_docs: train fraction must be in (0,1)");
  }

  std::vector<std::size_t> order(doc_count);
  for (std::size_t i = 0; i < doc_count; ++i) order[i] = i;
  // Explicit Fisher-Yates: std::shuffle's draw sequence is not pinned down by
  // the standard, and partitions must be reproducible from the seed alone.
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (trial + 1)));
  for (std::size_t i = doc_count - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(doc_count)));
  n_train = std::clamp<std::size_t>(n_train, 1, doc_count - 1);

  std::vector<std::size_t> train(order.begin(),
                                 order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::vector<SweepRow> tolerance_sweep(const InstanceDb& db, const CnLabel& target,
                                      const std::vector<double>& tolerances,
                                      const SplitSpec& split, const InductionConfig& base,
                                      const Lexicon& lex, const SemanticHierarchy& h) {
  // The same partitions serve every tolerance so rows differ only in the knob
  // under study.
  std::vector<std::pair<InstanceDb, InstanceDb>> splits;
  splits.reserve(static_cast<std::size_t>(split.trials));
  for (int t = 0; t < split.trials; ++t) {
    const auto [train_docs, test_docs] = partition_docs(
        db.doc_count(), split.train_fraction, split.seed, static_cast<std::uint64_t>(t));
    splits.emplace_back(db.subset(train_docs), db.subset(test_docs));
  }

  std::vector<SweepRow> rows;
  for (double tol : tolerances) {
    InductionConfig cfg = base;
    cfg.tolerance = tol;
    double recall_sum = 0.0;
    double precision_sum = 0.0;
    for (const auto& [train, test] : splits) {
      const Metrics m = evaluate_split(train, test, target, cfg, lex, h);
      recall_sum += m.recall();
      precision_sum += m.precision();
    }
    const double n = static_cast<double>(split.trials);
    rows.push_back(SweepRow{tol, recall_sum / n, precision_sum / n});
  }
  return rows;
}

std::vector<CurveRow> learning_curve(const InstanceDb& db, const CnLabel& target,
                                     const std::vector<double>& fractions, int trials,
                                     std::uint64_t seed, const InductionConfig& cfg,
                                     const Lexicon& lex, const SemanticHierarchy& h) {
  std::vector<CurveRow> rows;
  for (double f : fractions) {
    double recall_sum = 0.0;
    double precision_sum = 0.0;
    double positives_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      const auto [train_docs, test_docs] =
          partition_docs(db.doc_count(), f, seed, static_cast<std::uint64_t>(t));
      const InstanceDb train = db.subset(train_docs);
      const InstanceDb test = db.subset(test_docs);
      positives_sum += static_cast<double>(train.positive_instance_count(target));
      const Metrics m = evaluate_split(train, test, target, cfg, lex, h);
      recall_sum += m.recall();
      precision_sum += m.precision();
    }
    const double n = static_cast<double>(trials);
    rows.push_back(CurveRow{f, positives_sum / n, recall_sum / n, precision_sum / n});
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "tolerance,mean_recall,mean_precision\n";
  char line[128];
  for (const SweepRow& r : rows) {
    std::snprintf(line, sizeof(line), "%.2f,%.4f,%.4f\n", r.tolerance, r.mean_recall,
                  r.mean_precision);
    out += line;
  }
  return out;
}

std::string curve_to_csv(const std::vector<CurveRow>& rows) {
  std::string out = "train_fraction,mean_positive_instances,mean_recall,mean_precision\n";
  char line[160];
  for (const CurveRow& r : rows) {
    std::snprintf(line, sizeof(line), "%.2f,%.2f,%.4f,%.4f\n", r.train_fraction,
                  r.mean_positive_instances, r.mean_recall, r.mean_precision);
    out += line;
  }
  return out;
}

}  // namespace crystal
