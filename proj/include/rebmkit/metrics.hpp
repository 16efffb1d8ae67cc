// metrics.hpp -- measurement: oracle WER, joint reranking with alpha tuning,
// precision-recall AUC, length buckets, and score-density summaries.
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rebmkit/beam.hpp"
#include "rebmkit/wer.hpp"

namespace rebmkit {

using RefMap = std::map<std::string, std::vector<int>>;

// Per utterance, the hypothesis minimizing edit cost; ties prefer higher
// logp. n < 0 scores the whole list, otherwise the first n entries.
EditStats oracle_wer(const std::vector<NBestList>& lists, const RefMap& refs, int n = -1);

struct RerankConfig {
  double alpha = 0.0;
  bool use_ln = true;
};

// joint = (use_ln ? logp/|y| : logp) - alpha * E; re-sorts descending and
// populates the energy/joint fields. ContractError on misaligned energies.
void joint_rerank(NBestList& list, std::span<const double> energies, const RerankConfig& cfg);

// grid from 0 to max inclusive; always contains 0.
std::vector<double> make_alpha_grid(double max, double step);

struct AlphaTune {
  double alpha = 0.0;
  EditStats stats;
  double wer() const { return stats.wer(); }
};

// Exhaustive grid search minimizing corpus WER of the joint 1-best; ties
// break toward smaller |alpha|. The grid must contain 0.
AlphaTune tune_alpha(const std::vector<NBestList>& lists,
                     const std::vector<std::vector<double>>& energies, const RefMap& refs,
                     std::span<const double> grid, bool use_ln);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  double auc = 0.0;
};

// Average precision with ties grouped atomically; MetricError without any
// positive label.
PRCurve pr_auc(std::span<const double> scores, std::span<const int> labels);

struct UttSystems {
  std::vector<int> ref;
  std::vector<int> baseline;
  std::vector<int> joint;
  std::vector<int> oracle;
};

struct BucketRow {
  int lo = 0;
  int hi = 0;  // exclusive; INT_MAX marks the open-ended last bucket
  long n_utts = 0;
  EditStats baseline, joint, oracle;
  double werr_joint() const;
  double werr_oracle() const;
};

// Buckets by reference length from consecutive edges (last bucket open).
// Empty buckets are omitted. PreconditionError if a length falls below the
// first edge.
std::vector<BucketRow> length_breakdown(const std::vector<UttSystems>& utts,
                                        std::span<const int> edges);

struct DensitySeries {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<long> hist;
};

struct DensityStats {
  double lo = 0.0;
  double hi = 0.0;
  int bins = 0;
  std::vector<DensitySeries> series;  // ll_selected, ll_reference, joint_selected, joint_reference
  double gap_ll = 0.0;
  double gap_joint = 0.0;
};

// Shared fixed bins across the four aligned score sets; the gap metrics are
// the absolute differences of selected-vs-reference means per score.
DensityStats score_density_stats(std::span<const double> ll_selected,
                                 std::span<const double> ll_reference,
                                 std::span<const double> joint_selected,
                                 std::span<const double> joint_reference, int bins);

}  // namespace rebmkit
