#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bridge {

// Attack-class probabilities with labels and (c_ds, c_dev) provenance.
struct ScoredPredictions {
  std::vector<double> scores;  // in [0,1]
  std::vector<std::uint8_t> labels;
  std::vector<std::array<int, 2>> contexts;
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct MetricsReport {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;  // detection rate
  double false_alarm_rate = 0.0;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  double mcc = 0.0;
  Confusion confusion;
};

struct DatasetMetrics {
  int dataset_id = 0;
  std::size_t n = 0;
  bool reported = true;  // false when n < 100 (unreliable)
  MetricsReport metrics;
};

struct WilcoxonResult {
  double w_plus = 0.0;  // signed-rank statistic of positive differences
  double p_value = 0.0;
  bool exact = false;
};

struct LodoSummary {
  std::vector<std::pair<int, double>> fold_f1;  // held_out_id -> F1
  double mean_f1 = 0.0;
  double in_dist_f1 = 0.0;
  double gap = 0.0;  // in_dist_f1 - mean_f1
};

Confusion confusion_at(const ScoredPredictions& preds, double threshold);

// 0/0 terms are defined as 0; MCC is 0 when its denominator vanishes.
MetricsReport classification_metrics(const Confusion& c);

// Pairwise concordance (Mann-Whitney form), ties count 1/2, computed via
// average ranks in O(N log N). Throws on single-class input.
double roc_auc(const ScoredPredictions& preds);

// Trapezoidal area over recall of the PR curve across distinct descending
// thresholds, with the recall-0 endpoint at the first point's precision.
double pr_auc(const ScoredPredictions& preds);

// One-sided paired test, alternative median(x - y) > 0. Zero differences
// dropped, ties get average ranks; exact enumeration for m <= 20 pairs,
// otherwise normal approximation with tie-corrected variance and continuity
// correction. Throws when every difference is zero.
WilcoxonResult wilcoxon_one_sided(const std::vector<double>& x,
                                  const std::vector<double>& y);

// Full metrics at threshold 0.5 plus both AUCs.
MetricsReport full_metrics(const ScoredPredictions& preds,
                           double threshold = 0.5);

std::vector<DatasetMetrics> per_dataset_breakdown(
    const ScoredPredictions& preds, double threshold = 0.5);

LodoSummary lodo_summary(const std::vector<std::pair<int, double>>& fold_f1,
                         double in_dist_f1);

std::string metrics_report_json(const MetricsReport& report);
std::string metrics_report_text(const MetricsReport& report);
std::string lodo_summary_csv(const LodoSummary& summary);

}  // namespace bridge
