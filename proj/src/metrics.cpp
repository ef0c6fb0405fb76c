#include "bridge/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bridge {

using nlohmann::json;

Confusion confusion_at(const ScoredPredictions& preds, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw std::invalid_argument("confusion_at: threshold outside [0,1]");
  }
  Confusion c;
  for (std::size_t i = 0; i < preds.scores.size(); ++i) {
    bool predicted_attack = preds.scores[i] >= threshold;
    bool attack = preds.labels[i] == 1;
    if (predicted_attack && attack) ++c.tp;
    else if (predicted_attack) ++c.fp;
    else if (attack) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricsReport classification_metrics(const Confusion& c) {
  if (c.tp + c.fp + c.tn + c.fn == 0) {
    throw std::invalid_argument("classification_metrics: empty confusion");
  }
  auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  MetricsReport r;
  r.confusion = c;
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp),
             tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  r.false_alarm_rate = ratio(fp, fp + tn);
  double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  r.mcc = denom == 0.0 ? 0.0 : (tp * tn - fp * fn) / denom;
  return r;
}

namespace {

// Average ranks (1-based) of v, ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double roc_auc(const ScoredPredictions& preds) {
  std::size_t pos = 0;
  for (std::uint8_t l : preds.labels) pos += l;
  std::size_t neg = preds.labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw std::runtime_error("roc_auc: both classes required");
  }
  std::vector<double> ranks = average_ranks(preds.scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < preds.labels.size(); ++i) {
    if (preds.labels[i] == 1) rank_sum_pos += ranks[i];
  }
  double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double pr_auc(const ScoredPredictions& preds) {
  std::size_t pos = 0;
  for (std::uint8_t l : preds.labels) pos += l;
  if (pos == 0) throw std::runtime_error("pr_auc: no positive labels");

  std::vector<std::size_t> order(preds.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds.scores[a] > preds.scores[b];
  });

  double area = 0.0;
  double prev_recall = 0.0, prev_precision = 0.0;
  bool first = true;
  std::size_t tp = 0, fp = 0, i = 0;
  const double total_pos = static_cast<double>(pos);
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           preds.scores[order[j + 1]] == preds.scores[order[i]]) {
      ++j;
    }
    for (std::size_t k = i; k <= j; ++k) {
      if (preds.labels[order[k]] == 1) ++tp;
      else ++fp;
    }
    double recall = static_cast<double>(tp) / total_pos;
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (first) {
      prev_recall = 0.0;
      prev_precision = precision;  // recall-0 endpoint
      first = false;
    }
    area += (recall - prev_recall) * 0.5 * (precision + prev_precision);
    prev_recall = recall;
    prev_precision = precision;
    i = j + 1;
  }
  return area;
}

WilcoxonResult wilcoxon_one_sided(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("wilcoxon: equal non-empty lengths required");
  }
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    if (d == 0.0) continue;  // classic zero-difference drop
    abs_d.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  const std::size_t m = abs_d.size();
  if (m == 0) throw std::runtime_error("degenerate: no nonzero pairs");

  std::vector<double> ranks = average_ranks(abs_d);
  WilcoxonResult result;
  for (std::size_t i = 0; i < m; ++i) {
    if (positive[i]) result.w_plus += ranks[i];
  }

  if (m <= 20) {
    // Exact: enumerate every sign assignment over the observed ranks.
    result.exact = true;
    std::size_t ge = 0;
    const std::uint64_t total = 1ULL << m;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (mask & (1ULL << i)) w += ranks[i];
      }
      if (w >= result.w_plus - 1e-9) ++ge;
    }
    result.p_value = static_cast<double>(ge) / static_cast<double>(total);
  } else {
    double md = static_cast<double>(m);
    double mean = md * (md + 1.0) / 4.0;
    double var = md * (md + 1.0) * (2.0 * md + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t)/48 over tie groups of |d|.
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < m) {
      std::size_t j = i;
      while (j + 1 < m && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    double z = (result.w_plus - mean - 0.5) / std::sqrt(var);
    result.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
  }
  return result;
}

MetricsReport full_metrics(const ScoredPredictions& preds, double threshold) {
  MetricsReport r = classification_metrics(confusion_at(preds, threshold));
  r.roc_auc = roc_auc(preds);
  r.pr_auc = pr_auc(preds);
  return r;
}

std::vector<DatasetMetrics> per_dataset_breakdown(
    const ScoredPredictions& preds, double threshold) {
  std::map<int, ScoredPredictions> grouped;
  for (std::size_t i = 0; i < preds.scores.size(); ++i) {
    ScoredPredictions& g = grouped[preds.contexts[i][0]];
    g.scores.push_back(preds.scores[i]);
    g.labels.push_back(preds.labels[i]);
    g.contexts.push_back(preds.contexts[i]);
  }
  std::vector<DatasetMetrics> rows;
  for (auto& [ds, g] : grouped) {
    DatasetMetrics row;
    row.dataset_id = ds;
    row.n = g.scores.size();
    if (row.n < 100) {
      row.reported = false;  // too few samples for a reliable estimate
    } else {
      row.metrics = full_metrics(g, threshold);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LodoSummary lodo_summary(const std::vector<std::pair<int, double>>& fold_f1,
                         double in_dist_f1) {
  if (fold_f1.size() != 5) {
    throw std::invalid_argument("lodo_summary: exactly 5 folds required");
  }
  LodoSummary s;
  s.fold_f1 = fold_f1;
  for (const auto& [id, f1] : fold_f1) s.mean_f1 += f1;
  s.mean_f1 /= 5.0;
  s.in_dist_f1 = in_dist_f1;
  s.gap = in_dist_f1 - s.mean_f1;
  return s;
}

std::string metrics_report_json(const MetricsReport& r) {
  return json{{"f1", r.f1},
              {"precision", r.precision},
              {"recall", r.recall},
              {"detection_rate", r.recall},
              {"false_alarm_rate", r.false_alarm_rate},
              {"roc_auc", r.roc_auc},
              {"pr_auc", r.pr_auc},
              {"mcc", r.mcc},
              {"confusion",
               {{"tp", r.confusion.tp},
                {"fp", r.confusion.fp},
                {"tn", r.confusion.tn},
                {"fn", r.confusion.fn}}}}
      .dump(2);
}

std::string metrics_report_text(const MetricsReport& r) {
  std::ostringstream out;
  out << "f1         " << r.f1 << "\n"
      << "precision  " << r.precision << "\n"
      << "recall     " << r.recall << "\n"
      << "fa_rate    " << r.false_alarm_rate << "\n"
      << "roc_auc    " << r.roc_auc << "\n"
      << "pr_auc     " << r.pr_auc << "\n"
      << "mcc        " << r.mcc << "\n"
      << "confusion  tp=" << r.confusion.tp << " fp=" << r.confusion.fp
      << " tn=" << r.confusion.tn << " fn=" << r.confusion.fn << "\n";
  return out.str();
}

std::string lodo_summary_csv(const LodoSummary& s) {
  std::ostringstream out;
  out << "held_out,f1\n";
  for (const auto& [id, f1] : s.fold_f1) out << id << ',' << f1 << '\n';
  out << "mean," << s.mean_f1 << '\n';
  out << "in_dist," << s.in_dist_f1 << '\n';
  out << "gap," << s.gap << '\n';
  return out.str();
}

}  // namespace bridge
