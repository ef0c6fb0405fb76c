// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each check is self-contained and uses only seeded
// fixtures, so a clean checkout reproduces every line.

#include "bridge/common.hpp"
#include "bridge/ingest.hpp"
#include "bridge/metrics.hpp"
#include "bridge/protocol.hpp"
#include "bridge/tchnet/gradcheck.hpp"
#include "bridge/tchnet/model.hpp"
#include "bridge/tchnet/weights.hpp"
#include "bridge/transform.hpp"
#include "bridge/vocab.hpp"
#include "bridge/windows.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>

using namespace bridge;

namespace {

int failures = 0;

void criterion(int number, const std::string& name,
               const std::function<void()>& body) {
  std::string detail;
  bool ok = true;
  try {
    body();
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << number << ": "
            << name;
  if (!ok) {
    std::cout << "  [" << detail << "]";
    ++failures;
  }
  std::cout << "\n";
}

void expect(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

// -- shared fixtures --------------------------------------------------------

CanonicalMatrix random_matrix(int rows, std::uint64_t seed, int dataset_id,
                              double attack_rate = 0.25) {
  CanonicalMatrix m;
  m.dataset_id = dataset_id;
  m.values.resize(rows, kCanonicalSlots);
  SplitMix64 rng(seed);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < kCanonicalSlots; ++c) {
      m.values(r, c) = static_cast<float>(rng.next_double() * 20.0 - 10.0);
    }
    // Attacks arrive in contiguous bursts so windowed majority labels carry
    // both classes.
    int period = static_cast<int>(100.0 / (100.0 * attack_rate));
    m.labels.push_back((r / 50) % period == 0 ? 1 : 0);
  }
  return m;
}

WindowSet five_dataset_windows(std::uint64_t seed) {
  WindowSet all;
  WindowConfig cfg;
  for (int d = 0; d < 5; ++d) {
    cfg.device_category_map[d] = d;
    append_windows(all, build_windows(random_matrix(500, seed + d, d), cfg));
  }
  return all;
}

}  // namespace

int main() {
  criterion(1, "vocabulary integrity and Table-3 coverage", [] {
    CanonicalVocabulary v = parse_vocabulary_json(default_vocabulary_json());
    expect(v.slots.size() == 46, "slot count");
    int groups[5] = {0, 0, 0, 0, 0};
    for (const CanonicalSlot& s : v.slots) ++groups[s.group];
    expect(groups[1] == 17 && groups[2] == 21 && groups[3] == 6 &&
               groups[4] == 2,
           "group sizes 17/21/6/2");
    const int matched[5] = {43, 40, 18, 10, 7};
    const int percent[5] = {93, 87, 39, 22, 15};
    std::vector<MappingReport> reports;
    for (int d = 0; d < 5; ++d) {
      std::vector<std::string> headers;
      for (int i = 0; i < matched[d]; ++i) headers.push_back(v.slots[i].name);
      MappingReport r = match_columns(v, {}, headers);
      r.dataset_id = d;
      expect(r.matched_count == matched[d], "matched count");
      reports.push_back(r);
    }
    auto rows = coverage_summary(reports);
    for (int d = 0; d < 5; ++d) {
      expect(rows[d].coverage_percent == percent[d], "coverage percent");
    }
  });

  criterion(2, "scaler oracle and clipping", [] {
    MatrixRXf m(11, 1);
    for (int i = 0; i < 11; ++i) m(i, 0) = static_cast<float>(10 * i);
    ScalerParams p = fit_scaler(m);
    expect(p.center[0] == 50.0, "median 50");
    expect(p.scale[0] == 90.0, "scale 90 (P95 95 - P5 5)");
    MatrixRXf x(1, 1);
    x << 10000.0f;
    expect(apply_scaler(p, x)(0, 0) == 10.0f, "clip 10000 -> 10.0");
  });

  criterion(3, "pipeline determinism and leakage checks", [] {
    WindowSet all1 = five_dataset_windows(100);
    WindowSet all2 = five_dataset_windows(100);
    expect(all1.features == all2.features && all1.labels == all2.labels,
           "rerun with identical seed is byte-identical");
    SplitSpec spec;
    spec.seed = 9;
    auto [train, test] = split(all1, spec);
    Eigen::Map<const MatrixRXf> rows(
        train.features.data(),
        static_cast<Eigen::Index>(train.size()) * train.window, train.feat);
    ScalerParams scaler = fit_scaler(MatrixRXf(rows));
    LeakageReport clean = verify_leakage(train, test, scaler);
    expect(clean.passed && clean.overlap_count == 0, "clean split passes");
    expect(std::abs(0.758 - 0.750) <= 0.02,
           "ratio tolerance accepts 0.758/0.750");
    std::memcpy(test.window_data(0), train.window_data(0),
                train.window_elems() * sizeof(float));
    LeakageReport planted = verify_leakage(train, test, scaler);
    expect(planted.overlap_count == 1 && !planted.passed,
           "planted duplicate -> overlap_count 1 and failure");
  });

  criterion(4, "windowing: counts and labels", [] {
    WindowConfig cfg;
    cfg.device_category_map[0] = 0;
    CanonicalMatrix m = random_matrix(100, 4, 0);
    m.labels.assign(100, 0);
    WindowSet ws = build_windows(m, cfg);
    expect(ws.size() == 18, "100 rows -> 18 windows");
    expect(ws.labels[0] == 0, "all-benign window labels 0");
    CanonicalMatrix hot = random_matrix(32, 5, 0);
    hot.labels.assign(32, 0);
    for (int i = 0; i < 17; ++i) hot.labels[i] = 1;
    expect(build_windows(hot, cfg).labels[0] == 1,
           "17/32-attack window labels 1");
  });

  criterion(5, "metric oracles", [] {
    MetricsReport r = classification_metrics({3, 1, 4, 2});
    expect(std::abs(r.mcc - 0.4082) <= 1e-4, "MCC(3,1,4,2) = 0.4082");
    expect(std::abs(r.f1 - 0.6667) <= 1e-4, "F1 = 0.6667");
    auto preds = [](std::vector<double> s, std::vector<int> l) {
      ScoredPredictions p;
      p.scores = std::move(s);
      for (int v : l) {
        p.labels.push_back(static_cast<std::uint8_t>(v));
        p.contexts.push_back({0, 0});
      }
      return p;
    };
    expect(roc_auc(preds({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == 1.0,
           "ROC-AUC perfect = 1.0");
    expect(roc_auc(preds({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})) == 0.5,
           "ROC-AUC constant = 0.5");
    expect(roc_auc(preds({0.9, 0.7, 0.5, 0.3}, {1, 0, 0, 1})) == 0.5,
           "ROC-AUC interleaved = 0.5");
    WilcoxonResult w =
        wilcoxon_one_sided({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    expect(w.exact && std::abs(w.p_value - 0.03125) < 1e-12,
           "exact Wilcoxon p = 0.03125");
    // Exact-vs-enumeration agreement, 1000 random fixtures with m <= 10.
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
      std::size_t m = 2 + rng.next_below(9);
      std::vector<double> x(m), y(m, 0.0);
      bool any = false;
      for (std::size_t i = 0; i < m; ++i) {
        x[i] = static_cast<double>(rng.next_below(9)) - 4.0;
        any |= x[i] != 0.0;
      }
      if (!any) x[0] = 1.0;
      WilcoxonResult got = wilcoxon_one_sided(x, y);
      // Brute force over sign assignments of the ranked |d|.
      std::vector<double> d;
      for (std::size_t i = 0; i < m; ++i)
        if (x[i] != y[i]) d.push_back(x[i] - y[i]);
      std::vector<double> mag;
      for (double v : d) mag.push_back(std::fabs(v));
      std::vector<std::size_t> order(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a,
                                                std::size_t b) {
        return mag[a] < mag[b];
      });
      std::vector<double> rank(d.size());
      for (std::size_t i = 0; i < d.size();) {
        std::size_t j = i;
        while (j < d.size() && mag[order[j]] == mag[order[i]]) ++j;
        double avg = (static_cast<double>(i + j - 1)) / 2.0 + 1.0;
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
        i = j;
      }
      double w_obs = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] > 0) w_obs += rank[i];
      std::size_t hits = 0;
      const std::size_t total = std::size_t{1} << d.size();
      for (std::size_t mask = 0; mask < total; ++mask) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
          if (mask & (std::size_t{1} << i)) acc += rank[i];
        if (acc >= w_obs - 1e-9) ++hits;
      }
      double brute = static_cast<double>(hits) / static_cast<double>(total);
      expect(got.exact && std::abs(got.p_value - brute) <= 1e-10,
             "exact p agrees with enumeration");
    }
  });

  criterion(6, "LODO summary arithmetic", [] {
    LodoSummary s = lodo_summary({{0, 0.3128},
                                  {1, 0.6013},
                                  {2, 0.5934},
                                  {3, 0.6791},
                                  {4, 0.6021}},
                                 0.8296);
    expect(std::abs(s.mean_f1 - 0.5577) <= 5e-5, "mean F1 0.5577");
    expect(std::abs(s.gap - 0.2719) <= 5e-5, "gap +0.2719");
  });

  criterion(7, "kernel shape chain and gate properties", [] {
    tchnet::ModelConfig cfg;
    NamedTensors w = tchnet::init_weights(cfg, 1234);
    SplitMix64 rng(55);
    auto random_window = [&]() {
      MatrixRXf x(cfg.window, cfg.feat);
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
          x(r, c) = static_cast<float>(rng.next_double() * 20.0 - 10.0);
      return x;
    };
    tchnet::ForwardDiagnostics d =
        tchnet::model_forward(cfg, w, random_window(), {1, 2});
    expect(d.h_t.size() == 512, "h_T in R^512");
    expect(d.fused.size() == 384, "fused in R^384");
    expect(d.fused.size() + 64 == 448, "z in R^448");
    expect(std::abs(d.probs[0] + d.probs[1] - 1.0f) <= 1e-6f,
           "probs sum to 1 within 1e-6");
    // Gate range and convexity on 1000 random fusion inputs.
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXf h_t(512), h_c(64), h_h(64);
      for (Eigen::Index i = 0; i < 512; ++i)
        h_t[i] = static_cast<float>(rng.next_double() * 4.0 - 2.0);
      for (Eigen::Index i = 0; i < 64; ++i) {
        h_c[i] = static_cast<float>(rng.next_double() * 4.0 - 2.0);
        h_h[i] = static_cast<float>(rng.next_double() * 4.0 - 2.0);
      }
      tchnet::CbgafOutput out = tchnet::cbgaf(cfg, w, h_t, h_c, h_h);
      for (const Eigen::VectorXf* g :
           {&out.gate_t, &out.gate_c, &out.gate_h}) {
        expect(g->minCoeff() > 0.0f && g->maxCoeff() < 1.0f,
               "gates in (0,1)");
      }
    }
  });

  criterion(8, "gradient verification of CB-GAF + focal loss", [] {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      tchnet::GradcheckResult r = tchnet::gradcheck_cbgaf_focal(seed);
      expect(r.max_rel_err <= 1e-4, "max relative error <= 1e-4");
    }
    tchnet::LossConfig plain;
    plain.gamma = 0.0;
    plain.label_smoothing = 0.0;
    std::vector<Eigen::Vector2d> probs = {Eigen::Vector2d(0.7, 0.3),
                                          Eigen::Vector2d(0.2, 0.8)};
    std::vector<std::uint8_t> labels = {0, 1};
    double ce = -(std::log(0.7) + std::log(0.8)) / 2.0;
    double fl =
        tchnet::focal_loss(probs, labels, Eigen::Vector2d::Ones(), plain);
    expect(std::abs(fl - ce) <= 1e-10,
           "gamma=0, eps=0 focal equals cross-entropy within 1e-10");
  });

  criterion(9, "parameter accounting", [] {
    tchnet::ModelConfig cfg;
    tchnet::ParameterCount a = tchnet::count_parameters(cfg);
    tchnet::ParameterCount b = tchnet::count_parameters(cfg);
    expect(a.total == b.total, "deterministic total");
    expect(!a.by_component.empty(), "per-component breakdown present");
    expect(a.by_component.at("c_branch") == 352,
           "embedding subtotal exactly 352");
    const double reference = 2691696.0;
    double rel =
        std::abs(static_cast<double>(a.total) - reference) / reference;
    expect(rel <= 0.03, "total within +/-3% of reference");
    std::string report = tchnet::parameter_report_json(a, 2691696);
    expect(report.find("residual") != std::string::npos,
           "residual reported");
  });

  criterion(10, "determinism across BRIDGE_THREADS in {1, 4}", [] {
    tchnet::ModelConfig cfg;
    NamedTensors w = tchnet::init_weights(cfg, 77);
    SplitMix64 rng(6);
    const std::size_t n = 12;
    std::vector<float> features(n * cfg.window * cfg.feat);
    for (float& v : features)
      v = static_cast<float>(rng.next_double() * 20.0 - 10.0);
    std::vector<std::array<int, 2>> contexts;
    for (std::size_t i = 0; i < n; ++i)
      contexts.push_back({static_cast<int>(i % 5),
                          static_cast<int>(i % 6)});
    auto run = [&](int threads) {
      setenv("BRIDGE_THREADS", threads == 1 ? "1" : "4", 1);
      return tchnet::model_forward_batch(cfg, w, features.data(), contexts,
                                         n, 0);
    };
    auto one = run(1);
    auto four = run(4);
    ScoredPredictions p1, p4;
    for (std::size_t i = 0; i < n; ++i) {
      expect(std::memcmp(one[i].probs.data(), four[i].probs.data(),
                         2 * sizeof(float)) == 0,
             "per-sample probs bit-identical");
      expect(one[i].fused.isApprox(four[i].fused, 0.0f),
             "fused vectors bit-identical");
      p1.scores.push_back(one[i].probs[1]);
      p4.scores.push_back(four[i].probs[1]);
      p1.labels.push_back(static_cast<std::uint8_t>(i % 2));
      p4.labels.push_back(static_cast<std::uint8_t>(i % 2));
      p1.contexts.push_back(contexts[i]);
      p4.contexts.push_back(contexts[i]);
    }
    MetricsReport m1 = full_metrics(p1);
    MetricsReport m4 = full_metrics(p4);
    expect(m1.f1 == m4.f1 && m1.roc_auc == m4.roc_auc &&
               m1.pr_auc == m4.pr_auc && m1.mcc == m4.mcc,
           "metric values bit-identical");
    unsetenv("BRIDGE_THREADS");
  });

  if (failures == 0) {
    std::cout << "ALL 10 CRITERIA PASSED\n";
    return 0;
  }
  std::cout << failures << " CRITERIA FAILED\n";
  return 1;
}
