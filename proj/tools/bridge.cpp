// bridge: command-line surface for the alignment pipeline, evaluation
// harness, and inference kernel. Every command writes a run manifest with
// input/output digests so artifacts are reproducible byte-for-byte.

#include "bridge/common.hpp"
#include "bridge/ingest.hpp"
#include "bridge/metrics.hpp"
#include "bridge/protocol.hpp"
#include "bridge/tchnet/gradcheck.hpp"
#include "bridge/tchnet/model.hpp"
#include "bridge/tchnet/weights.hpp"
#include "bridge/tensor_io.hpp"
#include "bridge/transform.hpp"
#include "bridge/vocab.hpp"
#include "bridge/windows.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bridge;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

std::string digest_hex(const std::string& path) {
  std::string bytes = read_file(path);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

std::string digest_dir_or_file(const std::string& path) {
  if (!fs::is_directory(path)) return digest_hex(path);
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = kFnvOffset;
  for (const std::string& f : files) {
    std::string bytes = read_file(f);
    h = fnv1a64(f.data(), f.size(), h);
    h = fnv1a64(bytes.data(), bytes.size(), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

struct ManifestWriter {
  std::string command;
  json config = json::object();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  void write(const std::string& path) const {
    json in = json::object(), out = json::object();
    for (const std::string& p : inputs) in[p] = digest_dir_or_file(p);
    for (const std::string& p : outputs) out[p] = digest_dir_or_file(p);
    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    json m{{"command", command},       {"config", config},
           {"seeds", seeds},           {"inputs", in},
           {"outputs", out},           {"toolkit_version", kVersion},
           {"wall_clock_seconds", secs}};
    write_file(path, m.dump(2) + "\n");
  }
};

std::vector<std::string> split_list(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) out.push_back(item);
  return out;
}

CanonicalVocabulary load_vocab_arg(const std::string& path) {
  if (path.empty()) return parse_vocabulary_json(default_vocabulary_json());
  return load_vocabulary(path);
}

// ---------------------------------------------------------------- align --

int cmd_align(const std::string& vocab_path, const std::string& alias_path,
              const std::string& headers_arg, const std::string& csv_path,
              int dataset_id, const std::string& out_path) {
  CanonicalVocabulary vocab = load_vocab_arg(vocab_path);
  AliasMap alias;
  alias.dataset_id = dataset_id;
  if (!alias_path.empty()) alias = load_alias_map(alias_path);

  std::vector<std::string> headers;
  if (!headers_arg.empty()) {
    headers = split_list(headers_arg, ',');
  } else {
    IngestConfig cfg;
    cfg.delimiter = ',';
    std::string text = read_file(csv_path);
    std::string first_line = text.substr(0, text.find('\n'));
    if (!first_line.empty() && first_line.back() == '\r')
      first_line.pop_back();
    headers = split_list(first_line, ',');
  }

  MappingReport report = match_columns(vocab, alias, headers);
  report.dataset_id = dataset_id;
  write_file(out_path, mapping_report_json(report) + "\n");
  std::cout << coverage_table_text({{report.dataset_id, report.matched_count,
                                     report.coverage_percent}});

  ManifestWriter mw;
  mw.command = "align";
  mw.config = {{"vocab", vocab_path}, {"alias", alias_path},
               {"dataset_id", dataset_id}};
  if (!vocab_path.empty()) mw.inputs.push_back(vocab_path);
  if (!alias_path.empty()) mw.inputs.push_back(alias_path);
  if (!csv_path.empty()) mw.inputs.push_back(csv_path);
  mw.outputs.push_back(out_path);
  mw.write(out_path + ".manifest.json");
  return 0;
}

// ----------------------------------------------------------- preprocess --

int cmd_preprocess(const std::string& config_path, std::uint64_t seed,
                   const std::string& out_dir) {
  json cfg = json::parse(read_file(config_path));
  double train_fraction = cfg.value("train_fraction", 0.8);
  CanonicalVocabulary vocab =
      load_vocab_arg(cfg.value("vocab", std::string{}));
  fs::create_directories(out_dir);

  std::string stage = "parse";
  json index_datasets = json::array();
  std::vector<CanonicalMatrix> matrices;
  std::uint64_t scaler_fit_hash = 0;
  try {
    for (const json& d : cfg.at("datasets")) {
      stage = "parse";
      IngestConfig icfg;
      icfg.dataset_id = d.at("dataset_id").get<int>();
      icfg.label_column = d.at("label_column").get<std::string>();
      for (const json& v : d.at("benign_values"))
        icfg.benign_values.insert(v.get<std::string>());
      icfg.delimiter = d.value("delimiter", std::string{","})[0];
      DatasetTable table = parse_csv(d.at("csv").get<std::string>(), icfg);

      stage = "balance";
      table = balance_classes(table, seed + icfg.dataset_id);

      stage = "align";
      AliasMap alias;
      alias.dataset_id = icfg.dataset_id;
      if (d.contains("alias_map"))
        alias = load_alias_map(d.at("alias_map").get<std::string>());
      MappingReport report = match_columns(vocab, alias, table.headers);
      report.dataset_id = icfg.dataset_id;

      stage = "vectorize";
      matrices.push_back(build_canonical_matrix(table, report));
    }

    // Fit the scaler on the earliest train_fraction of each dataset's rows
    // only, then apply everywhere.
    stage = "fit_scaler";
    std::size_t fit_rows = 0;
    for (const CanonicalMatrix& m : matrices) {
      fit_rows += static_cast<std::size_t>(
          static_cast<double>(m.values.rows()) * train_fraction + 1e-9);
    }
    MatrixRXf fit(static_cast<Eigen::Index>(fit_rows), kCanonicalSlots);
    Eigen::Index at = 0;
    for (const CanonicalMatrix& m : matrices) {
      auto take = static_cast<Eigen::Index>(
          static_cast<double>(m.values.rows()) * train_fraction + 1e-9);
      fit.middleRows(at, take) = m.values.topRows(take);
      at += take;
    }
    ScalerParams scaler = fit_scaler(fit);
    scaler_fit_hash = scaler.fit_hash;
    write_file(out_dir + "/scaler.json", scaler_params_json(scaler) + "\n");

    stage = "apply_scaler";
    for (CanonicalMatrix& m : matrices) {
      m.values = apply_scaler(scaler, m.values);
      std::string mfile = "matrix_" + std::to_string(m.dataset_id) + ".bt";
      std::string lfile = "labels_" + std::to_string(m.dataset_id) + ".bt";
      Tensor mt;
      mt.dims = {static_cast<std::uint32_t>(m.values.rows()),
                 static_cast<std::uint32_t>(m.values.cols())};
      mt.data.assign(m.values.data(), m.values.data() + m.values.size());
      save_tensor(out_dir + "/" + mfile, mt);
      Tensor lt;
      lt.dims = {static_cast<std::uint32_t>(m.labels.size())};
      lt.data.assign(m.labels.begin(), m.labels.end());
      save_tensor(out_dir + "/" + lfile, lt);
      index_datasets.push_back({{"dataset_id", m.dataset_id},
                                {"matrix", mfile},
                                {"labels", lfile},
                                {"rows", m.labels.size()},
                                {"sanitation_count", m.sanitation_count},
                                {"attack_fraction", attack_fraction(m)}});
    }
  } catch (const std::exception& e) {
    std::cerr << "preprocess failed at stage " << stage << ": " << e.what()
              << "\n";
    return 1;
  }

  json index{{"datasets", index_datasets},
             {"scaler", "scaler.json"},
             {"stage_order",
              {"parse", "balance", "align", "vectorize", "fit_scaler",
               "apply_scaler"}}};
  write_file(out_dir + "/index.json", index.dump(2) + "\n");

  ManifestWriter mw;
  mw.command = "preprocess";
  mw.config = cfg;
  mw.config["scaler_fit_hash"] = scaler_fit_hash;
  mw.seeds = {seed};
  mw.inputs.push_back(config_path);
  mw.outputs.push_back(out_dir + "/index.json");
  mw.outputs.push_back(out_dir + "/scaler.json");
  for (const json& d : index_datasets) {
    mw.outputs.push_back(out_dir + "/" + d.at("matrix").get<std::string>());
    mw.outputs.push_back(out_dir + "/" + d.at("labels").get<std::string>());
  }
  mw.write(out_dir + "/manifest.json");
  return 0;
}

// -------------------------------------------------------------- windows --

CanonicalMatrix load_indexed_matrix(const std::string& dir, const json& d) {
  CanonicalMatrix m;
  m.dataset_id = d.at("dataset_id").get<int>();
  Tensor mt = load_tensor(dir + "/" + d.at("matrix").get<std::string>());
  Tensor lt = load_tensor(dir + "/" + d.at("labels").get<std::string>());
  m.values = Eigen::Map<const MatrixRXf>(mt.data.data(), mt.dims[0],
                                         mt.dims[1]);
  m.labels.assign(lt.data.size(), 0);
  for (std::size_t i = 0; i < lt.data.size(); ++i)
    m.labels[i] = lt.data[i] != 0.0f ? 1 : 0;
  return m;
}

int cmd_windows(const std::string& in_dir, const std::string& out_dir,
                int window, int stride, const std::string& device_map_arg) {
  json index = json::parse(read_file(in_dir + "/index.json"));
  WindowConfig wcfg;
  wcfg.window = window;
  wcfg.stride = stride;
  for (const std::string& pair : split_list(device_map_arg, ',')) {
    if (pair.empty()) continue;
    auto kv = split_list(pair, ':');
    if (kv.size() != 2) throw CLI::ValidationError("--device-map", pair);
    wcfg.device_category_map[std::stoi(kv[0])] = std::stoi(kv[1]);
  }

  WindowSet all;
  all.window = window;
  for (const json& d : index.at("datasets")) {
    CanonicalMatrix m = load_indexed_matrix(in_dir, d);
    if (!wcfg.device_category_map.count(m.dataset_id))
      wcfg.device_category_map[m.dataset_id] = m.dataset_id;
    append_windows(all, build_windows(m, wcfg));
  }
  save_windowset(out_dir, all);

  ManifestWriter mw;
  mw.command = "windows";
  mw.config = {{"window", window}, {"stride", stride},
               {"device_map", device_map_arg}};
  mw.inputs.push_back(in_dir + "/index.json");
  mw.outputs.push_back(out_dir);
  mw.write(out_dir + "/manifest.json");
  std::cout << "windows: " << all.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------- split --

int cmd_split(const std::string& windows_dir, const std::string& out_dir,
              const std::string& mode_arg, double train_fraction,
              int held_out, std::uint64_t seed, std::size_t train_cap,
              std::size_t test_cap) {
  WindowSet all = load_windowset(windows_dir);
  SplitSpec spec;
  if (mode_arg == "stratified") {
    spec.mode = SplitMode::kStratifiedRandom;
  } else if (mode_arg == "temporal") {
    spec.mode = SplitMode::kTemporal;
  } else if (mode_arg == "lodo") {
    spec.mode = SplitMode::kLodo;
  } else {
    throw CLI::ValidationError("--mode", mode_arg);
  }
  spec.train_fraction = train_fraction;
  spec.held_out_dataset = held_out;
  spec.seed = seed;

  auto [train, test] = split(all, spec);
  if (train.size() > train_cap) train = cap_windows(train, train_cap, seed);
  if (test.size() > test_cap) test = cap_windows(test, test_cap, seed + 1);

  // Fit the partition scaler on the train features so the leakage check can
  // prove fit-before-test ordering from the stored artifacts alone.
  Eigen::Map<const MatrixRXf> train_rows(
      train.features.data(),
      static_cast<Eigen::Index>(train.size()) * train.window, train.feat);
  ScalerParams scaler = fit_scaler(MatrixRXf(train_rows));
  save_windowset(out_dir + "/train", train);
  save_windowset(out_dir + "/test", test);
  write_file(out_dir + "/scaler.json", scaler_params_json(scaler) + "\n");

  ManifestWriter mw;
  mw.command = "split";
  mw.config = {{"mode", mode_arg},
               {"train_fraction", train_fraction},
               {"held_out", held_out},
               {"train_cap", train_cap},
               {"test_cap", test_cap}};
  mw.seeds = {seed};
  mw.inputs.push_back(windows_dir);
  mw.outputs.push_back(out_dir + "/train");
  mw.outputs.push_back(out_dir + "/test");
  mw.outputs.push_back(out_dir + "/scaler.json");
  mw.write(out_dir + "/manifest.json");
  std::cout << "train " << train.size() << " test " << test.size() << "\n";
  return 0;
}

// --------------------------------------------------------------- verify --

int cmd_verify(const std::string& split_dir, const std::string& out_path) {
  WindowSet train = load_windowset(split_dir + "/train");
  WindowSet test = load_windowset(split_dir + "/test");
  ScalerParams scaler = load_scaler_params(split_dir + "/scaler.json");
  LeakageReport report = verify_leakage(train, test, scaler);
  std::string report_path =
      out_path.empty() ? split_dir + "/leakage.json" : out_path;
  write_file(report_path, leakage_report_json(report) + "\n");
  std::cout << leakage_report_json(report) << "\n";

  ManifestWriter mw;
  mw.command = "verify";
  mw.inputs.push_back(split_dir + "/train");
  mw.inputs.push_back(split_dir + "/test");
  mw.inputs.push_back(split_dir + "/scaler.json");
  mw.outputs.push_back(report_path);
  mw.write(report_path + ".manifest.json");
  return report.passed ? 0 : 1;
}

// ----------------------------------------------------------------- lodo --

int cmd_lodo(const std::string& windows_dir, const std::string& out_dir) {
  WindowSet all = load_windowset(windows_dir);
  auto folds = lodo_folds(all);
  ManifestWriter mw;
  mw.command = "lodo";
  mw.inputs.push_back(windows_dir);
  for (std::size_t k = 0; k < folds.size(); ++k) {
    std::string fold_dir = out_dir + "/fold_" + std::to_string(k);
    save_windowset(fold_dir + "/train", folds[k].first);
    save_windowset(fold_dir + "/test", folds[k].second);
    ManifestWriter fold_mw;
    fold_mw.command = "lodo.fold";
    fold_mw.config = {{"held_out_dataset", k}};
    fold_mw.outputs.push_back(fold_dir + "/train");
    fold_mw.outputs.push_back(fold_dir + "/test");
    fold_mw.write(fold_dir + "/manifest.json");
    mw.outputs.push_back(fold_dir);
  }
  mw.write(out_dir + "/manifest.json");
  std::cout << "folds: " << folds.size() << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval --

ScoredPredictions parse_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scores file: " + path);
  ScoredPredictions preds;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {  // header: window_id,score,label,c_ds,c_dev
      first = false;
      continue;
    }
    auto fields = split_list(line, ',');
    if (fields.size() != 5)
      throw std::runtime_error("scores row needs 5 fields: " + line);
    preds.scores.push_back(std::stod(fields[1]));
    preds.labels.push_back(
        static_cast<std::uint8_t>(std::stoi(fields[2])));
    preds.contexts.push_back(
        {std::stoi(fields[3]), std::stoi(fields[4])});
  }
  return preds;
}

int cmd_eval(const std::string& scores_path, const std::string& fold_f1_arg,
             double in_dist_f1, double threshold,
             const std::string& out_path) {
  ManifestWriter mw;
  mw.command = "eval";
  if (!fold_f1_arg.empty()) {
    std::vector<std::pair<int, double>> fold_f1;
    int id = 0;
    for (const std::string& v : split_list(fold_f1_arg, ','))
      fold_f1.emplace_back(id++, std::stod(v));
    LodoSummary summary = lodo_summary(fold_f1, in_dist_f1);
    std::string csv = lodo_summary_csv(summary);
    std::cout << csv;
    if (!out_path.empty()) {
      write_file(out_path, csv);
      mw.outputs.push_back(out_path);
    }
    mw.config = {{"fold_f1", fold_f1_arg}, {"in_dist_f1", in_dist_f1}};
    if (!out_path.empty()) mw.write(out_path + ".manifest.json");
    return 0;
  }

  ScoredPredictions preds = parse_scores_csv(scores_path);
  MetricsReport report = full_metrics(preds, threshold);
  auto breakdown = per_dataset_breakdown(preds, threshold);
  json per_ds = json::array();
  for (const DatasetMetrics& d : breakdown) {
    per_ds.push_back({{"dataset_id", d.dataset_id},
                      {"n", d.n},
                      {"reported", d.reported},
                      {"f1", d.metrics.f1},
                      {"roc_auc", d.metrics.roc_auc}});
  }
  json out{{"overall", json::parse(metrics_report_json(report))},
           {"per_dataset", per_ds}};
  std::cout << metrics_report_text(report);
  std::string report_path = out_path.empty() ? scores_path + ".report.json"
                                             : out_path;
  write_file(report_path, out.dump(2) + "\n");
  mw.config = {{"scores", scores_path}, {"threshold", threshold}};
  mw.inputs.push_back(scores_path);
  mw.outputs.push_back(report_path);
  mw.write(report_path + ".manifest.json");
  return 0;
}

// --------------------------------------------------------------- params --

int cmd_params(std::size_t reference_total, const std::string& out_path) {
  tchnet::ModelConfig cfg;
  tchnet::ParameterCount count = tchnet::count_parameters(cfg);
  std::string report =
      tchnet::parameter_report_json(count, reference_total) + "\n";
  std::cout << report;
  if (!out_path.empty()) {
    write_file(out_path, report);
    ManifestWriter mw;
    mw.command = "params";
    mw.config = {{"reference_total", reference_total}};
    mw.outputs.push_back(out_path);
    mw.write(out_path + ".manifest.json");
  }
  return 0;
}

// ------------------------------------------------------------ gradcheck --

int cmd_gradcheck(int fixtures, std::uint64_t seed, double tolerance) {
  double worst = 0.0;
  for (int i = 0; i < fixtures; ++i) {
    auto result = tchnet::gradcheck_cbgaf_focal(seed + i);
    std::cout << "fixture " << i << ": max_rel_err " << result.max_rel_err
              << " over " << result.checked_coords << " coords\n";
    worst = std::max(worst, result.max_rel_err);
  }
  std::cout << "worst: " << worst << (worst <= tolerance ? " PASS" : " FAIL")
            << "\n";
  return worst <= tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BRIDGE alignment pipeline and evaluation harness"};
  app.require_subcommand(1);

  // align
  std::string vocab_path, alias_path, headers_arg, csv_path, out_path;
  int dataset_id = 0;
  auto* align = app.add_subcommand("align", "Match headers to the vocabulary");
  align->add_option("--vocab", vocab_path, "Vocabulary JSON (default: built-in)");
  align->add_option("--alias", alias_path, "Per-dataset alias map JSON");
  align->add_option("--headers", headers_arg, "Comma-separated header list");
  align->add_option("--csv", csv_path, "CSV whose header row is matched");
  align->add_option("--dataset-id", dataset_id, "Dataset id 0-4");
  align->add_option("--out", out_path, "Mapping report path")->required();

  // vocab
  auto* vocab_cmd =
      app.add_subcommand("vocab", "Print the built-in vocabulary JSON");

  // preprocess
  std::string config_path, out_dir, in_dir;
  std::uint64_t seed = 0;
  auto* pre = app.add_subcommand("preprocess", "Balance, align, scale");
  pre->add_option("--config", config_path, "Pipeline config JSON")->required();
  pre->add_option("--seed", seed, "Balancing seed");
  pre->add_option("--out-dir", out_dir, "Output directory")->required();

  // windows
  int window = 32, stride = 4;
  std::string device_map_arg;
  auto* win = app.add_subcommand("windows", "Build sliding windows");
  win->add_option("--in-dir", in_dir, "Preprocess output dir")->required();
  win->add_option("--out-dir", out_dir, "Window set dir")->required();
  win->add_option("--window", window, "Window length");
  win->add_option("--stride", stride, "Stride");
  win->add_option("--device-map", device_map_arg, "ds:dev pairs, comma-sep");

  // split
  std::string mode_arg = "stratified";
  double train_fraction = 0.8;
  int held_out = 0;
  std::size_t train_cap = 800000, test_cap = 200000;
  auto* sp = app.add_subcommand("split", "Partition a window set");
  sp->add_option("--windows", in_dir, "Window set dir")->required();
  sp->add_option("--out-dir", out_dir, "Split output dir")->required();
  sp->add_option("--mode", mode_arg, "stratified|temporal|lodo");
  sp->add_option("--train-fraction", train_fraction, "Train fraction");
  sp->add_option("--held-out", held_out, "Held-out dataset (lodo)");
  sp->add_option("--seed", seed, "Shuffle seed");
  sp->add_option("--train-cap", train_cap, "Max train windows");
  sp->add_option("--test-cap", test_cap, "Max test windows");

  // verify
  std::string split_dir;
  auto* ver = app.add_subcommand("verify", "Run leakage checks on a split");
  ver->add_option("--split-dir", split_dir, "Split directory")->required();
  ver->add_option("--out", out_path, "Leakage report path");

  // lodo
  auto* lodo = app.add_subcommand("lodo", "Emit all leave-one-dataset-out folds");
  lodo->add_option("--windows", in_dir, "Window set dir")->required();
  lodo->add_option("--out-dir", out_dir, "Fold output dir")->required();

  // eval
  std::string scores_path, fold_f1_arg;
  double in_dist_f1 = 0.0, threshold = 0.5;
  auto* ev = app.add_subcommand("eval", "Score predictions or summarize folds");
  ev->add_option("--scores", scores_path,
                 "CSV: window_id,score,label,c_ds,c_dev");
  ev->add_option("--fold-f1", fold_f1_arg, "Comma-separated fold F1 values");
  ev->add_option("--in-dist-f1", in_dist_f1, "In-distribution F1 for the gap");
  ev->add_option("--threshold", threshold, "Decision threshold");
  ev->add_option("--out", out_path, "Report path");

  // params
  std::size_t reference_total = 2691696;
  auto* par = app.add_subcommand("params", "Parameter accounting report");
  par->add_option("--reference", reference_total, "Reference total");
  par->add_option("--out", out_path, "Report path");

  // gradcheck
  int fixtures = 10;
  double tolerance = 1e-4;
  auto* gc = app.add_subcommand("gradcheck", "Verify fusion-block gradients");
  gc->add_option("--fixtures", fixtures, "Number of seeded fixtures");
  gc->add_option("--seed", seed, "Base seed");
  gc->add_option("--tolerance", tolerance, "Max relative error allowed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (align->parsed()) {
      if (headers_arg.empty() == csv_path.empty()) {
        std::cerr << "align: exactly one of --headers/--csv required\n";
        return kExitConfig;
      }
      return cmd_align(vocab_path, alias_path, headers_arg, csv_path,
                       dataset_id, out_path);
    }
    if (vocab_cmd->parsed()) {
      std::cout << default_vocabulary_json() << "\n";
      return 0;
    }
    if (pre->parsed()) return cmd_preprocess(config_path, seed, out_dir);
    if (win->parsed())
      return cmd_windows(in_dir, out_dir, window, stride, device_map_arg);
    if (sp->parsed())
      return cmd_split(in_dir, out_dir, mode_arg, train_fraction, held_out,
                       seed, train_cap, test_cap);
    if (ver->parsed()) return cmd_verify(split_dir, out_path);
    if (lodo->parsed()) return cmd_lodo(in_dir, out_dir);
    if (ev->parsed()) {
      if (scores_path.empty() && fold_f1_arg.empty()) {
        std::cerr << "eval: one of --scores/--fold-f1 required\n";
        return kExitConfig;
      }
      return cmd_eval(scores_path, fold_f1_arg, in_dist_f1, threshold,
                      out_path);
    }
    if (par->parsed()) return cmd_params(reference_total, out_path);
    if (gc->parsed()) return cmd_gradcheck(fixtures, seed, tolerance);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::string msg = e.what();
    bool config_error = msg.find("cannot open") != std::string::npos ||
                        msg.find("parse") != std::string::npos;
    return config_error ? kExitConfig : 1;
  }
  return kExitConfig;
}
