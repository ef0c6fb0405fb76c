#include "bridge/ingest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bridge {

using nlohmann::json;

namespace {

// One RFC-4180 record; quoted fields may contain delimiters and embedded
// newlines. Returns false at end of input.
bool read_record(std::istream& in, char delim,
                 std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  for (;;) {
    if (c == EOF) {
      fields.push_back(field);
      return true;
    }
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        int next = in.peek();
        if (next == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      ++line_no;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
    }
    c = in.get();
  }
}

DatasetTable parse_csv_stream(std::istream& in, const IngestConfig& cfg) {
  DatasetTable table;
  table.dataset_id = cfg.dataset_id;
  table.label_column = cfg.label_column;
  table.benign_values = cfg.benign_values;

  std::size_t line_no = 1;
  std::vector<std::string> fields;
  if (!read_record(in, cfg.delimiter, table.headers, line_no) ||
      table.headers.empty()) {
    throw std::runtime_error("csv: empty file");
  }
  auto it = std::find(table.headers.begin(), table.headers.end(),
                      cfg.label_column);
  if (it == table.headers.end()) {
    throw std::runtime_error("csv: label column '" + cfg.label_column +
                             "' not found in header");
  }
  std::size_t label_idx =
      static_cast<std::size_t>(it - table.headers.begin());

  std::vector<std::size_t> malformed;
  std::size_t total = 0;
  while (true) {
    std::size_t record_line = line_no;
    if (!read_record(in, cfg.delimiter, fields, line_no)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    ++total;
    if (fields.size() != table.headers.size()) {
      malformed.push_back(record_line);
      continue;
    }
    table.labels.push_back(
        cfg.benign_values.count(fields[label_idx]) ? 0 : 1);
    table.rows.push_back(fields);
  }
  if (total == 0) throw std::runtime_error("csv: no data rows");
  if (!malformed.empty()) {
    if (100 * malformed.size() > total) {
      std::ostringstream msg;
      msg << "csv: " << malformed.size() << " of " << total
          << " rows malformed (>1%), first at line " << malformed.front();
      throw std::runtime_error(msg.str());
    }
    std::ostringstream msg;
    msg << "csv: rejected " << malformed.size() << " malformed row(s) at line(s)";
    for (std::size_t i = 0; i < malformed.size() && i < 10; ++i)
      msg << ' ' << malformed[i];
    // Rejections below the abort threshold are reported on stderr only.
    std::fputs((msg.str() + "\n").c_str(), stderr);
  }
  return table;
}

}  // namespace

IngestConfig parse_ingest_config_json(const std::string& text) {
  json j = json::parse(text);
  IngestConfig cfg;
  cfg.dataset_id = j.at("dataset_id").get<int>();
  if (cfg.dataset_id < 0 || cfg.dataset_id > 4) {
    throw std::runtime_error("ingest config: dataset_id out of range 0..4");
  }
  cfg.label_column = j.at("label_column").get<std::string>();
  for (const json& v : j.at("benign_values"))
    cfg.benign_values.insert(v.get<std::string>());
  std::string delim = j.value("delimiter", ",");
  if (delim.size() != 1)
    throw std::runtime_error("ingest config: delimiter must be one character");
  cfg.delimiter = delim[0];
  return cfg;
}

IngestConfig load_ingest_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ingest_config_json(ss.str());
}

DatasetTable parse_csv(const std::string& path, const IngestConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return parse_csv_stream(in, cfg);
}

DatasetTable parse_csv_text(const std::string& text,
                            const IngestConfig& cfg) {
  std::istringstream in(text);
  return parse_csv_stream(in, cfg);
}

DatasetTable balance_classes(const DatasetTable& table, std::uint64_t seed) {
  std::vector<std::size_t> benign, attack;
  for (std::size_t i = 0; i < table.labels.size(); ++i) {
    (table.labels[i] == 0 ? benign : attack).push_back(i);
  }
  if (benign.empty() || attack.empty()) {
    throw std::runtime_error("degenerate: single-class dataset");
  }
  const bool benign_majority = benign.size() >= attack.size();
  std::vector<std::size_t>& majority = benign_majority ? benign : attack;
  const std::vector<std::size_t>& minority = benign_majority ? attack : benign;

  std::size_t target = std::min(
      majority.size(), std::max<std::size_t>(minority.size(), 5000));
  if (target < majority.size()) {
    std::vector<std::size_t> picked =
        sample_indices(majority.size(), target, seed);
    std::vector<std::size_t> kept;
    kept.reserve(target);
    for (std::size_t p : picked) kept.push_back(majority[p]);
    majority = std::move(kept);
  }

  std::vector<bool> keep(table.labels.size(), false);
  for (std::size_t i : majority) keep[i] = true;
  for (std::size_t i : minority) keep[i] = true;

  DatasetTable out;
  out.dataset_id = table.dataset_id;
  out.headers = table.headers;
  out.label_column = table.label_column;
  out.benign_values = table.benign_values;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (!keep[i]) continue;
    out.rows.push_back(table.rows[i]);
    out.labels.push_back(table.labels[i]);
  }
  return out;
}

CanonicalMatrix build_canonical_matrix(const DatasetTable& table,
                                       const MappingReport& report) {
  if (table.dataset_id != report.dataset_id) {
    throw std::runtime_error("canonical matrix: dataset_id mismatch");
  }
  // Column index per slot, -1 for zero-filled.
  std::vector<int> column(kCanonicalSlots, -1);
  for (const SlotOutcome& o : report.outcomes) {
    if (!o.matched) continue;
    auto it = std::find(table.headers.begin(), table.headers.end(), o.column);
    if (it == table.headers.end()) {
      throw std::runtime_error("canonical matrix: matched column '" +
                               o.column + "' missing from table headers");
    }
    column[static_cast<std::size_t>(o.slot)] =
        static_cast<int>(it - table.headers.begin());
  }

  CanonicalMatrix m;
  m.dataset_id = table.dataset_id;
  m.labels = table.labels;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  m.values = MatrixRXf::Zero(n, kCanonicalSlots);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::vector<std::string>& row =
        table.rows[static_cast<std::size_t>(r)];
    for (int slot = 0; slot < kCanonicalSlots; ++slot) {
      int col = column[static_cast<std::size_t>(slot)];
      if (col < 0) continue;
      const std::string& cell = row[static_cast<std::size_t>(col)];
      const char* begin = cell.c_str();
      char* end = nullptr;
      double parsed = std::strtod(begin, &end);
      float v = static_cast<float>(parsed);
      bool numeric = end != begin && *end == '\0' && !cell.empty();
      if (!numeric || !std::isfinite(v)) {
        ++m.sanitation_count;
        continue;  // stays 0
      }
      m.values(r, slot) = v;
    }
  }
  return m;
}

double attack_fraction(const CanonicalMatrix& m) {
  if (m.labels.empty()) throw std::runtime_error("attack_fraction: empty matrix");
  std::size_t attacks = 0;
  for (std::uint8_t l : m.labels) attacks += l;
  return static_cast<double>(attacks) / static_cast<double>(m.labels.size());
}

}  // namespace bridge
