#pragma once

#include "bridge/common.hpp"
#include "bridge/vocab.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace bridge {

// Raw parsed records of one source dataset, labels already binarized.
struct DatasetTable {
  int dataset_id = 0;  // 0..4
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::uint8_t> labels;  // 0 benign, 1 attack
  std::string label_column;
  std::set<std::string> benign_values;
};

// Aligned 46-column single-precision projection of a DatasetTable.
struct CanonicalMatrix {
  int dataset_id = 0;
  MatrixRXf values;  // N x 46, finite everywhere
  std::vector<std::uint8_t> labels;
  std::size_t sanitation_count = 0;  // non-numeric/NaN/inf cells zeroed
};

struct IngestConfig {
  int dataset_id = 0;
  std::string label_column;
  std::set<std::string> benign_values;
  char delimiter = ',';
};

IngestConfig load_ingest_config(const std::string& path);
IngestConfig parse_ingest_config_json(const std::string& text);

// RFC-4180 CSV with configurable delimiter. Rows with wrong arity are
// rejected and reported by line number; more than 1% malformed rows aborts.
DatasetTable parse_csv(const std::string& path, const IngestConfig& cfg);
DatasetTable parse_csv_text(const std::string& text, const IngestConfig& cfg);

// Subsamples the majority class to min(majority, max(minority, 5000)) with
// a seeded Fisher-Yates selection; minority rows and original order are
// preserved. Throws on single-class input.
DatasetTable balance_classes(const DatasetTable& table, std::uint64_t seed);

// Matched slots are parsed as decimals and narrowed to float; zero-filled
// slots and any non-finite or non-numeric cell become 0 (counted).
CanonicalMatrix build_canonical_matrix(const DatasetTable& table,
                                       const MappingReport& report);

double attack_fraction(const CanonicalMatrix& m);

}  // namespace bridge
