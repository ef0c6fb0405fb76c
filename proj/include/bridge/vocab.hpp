#pragma once

#include <optional>
#include <string>
#include <vector>

namespace bridge {

// One slot of the 46-feature canonical vocabulary.
struct CanonicalSlot {
  int index = 0;  // 0..45, contiguous
  std::string name;
  int group = 0;  // 1..4
  std::vector<std::string> aliases;
};

struct CanonicalVocabulary {
  std::string version;
  std::vector<CanonicalSlot> slots;  // exactly 46, index order
};

// Per-dataset alias overrides layered on top of the shipped vocabulary.
struct AliasOverride {
  int slot = 0;
  std::vector<std::string> aliases;  // added for this dataset
  std::vector<std::string> exclude;  // dropped for this dataset
};

struct AliasMap {
  int dataset_id = 0;  // 0..4
  std::vector<AliasOverride> overrides;
};

// Outcome of matching one slot against a header list.
struct SlotOutcome {
  int slot = 0;
  bool matched = false;
  std::string column;  // header that claimed the slot (when matched)
  int stage = 0;       // 1 exact name, 2 alias exact, 3 alias substring
};

struct AmbiguityFlag {
  int slot = 0;
  std::vector<std::string> candidates;  // competing headers, file order
};

struct MappingReport {
  int dataset_id = 0;
  std::vector<SlotOutcome> outcomes;  // one per slot, index order
  int matched_count = 0;
  int coverage_percent = 0;  // round half-up of 100*matched/46
  std::vector<AmbiguityFlag> ambiguity_flags;
};

struct CoverageRow {
  int dataset_id = 0;
  int matched = 0;
  int coverage_percent = 0;
};

// Parses and validates a vocabulary JSON file. Throws std::runtime_error
// with slot context on any invariant violation (count, duplicates, gaps).
CanonicalVocabulary load_vocabulary(const std::string& path);
CanonicalVocabulary parse_vocabulary_json(const std::string& text);

AliasMap load_alias_map(const std::string& path);
AliasMap parse_alias_map_json(const std::string& text);

// Three-stage alias matching: exact case-insensitive name, alias exact
// match, alias substring match (alias length >= 5). Higher stage number is
// lower priority; within a stage the earliest header in file order wins and
// extra candidates are flagged. A header claims at most one slot (slots are
// processed in index order).
MappingReport match_columns(const CanonicalVocabulary& vocab,
                            const AliasMap& alias_map,
                            const std::vector<std::string>& headers);

// One row per report, ordered by dataset_id. Throws on duplicate ids.
std::vector<CoverageRow> coverage_summary(
    const std::vector<MappingReport>& reports);

std::string mapping_report_json(const MappingReport& report);
std::string coverage_table_text(const std::vector<CoverageRow>& rows);

// The vocabulary shipped with the toolkit (identical to data/vocab.json).
std::string default_vocabulary_json();

}  // namespace bridge
