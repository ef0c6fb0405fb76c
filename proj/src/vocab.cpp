#include "bridge/vocab.hpp"

#include "bridge/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bridge {

using nlohmann::json;

namespace {

struct DefaultSlot {
  const char* name;
  int group;
  std::vector<const char*> aliases;
};

// CICFlowMeter-style canonical names, grouped 17/21/6/2. Aliases cover the
// common snake_case exports plus Argus/Zeek-style shorthand; the file is
// meant to be edited as new sources are added.
const std::vector<DefaultSlot>& default_slots() {
  static const std::vector<DefaultSlot> slots = {
      // Group 1: flow rates, durations, packet/byte counts (0-16)
      {"Flow Duration", 1, {"flow_duration", "flow dur", "duration_ms"}},
      {"Total Fwd Packets", 1, {"tot_fwd_pkts", "fwd_pkts", "spkts"}},
      {"Total Backward Packets", 1, {"tot_bwd_pkts", "bwd_pkts", "dpkts"}},
      {"Total Length of Fwd Packets", 1,
       {"totlen_fwd_pkts", "fwd_bytes", "sbytes"}},
      {"Total Length of Bwd Packets", 1,
       {"totlen_bwd_pkts", "bwd_bytes", "dbytes"}},
      {"Flow Bytes/s", 1, {"flow_byts_s", "byte_rate", "bytes_per_s"}},
      {"Flow Packets/s", 1, {"flow_pkts_s", "pkt_rate", "pkts_per_s"}},
      {"Fwd Packets/s", 1, {"fwd_pkts_s", "srate"}},
      {"Bwd Packets/s", 1, {"bwd_pkts_s", "drate"}},
      {"Down/Up Ratio", 1, {"down_up_ratio", "updown_ratio"}},
      {"Subflow Fwd Packets", 1, {"subflow_fwd_pkts"}},
      {"Subflow Fwd Bytes", 1, {"subflow_fwd_byts"}},
      {"Subflow Bwd Packets", 1, {"subflow_bwd_pkts"}},
      {"Subflow Bwd Bytes", 1, {"subflow_bwd_byts"}},
      {"Fwd Act Data Packets", 1, {"fwd_act_data_pkts", "act_data_pkt_fwd"}},
      {"Active Mean", 1, {"active_mean", "active.avg"}},
      {"Idle Mean", 1, {"idle_mean", "idle.avg"}},
      // Group 2: packet size and IAT statistics (17-37)
      {"Fwd Packet Length Max", 2, {"fwd_pkt_len_max", "smaxsz"}},
      {"Fwd Packet Length Min", 2, {"fwd_pkt_len_min", "sminsz"}},
      {"Fwd Packet Length Mean", 2, {"fwd_pkt_len_mean", "smeansz"}},
      {"Fwd Packet Length Std", 2, {"fwd_pkt_len_std"}},
      {"Bwd Packet Length Max", 2, {"bwd_pkt_len_max", "dmaxsz"}},
      {"Bwd Packet Length Min", 2, {"bwd_pkt_len_min", "dminsz"}},
      {"Bwd Packet Length Mean", 2, {"bwd_pkt_len_mean", "dmeansz"}},
      {"Bwd Packet Length Std", 2, {"bwd_pkt_len_std"}},
      {"Packet Length Mean", 2, {"pkt_len_mean", "avg_pkt_size"}},
      {"Packet Length Std", 2, {"pkt_len_std"}},
      {"Packet Length Variance", 2, {"pkt_len_var"}},
      {"Min Packet Length", 2, {"pkt_len_min", "min_pkt_len"}},
      {"Max Packet Length", 2, {"pkt_len_max", "max_pkt_len"}},
      {"Flow IAT Mean", 2, {"flow_iat_mean", "iat_mean"}},
      {"Flow IAT Std", 2, {"flow_iat_std", "iat_std"}},
      {"Flow IAT Max", 2, {"flow_iat_max", "iat_max"}},
      {"Flow IAT Min", 2, {"flow_iat_min", "iat_min"}},
      {"Fwd IAT Mean", 2, {"fwd_iat_mean", "sintpkt"}},
      {"Fwd IAT Std", 2, {"fwd_iat_std", "sjitter"}},
      {"Bwd IAT Mean", 2, {"bwd_iat_mean", "dintpkt"}},
      {"Bwd IAT Std", 2, {"bwd_iat_std", "djitter"}},
      // Group 3: TCP flag indicators (38-43)
      {"SYN Flag Count", 3, {"syn_flag_cnt", "syn_count"}},
      {"ACK Flag Count", 3, {"ack_flag_cnt", "ack_count"}},
      {"FIN Flag Count", 3, {"fin_flag_cnt", "fin_count"}},
      {"RST Flag Count", 3, {"rst_flag_cnt", "rst_count"}},
      {"PSH Flag Count", 3, {"psh_flag_cnt", "psh_count"}},
      {"URG Flag Count", 3, {"urg_flag_cnt", "urg_count"}},
      // Group 4: header length and window size (44-45)
      {"Fwd Header Length", 4, {"fwd_header_len", "fwd_header_length"}},
      {"Init_Win_bytes_forward", 4, {"init_fwd_win_byts", "init_win_fwd"}},
  };
  return slots;
}

void validate(const CanonicalVocabulary& v) {
  if (static_cast<int>(v.slots.size()) != kCanonicalSlots) {
    throw std::runtime_error("vocabulary: slot count " +
                             std::to_string(v.slots.size()) + " != 46");
  }
  std::set<std::string> names;
  for (int i = 0; i < kCanonicalSlots; ++i) {
    const CanonicalSlot& s = v.slots[static_cast<std::size_t>(i)];
    if (s.index != i) {
      throw std::runtime_error("vocabulary: non-contiguous index " +
                               std::to_string(s.index) + " at position " +
                               std::to_string(i));
    }
    if (s.group < 1 || s.group > 4) {
      throw std::runtime_error("vocabulary: slot " + std::to_string(i) +
                               " has invalid group " +
                               std::to_string(s.group));
    }
    int expect_group = i <= 16 ? 1 : i <= 37 ? 2 : i <= 43 ? 3 : 4;
    if (s.group != expect_group) {
      throw std::runtime_error("vocabulary: slot " + std::to_string(i) +
                               " group " + std::to_string(s.group) +
                               " outside its index range (expected " +
                               std::to_string(expect_group) + ")");
    }
    if (!names.insert(fold_case(s.name)).second) {
      throw std::runtime_error("vocabulary: duplicate name '" + s.name +
                               "' at slot " + std::to_string(i));
    }
    std::set<std::string> al;
    for (const std::string& a : s.aliases) {
      if (a.empty()) {
        throw std::runtime_error("vocabulary: empty alias at slot " +
                                 std::to_string(i));
      }
      if (!al.insert(fold_case(a)).second) {
        throw std::runtime_error("vocabulary: duplicate alias '" + a +
                                 "' at slot " + std::to_string(i));
      }
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string default_vocabulary_json() {
  json slots = json::array();
  int idx = 0;
  for (const DefaultSlot& s : default_slots()) {
    json aliases = json::array();
    for (const char* a : s.aliases) aliases.push_back(a);
    slots.push_back({{"index", idx++},
                     {"name", s.name},
                     {"group", s.group},
                     {"aliases", aliases}});
  }
  return json{{"version", "bridge-vocab-1.0"}, {"slots", slots}}.dump(2) +
         "\n";
}

CanonicalVocabulary parse_vocabulary_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("vocabulary parse failure: ") +
                             e.what());
  }
  CanonicalVocabulary v;
  v.version = j.value("version", "");
  for (const json& js : j.at("slots")) {
    CanonicalSlot s;
    s.index = js.at("index").get<int>();
    s.name = js.at("name").get<std::string>();
    s.group = js.at("group").get<int>();
    for (const json& a : js.at("aliases")) {
      s.aliases.push_back(a.get<std::string>());
    }
    v.slots.push_back(std::move(s));
  }
  validate(v);
  return v;
}

CanonicalVocabulary load_vocabulary(const std::string& path) {
  return parse_vocabulary_json(read_file(path));
}

AliasMap parse_alias_map_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("alias map parse failure: ") +
                             e.what());
  }
  AliasMap m;
  m.dataset_id = j.at("dataset_id").get<int>();
  if (m.dataset_id < 0 || m.dataset_id > 4) {
    throw std::runtime_error("alias map: dataset_id out of range 0..4");
  }
  for (const json& jo : j.value("overrides", json::array())) {
    AliasOverride o;
    o.slot = jo.at("slot").get<int>();
    if (o.slot < 0 || o.slot >= kCanonicalSlots) {
      throw std::runtime_error("alias map: invalid slot index " +
                               std::to_string(o.slot));
    }
    for (const json& a : jo.value("aliases", json::array()))
      o.aliases.push_back(a.get<std::string>());
    for (const json& a : jo.value("exclude", json::array()))
      o.exclude.push_back(a.get<std::string>());
    m.overrides.push_back(std::move(o));
  }
  return m;
}

AliasMap load_alias_map(const std::string& path) {
  return parse_alias_map_json(read_file(path));
}

MappingReport match_columns(const CanonicalVocabulary& vocab,
                            const AliasMap& alias_map,
                            const std::vector<std::string>& headers) {
  std::vector<std::string> folded;
  folded.reserve(headers.size());
  for (const std::string& h : headers) folded.push_back(fold_case(h));

  // Effective alias set per slot: vocabulary aliases plus per-dataset
  // additions minus exclusions, all case-folded.
  std::vector<std::vector<std::string>> extra(kCanonicalSlots);
  std::vector<std::set<std::string>> excluded(kCanonicalSlots);
  for (const AliasOverride& o : alias_map.overrides) {
    for (const std::string& a : o.aliases)
      extra[static_cast<std::size_t>(o.slot)].push_back(fold_case(a));
    for (const std::string& a : o.exclude)
      excluded[static_cast<std::size_t>(o.slot)].insert(fold_case(a));
  }

  MappingReport report;
  report.dataset_id = alias_map.dataset_id;
  std::vector<bool> claimed(headers.size(), false);

  for (const CanonicalSlot& slot : vocab.slots) {
    std::vector<std::string> aliases;
    for (const std::string& a : slot.aliases) {
      std::string f = fold_case(a);
      if (!excluded[static_cast<std::size_t>(slot.index)].count(f))
        aliases.push_back(f);
    }
    for (const std::string& f : extra[static_cast<std::size_t>(slot.index)]) {
      if (!excluded[static_cast<std::size_t>(slot.index)].count(f))
        aliases.push_back(f);
    }
    std::string name_folded = fold_case(slot.name);

    SlotOutcome outcome;
    outcome.slot = slot.index;
    for (int stage = 1; stage <= 3 && !outcome.matched; ++stage) {
      std::vector<std::size_t> candidates;
      for (std::size_t h = 0; h < headers.size(); ++h) {
        if (claimed[h]) continue;
        bool hit = false;
        switch (stage) {
          case 1:
            hit = folded[h] == name_folded;
            break;
          case 2:
            hit = std::find(aliases.begin(), aliases.end(), folded[h]) !=
                  aliases.end();
            break;
          case 3:
            for (const std::string& a : aliases) {
              if (a.size() >= 5 &&
                  folded[h].find(a) != std::string::npos) {
                hit = true;
                break;
              }
            }
            break;
        }
        if (hit) candidates.push_back(h);
      }
      if (candidates.empty()) continue;
      outcome.matched = true;
      outcome.column = headers[candidates.front()];
      outcome.stage = stage;
      claimed[candidates.front()] = true;
      if (candidates.size() > 1) {
        AmbiguityFlag flag;
        flag.slot = slot.index;
        for (std::size_t h : candidates) flag.candidates.push_back(headers[h]);
        report.ambiguity_flags.push_back(std::move(flag));
      }
    }
    if (outcome.matched) ++report.matched_count;
    report.outcomes.push_back(std::move(outcome));
  }
  report.coverage_percent =
      percent_round(report.matched_count, kCanonicalSlots);
  return report;
}

std::vector<CoverageRow> coverage_summary(
    const std::vector<MappingReport>& reports) {
  std::map<int, CoverageRow> rows;
  for (const MappingReport& r : reports) {
    if (rows.count(r.dataset_id)) {
      throw std::runtime_error("coverage_summary: duplicate dataset_id " +
                               std::to_string(r.dataset_id));
    }
    rows[r.dataset_id] = {r.dataset_id, r.matched_count, r.coverage_percent};
  }
  std::vector<CoverageRow> out;
  for (auto& [id, row] : rows) out.push_back(row);
  return out;
}

std::string mapping_report_json(const MappingReport& report) {
  json outcomes = json::array();
  for (const SlotOutcome& o : report.outcomes) {
    json jo{{"slot", o.slot}, {"matched", o.matched}};
    if (o.matched) {
      jo["column"] = o.column;
      jo["stage"] = o.stage;
    }
    outcomes.push_back(std::move(jo));
  }
  json flags = json::array();
  for (const AmbiguityFlag& f : report.ambiguity_flags) {
    flags.push_back({{"slot", f.slot}, {"candidates", f.candidates}});
  }
  return json{{"dataset_id", report.dataset_id},
              {"matched_count", report.matched_count},
              {"coverage_percent", report.coverage_percent},
              {"outcomes", outcomes},
              {"ambiguity_flags", flags}}
      .dump(2);
}

std::string coverage_table_text(const std::vector<CoverageRow>& rows) {
  std::ostringstream out;
  out << "dataset  matched/46  coverage\n";
  for (const CoverageRow& r : rows) {
    out << "  " << r.dataset_id << "        " << r.matched << "/46       "
        << r.coverage_percent << "%\n";
  }
  return out.str();
}

}  // namespace bridge
