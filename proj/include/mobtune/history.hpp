#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mobtune/allocator.hpp"
#include "mobtune/tuner.hpp"

namespace mobtune {

inline constexpr int kHistoryFormatVersion = 1;
inline constexpr const char* kHistoryFormatName = "mobtune-history";

struct HistoryHeader {
  std::string space_fingerprint;
  ObjectiveSpec objective;
};

struct HistoryData {
  HistoryHeader header;
  std::vector<ObservationRecord> records;
  std::vector<ScoreRecord> scores;
};

// Line-delimited JSON, append-only: header on line 1, then one observation
// or score record per line. Every field except eval duration is a pure
// function of the manifest and seed, so reruns match byte for byte there.
class HistoryWriter {
 public:
  HistoryWriter(const std::string& path, const HistoryHeader& header);
  void append_observation(const ObservationRecord& record);
  void append_scores(const ScoreRecord& scores);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

// Parses a full history file. Throws with the offending line number on any
// corrupt or out-of-order record, and on format or version mismatches. When
// `expected_space_fingerprint` is given, a differing space is an error.
HistoryData load_history(const std::string& path,
                         const std::optional<std::string>& expected_space_fingerprint = {});

// Serialization used by the writer; exposed for tests and tooling.
std::string observation_to_json_line(const ObservationRecord& record);
std::string scores_to_json_line(const ScoreRecord& scores);
std::string header_to_json_line(const HistoryHeader& header);

}  // namespace mobtune
