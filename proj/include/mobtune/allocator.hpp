#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobtune/pareto.hpp"

namespace mobtune {

struct IndexScore {
  std::string index_type;
  double score = 0.0;
};

struct ScoreRecord {
  int iteration = 0;
  std::vector<IndexScore> scores;
  std::optional<std::string> abandoned;
};

// Exclusive hypervolume contribution of each remaining index type:
// Score(t) = max_t' HV(ref, Y \ Y_t') - HV(ref, Y \ Y_t), where Y is the
// global front and Y_t its type-t members. The reference point is ref_scale
// times the balanced anchor of Y. A type contributing nothing scores 0, the
// worst possible value. Throws when the global front is empty.
std::vector<IndexScore> score_index_types(const ParetoArchive& archive,
                                          std::span<const std::string> remaining,
                                          double ref_scale = 0.5);

// Round-robin polling over index types with windowed abandonment: a type
// that is the unique worst-scored for `window` consecutive observations is
// dropped from the rotation (never below one remaining type).
class Allocator {
 public:
  Allocator(std::vector<std::string> all_types, int window);

  const std::vector<std::string>& all_types() const { return all_types_; }
  const std::vector<std::string>& remaining() const { return remaining_; }
  int window() const { return window_; }
  const std::map<std::string, int>& worst_streaks() const { return streaks_; }
  const std::vector<ScoreRecord>& score_log() const { return score_log_; }

  // Updates streaks from one scoring round: the unique strictly-worst type's
  // streak grows and everyone else's resets; a tie for worst resets all
  // streaks. When a streak reaches the window and more than one type
  // remains, that type is removed and returned. At most one removal per call.
  std::optional<std::string> observe_and_maybe_abandon(const std::vector<IndexScore>& scores,
                                                       int iteration);

  // Next type in declaration order, cycling and skipping abandoned types.
  std::string next_poll();

 private:
  std::vector<std::string> all_types_;
  std::vector<std::string> remaining_;
  std::map<std::string, int> streaks_;
  std::vector<ScoreRecord> score_log_;
  size_t poll_cursor_ = 0;
  int window_;
};

}  // namespace mobtune
