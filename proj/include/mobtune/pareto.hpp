#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobtune/config_space.hpp"

namespace mobtune {

// One measured outcome. Both speed and recall are maximized; memory rides
// along for reporting and cost transforms but never takes part in dominance.
struct ObjectiveVector {
  double speed = 0.0;
  double recall = 0.0;
  std::optional<double> memory;

  bool operator==(const ObjectiveVector&) const = default;
};

struct NormalizedObjective {
  double speed = 0.0;
  double recall = 0.0;
};

// Per-index-type normalization base: observations are divided componentwise
// by the anchor so that different index families become comparable.
struct BaselineAnchor {
  double speed = 0.0;
  double recall = 0.0;
};

struct ReferencePoint {
  double speed = 0.0;
  double recall = 0.0;
};

// a dominates b: a is at least as good in both objectives and strictly
// better in at least one. Memory is ignored.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

// The subset of points not dominated by any other input point, in first
// occurrence input order. Exact duplicates are kept once (first wins).
// O(n log n); safe for multi-million point inputs.
std::vector<ObjectiveVector> nondominated_front(std::span<const ObjectiveVector> points);

// Exact dominated area of a mutually non-dominated front above `ref`,
// computed by a descending-speed sweep. Points not strictly above the
// reference in both objectives contribute nothing.
double hypervolume_2d(std::span<const ObjectiveVector> front, const ReferencePoint& ref);

// The front member whose normalized objectives are most nearly equal:
// argmax of 1 / |speed/max_speed - recall/max_recall|. A zero gap beats all
// nonzero gaps; ties prefer the larger normalized sum, then first occurrence.
// Throws std::invalid_argument on an empty front.
BaselineAnchor balanced_anchor(std::span<const ObjectiveVector> front);

// Componentwise ratio against the anchor. Throws std::invalid_argument with
// "degenerate anchor" when either anchor component is zero.
NormalizedObjective normalize_npi(const ObjectiveVector& y, const BaselineAnchor& anchor);

// Staircase view of a fixed front for repeated single-point hypervolume
// improvement queries (the inner loop of Monte Carlo EHVI). Construction
// filters points at or below the reference and compacts dominated ones.
class FrontStaircase {
 public:
  FrontStaircase(std::span<const NormalizedObjective> front, double ref_speed, double ref_recall);

  double hv() const { return hv_; }

  // Hypervolume added by the point (speed, recall); zero when it is
  // dominated by the staircase or does not exceed the reference.
  double improvement(double speed, double recall) const;

 private:
  // Sorted by speed descending; recall strictly increasing.
  std::vector<double> speeds_;
  std::vector<double> recalls_;
  double ref_speed_;
  double ref_recall_;
  double hv_ = 0.0;
};

struct ArchiveEntry {
  Configuration config;
  ObjectiveVector objectives;
};

// Incrementally maintained Pareto fronts: one per index type plus the
// global one. Insertion order does not affect the final front contents.
class ParetoArchive {
 public:
  void insert(const Configuration& config, const ObjectiveVector& objectives);

  const std::vector<ArchiveEntry>& global_front() const { return global_; }
  // Empty when the type has no observations yet.
  const std::vector<ArchiveEntry>& type_front(const std::string& index_type) const;

  std::vector<ObjectiveVector> global_front_objectives() const;
  std::vector<ObjectiveVector> type_front_objectives(const std::string& index_type) const;

  size_t size() const { return inserted_; }

 private:
  std::vector<ArchiveEntry> global_;
  std::map<std::string, std::vector<ArchiveEntry>> per_type_;
  size_t inserted_ = 0;
};

}  // namespace mobtune
