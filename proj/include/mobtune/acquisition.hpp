#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include "mobtune/config_space.hpp"
#include "mobtune/pareto.hpp"
#include "mobtune/surrogate.hpp"

namespace mobtune {

enum class AcquisitionMode { Ehvi, ConstrainedEi };

struct AcquisitionContext {
  AcquisitionMode mode = AcquisitionMode::Ehvi;
  int mc_samples = 128;
  int candidate_count = 1024;
  uint64_t seed = 0;
  double ref_scale = 0.5;  // reference point in normalized space, per axis
};

// Recall feasibility threshold plus the resolved incumbent used by expected
// improvement. Both live in raw (transformed-objective) units: best feasible
// observed speed, or best overall when nothing feasible has been seen yet.
// recommend() rescales the incumbent onto the polled type's normalized axis.
struct ConstraintSpec {
  double rlim = 0.9;
  std::optional<double> best_feasible;
};

// Normalization bases per index type plus the global fallback.
struct AnchorSet {
  std::map<std::string, BaselineAnchor> per_type;
  std::optional<BaselineAnchor> global;
};

// In normalized space the anchor itself sits at (1, 1), so the reference
// point is (ref_scale, ref_scale). Throws when the anchor has non-positive
// components or ref_scale is outside (0, 1).
ReferencePoint reference_point(const BaselineAnchor& anchor, double ref_scale);

// Monte Carlo expected hypervolume improvement under common random numbers:
// the seed pins the standard-normal draws, so candidates scored with the
// same seed share them. Zero-variance posteriors reduce to the exact
// hypervolume improvement of the mean.
double ehvi_mc(const PosteriorPair& posterior, std::span<const NormalizedObjective> front,
               const ReferencePoint& ref, int mc_samples, uint64_t seed);
double ehvi_mc(const PosteriorPair& posterior, const FrontStaircase& staircase, int mc_samples,
               uint64_t seed);

// Expected improvement on normalized speed times the probability that
// normalized recall exceeds rlim_n. Zero-variance posteriors degrade to
// max(mean - best_f, 0) and a hard feasibility test.
double cei(const PosteriorPair& posterior, double rlim_n, double best_f);

// Scores candidate_count random candidates of the given index type and
// returns the argmax (first index on ties). Falls back to the global anchor
// when the type has no observations, and to the first random candidate when
// no anchor exists at all.
Configuration recommend(const ConfigSpace& space, const SurrogateModel& model,
                        const ParetoArchive& archive, const AnchorSet& anchors,
                        const std::string& index_type, const AcquisitionContext& ctx,
                        const std::optional<ConstraintSpec>& constraint);

}  // namespace mobtune
