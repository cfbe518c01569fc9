#include "mobtune/acquisition.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mobtune/log.hpp"
#include "mobtune/rng.hpp"

namespace mobtune {

namespace {

constexpr uint64_t kCandidateSalt = 0xCA4D;
constexpr uint64_t kMcSalt = 0x3C0;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }

double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / 2.5066282746310005024;  // sqrt(2 pi)
}

void check_context(const AcquisitionContext& ctx) {
  if (ctx.mc_samples < 1) throw std::invalid_argument("acquisition: mc_samples must be >= 1");
  if (ctx.candidate_count < 1)
    throw std::invalid_argument("acquisition: candidate_count must be >= 1");
  if (!(ctx.ref_scale > 0.0 && ctx.ref_scale < 1.0))
    throw std::invalid_argument("acquisition: ref_scale must lie in (0, 1)");
}

}  // namespace

ReferencePoint reference_point(const BaselineAnchor& anchor, double ref_scale) {
  if (!(anchor.speed > 0.0) || !(anchor.recall > 0.0))
    throw std::invalid_argument("reference_point: anchor components must be positive");
  if (!(ref_scale > 0.0 && ref_scale < 1.0))
    throw std::invalid_argument("reference_point: ref_scale must lie in (0, 1)");
  return ReferencePoint{ref_scale, ref_scale};
}

double ehvi_mc(const PosteriorPair& posterior, const FrontStaircase& staircase, int mc_samples,
               uint64_t seed) {
  if (mc_samples < 1) throw std::invalid_argument("ehvi_mc: mc_samples must be >= 1");
  double ss = std::sqrt(std::max(posterior.speed.variance, 0.0));
  double sr = std::sqrt(std::max(posterior.recall.variance, 0.0));
  Rng rng(seed);
  double total = 0.0;
  for (int i = 0; i < mc_samples; ++i) {
    auto [e1, e2] = rng.normal_pair();
    total += staircase.improvement(posterior.speed.mean + ss * e1,
                                   posterior.recall.mean + sr * e2);
  }
  return total / static_cast<double>(mc_samples);
}

double ehvi_mc(const PosteriorPair& posterior, std::span<const NormalizedObjective> front,
               const ReferencePoint& ref, int mc_samples, uint64_t seed) {
  FrontStaircase staircase(front, ref.speed, ref.recall);
  return ehvi_mc(posterior, staircase, mc_samples, seed);
}

double cei(const PosteriorPair& posterior, double rlim_n, double best_f) {
  double s = std::sqrt(std::max(posterior.speed.variance, 0.0));
  double ei;
  if (s > 0.0) {
    double gamma = (posterior.speed.mean - best_f) / s;
    ei = s * (gamma * std_normal_cdf(gamma) + std_normal_pdf(gamma));
  } else {
    ei = std::max(posterior.speed.mean - best_f, 0.0);
  }
  double sr = std::sqrt(std::max(posterior.recall.variance, 0.0));
  double feasible = sr > 0.0 ? std_normal_cdf((posterior.recall.mean - rlim_n) / sr)
                             : (posterior.recall.mean > rlim_n ? 1.0 : 0.0);
  return ei * feasible;
}

Configuration recommend(const ConfigSpace& space, const SurrogateModel& model,
                        const ParetoArchive& archive, const AnchorSet& anchors,
                        const std::string& index_type, const AcquisitionContext& ctx,
                        const std::optional<ConstraintSpec>& constraint) {
  check_context(ctx);
  auto candidates =
      space.random_candidates(index_type, ctx.candidate_count, mix_seed(ctx.seed, kCandidateSalt));

  // Pick the normalization anchor and the front it applies to: the type's
  // own when it has observations, otherwise the global one.
  const BaselineAnchor* anchor = nullptr;
  std::vector<ObjectiveVector> front_raw;
  auto it = anchors.per_type.find(index_type);
  if (it != anchors.per_type.end() && !archive.type_front(index_type).empty()) {
    anchor = &it->second;
    front_raw = archive.type_front_objectives(index_type);
  } else if (anchors.global.has_value() && !archive.global_front().empty()) {
    anchor = &*anchors.global;
    front_raw = archive.global_front_objectives();
    log_debug("recommend: no per-type anchor for " + index_type + ", using the global anchor");
  }
  if (anchor == nullptr) {
    log_info("recommend: no anchor available for " + index_type + "; returning a random candidate");
    return candidates.front();
  }

  size_t best_idx = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  const uint64_t mc_seed = mix_seed(ctx.seed, kMcSalt);

  if (ctx.mode == AcquisitionMode::Ehvi) {
    std::vector<NormalizedObjective> front_npi;
    front_npi.reserve(front_raw.size());
    for (const auto& p : front_raw) front_npi.push_back(normalize_npi(p, *anchor));
    ReferencePoint ref = reference_point(*anchor, ctx.ref_scale);
    FrontStaircase staircase(front_npi, ref.speed, ref.recall);
    if (staircase.hv() == 0.0)
      log_debug("recommend: front for " + index_type + " lies entirely at or below the reference point");
    for (size_t i = 0; i < candidates.size(); ++i) {
      PosteriorPair post = model.predict(space.encode(candidates[i]));
      double score = ehvi_mc(post, staircase, ctx.mc_samples, mc_seed);
      if (score > best_score) {
        best_score = score;
        best_idx = i;
      }
    }
  } else {
    if (!constraint.has_value())
      throw std::invalid_argument("recommend: constrained mode requires a ConstraintSpec");
    if (!constraint->best_feasible.has_value())
      throw std::invalid_argument("recommend: constrained mode requires a resolved best_feasible");
    if (!(anchor->recall > 0.0) || !(anchor->speed > 0.0))
      throw std::invalid_argument("recommend: degenerate anchor for constraint normalization");
    // The incumbent arrives in raw speed units and must land on the polled
    // type's normalized scale, the scale the model predicts candidates on.
    double rlim_n = constraint->rlim / anchor->recall;
    double best_f = *constraint->best_feasible / anchor->speed;
    for (size_t i = 0; i < candidates.size(); ++i) {
      PosteriorPair post = model.predict(space.encode(candidates[i]));
      double score = cei(post, rlim_n, best_f);
      if (score > best_score) {
        best_score = score;
        best_idx = i;
      }
    }
  }

  if (best_score <= 0.0) {
    std::ostringstream os;
    os << "recommend: all " << candidates.size() << " candidates for " << index_type
       << " scored zero; keeping the first";
    log_debug(os.str());
  }
  return candidates[best_idx];
}

}  // namespace mobtune
