#include "mobtune/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mobtune {

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  return a.speed >= b.speed && a.recall >= b.recall &&
         (a.speed > b.speed || a.recall > b.recall);
}

std::vector<ObjectiveVector> nondominated_front(std::span<const ObjectiveVector> points) {
  const size_t n = points.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  // Speed descending, recall descending, then input order. Within that
  // ordering a point survives iff its recall strictly exceeds every earlier
  // survivor's, which also drops later copies of exact duplicates.
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (points[a].speed != points[b].speed) return points[a].speed > points[b].speed;
    if (points[a].recall != points[b].recall) return points[a].recall > points[b].recall;
    return a < b;
  });
  std::vector<size_t> kept;
  double max_recall = -std::numeric_limits<double>::infinity();
  for (size_t idx : order) {
    if (points[idx].recall > max_recall) {
      kept.push_back(idx);
      max_recall = points[idx].recall;
    }
  }
  std::sort(kept.begin(), kept.end());
  std::vector<ObjectiveVector> out;
  out.reserve(kept.size());
  for (size_t idx : kept) out.push_back(points[idx]);
  return out;
}

double hypervolume_2d(std::span<const ObjectiveVector> front, const ReferencePoint& ref) {
  std::vector<const ObjectiveVector*> sorted;
  sorted.reserve(front.size());
  for (const auto& p : front) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [](const ObjectiveVector* a, const ObjectiveVector* b) {
    if (a->speed != b->speed) return a->speed > b->speed;
    return a->recall > b->recall;
  });
  double area = 0.0;
  double covered = ref.recall;
  for (const auto* p : sorted) {
    double w = p->speed - ref.speed;
    double h = p->recall - covered;
    if (w > 0.0 && h > 0.0) {
      area += w * h;
      covered = p->recall;
    }
  }
  return area;
}

BaselineAnchor balanced_anchor(std::span<const ObjectiveVector> front) {
  if (front.empty()) throw std::invalid_argument("balanced_anchor: empty front");
  double max_speed = 0.0;
  double max_recall = 0.0;
  for (const auto& p : front) {
    max_speed = std::max(max_speed, p.speed);
    max_recall = std::max(max_recall, p.recall);
  }
  size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  double best_sum = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < front.size(); ++i) {
    double ns = max_speed > 0.0 ? front[i].speed / max_speed : 0.0;
    double nr = max_recall > 0.0 ? front[i].recall / max_recall : 0.0;
    double gap = std::abs(ns - nr);
    double sum = ns + nr;
    if (gap < best_gap || (gap == best_gap && sum > best_sum)) {
      best = i;
      best_gap = gap;
      best_sum = sum;
    }
  }
  return BaselineAnchor{front[best].speed, front[best].recall};
}

NormalizedObjective normalize_npi(const ObjectiveVector& y, const BaselineAnchor& anchor) {
  if (anchor.speed == 0.0 || anchor.recall == 0.0)
    throw std::invalid_argument("degenerate anchor: zero component");
  return NormalizedObjective{y.speed / anchor.speed, y.recall / anchor.recall};
}

FrontStaircase::FrontStaircase(std::span<const NormalizedObjective> front, double ref_speed,
                               double ref_recall)
    : ref_speed_(ref_speed), ref_recall_(ref_recall) {
  std::vector<NormalizedObjective> pts;
  pts.reserve(front.size());
  for (const auto& p : front)
    if (p.speed > ref_speed && p.recall > ref_recall) pts.push_back(p);
  std::sort(pts.begin(), pts.end(), [](const NormalizedObjective& a, const NormalizedObjective& b) {
    if (a.speed != b.speed) return a.speed > b.speed;
    return a.recall > b.recall;
  });
  double covered = ref_recall;
  for (const auto& p : pts) {
    if (p.recall > covered) {
      hv_ += (p.speed - ref_speed) * (p.recall - covered);
      covered = p.recall;
      speeds_.push_back(p.speed);
      recalls_.push_back(p.recall);
    }
  }
}

double FrontStaircase::improvement(double speed, double recall) const {
  if (speed <= ref_speed_ || recall <= ref_recall_) return 0.0;
  const size_t k = speeds_.size();
  size_t j = 0;
  double covered = ref_recall_;
  while (j < k && speeds_[j] >= speed) {
    if (recalls_[j] >= recall) return 0.0;  // dominated by the staircase
    covered = recalls_[j];
    ++j;
  }
  double area = 0.0;
  double hi = speed;
  while (true) {
    double lo = (j < k) ? std::max(speeds_[j], ref_speed_) : ref_speed_;
    if (recall > covered && hi > lo) area += (hi - lo) * (recall - covered);
    if (j >= k || speeds_[j] <= ref_speed_ || recalls_[j] >= recall) break;
    covered = recalls_[j];
    hi = speeds_[j];
    ++j;
  }
  return area;
}

namespace {

bool same_objectives(const ObjectiveVector& a, const ObjectiveVector& b) {
  return a.speed == b.speed && a.recall == b.recall;
}

void insert_into_front(std::vector<ArchiveEntry>& front, const Configuration& config,
                       const ObjectiveVector& obj) {
  for (const auto& e : front)
    if (dominates(e.objectives, obj) || same_objectives(e.objectives, obj)) return;
  front.erase(std::remove_if(front.begin(), front.end(),
                             [&](const ArchiveEntry& e) { return dominates(obj, e.objectives); }),
              front.end());
  front.push_back(ArchiveEntry{config, obj});
}

}  // namespace

void ParetoArchive::insert(const Configuration& config, const ObjectiveVector& objectives) {
  insert_into_front(global_, config, objectives);
  insert_into_front(per_type_[config.index_type], config, objectives);
  ++inserted_;
}

const std::vector<ArchiveEntry>& ParetoArchive::type_front(const std::string& index_type) const {
  static const std::vector<ArchiveEntry> empty;
  auto it = per_type_.find(index_type);
  return it == per_type_.end() ? empty : it->second;
}

std::vector<ObjectiveVector> ParetoArchive::global_front_objectives() const {
  std::vector<ObjectiveVector> out;
  out.reserve(global_.size());
  for (const auto& e : global_) out.push_back(e.objectives);
  return out;
}

std::vector<ObjectiveVector> ParetoArchive::type_front_objectives(
    const std::string& index_type) const {
  std::vector<ObjectiveVector> out;
  for (const auto& e : type_front(index_type)) out.push_back(e.objectives);
  return out;
}

}  // namespace mobtune
