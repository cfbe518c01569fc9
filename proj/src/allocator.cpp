#include "mobtune/allocator.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "mobtune/log.hpp"

namespace mobtune {

std::vector<IndexScore> score_index_types(const ParetoArchive& archive,
                                          std::span<const std::string> remaining,
                                          double ref_scale) {
  const auto& front = archive.global_front();
  if (front.empty()) throw std::runtime_error("score_index_types: empty global front");
  if (remaining.empty()) throw std::invalid_argument("score_index_types: no remaining types");

  auto objs = archive.global_front_objectives();
  BaselineAnchor anchor = balanced_anchor(objs);
  ReferencePoint ref{ref_scale * anchor.speed, ref_scale * anchor.recall};

  std::vector<IndexScore> out;
  out.reserve(remaining.size());
  double max_minus = -std::numeric_limits<double>::infinity();
  for (const auto& t : remaining) {
    std::vector<ObjectiveVector> rest;
    rest.reserve(front.size());
    for (const auto& e : front)
      if (e.config.index_type != t) rest.push_back(e.objectives);
    double hv_minus = hypervolume_2d(rest, ref);
    out.push_back(IndexScore{t, hv_minus});
    max_minus = std::max(max_minus, hv_minus);
  }
  // Stored hv_minus values become scores relative to the largest one.
  for (auto& s : out) s.score = max_minus - s.score;
  return out;
}

Allocator::Allocator(std::vector<std::string> all_types, int window)
    : all_types_(std::move(all_types)), window_(window) {
  if (all_types_.empty()) throw std::invalid_argument("allocator: no index types");
  if (window_ < 1) throw std::invalid_argument("allocator: window must be >= 1");
  std::set<std::string> uniq(all_types_.begin(), all_types_.end());
  if (uniq.size() != all_types_.size())
    throw std::invalid_argument("allocator: duplicate index types");
  remaining_ = all_types_;
  for (const auto& t : all_types_) streaks_[t] = 0;
}

std::optional<std::string> Allocator::observe_and_maybe_abandon(
    const std::vector<IndexScore>& scores, int iteration) {
  if (scores.size() != remaining_.size())
    throw std::invalid_argument("allocator: scores do not match the remaining types");
  for (const auto& s : scores)
    if (std::find(remaining_.begin(), remaining_.end(), s.index_type) == remaining_.end())
      throw std::invalid_argument("allocator: score for non-remaining type " + s.index_type);

  double worst = scores.front().score;
  for (const auto& s : scores) worst = std::min(worst, s.score);
  size_t worst_count = 0;
  std::string worst_type;
  for (const auto& s : scores) {
    if (s.score == worst) {
      ++worst_count;
      worst_type = s.index_type;
    }
  }

  std::optional<std::string> abandoned;
  if (worst_count == 1) {
    for (const auto& t : remaining_)
      if (t != worst_type) streaks_[t] = 0;
    ++streaks_[worst_type];
    if (streaks_[worst_type] >= window_ && remaining_.size() > 1) {
      abandoned = worst_type;
      remaining_.erase(std::remove(remaining_.begin(), remaining_.end(), worst_type),
                       remaining_.end());
      for (auto& [t, streak] : streaks_) streak = 0;
      log_info("allocator: abandoning index type " + worst_type);
    }
  } else {
    // Tied worst: nobody accumulates evidence this round.
    for (auto& [t, streak] : streaks_) streak = 0;
  }

  score_log_.push_back(ScoreRecord{iteration, scores, abandoned});
  return abandoned;
}

std::string Allocator::next_poll() {
  if (remaining_.empty()) throw std::logic_error("allocator: no remaining types");
  for (size_t i = 0; i < all_types_.size(); ++i) {
    const std::string& t = all_types_[poll_cursor_ % all_types_.size()];
    ++poll_cursor_;
    if (std::find(remaining_.begin(), remaining_.end(), t) != remaining_.end()) return t;
  }
  throw std::logic_error("allocator: poll cursor found no remaining type");
}

}  // namespace mobtune
