#include "mobtune/pareto.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mobtune/config_space.hpp"

namespace mobtune {
namespace {

ObjectiveVector ov(double s, double r) { return ObjectiveVector{s, r, std::nullopt}; }

// O(n^2) reference: a point survives iff no other input point dominates it;
// exact duplicates keep the first occurrence.
std::vector<ObjectiveVector> brute_force_front(const std::vector<ObjectiveVector>& pts) {
  std::vector<ObjectiveVector> out;
  for (size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (size_t j = 0; j < pts.size() && keep; ++j) {
      if (j == i) continue;
      if (dominates(pts[j], pts[i])) keep = false;
      if (j < i && pts[j].speed == pts[i].speed && pts[j].recall == pts[i].recall) keep = false;
    }
    if (keep) out.push_back(pts[i]);
  }
  return out;
}

// Column-envelope Riemann sum over an axis-aligned grid: per speed column,
// count the cell centers lying under the best recall achievable at that
// speed. Shares no code path with the descending sweep under test.
double riemann_hv(const std::vector<ObjectiveVector>& front, const ReferencePoint& ref,
                  int cells) {
  double max_s = ref.speed, max_r = ref.recall;
  for (const auto& p : front) {
    max_s = std::max(max_s, p.speed);
    max_r = std::max(max_r, p.recall);
  }
  const double ds = (max_s - ref.speed) / cells;
  const double dr = (max_r - ref.recall) / cells;
  if (ds <= 0.0 || dr <= 0.0) return 0.0;
  double area = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double s = ref.speed + (i + 0.5) * ds;
    double env = -std::numeric_limits<double>::infinity();
    for (const auto& p : front)
      if (p.speed >= s) env = std::max(env, p.recall);
    if (env <= ref.recall) continue;
    // Cell centers ref.recall + (k + 0.5) dr <= env  <=>  k < (env-ref)/dr - 0.5.
    const double k = (env - ref.recall) / dr - 0.5;
    const long rows = std::min<long>(cells, static_cast<long>(std::floor(k)) + 1);
    if (rows > 0) area += static_cast<double>(rows) * ds * dr;
  }
  return area;
}

std::vector<ObjectiveVector> random_front(std::mt19937_64& gen, int max_points) {
  std::uniform_real_distribution<double> us(1.0, 100.0), ur(0.05, 1.0);
  std::uniform_int_distribution<int> un(1, max_points);
  std::vector<ObjectiveVector> pts;
  const int n = un(gen);
  for (int i = 0; i < n; ++i) pts.push_back(ov(us(gen), ur(gen)));
  return brute_force_front(pts);
}

TEST(Dominates, StrictInBoth) { EXPECT_TRUE(dominates(ov(10, 0.9), ov(5, 0.8))); }

TEST(Dominates, EqualPointsDoNotDominate) { EXPECT_FALSE(dominates(ov(10, 0.9), ov(10, 0.9))); }

TEST(Dominates, IncomparablePair) {
  EXPECT_FALSE(dominates(ov(10, 0.7), ov(5, 0.9)));
  EXPECT_FALSE(dominates(ov(5, 0.9), ov(10, 0.7)));
}

TEST(Dominates, WeakImprovementInOneAxisSuffices) {
  EXPECT_TRUE(dominates(ov(10, 0.9), ov(10, 0.8)));
  EXPECT_TRUE(dominates(ov(11, 0.9), ov(10, 0.9)));
}

TEST(NondominatedFront, MutuallyIncomparableAllSurvive) {
  std::vector<ObjectiveVector> pts{ov(1, 3), ov(2, 2), ov(3, 1)};
  EXPECT_EQ(nondominated_front(pts).size(), 3u);
}

TEST(NondominatedFront, ChainCollapsesToTop) {
  std::vector<ObjectiveVector> pts{ov(1, 1), ov(2, 2)};
  auto front = nondominated_front(pts);
  ASSERT_EQ(front.size(), 1u);
  EXPECT_EQ(front[0].speed, 2.0);
}

TEST(NondominatedFront, MatchesBruteForceOracle) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> us(0.0, 10.0), ur(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<ObjectiveVector> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(ov(us(gen), ur(gen)));
    auto fast = nondominated_front(pts);
    auto slow = brute_force_front(pts);
    ASSERT_EQ(fast.size(), slow.size()) << "rep " << rep;
    for (size_t i = 0; i < fast.size(); ++i) {
      EXPECT_EQ(fast[i].speed, slow[i].speed);
      EXPECT_EQ(fast[i].recall, slow[i].recall);
    }
  }
}

TEST(NondominatedFront, DuplicatesKeptOnceFirstWins) {
  std::vector<ObjectiveVector> pts{ov(5, 5), ov(5, 5), ov(1, 1)};
  pts[0].memory = 111.0;  // marks the first copy
  auto front = nondominated_front(pts);
  ASSERT_EQ(front.size(), 1u);
  ASSERT_TRUE(front[0].memory.has_value());
  EXPECT_EQ(*front[0].memory, 111.0);
}

TEST(Hypervolume, ExactStaircase) {
  std::vector<ObjectiveVector> front{ov(1, 3), ov(2, 2), ov(3, 1)};
  EXPECT_NEAR(hypervolume_2d(front, ReferencePoint{0, 0}), 6.0, 1e-12);
}

TEST(Hypervolume, EmptyFrontIsZero) {
  EXPECT_EQ(hypervolume_2d(std::vector<ObjectiveVector>{}, ReferencePoint{0, 0}), 0.0);
}

TEST(Hypervolume, PointsNotAboveReferenceContributeNothing) {
  std::vector<ObjectiveVector> front{ov(1, 1)};
  EXPECT_EQ(hypervolume_2d(front, ReferencePoint{2, 2}), 0.0);
  std::vector<ObjectiveVector> mixed{ov(4, 0.5), ov(1, 3)};
  // Only (4, 0.5) exceeds ref (2, 0); area (4-2)*(0.5-0).
  EXPECT_NEAR(hypervolume_2d(mixed, ReferencePoint{2, 0}), 1.0, 1e-12);
}

TEST(Hypervolume, MatchesRiemannOracle) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 20; ++rep) {
    auto front = random_front(gen, 15);
    const ReferencePoint ref{0, 0};
    const double exact = hypervolume_2d(front, ref);
    const double grid = riemann_hv(front, ref, 1000);
    ASSERT_GT(exact, 0.0);
    EXPECT_NEAR(grid / exact, 1.0, 0.01) << "rep " << rep;
  }
}

TEST(Hypervolume, MonotoneUnderInsertion) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> us(1.0, 100.0), ur(0.05, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    auto front = random_front(gen, 10);
    const double before = hypervolume_2d(front, ReferencePoint{0, 0});
    std::vector<ObjectiveVector> grown = front;
    grown.push_back(ov(us(gen), ur(gen)));
    auto refront = nondominated_front(grown);
    const double after = hypervolume_2d(refront, ReferencePoint{0, 0});
    EXPECT_GE(after, before - 1e-12);
  }
}

TEST(Hypervolume, TranslationConsistent) {
  std::mt19937_64 gen(13);
  auto front = random_front(gen, 12);
  const double base = hypervolume_2d(front, ReferencePoint{0, 0});
  const double dx = 17.0, dy = 0.4;
  std::vector<ObjectiveVector> shifted;
  for (const auto& p : front) shifted.push_back(ov(p.speed + dx, p.recall + dy));
  EXPECT_NEAR(hypervolume_2d(shifted, ReferencePoint{dx, dy}), base, 1e-9);
}

TEST(FrontStaircase, HvMatchesSweep) {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 10; ++rep) {
    auto front = random_front(gen, 12);
    std::vector<NormalizedObjective> nf;
    for (const auto& p : front) nf.push_back({p.speed, p.recall});
    FrontStaircase stair(nf, 0.0, 0.0);
    EXPECT_NEAR(stair.hv(), hypervolume_2d(front, ReferencePoint{0, 0}), 1e-9);
  }
}

TEST(FrontStaircase, ImprovementMatchesRecomputedDifference) {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> us(0.0, 110.0), ur(0.0, 1.1);
  for (int rep = 0; rep < 10; ++rep) {
    auto front = random_front(gen, 12);
    std::vector<NormalizedObjective> nf;
    for (const auto& p : front) nf.push_back({p.speed, p.recall});
    FrontStaircase stair(nf, 0.0, 0.0);
    for (int k = 0; k < 200; ++k) {
      const double s = us(gen), r = ur(gen);
      std::vector<ObjectiveVector> grown = front;
      grown.push_back(ov(s, r));
      const double expected =
          hypervolume_2d(nondominated_front(grown), ReferencePoint{0, 0}) - stair.hv();
      EXPECT_NEAR(stair.improvement(s, r), expected, 1e-9);
    }
  }
}

TEST(FrontStaircase, DominatedOrBelowReferenceIsZero) {
  std::vector<NormalizedObjective> nf{{2.0, 2.0}};
  FrontStaircase stair(nf, 1.0, 1.0);
  EXPECT_EQ(stair.improvement(1.5, 1.5), 0.0);  // dominated
  EXPECT_EQ(stair.improvement(0.5, 3.0), 0.0);  // below speed reference
  EXPECT_EQ(stair.improvement(3.0, 0.5), 0.0);  // below recall reference
}

// Direct transcription of the balance rule: smallest |s/smax - r/rmax| wins,
// ties prefer larger normalized sum, then first occurrence.
BaselineAnchor brute_force_anchor(const std::vector<ObjectiveVector>& front) {
  double smax = 0, rmax = 0;
  for (const auto& p : front) {
    smax = std::max(smax, p.speed);
    rmax = std::max(rmax, p.recall);
  }
  size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity(), best_sum = -1.0;
  for (size_t i = 0; i < front.size(); ++i) {
    const double ns = front[i].speed / smax, nr = front[i].recall / rmax;
    const double gap = std::abs(ns - nr), sum = ns + nr;
    if (gap < best_gap || (gap == best_gap && sum > best_sum)) {
      best = i;
      best_gap = gap;
      best_sum = sum;
    }
  }
  return BaselineAnchor{front[best].speed, front[best].recall};
}

TEST(BalancedAnchor, WorkedExample) {
  std::vector<ObjectiveVector> front{ov(100, 0.5), ov(80, 0.8), ov(60, 0.9)};
  auto a = balanced_anchor(front);
  EXPECT_EQ(a.speed, 80.0);
  EXPECT_EQ(a.recall, 0.8);
}

TEST(BalancedAnchor, SinglePoint) {
  std::vector<ObjectiveVector> front{ov(50, 0.9)};
  auto a = balanced_anchor(front);
  EXPECT_EQ(a.speed, 50.0);
  EXPECT_EQ(a.recall, 0.9);
}

TEST(BalancedAnchor, ZeroGapWinsWithoutDivisionTrouble) {
  std::vector<ObjectiveVector> front{ov(100, 1.0), ov(100, 1.0)};
  auto a = balanced_anchor(front);
  EXPECT_EQ(a.speed, 100.0);
  EXPECT_EQ(a.recall, 1.0);
}

TEST(BalancedAnchor, TiePrefersLargerNormalizedSum) {
  // Both points sit at gap 0; (10, 1.0) has sum 2.0, (5, 0.5) has sum 1.5.
  std::vector<ObjectiveVector> front{ov(5, 0.5), ov(10, 1.0)};
  auto a = balanced_anchor(front);
  EXPECT_EQ(a.speed, 10.0);
}

TEST(BalancedAnchor, EmptyFrontThrows) {
  EXPECT_THROW(balanced_anchor(std::vector<ObjectiveVector>{}), std::invalid_argument);
}

TEST(BalancedAnchor, MatchesBruteForceOnRandomFronts) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 50; ++rep) {
    auto front = random_front(gen, 15);
    auto a = balanced_anchor(front);
    auto b = brute_force_anchor(front);
    EXPECT_EQ(a.speed, b.speed) << "rep " << rep;
    EXPECT_EQ(a.recall, b.recall) << "rep " << rep;
  }
}

TEST(BalancedAnchor, ScaleEquivariant) {
  std::mt19937_64 gen(29);
  for (int rep = 0; rep < 20; ++rep) {
    auto front = random_front(gen, 10);
    auto base = balanced_anchor(front);
    std::vector<ObjectiveVector> scaled;
    for (const auto& p : front) scaled.push_back(ov(p.speed * 3.5, p.recall));
    auto s = balanced_anchor(scaled);
    EXPECT_EQ(s.speed, base.speed * 3.5);
    EXPECT_EQ(s.recall, base.recall);
  }
}

TEST(NormalizeNpi, Halves) {
  auto n = normalize_npi(ov(50, 0.4), BaselineAnchor{100, 0.8});
  EXPECT_EQ(n.speed, 0.5);
  EXPECT_EQ(n.recall, 0.5);
}

TEST(NormalizeNpi, AnchorMapsToOnes) {
  auto n = normalize_npi(ov(100, 0.8), BaselineAnchor{100, 0.8});
  EXPECT_EQ(n.speed, 1.0);
  EXPECT_EQ(n.recall, 1.0);
}

TEST(NormalizeNpi, DirectDivision) {
  auto n = normalize_npi(ov(120, 0.72), BaselineAnchor{100, 0.8});
  EXPECT_NEAR(n.speed, 1.2, 1e-15);
  EXPECT_NEAR(n.recall, 0.9, 1e-15);
}

TEST(NormalizeNpi, DegenerateAnchorThrows) {
  try {
    normalize_npi(ov(1, 1), BaselineAnchor{0.0, 0.8});
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate anchor"), std::string::npos);
  }
}

Configuration tagged_config(const ConfigSpace& space, const std::string& type, int salt) {
  Configuration c = space.default_config(type);
  c.values["segment_maxSize"] = 100.0 + (salt % 900);
  return c;
}

TEST(ParetoArchive, InsertionOrderIndependent) {
  auto space = demo_space();
  std::vector<std::pair<Configuration, ObjectiveVector>> obs;
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> us(1.0, 100.0), ur(0.05, 1.0);
  const std::vector<std::string> types{"HNSW", "IVF_FLAT", "IVF_PQ"};
  for (int i = 0; i < 60; ++i)
    obs.push_back({tagged_config(space, types[i % 3], i), ov(us(gen), ur(gen))});

  auto collect = [](const ParetoArchive& a) {
    std::vector<std::pair<double, double>> v;
    for (const auto& e : a.global_front()) v.push_back({e.objectives.speed, e.objectives.recall});
    std::sort(v.begin(), v.end());
    return v;
  };

  ParetoArchive forward;
  for (const auto& [c, y] : obs) forward.insert(c, y);
  std::shuffle(obs.begin(), obs.end(), gen);
  ParetoArchive shuffled;
  for (const auto& [c, y] : obs) shuffled.insert(c, y);

  EXPECT_EQ(collect(forward), collect(shuffled));
  EXPECT_EQ(forward.size(), 60u);
}

TEST(ParetoArchive, TypeFrontsPartitionByIndexType) {
  auto space = demo_space();
  ParetoArchive archive;
  archive.insert(tagged_config(space, "HNSW", 1), ov(10, 0.9));
  archive.insert(tagged_config(space, "IVF_FLAT", 2), ov(20, 0.5));
  archive.insert(tagged_config(space, "HNSW", 3), ov(5, 0.95));
  EXPECT_EQ(archive.type_front("HNSW").size(), 2u);
  EXPECT_EQ(archive.type_front("IVF_FLAT").size(), 1u);
  EXPECT_TRUE(archive.type_front("IVF_PQ").empty());
  EXPECT_EQ(archive.global_front().size(), 3u);
}

TEST(ParetoArchive, GlobalFrontStaysNondominated) {
  auto space = demo_space();
  ParetoArchive archive;
  std::mt19937_64 gen(37);
  std::uniform_real_distribution<double> us(1.0, 100.0), ur(0.05, 1.0);
  for (int i = 0; i < 200; ++i)
    archive.insert(tagged_config(space, "HNSW", i), ov(us(gen), ur(gen)));
  auto objs = archive.global_front_objectives();
  for (size_t i = 0; i < objs.size(); ++i)
    for (size_t j = 0; j < objs.size(); ++j)
      if (i != j) EXPECT_FALSE(dominates(objs[i], objs[j]));
}

}  // namespace
}  // namespace mobtune
