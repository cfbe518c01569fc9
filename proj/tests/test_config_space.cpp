#include "mobtune/config_space.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace mobtune {
namespace {

// Small space with a categorical parameter, used where the demo space's
// all-numeric layout is not enough.
ConfigSpace mixed_space() {
  std::vector<IndexTypeDef> types{{"flat", {"probe"}}, {"tree", {"depth", "metric"}}};
  ParameterDef probe{"probe", ParamKind::Integer, 1, 2048, {}, 1024.0, "flat"};
  ParameterDef depth{"depth", ParamKind::Integer, 2, 32, {}, 8.0, "tree"};
  ParameterDef metric{"metric", ParamKind::Categorical, 0, 0, {"l2", "ip", "cosine"},
                      std::string("l2"), "tree"};
  ParameterDef budget{"budget", ParamKind::Continuous, 0.5, 4.0, {}, 1.0, kSharedScope};
  return ConfigSpace(std::move(types), {probe, depth, metric, budget});
}

TEST(Declaration, RejectsInvertedRange) {
  ParameterDef bad{"x", ParamKind::Continuous, 5.0, 1.0, {}, 2.0, kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {bad}), std::invalid_argument);
}

TEST(Declaration, RejectsDefaultOutsideRange) {
  ParameterDef bad{"x", ParamKind::Continuous, 0.0, 1.0, {}, 3.0, kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {bad}), std::invalid_argument);
}

TEST(Declaration, RejectsDuplicateParameterNames) {
  ParameterDef a{"x", ParamKind::Continuous, 0.0, 1.0, {}, 0.5, kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {a, a}), std::invalid_argument);
}

TEST(Declaration, RejectsEmptyOrDuplicateCategoricalChoices) {
  ParameterDef empty{"m", ParamKind::Categorical, 0, 0, {}, std::string("a"), kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {empty}), std::invalid_argument);
  ParameterDef dup{"m", ParamKind::Categorical, 0, 0, {"a", "a"}, std::string("a"), kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {dup}), std::invalid_argument);
}

TEST(Declaration, RejectsUnknownScopeAndDanglingPrivateList) {
  ParameterDef odd{"x", ParamKind::Continuous, 0.0, 1.0, {}, 0.5, "nonexistent_type"};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {odd}), std::invalid_argument);
  // Index type claims a private parameter that is not declared for it.
  ParameterDef shared{"x", ParamKind::Continuous, 0.0, 1.0, {}, 0.5, kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {"x"}}}, {shared}), std::invalid_argument);
}

TEST(Declaration, RejectsNonIntegralIntegerBoundsOrDefault) {
  ParameterDef frac{"x", ParamKind::Integer, 1, 8, {}, 2.5, kSharedScope};
  EXPECT_THROW(ConfigSpace({{"t", {}}}, {frac}), std::invalid_argument);
}

TEST(Encoding, MinMaxEndpoints) {
  auto space = demo_space();
  auto c = space.default_config("IVF_FLAT");
  c.values["nlist"] = 1.0;
  EXPECT_EQ(space.unit_value(c, "nlist"), 0.0);
  c.values["nlist"] = 2048.0;
  EXPECT_EQ(space.unit_value(c, "nlist"), 1.0);
}

TEST(Encoding, IntegerMidpointValue) {
  auto space = demo_space();
  auto c = space.default_config("IVF_FLAT");
  c.values["nlist"] = 1024.0;
  const double expected = 1023.0 / 2047.0;
  EXPECT_EQ(space.unit_value(c, "nlist"), expected);
  EXPECT_NEAR(space.unit_value(c, "nlist"), 0.49976, 1e-5);
}

TEST(Encoding, DemoSpaceDimension) {
  auto space = demo_space();
  // 9 numeric parameters plus a 3-way index one-hot.
  EXPECT_EQ(space.encoding_dim(), 12);
  EXPECT_EQ(space.encode(space.default_config("HNSW")).size(), 12u);
}

TEST(Encoding, OneHotBlockSelectsExactlyOneType) {
  auto space = mixed_space();
  auto x = space.encode(space.default_config("tree"));
  // Layout: numeric features first, then categorical choices, then type one-hot.
  const int dim = space.encoding_dim();
  double tail_sum = 0.0;
  for (int i = dim - 2; i < dim; ++i) tail_sum += x[i];
  EXPECT_EQ(tail_sum, 1.0);
}

TEST(Encoding, DecodeInvertsEncode) {
  auto space = mixed_space();
  for (const auto& type : {"flat", "tree"}) {
    auto candidates = space.random_candidates(type, 64, 99);
    for (const auto& c : candidates) {
      auto x = space.encode(c);
      auto back = space.decode(x);
      EXPECT_EQ(back.index_type, c.index_type);
      for (const auto& [name, v] : c.values) {
        const auto& bv = back.values.at(name);
        if (std::holds_alternative<double>(v)) {
          EXPECT_NEAR(std::get<double>(bv), std::get<double>(v), 1e-9) << name;
        } else {
          EXPECT_EQ(std::get<std::string>(bv), std::get<std::string>(v)) << name;
        }
      }
    }
  }
}

TEST(Encoding, DecodeResetsInactivePrivatesToDefaults) {
  auto space = mixed_space();
  auto c = space.default_config("flat");
  auto x = space.encode(c);
  auto back = space.decode(x);
  EXPECT_EQ(std::get<double>(back.values.at("depth")), 8.0);
  EXPECT_EQ(std::get<std::string>(back.values.at("metric")), "l2");
}

TEST(Validation, DefaultConfigsAreValid) {
  auto space = demo_space();
  for (const auto& t : space.index_types())
    EXPECT_TRUE(space.validate(space.default_config(t.name)).empty()) << t.name;
}

TEST(Validation, FlagsOutOfRangeAndMissingAndUnknown) {
  auto space = demo_space();
  auto c = space.default_config("HNSW");
  c.values["M"] = 65.0;  // above hi
  EXPECT_FALSE(space.validate(c).empty());
  c = space.default_config("HNSW");
  c.values.erase("nlist");  // every declared parameter must be present
  EXPECT_FALSE(space.validate(c).empty());
  c = space.default_config("HNSW");
  c.values["mystery"] = 1.0;
  EXPECT_FALSE(space.validate(c).empty());
  c = space.default_config("HNSW");
  c.index_type = "LSH";
  EXPECT_FALSE(space.validate(c).empty());
}

TEST(Validation, FlagsNonDefaultInactivePrivateParameter) {
  auto space = demo_space();
  auto c = space.default_config("HNSW");
  c.values["nprobe"] = 37.0;  // private to IVF_FLAT, must stay at its default
  EXPECT_FALSE(space.validate(c).empty());
}

TEST(Validation, FlagsNonIntegralIntegerValue) {
  auto space = demo_space();
  auto c = space.default_config("HNSW");
  c.values["M"] = 16.5;
  EXPECT_FALSE(space.validate(c).empty());
}

TEST(Validation, FlagsCategoricalValueOffList) {
  auto space = mixed_space();
  auto c = space.default_config("tree");
  c.values["metric"] = std::string("hamming");
  EXPECT_FALSE(space.validate(c).empty());
}

TEST(Activity, SharedAlwaysActivePrivateOnlyForOwner) {
  auto space = demo_space();
  EXPECT_TRUE(space.is_active("segment_maxSize", "HNSW"));
  EXPECT_TRUE(space.is_active("segment_maxSize", "IVF_PQ"));
  EXPECT_TRUE(space.is_active("M", "HNSW"));
  EXPECT_FALSE(space.is_active("M", "IVF_FLAT"));
  EXPECT_FALSE(space.is_active("nprobe", "HNSW"));
}

TEST(RandomCandidates, DeterministicDistinctAndPinned) {
  auto space = demo_space();
  auto a = space.random_candidates("HNSW", 128, 5);
  auto b = space.random_candidates("HNSW", 128, 5);
  ASSERT_EQ(a.size(), 128u);
  EXPECT_EQ(a, b);
  auto c = space.random_candidates("HNSW", 128, 6);
  EXPECT_NE(a, c);
  std::set<std::vector<double>> distinct;
  for (const auto& cand : a) {
    EXPECT_EQ(cand.index_type, "HNSW");
    EXPECT_TRUE(space.validate(cand).empty());
    EXPECT_EQ(std::get<double>(cand.values.at("nprobe")), 16.0);  // inactive default
    distinct.insert(space.encode(cand));
  }
  EXPECT_GT(distinct.size(), 120u);
}

TEST(RandomCandidates, ActiveDimensionCoverage) {
  auto space = demo_space();
  auto cands = space.random_candidates("HNSW", 1024, 7);
  for (const char* name : {"M", "efConstruction", "segment_maxSize", "segment_sealProportion"}) {
    double lo = 1.0, hi = 0.0;
    for (const auto& c : cands) {
      const double u = space.unit_value(c, name);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    EXPECT_GE(hi - lo, 0.9) << name;
  }
}

TEST(Fingerprint, StableAndDiscriminating) {
  auto a = demo_space();
  auto b = demo_space();
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  auto other = mixed_space();
  EXPECT_NE(a.fingerprint(), other.fingerprint());
}

TEST(Serialization, JsonRoundTripPreservesFingerprint) {
  for (const auto& space : {demo_space(), mixed_space()}) {
    auto j = space.to_json();
    auto back = ConfigSpace::from_json(j);
    EXPECT_EQ(back.fingerprint(), space.fingerprint());
    EXPECT_EQ(back.encoding_dim(), space.encoding_dim());
  }
}

TEST(Serialization, ShippedDemoDefinitionMatchesBuiltin) {
  auto shipped = ConfigSpace::load(MOBTUNE_DEMO_SPACE_PATH);
  EXPECT_EQ(shipped.fingerprint(), demo_space().fingerprint());
}

TEST(Serialization, RejectsMalformedDocuments) {
  EXPECT_THROW(ConfigSpace::from_json(nlohmann::json::array()), std::invalid_argument);
  nlohmann::json j = demo_space().to_json();
  j.erase("params");
  EXPECT_THROW(ConfigSpace::from_json(j), std::invalid_argument);
  EXPECT_THROW(ConfigSpace::load("/nonexistent/space.json"), std::runtime_error);
}

TEST(Lookup, AccessorsAndErrors) {
  auto space = demo_space();
  EXPECT_TRUE(space.has_index_type("HNSW"));
  EXPECT_FALSE(space.has_index_type("LSH"));
  EXPECT_TRUE(space.has_param("nbits"));
  EXPECT_FALSE(space.has_param("zap"));
  EXPECT_EQ(space.index_type("IVF_PQ").private_params.size(), 3u);
  EXPECT_EQ(space.param("segment_sealProportion").kind, ParamKind::Continuous);
  EXPECT_THROW(space.index_type("LSH"), std::invalid_argument);
  EXPECT_THROW(space.param("zap"), std::invalid_argument);
  EXPECT_THROW(space.default_config("LSH"), std::invalid_argument);
}

}  // namespace
}  // namespace mobtune
