#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mobtune {

enum class ParamKind { Continuous, Integer, Categorical };

// A parameter value: numeric kinds hold a double (integers are validated to
// be integral), categoricals hold one of the declared choices.
using ParamValue = std::variant<double, std::string>;

inline constexpr const char* kSharedScope = "shared";

struct ParameterDef {
  std::string name;
  ParamKind kind = ParamKind::Continuous;
  double lo = 0.0;                   // numeric kinds only
  double hi = 0.0;
  std::vector<std::string> choices;  // categorical only
  ParamValue default_value;
  std::string scope = kSharedScope;  // kSharedScope or an index type name

  bool is_shared() const { return scope == kSharedScope; }
};

struct IndexTypeDef {
  std::string name;
  std::vector<std::string> private_params;
};

// A fully specified point in the space. `values` carries an entry for every
// declared parameter; private parameters of non-selected index types are
// pinned at their defaults.
struct Configuration {
  std::string index_type;
  std::map<std::string, ParamValue> values;

  bool operator==(const Configuration&) const = default;
};

// A tuning search space: index type choices plus shared and index-private
// parameters. Immutable once constructed; construction validates all
// declaration-level invariants.
class ConfigSpace {
 public:
  ConfigSpace(std::vector<IndexTypeDef> index_types, std::vector<ParameterDef> params);

  static ConfigSpace from_json(const nlohmann::json& j);
  static ConfigSpace load(const std::string& path);
  nlohmann::json to_json() const;

  const std::vector<IndexTypeDef>& index_types() const { return index_types_; }
  const std::vector<ParameterDef>& params() const { return params_; }

  bool has_index_type(const std::string& name) const;
  const IndexTypeDef& index_type(const std::string& name) const;
  bool has_param(const std::string& name) const;
  const ParameterDef& param(const std::string& name) const;

  // True when `param` takes effect under `index_type` (shared, or private to
  // that type).
  bool is_active(const std::string& param, const std::string& index_type) const;

  // Dimensionality of encode(): one feature per numeric parameter, one per
  // categorical choice, plus a one-hot block over index types.
  int encoding_dim() const { return encoding_dim_; }

  Configuration default_config(const std::string& index_type) const;

  // Returns a list of human-readable violations; empty means valid.
  std::vector<std::string> validate(const Configuration& config) const;

  // Deterministic feature vector in [0, 1]^encoding_dim. Throws
  // std::invalid_argument when the configuration is invalid.
  std::vector<double> encode(const Configuration& config) const;

  // Inverse of encode up to integer rounding; inactive private parameters
  // are reset to their defaults so that decode always yields a valid
  // configuration.
  Configuration decode(std::span<const double> x) const;

  // The [0, 1] min-max encoding of a single numeric parameter's value.
  double unit_value(const Configuration& config, const std::string& param) const;

  // n uniformly sampled configurations of the given index type. Inactive
  // private parameters are pinned at defaults. Deterministic given seed.
  std::vector<Configuration> random_candidates(const std::string& index_type, int n,
                                               uint64_t seed) const;

  // Stable digest of the space declaration; used to detect history files
  // recorded against a different space.
  std::string fingerprint() const;

 private:
  std::vector<IndexTypeDef> index_types_;
  std::vector<ParameterDef> params_;
  std::map<std::string, size_t> param_index_;
  std::map<std::string, size_t> type_index_;
  int encoding_dim_ = 0;
};

// The space shipped with the demo backend: three index families and two
// shared segment parameters.
ConfigSpace demo_space();

const char* param_kind_name(ParamKind kind);
ParamKind param_kind_from_name(const std::string& name);

}  // namespace mobtune
