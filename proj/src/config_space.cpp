#include "mobtune/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mobtune/rng.hpp"

namespace mobtune {

namespace {

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_integral_value(double v) { return std::isfinite(v) && v == std::round(v); }

std::string format_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

const char* param_kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::Continuous: return "continuous";
    case ParamKind::Integer: return "integer";
    case ParamKind::Categorical: return "categorical";
  }
  return "?";
}

ParamKind param_kind_from_name(const std::string& name) {
  if (name == "continuous") return ParamKind::Continuous;
  if (name == "integer") return ParamKind::Integer;
  if (name == "categorical") return ParamKind::Categorical;
  throw std::invalid_argument("unknown parameter kind: " + name);
}

ConfigSpace::ConfigSpace(std::vector<IndexTypeDef> index_types, std::vector<ParameterDef> params)
    : index_types_(std::move(index_types)), params_(std::move(params)) {
  if (index_types_.empty()) throw std::invalid_argument("space needs at least one index type");

  for (size_t i = 0; i < index_types_.size(); ++i) {
    const auto& t = index_types_[i];
    if (t.name.empty()) throw std::invalid_argument("index type with empty name");
    if (t.name == kSharedScope)
      throw std::invalid_argument("index type may not be named '" + std::string(kSharedScope) + "'");
    if (!type_index_.emplace(t.name, i).second)
      throw std::invalid_argument("duplicate index type: " + t.name);
  }

  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (p.name.empty()) throw std::invalid_argument("parameter with empty name");
    if (!param_index_.emplace(p.name, i).second)
      throw std::invalid_argument("duplicate parameter: " + p.name);
    if (p.scope.empty()) p.scope = kSharedScope;
    if (!p.is_shared() && type_index_.count(p.scope) == 0)
      throw std::invalid_argument("parameter " + p.name + " scoped to unknown index type " + p.scope);

    if (p.kind == ParamKind::Categorical) {
      if (p.choices.empty())
        throw std::invalid_argument("categorical parameter " + p.name + " has no choices");
      std::set<std::string> uniq(p.choices.begin(), p.choices.end());
      if (uniq.size() != p.choices.size())
        throw std::invalid_argument("categorical parameter " + p.name + " has duplicate choices");
      const auto* def = std::get_if<std::string>(&p.default_value);
      if (def == nullptr || uniq.count(*def) == 0)
        throw std::invalid_argument("categorical parameter " + p.name +
                                    " default is not one of its choices");
      encoding_dim_ += static_cast<int>(p.choices.size());
    } else {
      if (!(p.lo < p.hi))
        throw std::invalid_argument("parameter " + p.name + " needs lo < hi");
      const auto* def = std::get_if<double>(&p.default_value);
      if (def == nullptr || !(*def >= p.lo && *def <= p.hi))
        throw std::invalid_argument("parameter " + p.name + " default outside [lo, hi]");
      if (p.kind == ParamKind::Integer &&
          !(is_integral_value(p.lo) && is_integral_value(p.hi) && is_integral_value(*def)))
        throw std::invalid_argument("integer parameter " + p.name +
                                    " needs integral lo/hi/default");
      encoding_dim_ += 1;
    }
  }

  // Every private_params entry must name a parameter scoped to that type,
  // and every privately scoped parameter must be listed by its owner.
  for (const auto& t : index_types_) {
    for (const auto& pn : t.private_params) {
      auto it = param_index_.find(pn);
      if (it == param_index_.end())
        throw std::invalid_argument("index type " + t.name + " lists unknown parameter " + pn);
      if (params_[it->second].scope != t.name)
        throw std::invalid_argument("parameter " + pn + " listed by " + t.name +
                                    " but scoped to " + params_[it->second].scope);
    }
  }
  for (const auto& p : params_) {
    if (p.is_shared()) continue;
    const auto& owner = index_types_[type_index_.at(p.scope)];
    if (std::find(owner.private_params.begin(), owner.private_params.end(), p.name) ==
        owner.private_params.end())
      throw std::invalid_argument("parameter " + p.name + " scoped to " + p.scope +
                                  " but missing from its private_params list");
  }

  encoding_dim_ += static_cast<int>(index_types_.size());
}

bool ConfigSpace::has_index_type(const std::string& name) const {
  return type_index_.count(name) != 0;
}

const IndexTypeDef& ConfigSpace::index_type(const std::string& name) const {
  auto it = type_index_.find(name);
  if (it == type_index_.end()) throw std::invalid_argument("unknown index type: " + name);
  return index_types_[it->second];
}

bool ConfigSpace::has_param(const std::string& name) const {
  return param_index_.count(name) != 0;
}

const ParameterDef& ConfigSpace::param(const std::string& name) const {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return params_[it->second];
}

bool ConfigSpace::is_active(const std::string& param_name, const std::string& index_type) const {
  const auto& p = param(param_name);
  return p.is_shared() || p.scope == index_type;
}

Configuration ConfigSpace::default_config(const std::string& index_type_name) const {
  index_type(index_type_name);  // throws on unknown type
  Configuration c;
  c.index_type = index_type_name;
  for (const auto& p : params_) c.values[p.name] = p.default_value;
  return c;
}

std::vector<std::string> ConfigSpace::validate(const Configuration& config) const {
  std::vector<std::string> out;
  if (type_index_.count(config.index_type) == 0) {
    out.push_back("unknown index type: " + config.index_type);
    return out;
  }
  for (const auto& [name, value] : config.values) {
    if (param_index_.count(name) == 0) out.push_back("unknown parameter: " + name);
  }
  for (const auto& p : params_) {
    auto it = config.values.find(p.name);
    if (it == config.values.end()) {
      out.push_back("missing parameter: " + p.name);
      continue;
    }
    const ParamValue& v = it->second;
    if (p.kind == ParamKind::Categorical) {
      const auto* s = std::get_if<std::string>(&v);
      if (s == nullptr) {
        out.push_back("parameter " + p.name + ": expected categorical value");
        continue;
      }
      if (std::find(p.choices.begin(), p.choices.end(), *s) == p.choices.end())
        out.push_back("parameter " + p.name + ": value '" + *s + "' not among choices");
    } else {
      const auto* d = std::get_if<double>(&v);
      if (d == nullptr) {
        out.push_back("parameter " + p.name + ": expected numeric value");
        continue;
      }
      if (!std::isfinite(*d) || *d < p.lo || *d > p.hi)
        out.push_back("parameter " + p.name + ": value " + format_num(*d) + " outside [" +
                      format_num(p.lo) + ", " + format_num(p.hi) + "]");
      else if (p.kind == ParamKind::Integer && !is_integral_value(*d))
        out.push_back("parameter " + p.name + ": value " + format_num(*d) + " not integral");
    }
    if (!p.is_shared() && p.scope != config.index_type && !(v == p.default_value))
      out.push_back("parameter " + p.name + ": inactive under index type " + config.index_type +
                    " but not at its default");
  }
  return out;
}

std::vector<double> ConfigSpace::encode(const Configuration& config) const {
  auto violations = validate(config);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += " [" + v + "]";
    throw std::invalid_argument(msg);
  }
  std::vector<double> x;
  x.reserve(static_cast<size_t>(encoding_dim_));
  for (const auto& p : params_) {
    const ParamValue& v = config.values.at(p.name);
    if (p.kind == ParamKind::Categorical) {
      const auto& s = std::get<std::string>(v);
      for (const auto& choice : p.choices) x.push_back(choice == s ? 1.0 : 0.0);
    } else {
      x.push_back((std::get<double>(v) - p.lo) / (p.hi - p.lo));
    }
  }
  for (const auto& t : index_types_) x.push_back(t.name == config.index_type ? 1.0 : 0.0);
  return x;
}

Configuration ConfigSpace::decode(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != encoding_dim_)
    throw std::invalid_argument("decode: expected " + std::to_string(encoding_dim_) +
                                " features, got " + std::to_string(x.size()));
  size_t type_offset = static_cast<size_t>(encoding_dim_) - index_types_.size();
  size_t best_type = 0;
  for (size_t i = 1; i < index_types_.size(); ++i)
    if (x[type_offset + i] > x[type_offset + best_type]) best_type = i;

  Configuration c;
  c.index_type = index_types_[best_type].name;
  size_t pos = 0;
  for (const auto& p : params_) {
    if (p.kind == ParamKind::Categorical) {
      size_t best = 0;
      for (size_t i = 1; i < p.choices.size(); ++i)
        if (x[pos + i] > x[pos + best]) best = i;
      c.values[p.name] = p.choices[best];
      pos += p.choices.size();
    } else {
      double v = p.lo + x[pos] * (p.hi - p.lo);
      v = std::clamp(v, p.lo, p.hi);
      if (p.kind == ParamKind::Integer) v = std::round(v);
      c.values[p.name] = v;
      ++pos;
    }
    if (!p.is_shared() && p.scope != c.index_type) c.values[p.name] = p.default_value;
  }
  return c;
}

double ConfigSpace::unit_value(const Configuration& config, const std::string& param_name) const {
  const auto& p = param(param_name);
  if (p.kind == ParamKind::Categorical)
    throw std::invalid_argument("unit_value: parameter " + param_name + " is categorical");
  auto it = config.values.find(param_name);
  if (it == config.values.end())
    throw std::invalid_argument("unit_value: configuration lacks parameter " + param_name);
  return (std::get<double>(it->second) - p.lo) / (p.hi - p.lo);
}

std::vector<Configuration> ConfigSpace::random_candidates(const std::string& index_type_name,
                                                          int n, uint64_t seed) const {
  index_type(index_type_name);  // throws on unknown type
  if (n < 0) throw std::invalid_argument("random_candidates: negative count");
  Rng rng(seed);
  std::vector<Configuration> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Configuration c;
    c.index_type = index_type_name;
    for (const auto& p : params_) {
      if (!p.is_shared() && p.scope != index_type_name) {
        c.values[p.name] = p.default_value;
        continue;
      }
      switch (p.kind) {
        case ParamKind::Continuous:
          c.values[p.name] = rng.uniform(p.lo, p.hi);
          break;
        case ParamKind::Integer:
          c.values[p.name] = static_cast<double>(
              rng.uniform_int(static_cast<int64_t>(p.lo), static_cast<int64_t>(p.hi)));
          break;
        case ParamKind::Categorical:
          c.values[p.name] = p.choices[static_cast<size_t>(
              rng.uniform_int(0, static_cast<int64_t>(p.choices.size()) - 1))];
          break;
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string ConfigSpace::fingerprint() const {
  std::ostringstream os;
  for (const auto& t : index_types_) {
    os << "T:" << t.name << "(";
    for (const auto& p : t.private_params) os << p << ",";
    os << ");";
  }
  for (const auto& p : params_) {
    os << "P:" << p.name << ":" << param_kind_name(p.kind) << ":" << p.scope << ":";
    if (p.kind == ParamKind::Categorical) {
      for (const auto& c : p.choices) os << c << ",";
      os << "=" << std::get<std::string>(p.default_value);
    } else {
      os << format_num(p.lo) << ".." << format_num(p.hi) << "="
         << format_num(std::get<double>(p.default_value));
    }
    os << ";";
  }
  std::ostringstream hex;
  hex << std::hex << fnv1a(os.str());
  return hex.str();
}

nlohmann::json ConfigSpace::to_json() const {
  nlohmann::json j;
  j["index_types"] = nlohmann::json::array();
  for (const auto& t : index_types_)
    j["index_types"].push_back({{"name", t.name}, {"private_params", t.private_params}});
  j["params"] = nlohmann::json::array();
  for (const auto& p : params_) {
    nlohmann::json jp{{"name", p.name}, {"kind", param_kind_name(p.kind)}, {"scope", p.scope}};
    if (p.kind == ParamKind::Categorical) {
      jp["choices"] = p.choices;
      jp["default"] = std::get<std::string>(p.default_value);
    } else {
      jp["lo"] = p.lo;
      jp["hi"] = p.hi;
      jp["default"] = std::get<double>(p.default_value);
    }
    j["params"].push_back(jp);
  }
  return j;
}

ConfigSpace ConfigSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("index_types") || !j.contains("params"))
    throw std::invalid_argument("space definition needs 'index_types' and 'params'");
  std::vector<IndexTypeDef> types;
  for (const auto& jt : j.at("index_types")) {
    IndexTypeDef t;
    t.name = jt.at("name").get<std::string>();
    if (jt.contains("private_params"))
      t.private_params = jt.at("private_params").get<std::vector<std::string>>();
    types.push_back(std::move(t));
  }
  std::vector<ParameterDef> params;
  for (const auto& jp : j.at("params")) {
    ParameterDef p;
    p.name = jp.at("name").get<std::string>();
    p.kind = param_kind_from_name(jp.at("kind").get<std::string>());
    p.scope = jp.value("scope", std::string(kSharedScope));
    if (p.kind == ParamKind::Categorical) {
      p.choices = jp.at("choices").get<std::vector<std::string>>();
      p.default_value = jp.at("default").get<std::string>();
    } else {
      p.lo = jp.at("lo").get<double>();
      p.hi = jp.at("hi").get<double>();
      p.default_value = jp.at("default").get<double>();
    }
    params.push_back(std::move(p));
  }
  return ConfigSpace(std::move(types), std::move(params));
}

ConfigSpace ConfigSpace::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open space definition: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("cannot parse space definition " + path + ": " + e.what());
  }
  return from_json(j);
}

ConfigSpace demo_space() {
  std::vector<IndexTypeDef> types{
      {"HNSW", {"M", "efConstruction"}},
      {"IVF_FLAT", {"nlist", "nprobe"}},
      {"IVF_PQ", {"m", "nbits", "pq_nprobe"}},
  };
  auto ip = [](std::string name, double lo, double hi, double def, std::string scope) {
    ParameterDef p;
    p.name = std::move(name);
    p.kind = ParamKind::Integer;
    p.lo = lo;
    p.hi = hi;
    p.default_value = def;
    p.scope = std::move(scope);
    return p;
  };
  ParameterDef seal;
  seal.name = "segment_sealProportion";
  seal.kind = ParamKind::Continuous;
  seal.lo = 0.1;
  seal.hi = 1.0;
  seal.default_value = 0.25;
  seal.scope = kSharedScope;
  std::vector<ParameterDef> params{
      ip("M", 4, 64, 16, "HNSW"),
      ip("efConstruction", 8, 512, 200, "HNSW"),
      ip("nlist", 1, 2048, 128, "IVF_FLAT"),
      ip("nprobe", 1, 512, 16, "IVF_FLAT"),
      ip("m", 2, 64, 8, "IVF_PQ"),
      ip("nbits", 1, 16, 8, "IVF_PQ"),
      ip("pq_nprobe", 1, 512, 16, "IVF_PQ"),
      ip("segment_maxSize", 100, 1000, 512, kSharedScope),
      seal,
  };
  return ConfigSpace(std::move(types), std::move(params));
}

}  // namespace mobtune
