#include "mobtune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mobtune/history.hpp"
#include "mobtune/log.hpp"
#include "mobtune/rng.hpp"

namespace mobtune {
namespace {

constexpr uint64_t kFitSalt = 0xF17;
constexpr uint64_t kAcqSalt = 0xACC;
// Anchors divide; all-failure types would otherwise produce a zero anchor.
constexpr double kAnchorFloor = 1e-9;

std::vector<std::string> all_type_names(const ConfigSpace& space) {
  std::vector<std::string> names;
  for (const auto& def : space.index_types()) names.push_back(def.name);
  return names;
}

BaselineAnchor floor_anchor(BaselineAnchor a) {
  a.speed = std::max(a.speed, kAnchorFloor);
  a.recall = std::max(a.recall, kAnchorFloor);
  return a;
}

}  // namespace

const char* obs_status_name(ObsStatus s) {
  switch (s) {
    case ObsStatus::Ok: return "ok";
    case ObsStatus::Timeout: return "timeout";
    case ObsStatus::Crash: return "crash";
    case ObsStatus::Imputed: return "imputed";
  }
  return "crash";
}

ObsStatus obs_status_from_name(const std::string& name) {
  if (name == "ok") return ObsStatus::Ok;
  if (name == "timeout") return ObsStatus::Timeout;
  if (name == "crash") return ObsStatus::Crash;
  if (name == "imputed") return ObsStatus::Imputed;
  throw std::invalid_argument("unknown observation status: " + name);
}

const char* speed_objective_name(SpeedObjective s) {
  return s == SpeedObjective::Qps ? "qps" : "cost_effectiveness";
}

SpeedObjective speed_objective_from_name(const std::string& name) {
  if (name == "qps") return SpeedObjective::Qps;
  if (name == "cost_effectiveness") return SpeedObjective::CostEffectiveness;
  throw std::invalid_argument("unknown speed objective: " + name);
}

const char* constraint_anchor_mode_name(ConstraintAnchorMode m) {
  return m == ConstraintAnchorMode::ComponentwiseMax ? "componentwise_max" : "max_speed_only";
}

ConstraintAnchorMode constraint_anchor_mode_from_name(const std::string& name) {
  if (name == "componentwise_max") return ConstraintAnchorMode::ComponentwiseMax;
  if (name == "max_speed_only") return ConstraintAnchorMode::MaxSpeedOnly;
  throw std::invalid_argument("unknown constraint anchor mode: " + name);
}

ObjectiveVector transform_objectives(const ObjectiveVector& raw, const ObjectiveSpec& spec) {
  if (spec.eta <= 0.0) {
    throw std::invalid_argument("objective eta must be positive");
  }
  if (spec.speed_objective == SpeedObjective::Qps) return raw;
  if (!raw.memory.has_value() || *raw.memory <= 0.0) {
    throw std::invalid_argument(
        "cost-effectiveness objective needs a positive memory measurement");
  }
  ObjectiveVector out = raw;
  out.speed = raw.speed / (spec.eta * *raw.memory);
  return out;
}

Tuner::Tuner(ConfigSpace space, std::shared_ptr<Backend> backend, TunerConfig cfg)
    : space_(std::move(space)),
      backend_(std::move(backend)),
      cfg_(std::move(cfg)),
      allocator_(all_type_names(space_), cfg_.window) {
  if (!backend_) {
    throw std::invalid_argument("tuner needs a backend");
  }
  const int n_types = static_cast<int>(space_.index_types().size());
  if (cfg_.max_iterations < n_types) {
    throw std::invalid_argument(
        "max_iterations must cover at least one evaluation per index type");
  }
  if (cfg_.eval_timeout_s <= 0.0) {
    throw std::invalid_argument("evaluation timeout must be positive");
  }
  if (cfg_.objective.eta <= 0.0) {
    throw std::invalid_argument("objective eta must be positive");
  }
  if (cfg_.constraint.has_value() &&
      (cfg_.constraint->rlim <= 0.0 || cfg_.constraint->rlim >= 1.0)) {
    throw std::invalid_argument("recall limit must lie in (0, 1)");
  }
  // The constraint decides the acquisition; the manifest cannot mix them.
  cfg_.acquisition.mode =
      cfg_.constraint.has_value() ? AcquisitionMode::ConstrainedEi : AcquisitionMode::Ehvi;
}

void Tuner::initialize() {
  if (initialized_) {
    throw std::logic_error("tuner is already initialized");
  }
  for (const auto& def : space_.index_types()) {
    const Configuration c = space_.default_config(def.name);
    EvaluationResult eval;
    try {
      eval = backend_->evaluate(EvaluationRequest{c, cfg_.eval_timeout_s});
    } catch (const std::exception& e) {
      log_warn(std::string("initial evaluation threw: ") + e.what());
      eval = EvaluationResult{};
      eval.status = EvalStatus::Crash;
    }
    record_evaluation(c, eval, std::nullopt);
  }
  if (!any_ok_) {
    std::ostringstream oss;
    oss << "every initial evaluation failed:";
    for (const auto& r : history_) {
      oss << ' ' << r.config.index_type << '=' << obs_status_name(r.status);
    }
    throw std::runtime_error(oss.str());
  }
  if (cfg_.bootstrap_history.has_value()) {
    HistoryData data = load_history(*cfg_.bootstrap_history, space_.fingerprint());
    if (data.header.objective.speed_objective != cfg_.objective.speed_objective ||
        data.header.objective.eta != cfg_.objective.eta) {
      throw std::runtime_error(
          "bootstrap history was recorded under a different objective spec");
    }
    adopt_bootstrap_records(std::move(data.records));
    log_info("adopted " + std::to_string(history_.size()) + " history records after bootstrap");
  }
  initialized_ = true;
}

void Tuner::adopt_bootstrap_records(std::vector<ObservationRecord> records) {
  size_t index = 0;
  for (auto& r : records) {
    ++index;
    const auto violations = space_.validate(r.config);
    if (!violations.empty()) {
      throw std::runtime_error("bootstrap record " + std::to_string(index) +
                               " has an invalid configuration: " + violations.front());
    }
    r.bootstrap = true;
    archive_.insert(r.config, r.transformed);
    if (r.status == ObsStatus::Ok) {
      if (!any_ok_) {
        any_ok_ = true;
        min_ok_speed_ = r.transformed.speed;
        min_ok_recall_ = r.transformed.recall;
      } else {
        min_ok_speed_ = std::min(min_ok_speed_, r.transformed.speed);
        min_ok_recall_ = std::min(min_ok_recall_, r.transformed.recall);
      }
    }
    history_.push_back(std::move(r));
  }
}

bool Tuner::step() {
  if (!initialized_) {
    throw std::logic_error("initialize() must run before step()");
  }
  if (live_count_ >= cfg_.max_iterations) return false;
  const int upcoming = live_count_ + 1;

  std::optional<ScoreRecord> scores;
  if (allocator_.remaining().size() > 1) {
    const auto s = score_index_types(archive_, allocator_.remaining(), cfg_.acquisition.ref_scale);
    allocator_.observe_and_maybe_abandon(s, upcoming);
    scores = allocator_.score_log().back();
  }

  refresh_anchors();
  fit_model();
  const std::string type = allocator_.next_poll();
  const Configuration next = recommend_next(type);

  EvaluationResult eval;
  try {
    eval = backend_->evaluate(EvaluationRequest{next, cfg_.eval_timeout_s});
  } catch (const std::exception& e) {
    log_warn(std::string("evaluation threw: ") + e.what());
    eval = EvaluationResult{};
    eval.status = EvalStatus::Crash;
  }
  record_evaluation(next, eval, scores);
  return true;
}

void Tuner::run() {
  if (!initialized_) initialize();
  while (step()) {
  }
}

void Tuner::record_evaluation(const Configuration& config, const EvaluationResult& eval,
                              const std::optional<ScoreRecord>& scores) {
  ObservationRecord r;
  r.iteration = ++live_count_;
  r.config = config;
  r.raw = ObjectiveVector{eval.speed, eval.recall, eval.memory};
  r.eval_duration_s = eval.duration_s;
  switch (eval.status) {
    case EvalStatus::Ok: r.status = ObsStatus::Ok; break;
    case EvalStatus::Timeout: r.status = ObsStatus::Timeout; break;
    case EvalStatus::Crash: r.status = ObsStatus::Crash; break;
  }

  if (r.status == ObsStatus::Ok) {
    try {
      r.transformed = transform_objectives(r.raw, cfg_.objective);
    } catch (const std::exception& e) {
      log_warn(std::string("objective transform failed: ") + e.what());
      r.status = ObsStatus::Imputed;
    }
  }
  if (r.status != ObsStatus::Ok) {
    r.transformed = impute_failure();
  }

  if (r.status == ObsStatus::Ok) {
    if (!any_ok_) {
      any_ok_ = true;
      min_ok_speed_ = r.transformed.speed;
      min_ok_recall_ = r.transformed.recall;
    } else {
      min_ok_speed_ = std::min(min_ok_speed_, r.transformed.speed);
      min_ok_recall_ = std::min(min_ok_recall_, r.transformed.recall);
    }
  }

  archive_.insert(r.config, r.transformed);
  history_.push_back(std::move(r));
  if (observer_) observer_(history_.back(), scores);
}

void Tuner::refresh_anchors() {
  anchors_ = AnchorSet{};
  const auto global = archive_.global_front_objectives();
  if (!global.empty()) {
    anchors_.global = floor_anchor(balanced_anchor(global));
  }
  for (const auto& def : space_.index_types()) {
    const auto front = archive_.type_front_objectives(def.name);
    if (front.empty()) continue;
    BaselineAnchor a;
    if (cfg_.constraint.has_value()) {
      double max_speed = 0.0;
      double max_recall = 0.0;
      for (const auto& y : front) {
        max_speed = std::max(max_speed, y.speed);
        max_recall = std::max(max_recall, y.recall);
      }
      if (cfg_.constraint_anchor == ConstraintAnchorMode::ComponentwiseMax) {
        a = BaselineAnchor{max_speed, max_recall};
      } else {
        a = BaselineAnchor{max_speed, balanced_anchor(front).recall};
      }
    } else {
      a = balanced_anchor(front);
    }
    anchors_.per_type[def.name] = floor_anchor(a);
  }
}

void Tuner::fit_model() {
  if (history_.size() < 2) {
    model_.reset();
    return;
  }
  std::vector<std::vector<double>> inputs;
  std::vector<NormalizedObjective> targets;
  inputs.reserve(history_.size());
  targets.reserve(history_.size());
  for (const auto& r : history_) {
    inputs.push_back(space_.encode(r.config));
    const auto& anchor = anchors_.per_type.at(r.config.index_type);
    targets.push_back(normalize_npi(r.transformed, anchor));
  }
  TrainingSet train = TrainingSet::build(std::move(inputs), targets);
  FitOptions opts;
  opts.seed = mix_seed(mix_seed(cfg_.rng_seed, static_cast<uint64_t>(live_count_ + 1)), kFitSalt);
  opts.warm_start_speed = warm_speed_;
  opts.warm_start_recall = warm_recall_;
  model_ = SurrogateModel::fit(train, opts);
  warm_speed_ = model_->speed_gp().hyperparams();
  warm_recall_ = model_->recall_gp().hyperparams();
}

Configuration Tuner::recommend_next(const std::string& index_type) {
  const uint64_t seed =
      mix_seed(mix_seed(cfg_.rng_seed, static_cast<uint64_t>(live_count_ + 1)), kAcqSalt);
  if (!model_.has_value()) {
    return space_.random_candidates(index_type, 1, seed).front();
  }
  AcquisitionContext ctx = cfg_.acquisition;
  ctx.seed = seed;
  std::optional<ConstraintSpec> constraint;
  if (cfg_.constraint.has_value()) {
    constraint = *cfg_.constraint;
    double best_any = -std::numeric_limits<double>::infinity();
    double best_feasible_speed = -std::numeric_limits<double>::infinity();
    bool any = false;
    bool feasible = false;
    for (const auto& r : history_) {
      if (r.status != ObsStatus::Ok) continue;
      any = true;
      best_any = std::max(best_any, r.transformed.speed);
      if (r.transformed.recall > constraint->rlim) {
        feasible = true;
        best_feasible_speed = std::max(best_feasible_speed, r.transformed.speed);
      }
    }
    if (feasible) {
      constraint->best_feasible = best_feasible_speed;
    } else if (any) {
      constraint->best_feasible = best_any;
    } else {
      constraint->best_feasible = 0.0;
    }
  }
  return recommend(space_, *model_, archive_, anchors_, index_type, ctx, constraint);
}

ObjectiveVector Tuner::impute_failure() const {
  if (!any_ok_) return ObjectiveVector{0.0, 0.0, std::nullopt};
  return ObjectiveVector{min_ok_speed_, min_ok_recall_, std::nullopt};
}

std::optional<ObservationRecord> Tuner::best_feasible() const {
  if (!cfg_.constraint.has_value()) return std::nullopt;
  std::optional<ObservationRecord> best;
  for (const auto& r : history_) {
    if (r.status != ObsStatus::Ok) continue;
    if (r.transformed.recall <= cfg_.constraint->rlim) continue;
    if (!best.has_value() || r.transformed.speed > best->transformed.speed) {
      best = r;
    }
  }
  return best;
}

}  // namespace mobtune
