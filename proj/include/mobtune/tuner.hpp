#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mobtune/acquisition.hpp"
#include "mobtune/allocator.hpp"
#include "mobtune/backends.hpp"
#include "mobtune/config_space.hpp"
#include "mobtune/pareto.hpp"
#include "mobtune/surrogate.hpp"

namespace mobtune {

// Timeout/crash records carry imputed objective values; Imputed marks an
// evaluation that returned but whose objectives could not be transformed
// (e.g. cost mode without a memory figure).
enum class ObsStatus { Ok, Timeout, Crash, Imputed };

const char* obs_status_name(ObsStatus s);
ObsStatus obs_status_from_name(const std::string& name);

struct ObservationRecord {
  int iteration = 0;
  Configuration config;
  ObjectiveVector raw;
  ObjectiveVector transformed;
  ObsStatus status = ObsStatus::Ok;
  double eval_duration_s = 0.0;
  bool bootstrap = false;  // adopted from a previous run's history, not evaluated here
};

enum class SpeedObjective { Qps, CostEffectiveness };

const char* speed_objective_name(SpeedObjective s);
SpeedObjective speed_objective_from_name(const std::string& name);

struct ObjectiveSpec {
  SpeedObjective speed_objective = SpeedObjective::Qps;
  double eta = 1.0;  // price per second*GiB in cost-effectiveness mode
};

// Qps mode is the identity. Cost-effectiveness divides speed by priced
// memory (throws without a positive memory figure); recall passes through.
ObjectiveVector transform_objectives(const ObjectiveVector& raw, const ObjectiveSpec& spec);

// How the per-type anchor is formed when a recall constraint is active.
// ComponentwiseMax pushes both anchor components to the per-type maxima;
// MaxSpeedOnly keeps the balanced anchor's recall and raises only speed.
enum class ConstraintAnchorMode { ComponentwiseMax, MaxSpeedOnly };

const char* constraint_anchor_mode_name(ConstraintAnchorMode m);
ConstraintAnchorMode constraint_anchor_mode_from_name(const std::string& name);

struct TunerConfig {
  int max_iterations = 200;  // total evaluations this run issues, init included
  double eval_timeout_s = 900.0;
  int window = 10;
  AcquisitionContext acquisition;
  std::optional<ConstraintSpec> constraint;  // presence selects the acquisition mode
  ConstraintAnchorMode constraint_anchor = ConstraintAnchorMode::ComponentwiseMax;
  std::optional<std::string> bootstrap_history;
  uint64_t rng_seed = 0;
  ObjectiveSpec objective;
};

// Streams each live observation as it lands, with the allocator scores that
// preceded it when scoring ran that iteration.
using StepObserver =
    std::function<void(const ObservationRecord&, const std::optional<ScoreRecord>&)>;

class Tuner {
 public:
  Tuner(ConfigSpace space, std::shared_ptr<Backend> backend, TunerConfig cfg);

  void set_observer(StepObserver observer) { observer_ = std::move(observer); }

  // Evaluates every index type's default configuration once, then adopts
  // bootstrap history if configured. Throws if every probe fails.
  void initialize();

  // One full iteration: maybe score/abandon, refresh anchors, refit the
  // surrogate, poll a type, recommend, evaluate, record. Returns false
  // without evaluating once the budget is spent.
  bool step();

  // initialize() if needed, then step() until the budget is exhausted.
  void run();

  bool initialized() const { return initialized_; }
  int live_evaluations() const { return live_count_; }
  const std::vector<ObservationRecord>& history() const { return history_; }
  const ParetoArchive& archive() const { return archive_; }
  const Allocator& allocator() const { return allocator_; }
  const AnchorSet& anchors() const { return anchors_; }
  const ConfigSpace& space() const { return space_; }
  const TunerConfig& config() const { return cfg_; }
  bool has_model() const { return model_.has_value(); }
  const SurrogateModel& model() const { return model_.value(); }

  // Componentwise minimum of successful transformed observations; the
  // objective floors (0, 0) while none exist.
  ObjectiveVector impute_failure() const;

  // Highest transformed speed among successful observations with recall
  // strictly above the constraint limit; empty when none qualify or no
  // constraint is configured.
  std::optional<ObservationRecord> best_feasible() const;

 private:
  void record_evaluation(const Configuration& config, const EvaluationResult& eval,
                         const std::optional<ScoreRecord>& scores);
  void adopt_bootstrap_records(std::vector<ObservationRecord> records);
  void refresh_anchors();
  void fit_model();
  Configuration recommend_next(const std::string& index_type);

  ConfigSpace space_;
  std::shared_ptr<Backend> backend_;
  TunerConfig cfg_;
  StepObserver observer_;

  std::vector<ObservationRecord> history_;
  ParetoArchive archive_;
  Allocator allocator_;
  AnchorSet anchors_;
  std::optional<SurrogateModel> model_;
  std::optional<KernelHyperparams> warm_speed_;
  std::optional<KernelHyperparams> warm_recall_;

  bool initialized_ = false;
  int live_count_ = 0;
  bool any_ok_ = false;
  double min_ok_speed_ = 0.0;
  double min_ok_recall_ = 0.0;
};

}  // namespace mobtune
