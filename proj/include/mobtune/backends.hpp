#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mobtune/config_space.hpp"
#include "mobtune/pareto.hpp"

namespace mobtune {

enum class EvalStatus { Ok, Timeout, Crash };

struct EvaluationRequest {
  Configuration config;
  double timeout_s = 900.0;
};

struct EvaluationResult {
  EvalStatus status = EvalStatus::Crash;
  double speed = 0.0;
  double recall = 0.0;
  std::optional<double> memory;
  double duration_s = 0.0;
};

// Per-index-type multipliers applied to the simulated outcomes; defaults
// leave the formulas untouched. Used to build scenario variants (e.g. an
// index family whose whole front is dominated).
struct SimTypeScales {
  double speed = 1.0;
  double recall = 1.0;
};

struct SimSpec {
  double noise_sigma = 0.0;  // multiplicative noise; 0 disables it
  uint64_t seed = 0;         // combined with a config digest per evaluation
  std::map<std::string, SimTypeScales> scales;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual EvaluationResult evaluate(const EvaluationRequest& req) = 0;
};

// Closed-form synthetic workload over the demo space. Deterministic per
// (config, spec): noise draws are seeded from a digest of the configuration,
// so repeating a request reproduces its result exactly. Throws when the
// space does not match the shipped demo space or the config is invalid.
EvaluationResult simulated_evaluate(const ConfigSpace& space, const EvaluationRequest& req,
                                    const SimSpec& spec);

class SimulatedBackend : public Backend {
 public:
  SimulatedBackend(ConfigSpace space, SimSpec spec);
  EvaluationResult evaluate(const EvaluationRequest& req) override;
  const ConfigSpace& space() const { return space_; }
  const SimSpec& spec() const { return spec_; }

 private:
  ConfigSpace space_;
  SimSpec spec_;
};

// Exhaustive grid sweep of the noiseless simulator over each selected index
// type's active dimensions, reduced to the global non-dominated front.
// Guards against grids above 10^7 total evaluations. `types` empty = all.
std::vector<ObjectiveVector> true_pareto_grid(const ConfigSpace& space, const SimSpec& spec,
                                              int grid_per_dim,
                                              std::span<const std::string> types = {});

// Runs `command` through /bin/sh, writes one JSON request line to its stdin
// ({"index_type":..., "values":{...}}) and expects one JSON response line
// ({"speed":..., "recall":..., "memory":..., "status":"ok"}) on stdout plus
// exit code 0. Overrunning the timeout kills the process (timeout status);
// nonzero exit or unparseable output is a crash.
EvaluationResult external_command_evaluate(const EvaluationRequest& req,
                                           const std::string& command);

class CommandBackend : public Backend {
 public:
  explicit CommandBackend(std::string command) : command_(std::move(command)) {}
  EvaluationResult evaluate(const EvaluationRequest& req) override {
    return external_command_evaluate(req, command_);
  }
  const std::string& command() const { return command_; }

 private:
  std::string command_;
};

}  // namespace mobtune
