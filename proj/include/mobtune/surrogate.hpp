#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mobtune/pareto.hpp"

namespace mobtune {

// ARD Matern 5/2 kernel hyperparameters, stored in log space so that
// gradient ascent is unconstrained up to box clipping.
struct KernelHyperparams {
  std::vector<double> log_lengthscales;  // one per input dimension
  double log_signal_variance = 0.0;
  double log_noise_variance = -6.907755278982137;  // log(1e-3)
};

// Hyperparameter box, enforced by clipping during optimization.
inline constexpr double kLengthscaleLo = 1e-3, kLengthscaleHi = 10.0;
inline constexpr double kSignalVarLo = 1e-4, kSignalVarHi = 100.0;
inline constexpr double kNoiseVarLo = 1e-8, kNoiseVarHi = 1.0;

// k(a, b) = s2 * (1 + sqrt5*d + 5/3*d^2) * exp(-sqrt5*d) with
// d = sqrt(sum_i ((a_i - b_i) / l_i)^2). Throws on dimension mismatch.
double matern52(std::span<const double> a, std::span<const double> b,
                const KernelHyperparams& hp);

// Log marginal likelihood of targets y under the kernel plus noise, and its
// gradient with respect to every log-space hyperparameter (lengthscales
// first, then signal variance, then noise variance).
struct LmlResult {
  double value = 0.0;
  std::vector<double> gradient;
};
double lml_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const KernelHyperparams& hp);
LmlResult lml_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const KernelHyperparams& hp);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

struct PosteriorPair {
  Posterior speed;
  Posterior recall;
};

struct FitOptions {
  int restarts = 5;
  int max_ascent_steps = 40;
  uint64_t seed = 0;
  // Previous iteration's optima; used as the first restart's initial point.
  std::optional<KernelHyperparams> warm_start_speed;
  std::optional<KernelHyperparams> warm_start_recall;
};

// Exact GP regression for one objective on standardized targets.
class GpRegressor {
 public:
  // Conditions on the given hyperparameters directly (no optimization).
  GpRegressor(Eigen::MatrixXd X, Eigen::VectorXd y, KernelHyperparams hp);

  // Maximizes the log marginal likelihood by multi-start gradient ascent
  // with deterministic restart seeds, then conditions on the best optimum.
  static GpRegressor fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int restarts,
                         int max_ascent_steps, uint64_t seed,
                         const std::optional<KernelHyperparams>& warm_start);

  // Posterior of the latent function (no observation noise added).
  Posterior predict(std::span<const double> x) const;

  const KernelHyperparams& hyperparams() const { return hp_; }
  double best_lml() const { return lml_; }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelHyperparams hp_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

// Training data for the holistic surrogate: encoded configurations with
// per-index-type normalized targets. Targets are standardized per objective
// before fitting; predictions are mapped back to normalized space.
struct TrainingSet {
  Eigen::MatrixXd inputs;  // n x dim
  Eigen::VectorXd speed;   // normalized (pre-standardization) targets
  Eigen::VectorXd recall;
  double speed_center = 0.0, speed_scale = 1.0;
  double recall_center = 0.0, recall_scale = 1.0;

  static TrainingSet build(const std::vector<std::vector<double>>& inputs,
                           const std::vector<NormalizedObjective>& targets);

  Eigen::VectorXd standardized_speed() const;
  Eigen::VectorXd standardized_recall() const;
};

// Two independent GPs, one per objective, over a shared input encoding.
// Perturbing one objective's targets cannot change the other's predictions.
class SurrogateModel {
 public:
  SurrogateModel(const TrainingSet& train, KernelHyperparams speed_hp,
                 KernelHyperparams recall_hp);

  static SurrogateModel fit(const TrainingSet& train, const FitOptions& opts = {});

  // Posterior in normalized objective space (de-standardized), with the
  // variance floored at 1e-12 before de-standardization.
  PosteriorPair predict(std::span<const double> x) const;

  // Joint draws from the two independent posteriors at x.
  std::vector<NormalizedObjective> posterior_samples(std::span<const double> x, int count,
                                                     uint64_t seed) const;

  const GpRegressor& speed_gp() const { return speed_gp_; }
  const GpRegressor& recall_gp() const { return recall_gp_; }

 private:
  GpRegressor speed_gp_;
  GpRegressor recall_gp_;
  double speed_center_, speed_scale_, recall_center_, recall_scale_;
};

}  // namespace mobtune
