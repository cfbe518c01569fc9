#include "mobtune/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mobtune/rng.hpp"

namespace mobtune {

namespace {

constexpr double kSqrt5 = 2.23606797749978969;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kFiveThirds = 5.0 / 3.0;

// Jitter ladder applied to the kernel diagonal when Cholesky fails.
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

struct ThetaLayout {
  // theta = [log lengthscales (dim), log signal var, log noise var]
  static Eigen::VectorXd pack(const KernelHyperparams& hp) {
    Eigen::VectorXd t(hp.log_lengthscales.size() + 2);
    for (size_t i = 0; i < hp.log_lengthscales.size(); ++i) t[static_cast<long>(i)] = hp.log_lengthscales[i];
    t[t.size() - 2] = hp.log_signal_variance;
    t[t.size() - 1] = hp.log_noise_variance;
    return t;
  }
  static KernelHyperparams unpack(const Eigen::VectorXd& t) {
    KernelHyperparams hp;
    hp.log_lengthscales.assign(t.data(), t.data() + t.size() - 2);
    hp.log_signal_variance = t[t.size() - 2];
    hp.log_noise_variance = t[t.size() - 1];
    return hp;
  }
};

Eigen::VectorXd clip_theta(Eigen::VectorXd t) {
  const long d = t.size() - 2;
  const double llo = std::log(kLengthscaleLo), lhi = std::log(kLengthscaleHi);
  for (long i = 0; i < d; ++i) t[i] = std::clamp(t[i], llo, lhi);
  t[d] = std::clamp(t[d], std::log(kSignalVarLo), std::log(kSignalVarHi));
  t[d + 1] = std::clamp(t[d + 1], std::log(kNoiseVarLo), std::log(kNoiseVarHi));
  return t;
}

void check_training_args(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size())
    throw std::invalid_argument("surrogate: inputs and targets disagree in length");
  if (!y.allFinite() || !X.allFinite())
    throw std::invalid_argument("surrogate: non-finite training data");
}

// Per-dimension squared differences, computed once per fit and rescaled by
// the current lengthscales at every likelihood evaluation.
struct PairwiseCache {
  std::vector<Eigen::MatrixXd> sqdiff;

  explicit PairwiseCache(const Eigen::MatrixXd& X) {
    const long n = X.rows(), d = X.cols();
    sqdiff.reserve(static_cast<size_t>(d));
    for (long k = 0; k < d; ++k) {
      Eigen::MatrixXd m(n, n);
      for (long i = 0; i < n; ++i) {
        m(i, i) = 0.0;
        for (long j = 0; j < i; ++j) {
          double diff = X(i, k) - X(j, k);
          m(i, j) = m(j, i) = diff * diff;
        }
      }
      sqdiff.push_back(std::move(m));
    }
  }
};

struct KernelParts {
  Eigen::MatrixXd d;     // scaled distances
  Eigen::MatrixXd poly;  // 1 + sqrt5 d + 5/3 d^2
  Eigen::MatrixXd expd;  // exp(-sqrt5 d)
  Eigen::MatrixXd k;     // signal_var * poly .* expd (noise not included)
};

KernelParts kernel_parts(const PairwiseCache& cache, const Eigen::VectorXd& theta, long n) {
  const long dim = theta.size() - 2;
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  for (long k = 0; k < dim; ++k) {
    double inv_l2 = std::exp(-2.0 * theta[k]);
    d2.noalias() += cache.sqdiff[static_cast<size_t>(k)] * inv_l2;
  }
  KernelParts parts;
  parts.d = d2.array().max(0.0).sqrt().matrix();
  parts.poly = (1.0 + kSqrt5 * parts.d.array() + kFiveThirds * d2.array()).matrix();
  parts.expd = (-kSqrt5 * parts.d.array()).exp().matrix();
  double s2 = std::exp(theta[dim]);
  parts.k = s2 * parts.poly.cwiseProduct(parts.expd);
  return parts;
}

// Cholesky with the jitter ladder; returns the jitter actually applied.
double factorize(const Eigen::MatrixXd& K, Eigen::LLT<Eigen::MatrixXd>& llt) {
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd Kj = K;
    if (jitter > 0.0) Kj.diagonal().array() += jitter;
    llt.compute(Kj);
    if (llt.info() == Eigen::Success) return jitter;
  }
  throw std::runtime_error("surrogate: kernel matrix not positive definite after jitter ladder");
}

double lml_from_factorization(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& y,
                              Eigen::VectorXd& alpha_out) {
  alpha_out = llt.solve(y);
  double logdet_half = llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha_out) - logdet_half - 0.5 * static_cast<double>(y.size()) * kLog2Pi;
}

double eval_value(const PairwiseCache& cache, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& theta) {
  const long n = y.size();
  KernelParts parts = kernel_parts(cache, theta, n);
  parts.k.diagonal().array() += std::exp(theta[theta.size() - 1]);
  Eigen::LLT<Eigen::MatrixXd> llt;
  factorize(parts.k, llt);
  Eigen::VectorXd alpha;
  return lml_from_factorization(llt, y, alpha);
}

std::pair<double, Eigen::VectorXd> eval_value_and_grad(const PairwiseCache& cache,
                                                       const Eigen::VectorXd& y,
                                                       const Eigen::VectorXd& theta) {
  const long n = y.size();
  const long dim = theta.size() - 2;
  KernelParts parts = kernel_parts(cache, theta, n);
  Eigen::MatrixXd K = parts.k;
  double noise = std::exp(theta[dim + 1]);
  K.diagonal().array() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt;
  factorize(K, llt);
  Eigen::VectorXd alpha;
  double value = lml_from_factorization(llt, y, alpha);

  // dLML/dtheta_j = 0.5 tr((alpha alpha' - K^-1) dK/dtheta_j)
  Eigen::MatrixXd A = llt.solve(Eigen::MatrixXd::Identity(n, n));
  A = (alpha * alpha.transpose() - A).eval();

  Eigen::VectorXd grad(theta.size());
  double s2 = std::exp(theta[dim]);
  // dK/d(log l_k) = s2 * 5/3 * (1 + sqrt5 d) exp(-sqrt5 d) * sqdiff_k / l_k^2
  Eigen::MatrixXd H =
      (s2 * kFiveThirds) * (1.0 + kSqrt5 * parts.d.array()).matrix().cwiseProduct(parts.expd);
  Eigen::MatrixXd AH = A.cwiseProduct(H);
  for (long k = 0; k < dim; ++k) {
    double inv_l2 = std::exp(-2.0 * theta[k]);
    grad[k] = 0.5 * inv_l2 * AH.cwiseProduct(cache.sqdiff[static_cast<size_t>(k)]).sum();
  }
  grad[dim] = 0.5 * A.cwiseProduct(parts.k).sum();  // dK/d(log s2) = Kf
  grad[dim + 1] = 0.5 * noise * A.trace();          // dK/d(log sn2) = sn2 I
  return {value, grad};
}

void check_hyperparams(const KernelHyperparams& hp, long dim) {
  if (static_cast<long>(hp.log_lengthscales.size()) != dim) {
    std::ostringstream os;
    os << "surrogate: " << hp.log_lengthscales.size() << " lengthscales for " << dim
       << " input dimensions";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double matern52(std::span<const double> a, std::span<const double> b,
                const KernelHyperparams& hp) {
  if (a.size() != b.size() || a.size() != hp.log_lengthscales.size())
    throw std::invalid_argument("matern52: mismatched dimensions");
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double w = (a[i] - b[i]) * std::exp(-hp.log_lengthscales[i]);
    d2 += w * w;
  }
  double d = std::sqrt(d2);
  return std::exp(hp.log_signal_variance) * (1.0 + kSqrt5 * d + kFiveThirds * d2) *
         std::exp(-kSqrt5 * d);
}

double lml_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const KernelHyperparams& hp) {
  check_training_args(X, y);
  check_hyperparams(hp, X.cols());
  PairwiseCache cache(X);
  return eval_value(cache, y, ThetaLayout::pack(hp));
}

LmlResult lml_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const KernelHyperparams& hp) {
  check_training_args(X, y);
  check_hyperparams(hp, X.cols());
  PairwiseCache cache(X);
  auto [value, grad] = eval_value_and_grad(cache, y, ThetaLayout::pack(hp));
  LmlResult out;
  out.value = value;
  out.gradient.assign(grad.data(), grad.data() + grad.size());
  return out;
}

GpRegressor::GpRegressor(Eigen::MatrixXd X, Eigen::VectorXd y, KernelHyperparams hp)
    : X_(std::move(X)), y_(std::move(y)), hp_(std::move(hp)) {
  check_training_args(X_, y_);
  check_hyperparams(hp_, X_.cols());
  const long n = X_.rows();
  PairwiseCache cache(X_);
  Eigen::VectorXd theta = ThetaLayout::pack(hp_);
  KernelParts parts = kernel_parts(cache, theta, n);
  parts.k.diagonal().array() += std::exp(hp_.log_noise_variance);
  factorize(parts.k, llt_);
  lml_ = lml_from_factorization(llt_, y_, alpha_);
}

GpRegressor GpRegressor::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int restarts,
                             int max_ascent_steps, uint64_t seed,
                             const std::optional<KernelHyperparams>& warm_start) {
  check_training_args(X, y);
  if (X.rows() < 2) throw std::invalid_argument("surrogate: fit needs at least 2 points");
  const long dim = X.cols();
  PairwiseCache cache(X);

  std::vector<Eigen::VectorXd> inits;
  if (warm_start.has_value()) {
    check_hyperparams(*warm_start, dim);
    inits.push_back(clip_theta(ThetaLayout::pack(*warm_start)));
  }
  {
    KernelHyperparams def;
    def.log_lengthscales.assign(static_cast<size_t>(dim), std::log(0.5));
    def.log_signal_variance = 0.0;
    def.log_noise_variance = std::log(1e-2);
    inits.push_back(ThetaLayout::pack(def));
  }
  int idx = 0;
  while (static_cast<int>(inits.size()) < std::max(restarts, 1)) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(0x5eed + idx++)));
    Eigen::VectorXd t(dim + 2);
    for (long i = 0; i < dim; ++i) t[i] = rng.uniform(std::log(0.05), std::log(3.0));
    t[dim] = rng.uniform(std::log(0.1), std::log(10.0));
    t[dim + 1] = rng.uniform(std::log(1e-6), std::log(0.1));
    inits.push_back(t);
  }

  Eigen::VectorXd best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& init : inits) {
    Eigen::VectorXd theta = clip_theta(init);
    auto [value, grad] = eval_value_and_grad(cache, y, theta);
    double lr = 0.05;
    for (int step = 0; step < max_ascent_steps; ++step) {
      if (grad.lpNorm<Eigen::Infinity>() < 1e-5) break;
      Eigen::VectorXd cand = clip_theta(theta + lr * grad);
      double cand_value = eval_value(cache, y, cand);
      if (cand_value > value) {
        theta = cand;
        std::tie(value, grad) = eval_value_and_grad(cache, y, theta);
        lr = std::min(lr * 1.3, 1.0);
      } else {
        lr *= 0.5;
        if (lr < 1e-7) break;
      }
    }
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }
  return GpRegressor(X, y, ThetaLayout::unpack(best_theta));
}

Posterior GpRegressor::predict(std::span<const double> x) const {
  if (static_cast<long>(x.size()) != X_.cols())
    throw std::invalid_argument("predict: input dimension mismatch");
  const long n = X_.rows();
  const long dim = X_.cols();
  double s2 = std::exp(hp_.log_signal_variance);
  Eigen::VectorXd kvec(n);
  for (long i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (long k = 0; k < dim; ++k) {
      double w = (X_(i, k) - x[static_cast<size_t>(k)]) *
                 std::exp(-hp_.log_lengthscales[static_cast<size_t>(k)]);
      d2 += w * w;
    }
    double d = std::sqrt(d2);
    kvec[i] = s2 * (1.0 + kSqrt5 * d + kFiveThirds * d2) * std::exp(-kSqrt5 * d);
  }
  Posterior p;
  p.mean = kvec.dot(alpha_);
  Eigen::VectorXd v = llt_.matrixL().solve(kvec);
  p.variance = std::max(s2 - v.squaredNorm(), 0.0);
  return p;
}

TrainingSet TrainingSet::build(const std::vector<std::vector<double>>& inputs,
                               const std::vector<NormalizedObjective>& targets) {
  if (inputs.size() != targets.size())
    throw std::invalid_argument("training set: inputs and targets disagree in length");
  if (inputs.empty()) throw std::invalid_argument("training set: empty");
  const long n = static_cast<long>(inputs.size());
  const long d = static_cast<long>(inputs[0].size());
  TrainingSet ts;
  ts.inputs.resize(n, d);
  ts.speed.resize(n);
  ts.recall.resize(n);
  for (long i = 0; i < n; ++i) {
    if (static_cast<long>(inputs[static_cast<size_t>(i)].size()) != d)
      throw std::invalid_argument("training set: ragged input rows");
    for (long j = 0; j < d; ++j) ts.inputs(i, j) = inputs[static_cast<size_t>(i)][static_cast<size_t>(j)];
    ts.speed[i] = targets[static_cast<size_t>(i)].speed;
    ts.recall[i] = targets[static_cast<size_t>(i)].recall;
  }
  auto standardize = [n](const Eigen::VectorXd& y, double& center, double& scale) {
    center = y.mean();
    double var = (y.array() - center).square().sum() / static_cast<double>(n);
    double sd = std::sqrt(var);
    scale = sd > 1e-12 ? sd : 1.0;
  };
  standardize(ts.speed, ts.speed_center, ts.speed_scale);
  standardize(ts.recall, ts.recall_center, ts.recall_scale);
  return ts;
}

Eigen::VectorXd TrainingSet::standardized_speed() const {
  return (speed.array() - speed_center) / speed_scale;
}

Eigen::VectorXd TrainingSet::standardized_recall() const {
  return (recall.array() - recall_center) / recall_scale;
}

SurrogateModel::SurrogateModel(const TrainingSet& train, KernelHyperparams speed_hp,
                               KernelHyperparams recall_hp)
    : speed_gp_(train.inputs, train.standardized_speed(), std::move(speed_hp)),
      recall_gp_(train.inputs, train.standardized_recall(), std::move(recall_hp)),
      speed_center_(train.speed_center),
      speed_scale_(train.speed_scale),
      recall_center_(train.recall_center),
      recall_scale_(train.recall_scale) {}

SurrogateModel SurrogateModel::fit(const TrainingSet& train, const FitOptions& opts) {
  GpRegressor speed = GpRegressor::fit(train.inputs, train.standardized_speed(), opts.restarts,
                                       opts.max_ascent_steps, mix_seed(opts.seed, 0xA11CE),
                                       opts.warm_start_speed);
  GpRegressor recall = GpRegressor::fit(train.inputs, train.standardized_recall(), opts.restarts,
                                        opts.max_ascent_steps, mix_seed(opts.seed, 0xB0B),
                                        opts.warm_start_recall);
  SurrogateModel m(train, speed.hyperparams(), recall.hyperparams());
  return m;
}

PosteriorPair SurrogateModel::predict(std::span<const double> x) const {
  Posterior ps = speed_gp_.predict(x);
  Posterior pr = recall_gp_.predict(x);
  PosteriorPair out;
  out.speed.mean = speed_center_ + speed_scale_ * ps.mean;
  out.speed.variance = speed_scale_ * speed_scale_ * std::max(ps.variance, 1e-12);
  out.recall.mean = recall_center_ + recall_scale_ * pr.mean;
  out.recall.variance = recall_scale_ * recall_scale_ * std::max(pr.variance, 1e-12);
  return out;
}

std::vector<NormalizedObjective> SurrogateModel::posterior_samples(std::span<const double> x,
                                                                   int count,
                                                                   uint64_t seed) const {
  PosteriorPair p = predict(x);
  double ss = std::sqrt(p.speed.variance);
  double sr = std::sqrt(p.recall.variance);
  Rng rng(seed);
  std::vector<NormalizedObjective> out;
  out.reserve(static_cast<size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    auto [e1, e2] = rng.normal_pair();
    out.push_back(NormalizedObjective{p.speed.mean + ss * e1, p.recall.mean + sr * e2});
  }
  return out;
}

}  // namespace mobtune
