#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sqn/linalg.hpp"

namespace sqn {

/// A drawn batch of noise realizations. Reusing the same handle at two
/// different points x guarantees identical noise, which is what makes the
/// gradient-difference pairs well defined.
struct Batch {
  std::vector<Vec> xi;       // noise vectors (quadratic problem)
  std::vector<int> indices;  // sample indices (logistic problem)

  int size() const {
    return static_cast<int>(xi.empty() ? indices.size() : xi.size());
  }
};

/// Stochastic objective exposing per-sample gradients.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Batch sample_batch(std::mt19937_64& rng, int n) const = 0;
  virtual std::vector<Vec> grad_per_sample(const Vec& x, const Batch& batch) const = 0;

  /// Noise-free objective F(x).
  virtual double true_objective(const Vec& x) const = 0;
  virtual std::optional<double> optimal_value() const { return std::nullopt; }
  virtual std::optional<double> smoothness() const { return std::nullopt; }
  virtual std::optional<double> strong_convexity() const { return std::nullopt; }

  /// Number of data samples (for epoch accounting); 0 when synthetic.
  virtual long n_samples() const { return 0; }
};

/// Noisy quadratic f(x, xi) = 1/2 x'Ax - x'1 (1 + x'xi), xi ~ N(0, Sigma).
/// A has a prescribed spectrum with extremes pinned to (1, kappa); Sigma is a
/// Wishart sample.
class QuadraticProblem : public StochasticProblem {
 public:
  QuadraticProblem(Mat a, Mat sigma);

  Eigen::Index dim() const override { return a_.rows(); }
  Batch sample_batch(std::mt19937_64& rng, int n) const override;
  std::vector<Vec> grad_per_sample(const Vec& x, const Batch& batch) const override;
  double true_objective(const Vec& x) const override;
  std::optional<double> optimal_value() const override { return f_star_; }
  std::optional<double> smoothness() const override { return lambda_max_; }
  std::optional<double> strong_convexity() const override { return lambda_min_; }

  const Mat& hessian() const { return a_; }
  const Mat& noise_covariance() const { return sigma_; }
  const Vec& minimizer() const { return x_star_; }

 private:
  Mat a_;
  Mat sigma_;
  Mat chol_sigma_;
  Vec x_star_;
  double f_star_;
  double lambda_min_;
  double lambda_max_;
};

/// A = Q diag(lambda) Q' with Q from the QR of a Gaussian matrix and
/// log10(lambda) ~ U[0, log10(kappa)], extremes pinned to 1 and kappa.
/// Sigma ~ Wishart(V = wishart_scale * I, n = d) via Bartlett decomposition.
QuadraticProblem gen_quadratic(std::uint64_t seed, int d, double kappa_target,
                               double wishart_scale);

/// L2-regularized multinomial logistic regression over a dense in-memory
/// dataset. Parameter layout is class-major: x = [w_0; w_1; ...; w_{C-1}],
/// each block of length f. d = f * C.
class LogisticProblem : public StochasticProblem {
 public:
  LogisticProblem(Mat features, std::vector<int> labels, double lambda_lr);

  Eigen::Index dim() const override { return features_.cols() * n_classes_; }
  Batch sample_batch(std::mt19937_64& rng, int n) const override;
  std::vector<Vec> grad_per_sample(const Vec& x, const Batch& batch) const override;
  double true_objective(const Vec& x) const override;
  std::optional<double> smoothness() const override;
  std::optional<double> strong_convexity() const override { return lambda_lr_; }
  long n_samples() const override { return features_.rows(); }

  int n_classes() const { return n_classes_; }
  Eigen::Index n_features() const { return features_.cols(); }
  double lambda_lr() const { return lambda_lr_; }
  const Mat& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }

  /// Full-batch gradient of true_objective (reference solves, tests).
  Vec full_gradient(const Vec& x) const;

 private:
  Vec grad_one(const Vec& x, int index) const;

  Mat features_;  // n x f, row-major samples
  std::vector<int> labels_;
  int n_classes_;
  double lambda_lr_;
  mutable std::optional<double> smoothness_cache_;
};

enum class DatasetFormat { libsvm, csv };

/// Loads a dataset from disk. LIBSVM: "label idx:val ..." with 1-based
/// indices; CSV: header row, last column integer label. Labels must be
/// nonnegative integers; C = max label + 1.
LogisticProblem logistic_from_file(const std::string& path, DatasetFormat format,
                                   double lambda_lr);

/// L = 0.5 * lambda_max(X'X / n) + lambda_lr, lambda_max by power iteration.
double logistic_smoothness(const LogisticProblem& prob);

}  // namespace sqn
