#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "asbart/rng.hpp"

namespace asbart {

/// Per-leaf counts and residual sums for a hard partition, plus the totals
/// needed by the closed-form marginal likelihood.
struct LeafSuffStats {
  std::vector<std::size_t> counts;
  std::vector<double> sums;
  std::size_t n = 0;
  double sum_sq = 0.0;  // y'y over all samples

  std::size_t num_leaves() const noexcept { return counts.size(); }
  /// Builds statistics from a leaf assignment per sample.
  static LeafSuffStats from_assignment(std::span<const std::size_t> leaf_of, std::span<const double> residuals,
                                       std::size_t num_leaves);
};

// Aggregates of a soft partition at a fixed sigma^2:
//   lambda            = sum_i phi_i phi_i' / sigma^2
//   weighted_residual = sum_i R_i phi_i / sigma^2
struct SoftSuffStats {
  Eigen::MatrixXd lambda;
  Eigen::VectorXd weighted_residual;
  double residual_sq = 0.0;
  std::size_t n = 0;
  double sigma2 = 1.0;

  /// Dense construction from an n x B matrix of leaf probabilities.
  static SoftSuffStats from_phi(const Eigen::MatrixXd& phi, std::span<const double> residuals, double sigma2);
};

struct SoftPosterior {
  Eigen::MatrixXd omega;   // posterior covariance of leaf values
  Eigen::VectorXd mu_hat;  // posterior mean
  double log_marginal = 0.0;
};

struct SigmaPrior {
  double nu = 3.0;
  double lambda = 1.0;
};

struct LeafPrior {
  double mu_mu = 0.0;
  double sigma_mu2 = 1.0;
};

/// Log of the contribution of one leaf with n_b samples and residual sum s_b
/// to the hard marginal likelihood (the bracketed per-leaf term).
double hard_leaf_term(double count, double sum, double sigma2, double sigma_mu2);

/// Closed-form log marginal likelihood of residuals under a hard partition with
/// leaf values integrated against N(0, sigma_mu2).
double hard_log_marginal(const LeafSuffStats& stats, double sigma2, double sigma_mu2);

/// Soft-tree marginal likelihood with Omega = (I/sigma_mu2 + Lambda)^-1.
SoftPosterior soft_log_marginal(const SoftSuffStats& stats, double sigma_mu2);
SoftPosterior soft_log_marginal(const Eigen::MatrixXd& phi, std::span<const double> residuals, double sigma2,
                                double sigma_mu2);

std::vector<double> draw_hard_leaf_values(const LeafSuffStats& stats, double sigma2, double sigma_mu2, Rng& rng);
std::vector<double> draw_soft_leaf_values(const SoftPosterior& post, Rng& rng);

/// sigma^2 ~ (nu*lambda + sum e^2) / chi2(nu + n).
double draw_sigma2(std::span<const double> residuals, const SigmaPrior& prior, Rng& rng);

/// lambda such that P(sigma < sigma_hat) = quantile under sigma^2 ~ nu*lambda/chi2(nu).
double calibrate_sigma_lambda(double sigma_hat, double nu, double quantile);

}  // namespace asbart
