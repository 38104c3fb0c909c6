#include "asbart/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "asbart/error.hpp"

namespace asbart {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void check_variances(double sigma2, double sigma_mu2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw invalid_argument("sigma2 must be finite and > 0");
  if (!(sigma_mu2 > 0.0) || !std::isfinite(sigma_mu2)) throw invalid_argument("sigma_mu2 must be finite and > 0");
}

}  // namespace

LeafSuffStats LeafSuffStats::from_assignment(std::span<const std::size_t> leaf_of, std::span<const double> residuals,
                                             std::size_t num_leaves) {
  if (leaf_of.size() != residuals.size()) throw invalid_argument("leaf assignment and residual lengths differ");
  LeafSuffStats stats;
  stats.counts.assign(num_leaves, 0);
  stats.sums.assign(num_leaves, 0.0);
  stats.n = residuals.size();
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto b = leaf_of[i];
    if (b >= num_leaves) throw invalid_argument("leaf assignment out of range");
    ++stats.counts[b];
    stats.sums[b] += residuals[i];
    stats.sum_sq += residuals[i] * residuals[i];
  }
  return stats;
}

SoftSuffStats SoftSuffStats::from_phi(const Eigen::MatrixXd& phi, std::span<const double> residuals, double sigma2) {
  if (static_cast<std::size_t>(phi.rows()) != residuals.size()) throw invalid_argument("phi rows != residual length");
  if (!(sigma2 > 0.0)) throw invalid_argument("sigma2 must be > 0");
  const Eigen::Map<const Eigen::VectorXd> r(residuals.data(), static_cast<Eigen::Index>(residuals.size()));
  SoftSuffStats stats;
  stats.lambda = phi.transpose() * phi / sigma2;
  stats.weighted_residual = phi.transpose() * r / sigma2;
  stats.residual_sq = r.squaredNorm();
  stats.n = residuals.size();
  stats.sigma2 = sigma2;
  return stats;
}

double hard_leaf_term(double count, double sum, double sigma2, double sigma_mu2) {
  const double denom = sigma2 + sigma_mu2 * count;
  return std::log(sigma2 / denom) + sigma_mu2 * sum * sum / (sigma2 * denom);
}

double hard_log_marginal(const LeafSuffStats& stats, double sigma2, double sigma_mu2) {
  check_variances(sigma2, sigma_mu2);
  const auto n = static_cast<double>(stats.n);
  double leaf_sum = 0.0;
  for (std::size_t b = 0; b < stats.counts.size(); ++b) {
    leaf_sum += hard_leaf_term(static_cast<double>(stats.counts[b]), stats.sums[b], sigma2, sigma_mu2);
  }
  return -0.5 * n * kLog2Pi - 0.5 * n * std::log(sigma2) - 0.5 * stats.sum_sq / sigma2 + 0.5 * leaf_sum;
}

SoftPosterior soft_log_marginal(const SoftSuffStats& stats, double sigma_mu2) {
  check_variances(stats.sigma2, sigma_mu2);
  const auto leaves = stats.lambda.rows();
  if (leaves < 1) throw invalid_argument("soft_log_marginal: need at least one leaf");
  Eigen::MatrixXd precision = stats.lambda;
  precision.diagonal().array() += 1.0 / sigma_mu2;

  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    warn("soft posterior precision not positive definite; retrying with 1e-10 jitter");
    precision.diagonal().array() += 1e-10;
    llt.compute(precision);
    if (llt.info() != Eigen::Success) {
      throw numerical_error("soft_log_marginal: Cholesky of " + std::to_string(leaves) + "x" +
                            std::to_string(leaves) + " precision failed");
    }
  }
  const Eigen::MatrixXd& lower = llt.matrixLLT();
  const double log_det_precision = 2.0 * lower.diagonal().array().log().sum();

  SoftPosterior post;
  post.mu_hat = llt.solve(stats.weighted_residual);
  post.omega = llt.solve(Eigen::MatrixXd::Identity(leaves, leaves));
  post.omega = 0.5 * (post.omega + post.omega.transpose()).eval();

  const auto n = static_cast<double>(stats.n);
  const auto b = static_cast<double>(leaves);
  // 1/2 log|2 pi Omega| - (B/2) log(2 pi sigma_mu2) collapses to
  // -1/2 log|P| - (B/2) log sigma_mu2 with P = Omega^-1.
  post.log_marginal = -0.5 * log_det_precision - 0.5 * b * std::log(sigma_mu2) -
                      0.5 * n * (kLog2Pi + std::log(stats.sigma2)) - 0.5 * stats.residual_sq / stats.sigma2 +
                      0.5 * stats.weighted_residual.dot(post.mu_hat);
  if (!std::isfinite(post.log_marginal)) throw numerical_error("soft_log_marginal: non-finite result");
  return post;
}

SoftPosterior soft_log_marginal(const Eigen::MatrixXd& phi, std::span<const double> residuals, double sigma2,
                                double sigma_mu2) {
  check_variances(sigma2, sigma_mu2);
  return soft_log_marginal(SoftSuffStats::from_phi(phi, residuals, sigma2), sigma_mu2);
}

std::vector<double> draw_hard_leaf_values(const LeafSuffStats& stats, double sigma2, double sigma_mu2, Rng& rng) {
  check_variances(sigma2, sigma_mu2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(stats.counts.size());
  for (std::size_t b = 0; b < values.size(); ++b) {
    const double precision = static_cast<double>(stats.counts[b]) / sigma2 + 1.0 / sigma_mu2;
    const double mean = stats.sums[b] / sigma2 / precision;
    values[b] = mean + normal(rng) / std::sqrt(precision);
  }
  return values;
}

std::vector<double> draw_soft_leaf_values(const SoftPosterior& post, Rng& rng) {
  const auto leaves = post.omega.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(post.omega);
  if (llt.info() != Eigen::Success) throw numerical_error("draw_soft_leaf_values: Omega is not positive definite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(leaves);
  for (Eigen::Index i = 0; i < leaves; ++i) z[i] = normal(rng);
  const Eigen::VectorXd draw = post.mu_hat + llt.matrixL() * z;
  return {draw.data(), draw.data() + leaves};
}

double draw_sigma2(std::span<const double> residuals, const SigmaPrior& prior, Rng& rng) {
  if (!(prior.nu > 0.0) || !(prior.lambda > 0.0)) throw invalid_argument("sigma prior requires nu > 0 and lambda > 0");
  double sse = 0.0;
  for (double e : residuals) sse += e * e;
  std::chi_squared_distribution<double> chi2(prior.nu + static_cast<double>(residuals.size()));
  double denom = 0.0;
  do {
    denom = chi2(rng);
  } while (!(denom > 0.0));
  return (prior.nu * prior.lambda + sse) / denom;
}

double calibrate_sigma_lambda(double sigma_hat, double nu, double quantile) {
  if (!(sigma_hat > 0.0) || !(nu > 0.0) || !(quantile > 0.0 && quantile < 1.0)) {
    throw invalid_argument("calibrate_sigma_lambda: need sigma_hat > 0, nu > 0, 0 < quantile < 1");
  }
  const boost::math::chi_squared dist(nu);
  const double q = boost::math::quantile(dist, 1.0 - quantile);
  return sigma_hat * sigma_hat * q / nu;
}

}  // namespace asbart
