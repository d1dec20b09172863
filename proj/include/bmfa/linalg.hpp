#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <vector>

#include "bmfa/random.hpp"

namespace bmfa {

/// Lower bound applied to error variances before building a LowRankCov.
inline constexpr double kSigmaFloor = 1e-12;
/// Lower bound applied to Dirichlet draws.
inline constexpr double kWeightFloor = 1e-300;

/// Covariance Lambda Lambda^T + Sigma with diagonal Sigma, held through the
/// q x q capacitance matrix M = I + Lambda^T Sigma^-1 Lambda.
class LowRankCov {
public:
  LowRankCov(const Eigen::VectorXd &sigma_diag, const Eigen::MatrixXd &lambda);

  [[nodiscard]] Eigen::Index dim() const { return sigma_inv_.size(); }
  [[nodiscard]] Eigen::Index rank() const { return lambda_.cols(); }

  [[nodiscard]] const Eigen::VectorXd &sigma_inv() const { return sigma_inv_; }
  [[nodiscard]] const Eigen::MatrixXd &lambda() const { return lambda_; }
  [[nodiscard]] const Eigen::MatrixXd &sigma_inv_lambda() const {
    return sigma_inv_lambda_;
  }
  [[nodiscard]] const Eigen::MatrixXd &capacitance() const { return m_; }
  [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd> &capacitance_llt() const {
    return llt_;
  }
  /// log det(Lambda Lambda^T + Sigma) by the matrix determinant lemma.
  [[nodiscard]] double logdet() const { return logdet_; }

  /// (Lambda Lambda^T + Sigma)^-1 v in O(pq^2).
  [[nodiscard]] Eigen::VectorXd inverse_apply(const Eigen::VectorXd &v) const;

  /// v^T (Lambda Lambda^T + Sigma)^-1 v for every row v of `rows`.
  [[nodiscard]] Eigen::VectorXd
  quadratic_forms(const Eigen::MatrixXd &rows) const;

  [[nodiscard]] Eigen::MatrixXd dense() const;

private:
  Eigen::VectorXd sigma_inv_;
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd sigma_inv_lambda_; // Sigma^-1 Lambda
  Eigen::MatrixXd m_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double logdet_ = 0.0;
};

Eigen::VectorXd woodbury_inverse_apply(const LowRankCov &cov,
                                       const Eigen::VectorXd &v);

double mvn_logpdf_lowrank(const Eigen::VectorXd &x, const Eigen::VectorXd &mu,
                          const LowRankCov &cov);

/// Log-density of every row of x under N(mu, cov).
Eigen::VectorXd mvn_logpdf_rows(const Eigen::MatrixXd &x,
                                const Eigen::VectorXd &mu,
                                const LowRankCov &cov);

/// n x K matrix of log N(x_i; mu_k, cov_k) for the components listed in
/// `components` (all rows of mu when empty). Batched through matrix
/// products; x_sq holds the squared entries of x.
Eigen::MatrixXd mvn_logpdf_components(const Eigen::MatrixXd &x,
                                      const Eigen::MatrixXd &x_sq,
                                      const Eigen::MatrixXd &mu,
                                      const std::vector<LowRankCov> &covs,
                                      const std::vector<int> &components = {});

enum class MatrixForm { Covariance, Precision };

/// Draw from N(mean, C) where `matrix` is C or C^-1 according to `form`.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd &mean,
                           const Eigen::MatrixXd &matrix, MatrixForm form,
                           RandomStream &stream);

/// Draw from N(P^-1 b, P^-1) given the precision P and linear term b.
Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd &b,
                                     const Eigen::MatrixXd &precision,
                                     RandomStream &stream);

/// Allocation-free variant of sample_mvn_canonical for small systems. The
/// leading d x d block of `precision` is overwritten by its Cholesky factor;
/// the draw goes to the first d entries of `out`.
void sample_mvn_canonical_inplace(Eigen::Ref<Eigen::MatrixXd> precision,
                                  Eigen::Ref<Eigen::VectorXd> b, Eigen::Index d,
                                  RandomStream &stream,
                                  Eigen::Ref<Eigen::VectorXd> out);

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd &alpha,
                                 RandomStream &stream);

double sample_gamma(double shape, double rate, RandomStream &stream);

/// Index drawn with probabilities proportional to exp(log_weights).
int sample_categorical_log(const Eigen::Ref<const Eigen::VectorXd> &log_weights,
                           RandomStream &stream);

/// Symmetric Dirichlet log-density with per-component parameter `alpha`.
double dirichlet_logpdf(const Eigen::VectorXd &w, double alpha);

/// log(sum(exp(v))) with max subtraction.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd> &v);

} // namespace bmfa
