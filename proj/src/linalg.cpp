#include "bmfa/linalg.hpp"

#include <Eigen/Cholesky>

#include <cmath>

#include "bmfa/errors.hpp"

namespace bmfa {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

} // namespace

LowRankCov::LowRankCov(const Eigen::VectorXd &sigma_diag,
                       const Eigen::MatrixXd &lambda)
    : lambda_(lambda) {
  if (sigma_diag.size() != lambda.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "error variances and loadings disagree on p");
  if (!sigma_diag.allFinite() || !lambda.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "non-finite covariance parameters");
  const Eigen::VectorXd s = sigma_diag.cwiseMax(kSigmaFloor);
  sigma_inv_ = s.cwiseInverse();
  sigma_inv_lambda_ = sigma_inv_.asDiagonal() * lambda_;
  const Eigen::Index q = lambda_.cols();
  m_ = Eigen::MatrixXd::Identity(q, q);
  m_.noalias() += lambda_.transpose() * sigma_inv_lambda_;
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success)
    throw Error(ErrorCode::CholeskyFailure,
                "capacitance matrix I + L^T S^-1 L is not positive definite");
  double logdet_m = 0.0;
  const Eigen::MatrixXd &l = llt_.matrixLLT();
  for (Eigen::Index j = 0; j < q; ++j) logdet_m += 2.0 * std::log(l(j, j));
  logdet_ = logdet_m + s.array().log().sum();
}

Eigen::VectorXd LowRankCov::inverse_apply(const Eigen::VectorXd &v) const {
  if (!v.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "non-finite vector");
  const Eigen::VectorXd u = sigma_inv_lambda_.transpose() * v;
  return sigma_inv_.cwiseProduct(v) - sigma_inv_lambda_ * llt_.solve(u);
}

Eigen::VectorXd LowRankCov::quadratic_forms(const Eigen::MatrixXd &rows) const {
  // v^T S^-1 v - |L^-1 Lambda^T S^-1 v|^2 with M = L L^T
  Eigen::MatrixXd proj = sigma_inv_lambda_.transpose() * rows.transpose(); // q x n
  llt_.matrixL().solveInPlace(proj);
  return (rows.array().square().rowwise() * sigma_inv_.transpose().array())
             .rowwise()
             .sum()
             .matrix() -
         proj.colwise().squaredNorm().transpose();
}

Eigen::MatrixXd LowRankCov::dense() const {
  Eigen::MatrixXd c = lambda_ * lambda_.transpose();
  c.diagonal() += sigma_inv_.cwiseInverse();
  return c;
}

Eigen::VectorXd woodbury_inverse_apply(const LowRankCov &cov,
                                       const Eigen::VectorXd &v) {
  return cov.inverse_apply(v);
}

double mvn_logpdf_lowrank(const Eigen::VectorXd &x, const Eigen::VectorXd &mu,
                          const LowRankCov &cov) {
  if (!x.allFinite() || !mu.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "non-finite density argument");
  const Eigen::MatrixXd diff = (x - mu).transpose();
  const double quad = cov.quadratic_forms(diff)[0];
  return -0.5 * (static_cast<double>(cov.dim()) * kLog2Pi + cov.logdet() + quad);
}

Eigen::VectorXd mvn_logpdf_rows(const Eigen::MatrixXd &x,
                                const Eigen::VectorXd &mu,
                                const LowRankCov &cov) {
  const Eigen::MatrixXd diff = x.rowwise() - mu.transpose();
  const double constant = static_cast<double>(cov.dim()) * kLog2Pi + cov.logdet();
  return -0.5 * (cov.quadratic_forms(diff).array() + constant).matrix();
}

Eigen::MatrixXd mvn_logpdf_components(const Eigen::MatrixXd &x,
                                      const Eigen::MatrixXd &x_sq,
                                      const Eigen::MatrixXd &mu,
                                      const std::vector<LowRankCov> &covs,
                                      const std::vector<int> &components) {
  std::vector<int> ks = components;
  if (ks.empty())
    for (Eigen::Index k = 0; k < mu.rows(); ++k) ks.push_back(static_cast<int>(k));
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const auto m = static_cast<Eigen::Index>(ks.size());
  const Eigen::Index q = covs[static_cast<std::size_t>(ks.front())].rank();
  if (!x.allFinite() || !mu.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "non-finite density argument");

  // (x - mu)^T S^-1 (x - mu) = sum_r s_r x_r^2 - 2 sum_r s_r mu_r x_r + mu^T S^-1 mu
  Eigen::MatrixXd s(p, m), sm(p, m), w(p, m * q);
  for (Eigen::Index c = 0; c < m; ++c) {
    const int k = ks[static_cast<std::size_t>(c)];
    const LowRankCov &cov = covs[static_cast<std::size_t>(k)];
    s.col(c) = cov.sigma_inv();
    sm.col(c) = cov.sigma_inv().cwiseProduct(mu.row(k).transpose());
    w.middleCols(c * q, q) = cov.sigma_inv_lambda();
  }
  Eigen::MatrixXd out(n, m);
  out.noalias() = x_sq * s;
  out.noalias() -= 2.0 * (x * sm);
  Eigen::MatrixXd xw(n, m * q);
  xw.noalias() = x * w;
  Eigen::MatrixXd proj(q, n);
  for (Eigen::Index c = 0; c < m; ++c) {
    const int k = ks[static_cast<std::size_t>(c)];
    const LowRankCov &cov = covs[static_cast<std::size_t>(k)];
    const Eigen::VectorXd mu_k = mu.row(k).transpose();
    const double c_k = mu_k.dot(sm.col(c));
    const Eigen::VectorXd shift = cov.sigma_inv_lambda().transpose() * mu_k;
    proj = xw.middleCols(c * q, q).transpose();
    proj.colwise() -= shift;
    cov.capacitance_llt().matrixL().solveInPlace(proj);
    const double constant = static_cast<double>(p) * kLog2Pi + cov.logdet() + c_k;
    out.col(c) = -0.5 * ((out.col(c) - proj.colwise().squaredNorm().transpose()).array() +
                         constant)
                            .matrix();
  }
  return out;
}

void sample_mvn_canonical_inplace(Eigen::Ref<Eigen::MatrixXd> a,
                                  Eigen::Ref<Eigen::VectorXd> b, Eigen::Index d,
                                  RandomStream &stream,
                                  Eigen::Ref<Eigen::VectorXd> out) {
  // lower Cholesky factor in place
  for (Eigen::Index j = 0; j < d; ++j) {
    double diag = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (!(diag > 0) || !std::isfinite(diag))
      throw Error(ErrorCode::CholeskyFailure, "precision is not positive definite");
    const double l = std::sqrt(diag);
    a(j, j) = l;
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double v = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
      a(i, j) = v / l;
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) out[j] = stream.normal();
  // L u = b
  for (Eigen::Index i = 0; i < d; ++i) {
    double v = b[i];
    for (Eigen::Index k = 0; k < i; ++k) v -= a(i, k) * b[k];
    b[i] = v / a(i, i);
  }
  // L^T (mean + noise) = u + e
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    double v = b[i] + out[i];
    for (Eigen::Index k = i + 1; k < d; ++k) v -= a(k, i) * out[k];
    out[i] = v / a(i, i);
  }
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd &mean,
                           const Eigen::MatrixXd &matrix, MatrixForm form,
                           RandomStream &stream) {
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::CholeskyFailure, "matrix is not positive definite");
  Eigen::VectorXd e = stream.normal_vector(mean.size());
  if (form == MatrixForm::Covariance) return mean + llt.matrixL() * e;
  // P = L L^T  =>  L^-T e ~ N(0, P^-1)
  llt.matrixU().solveInPlace(e);
  return mean + e;
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::VectorXd &b,
                                     const Eigen::MatrixXd &precision,
                                     RandomStream &stream) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::CholeskyFailure, "precision is not positive definite");
  Eigen::VectorXd e = stream.normal_vector(b.size());
  llt.matrixU().solveInPlace(e);
  return llt.solve(b) + e;
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd &alpha,
                                 RandomStream &stream) {
  if (!(alpha.array() > 0).all() || !alpha.allFinite())
    throw Error(ErrorCode::NonPositiveAlpha,
                "Dirichlet parameters must be positive");
  Eigen::VectorXd lg(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    lg[k] = stream.log_gamma_variate(alpha[k]);
  const double norm = log_sum_exp(lg);
  Eigen::VectorXd w = (lg.array() - norm).exp().max(kWeightFloor).matrix();
  return w / w.sum();
}

double sample_gamma(double shape, double rate, RandomStream &stream) {
  return stream.gamma(shape, rate);
}

int sample_categorical_log(const Eigen::Ref<const Eigen::VectorXd> &log_weights,
                           RandomStream &stream) {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top))
    throw Error(ErrorCode::AllWeightsZero,
                "all allocation probabilities vanish");
  const Eigen::Index k = log_weights.size();
  double total = 0.0;
  Eigen::VectorXd cumulative(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    total += std::exp(log_weights[j] - top);
    cumulative[j] = total;
  }
  const double u = stream.uniform() * total;
  for (Eigen::Index j = 0; j < k; ++j)
    if (u < cumulative[j]) return static_cast<int>(j);
  return static_cast<int>(k - 1);
}

double dirichlet_logpdf(const Eigen::VectorXd &w, double alpha) {
  const double k = static_cast<double>(w.size());
  return std::lgamma(k * alpha) - k * std::lgamma(alpha) +
         (alpha - 1.0) * w.array().log().sum();
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd> &v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

} // namespace bmfa
