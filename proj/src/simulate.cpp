#include "bmfa/simulate.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <map>

#include "bmfa/errors.hpp"
#include "bmfa/linalg.hpp"

namespace bmfa {

SimOptions scenario1_options() {
  SimOptions o;
  o.weight_concentration = 10.0;
  o.mean_scale = 10.0;
  o.loading_scales = {5.0};
  o.column_correlation = 0.0;
  return o;
}

SimOptions scenario2_options() {
  SimOptions o;
  o.weight_concentration = 10.0;
  o.mean_scale = 15.0;
  o.loading_scales = {30.0, 20.0, 6.0};
  o.column_correlation = 0.5;
  return o;
}

Eigen::MatrixXd scenario1_sinv(int k, int p) {
  Eigen::MatrixXd s(k, p);
  for (int c = 0; c < k; ++c) s.row(c).setConstant(1.0 / (1.0 + 20.0 * std::log(c + 2.0)));
  return s;
}

Eigen::MatrixXd scenario2_sinv(int k, int p, RandomStream &stream) {
  Eigen::VectorXd u(p);
  for (int r = 0; r < p; ++r) u[r] = 500.0 + 500.0 * stream.uniform();
  Eigen::MatrixXd s(k, p);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < p; ++r) s(c, r) = 1.0 / (1.0 + u[r] * std::log(c + 2.0));
  return s;
}

Eigen::VectorXd unequal_weights_five() {
  Eigen::VectorXd w(5);
  w << 1, 2, 3, 4, 5;
  return w / 15.0;
}

Eigen::VectorXd unequal_weights_two() {
  Eigen::VectorXd w(2);
  w << 1.0 / 20.0, 19.0 / 20.0;
  return w;
}

namespace {

SimulatedData simulate_mixture(int k, int p, int q, int n, const Eigen::MatrixXd &sinv,
                               bool same_sigma, RandomStream &stream,
                               const SimOptions &opt) {
  if (k < 1 || p < 2 || q < 1 || q > p || n < 2)
    throw Error(ErrorCode::DimensionMismatch, "invalid simulation dimensions");
  if (sinv.rows() != k || sinv.cols() != p)
    throw Error(ErrorCode::DimensionMismatch,
                "inverse error variances must be K x p");
  if (!(sinv.array() > 0).all())
    throw Error(ErrorCode::NonPositiveParam, "inverse error variances must be positive");
  if (opt.weights.size() != 0 && opt.weights.size() != k)
    throw Error(ErrorCode::DimensionMismatch, "fixed weights must have length K");
  if (opt.loading_scales.empty())
    throw Error(ErrorCode::InvalidConfig, "no loading scale given");

  SimulatedData out;
  TrueParams &t = out.truth;
  t.w = opt.weights.size() == k
            ? Eigen::VectorXd(opt.weights / opt.weights.sum())
            : sample_dirichlet(Eigen::VectorXd::Constant(k, opt.weight_concentration),
                               stream);
  t.mu.resize(k, p);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < p; ++r) t.mu(c, r) = opt.mean_scale * stream.normal();

  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(q, q, opt.column_correlation);
  corr.diagonal().setOnes();
  const Eigen::MatrixXd upper = Eigen::LLT<Eigen::MatrixXd>(corr).matrixU();
  for (int c = 0; c < k; ++c) {
    Eigen::MatrixXd g(p, q);
    for (int r = 0; r < p; ++r)
      for (int j = 0; j < q; ++j) g(r, j) = stream.normal();
    Eigen::MatrixXd lam = g * upper; // rows have the requested column correlation
    for (int j = 0; j < q; ++j) {
      const auto ju = std::min<std::size_t>(static_cast<std::size_t>(j),
                                            opt.loading_scales.size() - 1);
      lam.col(j) *= opt.loading_scales[ju];
      for (int r = 0; r < std::min(j, p); ++r) lam(r, j) = 0.0;
    }
    t.lambda.push_back(std::move(lam));
  }
  t.sigma2.resize(k, p);
  for (int c = 0; c < k; ++c)
    t.sigma2.row(c) = (same_sigma ? sinv.row(0) : sinv.row(c)).cwiseInverse();

  const Eigen::VectorXd log_w = t.w.array().max(kWeightFloor).log();
  out.z.resize(static_cast<std::size_t>(n));
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    const int c = sample_categorical_log(log_w, stream);
    out.z[static_cast<std::size_t>(i)] = c;
    const Eigen::VectorXd y = stream.normal_vector(q);
    Eigen::VectorXd xi = t.mu.row(c).transpose() + t.lambda[static_cast<std::size_t>(c)] * y;
    for (int r = 0; r < p; ++r) xi[r] += std::sqrt(t.sigma2(c, r)) * stream.normal();
    x.row(i) = xi.transpose();
  }
  out.data.x = std::move(x);
  return out;
}

} // namespace

SimulatedData sim_scenario1(int k, int p, int q, int n, const Eigen::MatrixXd &sinv,
                            bool same_sigma, RandomStream &stream,
                            const SimOptions &options) {
  return simulate_mixture(k, p, q, n, sinv, same_sigma, stream, options);
}

SimulatedData sim_scenario2(int k, int p, int q, int n, const Eigen::MatrixXd &sinv,
                            bool same_sigma, RandomStream &stream,
                            const SimOptions &options) {
  return simulate_mixture(k, p, q, n, sinv, same_sigma, stream, options);
}

Eigen::MatrixXd oracle_membership(const TrueParams &truth, const Eigen::MatrixXd &x) {
  const Eigen::Index k = truth.w.size();
  std::vector<LowRankCov> covs;
  for (Eigen::Index c = 0; c < k; ++c)
    covs.emplace_back(truth.sigma2.row(c).transpose(),
                      truth.lambda[static_cast<std::size_t>(c)]);
  Eigen::MatrixXd lp =
      mvn_logpdf_components(x, x.array().square().matrix(), truth.mu, covs);
  for (Eigen::Index c = 0; c < k; ++c)
    lp.col(c).array() += std::log(std::max(truth.w[c], kWeightFloor));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = log_sum_exp(lp.row(i).transpose());
    lp.row(i) = (lp.row(i).array() - norm).exp().matrix();
  }
  return lp;
}

std::vector<int> map_oracle_clustering(const TrueParams &truth,
                                       const Eigen::MatrixXd &x) {
  const Eigen::MatrixXd prob = oracle_membership(truth, x);
  std::vector<int> z(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < prob.cols(); ++c)
      if (prob(i, c) > prob(i, best)) best = c;
    z[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return z;
}

double adjusted_rand_index(const std::vector<int> &a, const std::vector<int> &b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, "label vectors differ in length");
  const std::size_t n = a.size();
  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  auto pairs = [](long m) { return static_cast<double>(m) * (m - 1) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto &[key, m] : cells) index += pairs(m);
  for (const auto &[key, m] : rows) sum_a += pairs(m);
  for (const auto &[key, m] : cols) sum_b += pairs(m);
  const double total = pairs(static_cast<long>(n));
  const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0; // both partitions trivial and equal
  return (index - expected) / (max_index - expected);
}

} // namespace bmfa
