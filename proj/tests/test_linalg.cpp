#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmfa/errors.hpp"
#include "bmfa/linalg.hpp"
#include "oracles.hpp"

using namespace bmfa;

namespace {

double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double> &v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  return d;
}

} // namespace

TEST_CASE("woodbury inverse on hand cases") {
  {
    const Eigen::Vector3d sig(2, 4, 8);
    const LowRankCov cov(sig, Eigen::MatrixXd::Zero(3, 1));
    const Eigen::VectorXd out = woodbury_inverse_apply(cov, Eigen::Vector3d(2, 4, 8));
    CHECK((out - Eigen::Vector3d::Ones()).norm() < 1e-14);
  }
  {
    Eigen::MatrixXd lam(2, 1);
    lam << 1, 0;
    const LowRankCov cov(Eigen::Vector2d::Ones(), lam);
    const Eigen::VectorXd out = woodbury_inverse_apply(cov, Eigen::Vector2d(1, 1));
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("woodbury inverse and determinant lemma against dense oracle") {
  RandomStream s(11, 0);
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::Index p = 1 + s.uniform_int(0, 7);
    const Eigen::Index q = 1 + s.uniform_int(0, 2);
    const auto [sig, lam] = oracle::random_cov_params(p, q, s);
    const LowRankCov cov(sig, lam);
    const Eigen::MatrixXd dense = oracle::dense_cov(sig, lam);
    const Eigen::VectorXd v = s.normal_vector(p);
    const Eigen::VectorXd fast = cov.inverse_apply(v);
    const Eigen::VectorXd slow = dense.llt().solve(v);
    CHECK((fast - slow).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK((dense * fast - v).lpNorm<Eigen::Infinity>() < 1e-8);
    CHECK(std::abs(cov.logdet() - oracle::dense_logdet(dense)) < 1e-9);
    CHECK((cov.dense() - dense).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("low-rank log-density") {
  {
    const LowRankCov cov(Eigen::VectorXd::Ones(4), Eigen::MatrixXd::Zero(4, 1));
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(4, 0.3);
    CHECK(mvn_logpdf_lowrank(mu, mu, cov) ==
          doctest::Approx(-2.0 * std::log(2.0 * M_PI)).epsilon(1e-14));
  }
  {
    const LowRankCov cov(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1));
    CHECK(mvn_logpdf_lowrank(Eigen::VectorXd::Constant(1, 1.5), Eigen::VectorXd::Constant(1, 0.5),
                             cov) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI) - 0.5).epsilon(1e-14));
  }
  RandomStream s(12, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto [sig, lam] = oracle::random_cov_params(6, 2, s);
    const LowRankCov cov(sig, lam);
    const Eigen::VectorXd x = s.normal_vector(6), mu = s.normal_vector(6);
    CHECK(std::abs(mvn_logpdf_lowrank(x, mu, cov) -
                   oracle::dense_logpdf(x, mu, oracle::dense_cov(sig, lam))) < 1e-8);
  }
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(1);
  bad[0] = std::nan("");
  const LowRankCov one(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(mvn_logpdf_lowrank(bad, Eigen::VectorXd::Zero(1), one), Error);
}

TEST_CASE("batched component densities agree with the row-wise path") {
  RandomStream s(13, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 17, p = 5, q = 1 + rep % 3, k = 4;
    const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return 3 * s.normal(); });
    Eigen::MatrixXd mu(k, p);
    std::vector<LowRankCov> covs;
    for (Eigen::Index c = 0; c < k; ++c) {
      mu.row(c) = s.normal_vector(p).transpose();
      const auto [sig, lam] = oracle::random_cov_params(p, q, s);
      covs.emplace_back(sig, lam);
    }
    const Eigen::MatrixXd all =
        mvn_logpdf_components(x, x.array().square().matrix(), mu, covs);
    const Eigen::MatrixXd some =
        mvn_logpdf_components(x, x.array().square().matrix(), mu, covs, {3, 1});
    for (Eigen::Index c = 0; c < k; ++c) {
      const Eigen::VectorXd rows = mvn_logpdf_rows(x, mu.row(c).transpose(), covs[c]);
      CHECK((all.col(c) - rows).lpNorm<Eigen::Infinity>() < 1e-9);
      for (Eigen::Index i = 0; i < n; i += 5)
        CHECK(std::abs(all(i, c) - oracle::dense_logpdf(x.row(i).transpose(),
                                                        mu.row(c).transpose(),
                                                        covs[c].dense())) < 1e-8);
    }
    CHECK((some.col(0) - all.col(3)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((some.col(1) - all.col(1)).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("multivariate normal sampling moments") {
  RandomStream s(14, 0);
  const int n = 100000;
  const Eigen::Vector3d mu(1, -2, 0.5);
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i)
    sum += sample_mvn(mu, Eigen::Matrix3d::Identity(), MatrixForm::Covariance, s);
  CHECK(((sum / n) - mu).lpNorm<Eigen::Infinity>() < 4.0 / std::sqrt(n));

  std::vector<double> v;
  for (int i = 0; i < n; ++i)
    v.push_back(sample_mvn(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 4.0),
                           MatrixForm::Covariance, s)[0]);
  CHECK(variance(v) == doctest::Approx(4.0).epsilon(0.05));

  std::vector<double> a, b;
  for (int i = 0; i < 20000; ++i) {
    a.push_back(sample_mvn(Eigen::VectorXd::Zero(2), 4.0 * Eigen::Matrix2d::Identity(),
                           MatrixForm::Precision, s)[1]);
    b.push_back(sample_mvn(Eigen::VectorXd::Zero(2), 0.25 * Eigen::Matrix2d::Identity(),
                           MatrixForm::Covariance, s)[1]);
  }
  // critical value of the two-sample test at level 0.001
  const double crit = 1.95 * std::sqrt(2.0 / 20000.0);
  CHECK(ks_statistic(a, b) < crit);

  CHECK_THROWS_AS(sample_mvn(Eigen::VectorXd::Zero(2), -Eigen::Matrix2d::Identity(),
                             MatrixForm::Covariance, s),
                  Error);
}

TEST_CASE("canonical sampling, allocating and in place") {
  RandomStream s(15, 0);
  Eigen::Matrix3d a;
  a << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  const Eigen::Vector3d b(1, -1, 2);
  const Eigen::Vector3d mean = a.llt().solve(b);
  const Eigen::Matrix3d cov = a.inverse();
  const int n = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d sq = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d d = sample_mvn_canonical(b, a, s) - mean;
    sum += d;
    sq += d * d.transpose();
  }
  CHECK((sum / n).lpNorm<Eigen::Infinity>() < 4.0 * std::sqrt(cov.diagonal().maxCoeff() / n));
  CHECK(((sq / n) - cov).lpNorm<Eigen::Infinity>() < 0.01);

  // the in-place variant consumes the same normals and gives the same draw
  RandomStream s1(16, 3), s2(16, 3);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index d = 1 + rep % 3;
    Eigen::MatrixXd prec(4, 4);
    prec.setRandom();
    prec = prec * prec.transpose() + Eigen::MatrixXd::Identity(4, 4);
    const Eigen::VectorXd lin = Eigen::VectorXd::Random(4);
    const Eigen::VectorXd ref =
        sample_mvn_canonical(lin.head(d), prec.topLeftCorner(d, d), s1);
    Eigen::MatrixXd work = prec;
    Eigen::VectorXd bw = lin, out(4);
    sample_mvn_canonical_inplace(work, bw, d, s2, out);
    CHECK((out.head(d) - ref).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd bb = Eigen::VectorXd::Zero(2), out(2);
  CHECK_THROWS_AS(sample_mvn_canonical_inplace(neg, bb, 2, s, out), Error);
}

TEST_CASE("Dirichlet sampling") {
  RandomStream s(17, 0);
  const int n = 100000;
  Eigen::Vector2d m1 = Eigen::Vector2d::Zero(), m2 = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd w = sample_dirichlet(Eigen::Vector2d(1, 1), s);
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
    m1 += w;
    m2 += sample_dirichlet(Eigen::Vector2d(3.05, 0.05), s);
  }
  CHECK(m1[0] / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(m2[0] / n - 3.05 / 3.1) < 0.01);
  CHECK(std::abs(m2[1] / n - 0.05 / 3.1) < 0.01);

  // tiny parameters stay strictly positive
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd w = sample_dirichlet(Eigen::VectorXd::Constant(20, 0.05), s);
    CHECK((w.array() > 0).all());
    CHECK(std::abs(w.sum() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(sample_dirichlet(Eigen::Vector2d(1, 0), s), Error);
}

TEST_CASE("Gamma sampling") {
  RandomStream s(18, 0);
  std::vector<double> a, b;
  for (int i = 0; i < 100000; ++i) {
    a.push_back(sample_gamma(0.5, 0.5, s));
    b.push_back(sample_gamma(1e4, 1e4, s));
  }
  CHECK(std::all_of(a.begin(), a.end(), [](double x) { return x > 0; }));
  CHECK(mean(a) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(variance(a) == doctest::Approx(2.0).epsilon(0.06));
  CHECK(mean(b) == doctest::Approx(1.0).epsilon(0.001));
  CHECK(std::sqrt(variance(b)) == doctest::Approx(0.01).epsilon(0.02));
  CHECK_THROWS_AS(sample_gamma(0.0, 1.0, s), Error);
  CHECK_THROWS_AS(sample_gamma(1.0, -1.0, s), Error);
  // log variate for very small shapes remains finite
  for (int i = 0; i < 1000; ++i) CHECK(std::isfinite(s.log_gamma_variate(1e-3)));
}

TEST_CASE("categorical sampling in log space") {
  RandomStream s(19, 0);
  Eigen::VectorXd lw(3);
  lw << -1000.0, -1000.0 + std::log(3.0), -5000.0;
  int count1 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) count1 += sample_categorical_log(lw, s) == 1;
  CHECK(static_cast<double>(count1) / n == doctest::Approx(0.75).epsilon(0.01));
  lw.setConstant(-std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(sample_categorical_log(lw, s), Error);
  CHECK(log_sum_exp(Eigen::Vector2d(-1e4, -1e4)) ==
        doctest::Approx(-1e4 + std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("streams replay exactly") {
  RandomStream a(5, 9), b(5, 9), c(5, 10);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal() + a.gamma(0.7, 2.0) + a.uniform();
    CHECK(x == b.normal() + b.gamma(0.7, 2.0) + b.uniform());
    differs = differs || x != c.normal() + c.gamma(0.7, 2.0) + c.uniform();
  }
  CHECK(differs);
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}
