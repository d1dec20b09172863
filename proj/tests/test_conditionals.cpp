#include <doctest.h>

#include <cmath>

#include "bmfa/conditionals.hpp"
#include "bmfa/errors.hpp"
#include "oracles.hpp"

using namespace bmfa;

namespace {

struct Fixture {
  Parameterization spec;
  PriorConfig prior;
  Dataset data;
  ChainState state;
};

Fixture random_fixture(const char *code, int k, int q, Eigen::Index n, Eigen::Index p,
                       std::uint64_t seed) {
  Fixture f;
  f.spec = Parameterization::from_code(code);
  f.prior.k_max = k;
  RandomStream s(seed, 0);
  f.data.x = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return 2.0 * s.normal(); });
  f.state = draw_from_prior(f.spec, q, f.prior, n, p, 1.0, s);
  // damp the heavy-tailed prior draws so the numbers stay moderate
  f.state.sigma2 = f.state.sigma2.cwiseMin(4.0).cwiseMax(0.3);
  return f;
}

Dataset rows(std::initializer_list<std::initializer_list<double>> values) {
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(values.size()),
             static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto &r : values) {
    Eigen::Index j = 0;
    for (double v : r) d.x(i, j++) = v;
    ++i;
  }
  return d;
}

// State with K components, zero loadings, unit error variances and zero means.
ChainState plain_state(const Parameterization &spec, int k, int q, Eigen::Index n,
                       Eigen::Index p) {
  ChainState s;
  s.w = Eigen::VectorXd::Constant(k, 1.0 / k);
  s.mu = Eigen::MatrixXd::Zero(k, p);
  s.lambda.assign(spec.lambda_shared() ? 1 : static_cast<std::size_t>(k),
                  Eigen::MatrixXd::Zero(p, q));
  const auto [r, c] = sigma_shape(spec, k, p);
  s.sigma2 = Eigen::MatrixXd::Ones(r, c);
  s.y = Eigen::MatrixXd::Zero(n, q);
  s.z.assign(static_cast<std::size_t>(n), 0);
  s.omega2 = Eigen::VectorXd::Ones(q);
  s.dirichlet_mass = 1.0;
  return s;
}

} // namespace

TEST_CASE("sufficient statistics match naive loops") {
  const char *codes[] = {"UUU", "CUU", "UCU", "CCU", "UCC", "UUC", "CUC", "CCC"};
  int case_id = 0;
  for (const char *code : codes)
    for (int q : {1, 2}) {
      Fixture f = random_fixture(code, 3, q, 6, 3, 100 + case_id++);
      f.state.z = {0, 0, 2, 0, 2, 2}; // component 1 empty
      const SuffStats st = compute_suffstats(f.state, f.data, f.spec, f.prior);
      const auto nv = oracle::naive_suffstats(f.state, f.data.x, f.prior.xi_or_default(3),
                                              f.prior.psi_or_default(3));
      for (int k = 0; k < 3; ++k) {
        CHECK(st.n_k[k] == nv.n_k[k]);
        for (int r = 0; r < 3; ++r) {
          CHECK(std::abs(st.sum_x(k, r) - nv.sum_x[k][r]) < 1e-12);
          CHECK(std::abs(st.s(k, r) - nv.s[k][r]) < 1e-12);
          CHECK(std::abs(st.a(k, r) - nv.a[k][r]) < 1e-12);
          CHECK(std::abs(st.b(k, r) - nv.b[k][r]) < 1e-12);
          for (int j = 0; j < q; ++j) CHECK(std::abs(st.tau[k](r, j) - nv.tau[k][r][j]) < 1e-12);
        }
        for (int j = 0; j < q; ++j)
          for (int l = 0; l < q; ++l) {
            CHECK(std::abs(st.yy[k](j, l) - nv.yy[k][j][l]) < 1e-12);
            CHECK(std::abs(st.m[k](j, l) - nv.m[k][j][l]) < 1e-12);
          }
        CHECK((st.m[k] - st.m[k].transpose()).norm() < 1e-12 * st.m[k].norm());
      }
      // the empty component contributes nothing
      CHECK(st.tau[1].norm() == 0.0);
      CHECK(st.yy[1].norm() == 0.0);
      CHECK(st.s.row(1).norm() == 0.0);
      CHECK(st.n_k.sum() == 6);
      CHECK((st.s.array() >= 0).all());
      CHECK((residual_sums(f.state, f.data) - st.s).norm() == 0.0);
      // col-sum T over loading matrices, scaled by K for a shared matrix
      Eigen::VectorXd t = Eigen::VectorXd::Zero(q);
      for (int k = 0; k < 3; ++k) t += f.state.loadings(k).colwise().squaredNorm().transpose();
      CHECK((st.t_diag - t).norm() < 1e-12);
      // row deltas are truncated and scaled copies of yy
      const Eigen::MatrixXd d0 = st.delta(0, 0, 2.0);
      CHECK(d0.rows() == 1);
      CHECK(d0(0, 0) == doctest::Approx(st.yy[0](0, 0) / 2.0));
    }
}

TEST_CASE("single observation residual") {
  const auto spec = Parameterization::from_code("UUU");
  Dataset d = rows({{1.5, -2.0, 0.5}});
  ChainState s = plain_state(spec, 2, 1, 1, 3);
  PriorConfig prior;
  prior.k_max = 2;
  const SuffStats st = compute_suffstats(s, d, spec, prior);
  CHECK(st.s(0, 0) == 2.25);
  CHECK(st.s(0, 1) == 4.0);
  CHECK(st.s(0, 2) == 0.25);
  CHECK(st.s.row(1).sum() == 0.0);
}

TEST_CASE("allocation probabilities") {
  const auto spec = Parameterization::from_code("UUU");
  SUBCASE("identical components split evenly") {
    Dataset d = rows({{0.3, 1.0}, {-2.0, 4.0}});
    ChainState s = plain_state(spec, 2, 1, 2, 2);
    const auto lp = allocation_log_probs(s, d, component_covariances(s, 2));
    CHECK(std::exp(lp(0, 0)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::exp(lp(1, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("degenerate weights") {
    Dataset d = rows({{0.3, 1.0}, {-2.0, 4.0}, {5.0, 1.0}});
    ChainState s = plain_state(spec, 3, 1, 3, 2);
    s.w << 1.0, 0.0, 0.0;
    RandomStream st(3, 0);
    for (int rep = 0; rep < 100; ++rep) {
      update_z(s, d, spec, st);
      CHECK(s.z == std::vector<int>{0, 0, 0});
    }
  }
  SUBCASE("hand-evaluated normal densities") {
    Dataset d = rows({{0.0, 0.0}, {1.5, 0.0}});
    ChainState s = plain_state(spec, 2, 1, 2, 2);
    s.mu(0, 0) = -3.0;
    s.mu(1, 0) = 3.0;
    const auto lp = allocation_log_probs(s, d, component_covariances(s, 2));
    CHECK(std::exp(lp(0, 0)) == doctest::Approx(0.5).epsilon(1e-14));
    const double e9 = std::exp(18.0 / 2.0);
    CHECK(std::exp(lp(1, 1)) == doctest::Approx(e9 / (1.0 + e9)).epsilon(1e-14));
  }
  SUBCASE("agree with dense covariances on random states") {
    for (const auto &sp : Parameterization::all()) {
      Fixture f = random_fixture(sp.code().c_str(), 4, 2, 9, 4, 200 + sp.index());
      const auto lp = allocation_log_probs(f.state, f.data, component_covariances(f.state, 4));
      for (Eigen::Index i = 0; i < 9; ++i) {
        Eigen::VectorXd dense(4);
        for (int k = 0; k < 4; ++k)
          dense[k] = std::log(f.state.w[k]) +
                     oracle::dense_logpdf(f.data.x.row(i).transpose(),
                                          f.state.mu.row(k).transpose(),
                                          oracle::dense_cov(f.state.error_variances(k, 4),
                                                            f.state.loadings(k)));
        dense.array() -= log_sum_exp(dense);
        CHECK((lp.row(i).transpose() - dense).lpNorm<Eigen::Infinity>() < 1e-8);
      }
    }
  }
  SUBCASE("empirical frequencies follow the probabilities") {
    Dataset d = rows({{1.0, 0.0}});
    ChainState s = plain_state(spec, 2, 1, 1, 2);
    s.mu(1, 0) = 1.5;
    const auto lp = allocation_log_probs(s, d, component_covariances(s, 2));
    RandomStream st(4, 0);
    int hits = 0;
    const int n = 100000;
    for (int rep = 0; rep < n; ++rep) {
      update_z(s, d, spec, st);
      hits += s.z[0] == 1;
    }
    const double p1 = std::exp(lp(0, 1));
    CHECK(std::abs(static_cast<double>(hits) / n - p1) < 4.0 * std::sqrt(p1 * (1 - p1) / n));
  }
}

TEST_CASE("weights update") {
  const auto spec = Parameterization::from_code("UUU");
  ChainState s = plain_state(spec, 2, 1, 3, 2);
  s.dirichlet_mass = 0.05;
  RandomStream st(5, 0);
  double m = 0.0;
  const int n = 100000;
  for (int rep = 0; rep < n; ++rep) {
    update_w(s, st);
    m += s.w[0];
  }
  CHECK(std::abs(m / n - 3.05 / 3.10) < 0.01);

  ChainState e = plain_state(spec, 4, 1, 0, 2);
  e.dirichlet_mass = 2.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(4);
  for (int rep = 0; rep < 20000; ++rep) {
    update_w(e, st);
    acc += e.w;
  }
  CHECK((acc / 20000 - Eigen::VectorXd::Constant(4, 0.25)).lpNorm<Eigen::Infinity>() < 0.01);
}

TEST_CASE("means update") {
  const auto spec = Parameterization::from_code("UUU");
  PriorConfig prior;
  prior.k_max = 2;
  Dataset d = rows({{1.0, 2.0}, {3.0, -1.0}, {2.0, 0.5}});
  ChainState s = plain_state(spec, 2, 1, 3, 2);
  s.z = {0, 0, 0};
  RandomStream st(6, 0);
  const int n = 100000;
  Eigen::Vector2d m0 = Eigen::Vector2d::Zero(), m1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d v1 = Eigen::Vector2d::Zero();
  const SuffStats suff = compute_suffstats(s, d, spec, prior);
  for (int rep = 0; rep < n; ++rep) {
    update_mu(s, d, suff, prior, st);
    m0 += s.mu.row(0).transpose();
    m1 += s.mu.row(1).transpose();
    v1 += s.mu.row(1).transpose().cwiseAbs2();
  }
  // posterior mean n xbar / (n + 1) with variance 1 / (n + 1) = 1/4
  const Eigen::Vector2d expected = Eigen::Vector2d(6.0, 1.5) / 4.0;
  CHECK(((m0 / n) - expected).lpNorm<Eigen::Infinity>() < 4.0 * std::sqrt(0.25 / n));
  // the empty component samples its N(0, I) prior
  CHECK((m1 / n).lpNorm<Eigen::Infinity>() < 4.0 / std::sqrt(n));
  CHECK(((v1 / n) - Eigen::Vector2d::Ones()).lpNorm<Eigen::Infinity>() < 0.02);
}

TEST_CASE("loadings update") {
  SUBCASE("prior reduction without data") {
    const auto spec = Parameterization::from_code("UUU");
    PriorConfig prior;
    prior.k_max = 2;
    Dataset d = rows({{0.0, 0.0, 0.0}});
    ChainState s = plain_state(spec, 2, 2, 1, 3);
    s.omega2 << 4.0, 0.25;
    s.z = {0};
    RandomStream st(7, 0);
    const int n = 100000;
    const SuffStats suff = compute_suffstats(s, d, spec, prior);
    Eigen::Vector2d sq = Eigen::Vector2d::Zero();
    for (int rep = 0; rep < n; ++rep) {
      update_lambda(s, d, suff, prior, spec, st);
      sq += s.lambda[1].row(2).transpose().cwiseAbs2();
      CHECK(s.lambda[1](0, 1) == 0.0);
    }
    CHECK(sq[0] / n == doctest::Approx(4.0).epsilon(0.02));
    CHECK(sq[1] / n == doctest::Approx(0.25).epsilon(0.02));
  }
  SUBCASE("vague prior recovers the centred observation") {
    const auto spec = Parameterization::from_code("UUU");
    PriorConfig prior;
    prior.k_max = 1 + 1;
    Dataset d = rows({{2.5, -1.0}});
    ChainState s = plain_state(spec, 2, 1, 1, 2);
    s.mu(0, 0) = 0.5;
    s.y(0, 0) = 1.0;
    s.omega2[0] = 1e12;
    const SuffStats suff = compute_suffstats(s, d, spec, prior);
    RandomStream st(8, 0);
    const int n = 100000;
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (int rep = 0; rep < n; ++rep) {
      update_lambda(s, d, suff, prior, spec, st);
      m += s.lambda[0].col(0);
    }
    CHECK(m[0] / n == doctest::Approx(2.0).epsilon(0.01));
    CHECK(m[1] / n == doctest::Approx(-1.0).epsilon(0.01));
  }
  SUBCASE("shared loadings pool the components") {
    const auto spec = Parameterization::from_code("CUU");
    PriorConfig prior;
    prior.k_max = 2;
    Dataset d = rows({{1.0, 0.0}, {3.0, 0.0}});
    ChainState s = plain_state(spec, 2, 1, 2, 2);
    s.z = {0, 1};
    s.y.setOnes();
    s.sigma2 << 1.0, 1.0, 0.5, 1.0;
    s.omega2[0] = 1e12;
    const SuffStats suff = compute_suffstats(s, d, spec, prior);
    RandomStream st(9, 0);
    const int n = 100000;
    double m = 0.0;
    for (int rep = 0; rep < n; ++rep) {
      update_lambda(s, d, suff, prior, spec, st);
      m += s.lambda[0](0, 0);
    }
    // precision-weighted mean of 1 (weight 1) and 3 (weight 2)
    CHECK(m / n == doctest::Approx(7.0 / 3.0).epsilon(0.01));
  }
}

TEST_CASE("error variance update by pattern") {
  PriorConfig prior;
  prior.k_max = 2;
  const int n = 100000;
  SUBCASE("single isotropic variance") {
    const auto spec = Parameterization::from_code("CCC");
    ChainState s = plain_state(spec, 2, 1, 2, 2);
    SuffStats suff;
    suff.n_k = Eigen::Vector2i(2, 0);
    suff.s = Eigen::MatrixXd::Zero(2, 2);
    suff.s.row(0) << 1.5, 2.5; // s total 4
    Dataset d = rows({{0.0, 0.0}, {0.0, 0.0}});
    RandomStream st(10, 0);
    double m = 0.0;
    for (int rep = 0; rep < n; ++rep) {
      update_sigma(s, d, suff, prior, spec, st);
      m += 1.0 / s.sigma2(0, 0);
    }
    CHECK(m / n == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("unrestricted with an empty component") {
    const auto spec = Parameterization::from_code("UUU");
    ChainState s = plain_state(spec, 2, 1, 3, 2);
    SuffStats suff;
    suff.n_k = Eigen::Vector2i(3, 0);
    suff.s = Eigen::MatrixXd::Zero(2, 2);
    suff.s.row(0) << 3.0, 1.0;
    Dataset d = rows({{0.0, 0.0}});
    RandomStream st(11, 0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    for (int rep = 0; rep < n; ++rep) {
      update_sigma(s, d, suff, prior, spec, st);
      m += s.sigma2.cwiseInverse();
    }
    m /= n;
    CHECK(m(0, 0) == doctest::Approx(2.0 / 2.0).epsilon(0.02));
    CHECK(m(0, 1) == doctest::Approx(2.0 / 1.0).epsilon(0.02));
    CHECK(m(1, 0) == doctest::Approx(1.0).epsilon(0.03)); // prior G(0.5, 0.5)
  }
  SUBCASE("shared diagonal and per-component isotropic") {
    SuffStats suff;
    suff.n_k = Eigen::Vector2i(2, 2);
    suff.s.resize(2, 2);
    suff.s << 1.0, 2.0, 3.0, 4.0;
    Dataset d = rows({{0.0, 0.0}});
    RandomStream st(12, 0);
    const auto ucu = Parameterization::from_code("UCU");
    ChainState a = plain_state(ucu, 2, 1, 4, 2);
    const auto uuc = Parameterization::from_code("UUC");
    ChainState b = plain_state(uuc, 2, 1, 4, 2);
    Eigen::Vector2d ma = Eigen::Vector2d::Zero(), mb = Eigen::Vector2d::Zero();
    for (int rep = 0; rep < n; ++rep) {
      update_sigma(a, d, suff, prior, ucu, st);
      update_sigma(b, d, suff, prior, uuc, st);
      ma += a.sigma2.row(0).transpose().cwiseInverse();
      mb += b.sigma2.col(0).cwiseInverse();
    }
    // shared per variable: G(0.5 + 4/2, 0.5 + s_r / 2)
    CHECK(ma[0] / n == doctest::Approx(2.5 / 2.5).epsilon(0.02));
    CHECK(ma[1] / n == doctest::Approx(2.5 / 3.5).epsilon(0.02));
    // isotropic per component: G(0.5 + 2 * 2 / 2, 0.5 + s_k / 2)
    CHECK(mb[0] / n == doctest::Approx(2.5 / 2.0).epsilon(0.02));
    CHECK(mb[1] / n == doctest::Approx(2.5 / 4.0).epsilon(0.02));
  }
}

TEST_CASE("factor update") {
  const auto spec = Parameterization::from_code("UUU");
  const int n = 100000;
  SUBCASE("zero loadings give the prior") {
    Dataset d = rows({{4.0, -3.0, 1.0}});
    ChainState s = plain_state(spec, 1, 2, 1, 3);
    RandomStream st(13, 0);
    Eigen::Vector2d m = Eigen::Vector2d::Zero(), v = Eigen::Vector2d::Zero();
    for (int rep = 0; rep < n; ++rep) {
      update_y(s, d, st);
      m += s.y.row(0).transpose();
      v += s.y.row(0).transpose().cwiseAbs2();
    }
    CHECK((m / n).lpNorm<Eigen::Infinity>() < 4.0 / std::sqrt(n));
    CHECK(((v / n) - Eigen::Vector2d::Ones()).lpNorm<Eigen::Infinity>() < 0.02);
  }
  SUBCASE("scalar case") {
    Dataset d = rows({{2.0, 0.0}});
    ChainState s = plain_state(spec, 1, 1, 1, 2);
    s.lambda[0](0, 0) = 1.0;
    s.sigma2(0, 1) = 1e12; // second variable carries no information
    RandomStream st(14, 0);
    double m = 0.0, v = 0.0;
    for (int rep = 0; rep < n; ++rep) {
      update_y(s, d, st);
      m += s.y(0, 0);
      v += s.y(0, 0) * s.y(0, 0);
    }
    m /= n;
    CHECK(m == doctest::Approx(1.0).epsilon(0.01));
    CHECK(v / n - m * m == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("covariance equals the inverse capacitance") {
    Dataset d = rows({{1.0, 0.5, -0.5, 2.0}});
    ChainState s = plain_state(spec, 1, 2, 1, 4);
    s.lambda[0] << 1.0, 0.0, 0.5, 0.8, -0.3, 1.2, 0.7, 0.1;
    s.sigma2.row(0) << 0.5, 1.0, 2.0, 0.8;
    const LowRankCov cov(s.sigma2.row(0).transpose(), s.lambda[0]);
    const Eigen::MatrixXd m_inv = cov.capacitance().inverse();
    RandomStream st(15, 0);
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    Eigen::Matrix2d sq = Eigen::Matrix2d::Zero();
    for (int rep = 0; rep < n; ++rep) {
      update_y(s, d, st);
      m += s.y.row(0).transpose();
      sq += s.y.row(0).transpose() * s.y.row(0);
    }
    m /= n;
    const Eigen::Matrix2d c = sq / n - m * m.transpose();
    CHECK((c - m_inv).lpNorm<Eigen::Infinity>() < 0.01);
    const Eigen::VectorXd mean =
        cov.capacitance_llt().solve(cov.sigma_inv_lambda().transpose() * d.x.row(0).transpose());
    CHECK((m - mean).lpNorm<Eigen::Infinity>() < 0.01);
  }
}

TEST_CASE("loading prior variance update") {
  PriorConfig prior;
  const int n = 100000;
  RandomStream st(16, 0);
  SUBCASE("zero loadings, unconstrained") {
    const auto spec = Parameterization::from_code("UUU");
    ChainState s = plain_state(spec, 3, 1, 1, 4);
    SuffStats suff;
    suff.t_diag = Eigen::VectorXd::Zero(1);
    double m = 0.0;
    for (int rep = 0; rep < n; ++rep) {
      update_omega(s, suff, prior, spec, st);
      m += 1.0 / s.omega2[0];
    }
    CHECK(m / n == doctest::Approx((0.5 + 3 * 4 / 2.0) / 0.5).epsilon(0.02));
  }
  SUBCASE("unit loadings, two components") {
    const auto spec = Parameterization::from_code("UUU");
    ChainState s = plain_state(spec, 2, 1, 1, 2);
    for (auto &l : s.lambda) l.setOnes();
    PriorConfig pr;
    pr.k_max = 2;
    Dataset d = rows({{0.0, 0.0}});
    const SuffStats suff = compute_suffstats(s, d, spec, pr);
    CHECK(suff.t_diag[0] == 4.0);
    double m = 0.0;
    for (int rep = 0; rep < n; ++rep) {
      update_omega(s, suff, pr, spec, st);
      m += 1.0 / s.omega2[0];
    }
    CHECK(m / n == doctest::Approx((0.5 + 2.0) / (0.5 + 2.0)).epsilon(0.02));
  }
  SUBCASE("shared loadings count each entry once") {
    const auto spec = Parameterization::from_code("CUU");
    ChainState s = plain_state(spec, 2, 2, 1, 3);
    s.lambda[0] << 1.0, 0.0, 1.0, 2.0, 1.0, 2.0;
    PriorConfig pr;
    pr.k_max = 2;
    Dataset d = rows({{0.0, 0.0, 0.0}});
    const SuffStats suff = compute_suffstats(s, d, spec, pr);
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (int rep = 0; rep < n; ++rep) {
      update_omega(s, suff, pr, spec, st);
      m += s.omega2.cwiseInverse();
    }
    // column 1: 3 free entries, sum of squares 3; column 2: 2 free entries, 8
    CHECK(m[0] / n == doctest::Approx((0.5 + 1.5) / (0.5 + 1.5)).epsilon(0.02));
    CHECK(m[1] / n == doctest::Approx((0.5 + 1.0) / (0.5 + 4.0)).epsilon(0.02));
  }
}

TEST_CASE("full runs keep structural zeros and positive variances") {
  for (const auto &spec : Parameterization::all()) {
    Fixture f = random_fixture(spec.code().c_str(), 4, 3, 30, 5, 300 + spec.index());
    RandomStream st(17, static_cast<std::uint64_t>(spec.index()));
    for (int it = 0; it < 300; ++it) {
      gibbs_sweep(f.state, f.data, spec, f.prior, st);
      for (const auto &l : f.state.lambda) {
        CHECK(l(0, 1) == 0.0);
        CHECK(l(0, 2) == 0.0);
        CHECK(l(1, 2) == 0.0);
      }
      REQUIRE((f.state.sigma2.array() > 0).all());
      REQUIRE((f.state.omega2.array() > 0).all());
      REQUIRE(std::abs(f.state.w.sum() - 1.0) < 1e-12);
    }
    CHECK_NOTHROW(f.state.validate(spec, 30, 5));
  }
}

TEST_CASE("sweeps replay bit for bit") {
  Fixture a = random_fixture("UCU", 3, 2, 20, 4, 50);
  Fixture b = a;
  RandomStream sa(1, 2), sb(1, 2);
  for (int it = 0; it < 50; ++it) {
    gibbs_sweep(a.state, a.data, a.spec, a.prior, sa);
    gibbs_sweep(b.state, b.data, b.spec, b.prior, sb);
  }
  CHECK(a.state.z == b.state.z);
  CHECK((a.state.mu - b.state.mu).norm() == 0.0);
  CHECK((a.state.sigma2 - b.state.sigma2).norm() == 0.0);
}
