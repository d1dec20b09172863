#include "bmfa/conditionals.hpp"

#include <cmath>
#include <limits>

#include "bmfa/errors.hpp"

namespace bmfa {

namespace {

std::vector<std::vector<Eigen::Index>> group_members(const std::vector<int> &z,
                                                     int k_max) {
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k_max));
  for (std::size_t i = 0; i < z.size(); ++i)
    members[static_cast<std::size_t>(z[i])].push_back(static_cast<Eigen::Index>(i));
  return members;
}

Eigen::MatrixXd residuals(const ChainState &state, const Dataset &data, int k,
                          const std::vector<Eigen::Index> &idx) {
  Eigen::MatrixXd r = data.x(idx, Eigen::all);
  r.rowwise() -= state.mu.row(k);
  r.noalias() -= state.y(idx, Eigen::all) * state.loadings(k).transpose();
  return r;
}

} // namespace

Eigen::VectorXi component_counts(const std::vector<int> &z, int k_max) {
  Eigen::VectorXi n_k = Eigen::VectorXi::Zero(k_max);
  for (int zi : z) ++n_k[zi];
  return n_k;
}

Eigen::MatrixXd residual_sums(const ChainState &state, const Dataset &data) {
  const int k_max = state.k_max();
  const auto members = group_members(state.z, k_max);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k_max, data.p());
  for (int k = 0; k < k_max; ++k) {
    const auto &idx = members[static_cast<std::size_t>(k)];
    if (idx.empty()) continue;
    s.row(k) = residuals(state, data, k, idx).colwise().squaredNorm();
  }
  return s;
}

SuffStats compute_suffstats(const ChainState &state, const Dataset &data,
                            const Parameterization &spec,
                            const PriorConfig &prior) {
  const int k_max = state.k_max();
  const Eigen::Index p = data.p();
  const Eigen::Index q = state.q();
  const Eigen::VectorXd xi = prior.xi_or_default(p);
  const Eigen::VectorXd psi = prior.psi_or_default(p);
  const auto members = group_members(state.z, k_max);

  SuffStats st;
  st.n_k = Eigen::VectorXi::Zero(k_max);
  st.sum_x = Eigen::MatrixXd::Zero(k_max, p);
  st.sum_y = Eigen::MatrixXd::Zero(k_max, q);
  st.a.resize(k_max, p);
  st.b.resize(k_max, p);
  st.s = Eigen::MatrixXd::Zero(k_max, p);
  st.tau.assign(static_cast<std::size_t>(k_max), Eigen::MatrixXd::Zero(p, q));
  st.yy.assign(static_cast<std::size_t>(k_max), Eigen::MatrixXd::Zero(q, q));
  st.m.resize(static_cast<std::size_t>(k_max));

  for (int k = 0; k < k_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const auto &idx = members[ku];
    const Eigen::MatrixXd &lam = state.loadings(k);
    const Eigen::VectorXd sig = state.error_variances(k, p);
    const Eigen::VectorXd sig_inv = sig.cwiseInverse();
    st.n_k[k] = static_cast<int>(idx.size());
    if (!idx.empty()) {
      const Eigen::MatrixXd xk = data.x(idx, Eigen::all);
      const Eigen::MatrixXd yk = state.y(idx, Eigen::all);
      st.sum_x.row(k) = xk.colwise().sum();
      st.sum_y.row(k) = yk.colwise().sum();
      st.yy[ku].noalias() = yk.transpose() * yk;
      Eigen::MatrixXd sxy = xk.transpose() * yk;
      sxy.noalias() -= state.mu.row(k).transpose() * st.sum_y.row(k);
      st.tau[ku] = sig_inv.asDiagonal() * sxy;
      st.s.row(k) = residuals(state, data, k, idx).colwise().squaredNorm();
    }
    const double nk = st.n_k[k];
    const Eigen::VectorXd lam_sum_y = lam * st.sum_y.row(k).transpose();
    for (Eigen::Index r = 0; r < p; ++r) {
      st.a(k, r) = nk * sig_inv[r] + 1.0 / psi[r];
      st.b(k, r) = sig_inv[r] * (st.sum_x(k, r) - lam_sum_y[r]) + xi[r] / psi[r];
    }
    st.m[ku] = Eigen::MatrixXd::Identity(q, q);
    st.m[ku].noalias() += lam.transpose() * sig_inv.asDiagonal() * lam;
  }

  st.t_diag = Eigen::VectorXd::Zero(q);
  if (spec.lambda_shared()) {
    st.t_diag = static_cast<double>(k_max) *
                state.lambda.front().colwise().squaredNorm().transpose();
  } else {
    for (const auto &lam : state.lambda)
      st.t_diag += lam.colwise().squaredNorm().transpose();
  }
  return st;
}

std::vector<LowRankCov> component_covariances(const ChainState &state,
                                              Eigen::Index p) {
  const int k_max = state.k_max();
  std::vector<LowRankCov> covs;
  covs.reserve(static_cast<std::size_t>(k_max));
  const bool single = state.lambda.size() == 1 && state.sigma2.rows() == 1;
  if (single) {
    const LowRankCov c(state.error_variances(0, p), state.lambda.front());
    covs.assign(static_cast<std::size_t>(k_max), c);
    return covs;
  }
  for (int k = 0; k < k_max; ++k)
    covs.emplace_back(state.error_variances(k, p), state.loadings(k));
  return covs;
}

Eigen::MatrixXd allocation_log_probs(const ChainState &state,
                                     const Dataset &data,
                                     const std::vector<LowRankCov> &covs) {
  const int k_max = state.k_max();
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd x_sq = data.x.array().square().matrix();
  Eigen::MatrixXd lp = mvn_logpdf_components(data.x, x_sq, state.mu, covs);
  for (int k = 0; k < k_max; ++k)
    lp.col(k).array() += state.w[k] > 0 ? std::log(state.w[k])
                                        : -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = log_sum_exp(lp.row(i).transpose());
    lp.row(i).array() -= norm;
  }
  return lp;
}

void update_z(ChainState &state, const Dataset &data, const Parameterization &,
              RandomStream &stream) {
  const auto covs = component_covariances(state, data.p());
  const int k_max = state.k_max();
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd x_sq = data.x.array().square().matrix();
  // transposed so that each observation is a contiguous column
  Eigen::MatrixXd lp = mvn_logpdf_components(data.x, x_sq, state.mu, covs).transpose();
  for (int k = 0; k < k_max; ++k)
    lp.row(k).array() += std::log(std::max(state.w[k], kWeightFloor));
  for (Eigen::Index i = 0; i < n; ++i)
    state.z[static_cast<std::size_t>(i)] = sample_categorical_log(lp.col(i), stream);
}

void update_w(ChainState &state, RandomStream &stream) {
  const Eigen::VectorXi n_k = component_counts(state.z, state.k_max());
  const Eigen::VectorXd alpha = n_k.cast<double>().array() + state.dirichlet_mass;
  state.w = sample_dirichlet(alpha, stream);
}

void update_mu(ChainState &state, const Dataset &data, const SuffStats &suff,
               const PriorConfig &prior, RandomStream &stream) {
  const Eigen::Index p = data.p();
  const Eigen::VectorXd xi = prior.xi_or_default(p);
  const Eigen::VectorXd psi = prior.psi_or_default(p);
  for (int k = 0; k < state.k_max(); ++k) {
    const Eigen::VectorXd lam_sum_y =
        state.loadings(k) * suff.sum_y.row(k).transpose();
    const double nk = suff.n_k[k];
    for (Eigen::Index r = 0; r < p; ++r) {
      const double s_inv = 1.0 / state.error_variance(k, r);
      const double a = nk * s_inv + 1.0 / psi[r];
      const double b = s_inv * (suff.sum_x(k, r) - lam_sum_y[r]) + xi[r] / psi[r];
      state.mu(k, r) = b / a + stream.normal() / std::sqrt(a);
    }
  }
}

void update_lambda(ChainState &state, const Dataset &data,
                   const SuffStats &suff, const PriorConfig &,
                   const Parameterization &spec, RandomStream &stream) {
  const Eigen::Index p = data.p();
  const Eigen::Index q = state.q();
  const Eigen::VectorXd omega_inv = state.omega2.cwiseInverse();
  const int k_max = state.k_max();
  Eigen::MatrixXd prec(q, q);
  Eigen::VectorXd b(q), draw(q);
  if (spec.lambda_shared()) {
    Eigen::MatrixXd &lam = state.lambda.front();
    for (Eigen::Index r = 0; r < p; ++r) {
      const Eigen::Index nu = free_row_length(r, q);
      prec.setZero();
      prec.diagonal() = omega_inv;
      b.setZero();
      for (int k = 0; k < k_max; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (suff.n_k[k] == 0) continue;
        prec.topLeftCorner(nu, nu) +=
            suff.yy[ku].topLeftCorner(nu, nu) / state.error_variance(k, r);
        b.head(nu) += suff.tau[ku].row(r).head(nu).transpose();
      }
      sample_mvn_canonical_inplace(prec, b, nu, stream, draw);
      lam.row(r).head(nu) = draw.head(nu).transpose();
    }
    return;
  }
  for (int k = 0; k < k_max; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    Eigen::MatrixXd &lam = state.lambda[ku];
    for (Eigen::Index r = 0; r < p; ++r) {
      const Eigen::Index nu = free_row_length(r, q);
      prec.setZero();
      prec.diagonal() = omega_inv;
      prec.topLeftCorner(nu, nu) +=
          suff.yy[ku].topLeftCorner(nu, nu) / state.error_variance(k, r);
      b.head(nu) = suff.tau[ku].row(r).head(nu).transpose();
      sample_mvn_canonical_inplace(prec, b, nu, stream, draw);
      lam.row(r).head(nu) = draw.head(nu).transpose();
    }
  }
}

void update_sigma(ChainState &state, const Dataset &data,
                  const SuffStats &suff, const PriorConfig &prior,
                  const Parameterization &spec, RandomStream &stream) {
  const Eigen::Index p = data.p();
  const int k_max = state.k_max();
  const double alpha = prior.alpha_sigma;
  const double beta = prior.beta_sigma;
  const double n = suff.n_k.sum();
  auto draw = [&](double shape, double rate) {
    return 1.0 / stream.gamma(shape, rate);
  };
  if (!spec.sigma_shared() && !spec.isotropic()) {
    for (int k = 0; k < k_max; ++k)
      for (Eigen::Index r = 0; r < p; ++r)
        state.sigma2(k, r) = draw(alpha + suff.n_k[k] / 2.0, beta + suff.s(k, r) / 2.0);
  } else if (spec.sigma_shared() && !spec.isotropic()) {
    const Eigen::VectorXd s_r = suff.s.colwise().sum().transpose();
    for (Eigen::Index r = 0; r < p; ++r)
      state.sigma2(0, r) = draw(alpha + n / 2.0, beta + s_r[r] / 2.0);
  } else if (!spec.sigma_shared() && spec.isotropic()) {
    const Eigen::VectorXd s_k = suff.s.rowwise().sum();
    for (int k = 0; k < k_max; ++k)
      state.sigma2(k, 0) = draw(alpha + suff.n_k[k] * static_cast<double>(p) / 2.0,
                                beta + s_k[k] / 2.0);
  } else {
    state.sigma2(0, 0) = draw(alpha + n * static_cast<double>(p) / 2.0,
                              beta + suff.s_total() / 2.0);
  }
}

void update_y(ChainState &state, const Dataset &data, RandomStream &stream) {
  const int k_max = state.k_max();
  const Eigen::Index q = state.q();
  const auto members = group_members(state.z, k_max);
  for (int k = 0; k < k_max; ++k) {
    const auto &idx = members[static_cast<std::size_t>(k)];
    if (idx.empty()) continue;
    const LowRankCov cov(state.error_variances(k, data.p()), state.loadings(k));
    const Eigen::Index nk = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd diff = data.x(idx, Eigen::all);
    diff.rowwise() -= state.mu.row(k);
    // mean_i = M^-1 Lambda^T Sigma^-1 (x_i - mu), one column per observation
    Eigen::MatrixXd rhs(q, nk);
    rhs.noalias() = (cov.sigma_inv().asDiagonal() * cov.lambda()).transpose() *
                    diff.transpose();
    const auto &llt = cov.capacitance_llt();
    Eigen::MatrixXd mean = llt.solve(rhs);
    Eigen::MatrixXd noise(q, nk);
    for (Eigen::Index c = 0; c < nk; ++c)
      for (Eigen::Index j = 0; j < q; ++j) noise(j, c) = stream.normal();
    llt.matrixU().solveInPlace(noise);
    mean += noise;
    for (Eigen::Index c = 0; c < nk; ++c)
      state.y.row(idx[static_cast<std::size_t>(c)]) = mean.col(c).transpose();
  }
}

void update_omega(ChainState &state, const SuffStats &suff,
                  const PriorConfig &prior, const Parameterization &spec,
                  RandomStream &stream) {
  const Eigen::Index q = state.q();
  const Eigen::Index p = state.mu.cols();
  const double k = state.k_max();
  for (Eigen::Index l = 0; l < q; ++l) {
    // column l carries p - l free entries per loading matrix
    const double free = static_cast<double>(p - l);
    double shape = 0.0;
    double rate = 0.0;
    if (spec.lambda_shared()) {
      shape = prior.g + free / 2.0;
      rate = prior.h + suff.t_diag[l] / (2.0 * k);
    } else {
      shape = prior.g + k * free / 2.0;
      rate = prior.h + suff.t_diag[l] / 2.0;
    }
    state.omega2[l] = 1.0 / stream.gamma(shape, rate);
  }
}

void gibbs_sweep(ChainState &state, const Dataset &data,
                 const Parameterization &spec, const PriorConfig &prior,
                 RandomStream &stream) {
  SuffStats suff = compute_suffstats(state, data, spec, prior);
  update_omega(state, suff, prior, spec, stream);
  update_lambda(state, data, suff, prior, spec, stream);
  update_mu(state, data, suff, prior, stream);
  update_z(state, data, spec, stream);
  // z was drawn with the factors integrated out, so the factors are refreshed
  // under the new allocations before anything conditions on them
  update_y(state, data, stream);
  update_w(state, stream);
  suff.n_k = component_counts(state.z, state.k_max());
  suff.s = residual_sums(state, data);
  update_sigma(state, data, suff, prior, spec, stream);
  update_y(state, data, stream);
}

ChainState draw_from_prior(const Parameterization &spec, int q,
                           const PriorConfig &prior, Eigen::Index n,
                           Eigen::Index p, double dirichlet_mass,
                           RandomStream &stream) {
  const int k_max = prior.k_max;
  const Eigen::VectorXd xi = prior.xi_or_default(p);
  const Eigen::VectorXd psi = prior.psi_or_default(p);
  ChainState s;
  s.dirichlet_mass = dirichlet_mass;
  s.w = sample_dirichlet(Eigen::VectorXd::Constant(k_max, dirichlet_mass), stream);
  const Eigen::VectorXd log_w = s.w.array().log();
  s.z.resize(static_cast<std::size_t>(n));
  for (auto &zi : s.z) zi = sample_categorical_log(log_w, stream);
  s.mu.resize(k_max, p);
  for (int k = 0; k < k_max; ++k)
    for (Eigen::Index r = 0; r < p; ++r)
      s.mu(k, r) = xi[r] + std::sqrt(psi[r]) * stream.normal();
  s.omega2.resize(q);
  for (int l = 0; l < q; ++l) s.omega2[l] = 1.0 / stream.gamma(prior.g, prior.h);
  const int n_lambda = spec.lambda_shared() ? 1 : k_max;
  s.lambda.assign(static_cast<std::size_t>(n_lambda), Eigen::MatrixXd::Zero(p, q));
  for (auto &lam : s.lambda)
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index j = 0; j < free_row_length(r, q); ++j)
        lam(r, j) = std::sqrt(s.omega2[j]) * stream.normal();
  const auto [rows, cols] = sigma_shape(spec, k_max, p);
  s.sigma2.resize(rows, cols);
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < cols; ++b)
      s.sigma2(a, b) = 1.0 / stream.gamma(prior.alpha_sigma, prior.beta_sigma);
  s.y.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) s.y(i, j) = stream.normal();
  return s;
}

Eigen::MatrixXd simulate_observations(const ChainState &state, Eigen::Index p,
                                      RandomStream &stream) {
  const Eigen::Index n = state.y.rows();
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = state.z[static_cast<std::size_t>(i)];
    const Eigen::VectorXd m =
        state.mu.row(k).transpose() + state.loadings(k) * state.y.row(i).transpose();
    for (Eigen::Index r = 0; r < p; ++r)
      x(i, r) = m[r] + std::sqrt(state.error_variance(k, r)) * stream.normal();
  }
  return x;
}

} // namespace bmfa
