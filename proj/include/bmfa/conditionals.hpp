#pragma once

#include <Eigen/Core>

#include <vector>

#include "bmfa/linalg.hpp"
#include "bmfa/random.hpp"
#include "bmfa/types.hpp"

namespace bmfa {

/// Sufficient statistics of the current state. tau and s use the current
/// means and loadings; a and b use the current loadings.
SuffStats compute_suffstats(const ChainState &state, const Dataset &data,
                            const Parameterization &spec,
                            const PriorConfig &prior);

/// K x p residual sums s_kr = sum_{i in k} (x_ir - mu_kr - lambda_kr^T y_i)^2.
Eigen::MatrixXd residual_sums(const ChainState &state, const Dataset &data);

/// Allocation counts n_k.
Eigen::VectorXi component_counts(const std::vector<int> &z, int k_max);

/// One LowRankCov per component. When both loadings and error variances are
/// shared the factorization is computed once and copied.
std::vector<LowRankCov> component_covariances(const ChainState &state,
                                              Eigen::Index p);

/// n x K matrix of normalized log allocation probabilities
/// log P(z_i = k | w, mu, Lambda, Sigma).
Eigen::MatrixXd allocation_log_probs(const ChainState &state,
                                     const Dataset &data,
                                     const std::vector<LowRankCov> &covs);

void update_z(ChainState &state, const Dataset &data,
              const Parameterization &spec, RandomStream &stream);

void update_w(ChainState &state, RandomStream &stream);

void update_mu(ChainState &state, const Dataset &data, const SuffStats &suff,
               const PriorConfig &prior, RandomStream &stream);

void update_lambda(ChainState &state, const Dataset &data,
                   const SuffStats &suff, const PriorConfig &prior,
                   const Parameterization &spec, RandomStream &stream);

/// Only suff.n_k and suff.s are read.
void update_sigma(ChainState &state, const Dataset &data,
                  const SuffStats &suff, const PriorConfig &prior,
                  const Parameterization &spec, RandomStream &stream);

void update_y(ChainState &state, const Dataset &data, RandomStream &stream);

void update_omega(ChainState &state, const SuffStats &suff,
                  const PriorConfig &prior, const Parameterization &spec,
                  RandomStream &stream);

/// One full cycle in the order Omega, Lambda, mu, (z, y), w, Sigma, y. The
/// extra y draw makes (z, y) a joint block, since z is drawn with y
/// integrated out.
void gibbs_sweep(ChainState &state, const Dataset &data,
                 const Parameterization &spec, const PriorConfig &prior,
                 RandomStream &stream);

/// Every parameter and latent variable drawn from the prior.
ChainState draw_from_prior(const Parameterization &spec, int q,
                           const PriorConfig &prior, Eigen::Index n,
                           Eigen::Index p, double dirichlet_mass,
                           RandomStream &stream);

/// x_i = mu_{z_i} + Lambda_{z_i} y_i + e_i with e_i ~ N(0, Sigma_{z_i}).
Eigen::MatrixXd simulate_observations(const ChainState &state, Eigen::Index p,
                                      RandomStream &stream);

} // namespace bmfa
