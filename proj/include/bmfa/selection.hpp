#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "bmfa/types.hpp"

namespace bmfa {

/// sum_i log sum_{k in alive} w_k N(x_i; mu_k, Lambda_k Lambda_k^T + Sigma_k)
/// with w renormalized over `alive`.
///
/// `lambda` holds one matrix (shared) or one per component; `sigma2` is
/// shaped by the parameterization as in ChainState.
double observed_loglik(const Eigen::VectorXd &w, const Eigen::MatrixXd &mu,
                       const std::vector<Eigen::MatrixXd> &lambda,
                       const Eigen::MatrixXd &sigma2,
                       const std::vector<int> &alive, const Dataset &data);

/// observed_loglik of a chain state over its alive components.
double observed_loglik(const ChainState &state, const Dataset &data);

/// -2 max_loglik + nu log n.
[[nodiscard]] double bic(double max_loglik, long nu, long n);

/// BIC inputs and outcome of one (pattern, q) cell.
struct ModelScore {
  Parameterization spec;
  int q = 1;
  bool ok = false;
  std::string failure;
  int k_map = 0;
  double k_map_prob = 0.0;
  double max_loglik = 0.0;
  long nu = 0;
  double bic = 0.0;
  double swap_rate = 0.0;
};

/// Scores a trace: K_map, maximal loglik among K_map-alive draws, nu and BIC.
ModelScore score_trace(const PosteriorTrace &trace);

struct Selection {
  Parameterization spec;
  int q = 1;
  int k_map = 0;
  double bic = 0.0;
  std::size_t index = 0; // position of the winner in the input
};

/// Best q per pattern, then the global minimum. Ties go to fewer free
/// parameters, then to the lexicographically smaller code.
Selection select_model(const std::vector<ModelScore> &grid);

/// For each pattern present in the grid, index of its BIC-minimizing cell
/// (same tie rules as select_model).
std::vector<std::size_t> best_per_pattern(const std::vector<ModelScore> &grid);

} // namespace bmfa
