#pragma once

#include <Eigen/Core>

#include <vector>

#include "bmfa/random.hpp"
#include "bmfa/types.hpp"

namespace bmfa {

/// Generating parameters of a simulated mixture (error variances K x p).
struct TrueParams {
  Eigen::VectorXd w;
  Eigen::MatrixXd mu;
  std::vector<Eigen::MatrixXd> lambda;
  Eigen::MatrixXd sigma2;
};

struct SimulatedData {
  Dataset data; // raw scale, not normalized
  std::vector<int> z; // zero-based
  TrueParams truth;
};

/// Knobs of the mean and loading generators.
struct SimOptions {
  /// Fixed mixing weights; empty means Dirichlet(c, ..., c).
  Eigen::VectorXd weights;
  double weight_concentration = 10.0;
  /// Component means have iid N(0, mean_scale^2) entries.
  double mean_scale = 10.0;
  /// Loading column j has entries of scale loading_scales[j] (the last value
  /// is reused for extra columns).
  std::vector<double> loading_scales = {5.0};
  /// Correlation between the iid normal draws of different loading columns.
  double column_correlation = 0.0;
};

SimOptions scenario1_options();
SimOptions scenario2_options();

/// 1 / (1 + 20 log(k + 1)) for every variable.
Eigen::MatrixXd scenario1_sinv(int k, int p);
/// 1 / (1 + u_r log(k + 1)) with u_r ~ Uniform(500, 1000).
Eigen::MatrixXd scenario2_sinv(int k, int p, RandomStream &stream);

/// Table fixtures with unequal cluster sizes.
Eigen::VectorXd unequal_weights_five();
Eigen::VectorXd unequal_weights_two();

/// Well separated clusters. sinv holds the inverse error variances; with
/// same_sigma every component uses its first row.
SimulatedData sim_scenario1(int k, int p, int q, int n, const Eigen::MatrixXd &sinv,
                            bool same_sigma, RandomStream &stream,
                            const SimOptions &options = scenario1_options());

/// Overlapping clusters with correlated loading columns.
SimulatedData sim_scenario2(int k, int p, int q, int n, const Eigen::MatrixXd &sinv,
                            bool same_sigma, RandomStream &stream,
                            const SimOptions &options = scenario2_options());

/// argmax_k w_k f_k(x_i); ties go to the lower index. Zero-based labels.
std::vector<int> map_oracle_clustering(const TrueParams &truth,
                                       const Eigen::MatrixXd &x);

/// n x K posterior membership probabilities under the generating parameters.
Eigen::MatrixXd oracle_membership(const TrueParams &truth, const Eigen::MatrixXd &x);

double adjusted_rand_index(const std::vector<int> &a, const std::vector<int> &b);

} // namespace bmfa
