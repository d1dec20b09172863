#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "bmfa/types.hpp"

namespace bmfa {

/// Modal alive count and its relative frequency; ties go to the smaller count.
std::pair<int, double> map_alive_count(const PosteriorTrace &trace);

/// Maximum-weight perfect assignment on a square matrix: row r is matched to
/// column result[r].
std::vector<int> solve_assignment(const Eigen::MatrixXd &weight);

/// Trace restricted to K_map-alive draws with labels aligned to a pivot.
///
/// Label b (0-based) stands for raw component labels[b] of the pivot draw.
/// For retained draw t, source[t][b] is the raw component of that draw that
/// was mapped to label b.
struct RelabeledTrace {
  int k_map = 0;
  std::vector<int> labels;               // raw component indices, ascending
  std::vector<int> pivot;                // n, label positions in [0, k_map)
  std::size_t pivot_draw = 0;            // index into the original trace
  std::vector<std::size_t> draws;        // indices into the original trace
  std::vector<std::vector<int>> source;  // per draw, k_map raw components
  std::vector<std::vector<int>> z;       // per draw, label positions
  std::vector<Eigen::VectorXd> w;        // per draw, k_map, renormalized
  std::vector<Eigen::MatrixXd> mu;       // per draw, k_map x p
  std::vector<std::vector<Eigen::MatrixXd>> lambda; // per draw, k_map of p x q
  std::vector<Eigen::MatrixXd> sigma2;   // per draw, k_map x p
  std::vector<double> loglik;

  [[nodiscard]] std::size_t size() const { return draws.size(); }
};

/// ECR relabeling against the maximum-loglik K_map-alive draw. With
/// K_map = 1 the single alive component is mapped to label 0.
RelabeledTrace ecr_relabel(const PosteriorTrace &trace, int k_map);

struct Clustering {
  std::vector<int> label;   // raw component index, 0-based
  std::vector<double> prob; // frequency of the modal label
};

Clustering single_best_clustering(const RelabeledTrace &relabeled);

/// R type-7 quantile of an unsorted sample.
double quantile(std::vector<double> values, double prob);

inline constexpr std::array<double, 5> kSummaryProbs = {0.025, 0.25, 0.5, 0.75,
                                                        0.975};

struct QuantileRow {
  std::string parameter; // "w", "mu", "cov" or "cor"
  int cluster = 0;       // raw component index, 0-based
  int row = -1;          // variable index, -1 when not applicable
  int col = -1;
  double mean = 0.0;
  std::array<double, 5> q{};
};

struct Summary {
  std::vector<int> labels;
  Eigen::VectorXd w_mean;
  Eigen::MatrixXd mu_mean;          // k_map x p
  std::vector<Eigen::MatrixXd> cov; // k_map of p x p
  std::vector<Eigen::MatrixXd> cor; // k_map of p x p
  /// true when the 95% equal-tailed interval of a correlation excludes zero
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> cor_significant;
  std::vector<QuantileRow> quantiles;
};

/// Posterior means and quantiles of w, mu and Lambda Lambda^T + Sigma (computed
/// per draw) for every alive cluster, plus correlation matrices.
Summary summarize(const RelabeledTrace &relabeled, Eigen::Index p);

} // namespace bmfa
