#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bmfa/errors.hpp"

namespace bmfa {

/// Covariance constraint pattern of a mixture of factor analyzers.
///
/// The three-letter code reads: loadings shared across components (C) or
/// not (U); error variances shared (C) or not (U); error variances isotropic
/// (C) or diagonal (U).
class Parameterization {
public:
  constexpr Parameterization() = default;
  constexpr Parameterization(bool lambda_shared, bool sigma_shared,
                             bool isotropic)
      : lambda_shared_(lambda_shared), sigma_shared_(sigma_shared),
        isotropic_(isotropic) {}

  static Parameterization from_code(std::string_view code);

  /// All eight patterns in the canonical order UUU, CUU, UCU, CCU, UCC, UUC,
  /// CUC, CCC.
  static const std::array<Parameterization, 8> &all();

  [[nodiscard]] constexpr bool lambda_shared() const { return lambda_shared_; }
  [[nodiscard]] constexpr bool sigma_shared() const { return sigma_shared_; }
  [[nodiscard]] constexpr bool isotropic() const { return isotropic_; }

  [[nodiscard]] std::string code() const;
  /// Position in the canonical order returned by all().
  [[nodiscard]] int index() const;

  friend constexpr bool operator==(const Parameterization &,
                                   const Parameterization &) = default;

private:
  bool lambda_shared_ = false;
  bool sigma_shared_ = false;
  bool isotropic_ = false;
};

/// n x p observations, rows are observations.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd col_means;
  Eigen::VectorXd col_sds;
  bool normalized = false;
  std::vector<std::string> names;

  [[nodiscard]] Eigen::Index n() const { return x.rows(); }
  [[nodiscard]] Eigen::Index p() const { return x.cols(); }

  /// Throws DimensionMismatch / ZeroVarianceColumn when the invariants fail.
  void validate() const;
};

struct PriorConfig {
  int k_max = 20;
  double gamma = 1.0;
  Eigen::VectorXd xi;       // empty means zeros
  Eigen::VectorXd psi_diag; // empty means ones
  double alpha_sigma = 0.5;
  double beta_sigma = 0.5;
  double g = 0.5;
  double h = 0.5;
  double delta = 1.0;
  int n_chains = 4;
  /// Explicit total Dirichlet masses per chain; overrides gamma/delta/n_chains.
  std::vector<double> dirichlet_masses;

  [[nodiscard]] Eigen::VectorXd xi_or_default(Eigen::Index p) const;
  [[nodiscard]] Eigen::VectorXd psi_or_default(Eigen::Index p) const;
};

/// Largest identifiable q for p variables: floor((2p + 1 - sqrt(8p + 1)) / 2).
[[nodiscard]] int ledermann_bound(int p);

/// Free parameters of one unconstrained component: 2p + pq - q(q-1)/2.
[[nodiscard]] long component_dimension(int p, int q);

/// Free parameters of a K-component mixture under the given pattern.
[[nodiscard]] long free_parameter_count(const Parameterization &spec, int k,
                                        int q, int p);

struct CheckedConfig {
  Parameterization spec;
  int q = 1;
  int p = 0;
  long d = 0;
};

/// Structural checks on (pattern, q, prior) against the data dimension.
CheckedConfig validate_spec(const Parameterization &spec,
                            const PriorConfig &prior, int q,
                            const Dataset &data);

/// Latent and parameter values of one heated chain.
///
/// Allocations are stored zero-based internally; reports add one.
struct ChainState {
  Eigen::VectorXd w;                   // K
  Eigen::MatrixXd mu;                  // K x p
  std::vector<Eigen::MatrixXd> lambda; // K (or 1 when shared) of p x q
  Eigen::MatrixXd sigma2;              // (K|1) x (p|1), shaped by pattern
  Eigen::MatrixXd y;                   // n x q
  std::vector<int> z;                  // n, values in [0, K)
  Eigen::VectorXd omega2;              // q
  double dirichlet_mass = 0.0;         // per-component Dirichlet parameter

  [[nodiscard]] int k_max() const { return static_cast<int>(w.size()); }
  [[nodiscard]] int q() const { return static_cast<int>(omega2.size()); }

  [[nodiscard]] const Eigen::MatrixXd &loadings(int k) const {
    return lambda.size() == 1 ? lambda.front() : lambda[k];
  }
  [[nodiscard]] double error_variance(int k, Eigen::Index r) const {
    return sigma2(sigma2.rows() == 1 ? 0 : k, sigma2.cols() == 1 ? 0 : r);
  }
  /// Length-p diagonal of Sigma_k.
  [[nodiscard]] Eigen::VectorXd error_variances(int k, Eigen::Index p) const;

  /// Throws InvalidConfig when a shape, simplex, positivity or
  /// structural-zero invariant fails.
  void validate(const Parameterization &spec, Eigen::Index n,
                Eigen::Index p) const;
};

/// Shape of the error-variance storage for a pattern.
[[nodiscard]] std::pair<Eigen::Index, Eigen::Index>
sigma_shape(const Parameterization &spec, int k_max, Eigen::Index p);

/// True when the loading matrix keeps zeros above the diagonal of its leading
/// q x q block.
[[nodiscard]] bool has_structural_zeros(const Eigen::MatrixXd &lambda);

/// Per-component sufficient statistics of the full conditionals.
///
/// Since Sigma_k and Psi are diagonal, A_k is stored as its diagonal. The
/// factor cross-products are stored once per component (yy), the per-row
/// matrices Delta_kr are obtained by scaling with 1/sigma2_kr and truncating
/// to the leading min(r, q) coordinates.
struct SuffStats {
  Eigen::VectorXi n_k;             // K
  Eigen::MatrixXd sum_x;           // K x p, sum of x_i over component k
  Eigen::MatrixXd sum_y;           // K x q
  Eigen::MatrixXd a;               // K x p, diagonal of A_k
  Eigen::MatrixXd b;               // K x p
  std::vector<Eigen::MatrixXd> tau; // K of p x q, row r holds tau_kr
  std::vector<Eigen::MatrixXd> yy;  // K of q x q
  Eigen::MatrixXd s;               // K x p
  Eigen::VectorXd t_diag;          // q
  std::vector<Eigen::MatrixXd> m;  // K of q x q

  /// Delta_kr restricted to its leading nu_r coordinates (r zero-based).
  [[nodiscard]] Eigen::MatrixXd delta(int k, Eigen::Index r,
                                      double sigma2_kr) const;

  [[nodiscard]] double s_total() const { return s.sum(); }
};

/// Free coordinates in row r (zero-based) of a p x q loading matrix.
[[nodiscard]] inline Eigen::Index free_row_length(Eigen::Index r,
                                                  Eigen::Index q) {
  return std::min<Eigen::Index>(r + 1, q);
}

/// Retained cold-chain draws of one (pattern, q) model.
struct PosteriorTrace {
  Parameterization spec;
  int q = 1;
  int k_max = 0;
  Eigen::Index n = 0;
  Eigen::Index p = 0;

  std::vector<std::vector<int>> z;                  // zero-based
  std::vector<Eigen::VectorXd> w;
  std::vector<Eigen::MatrixXd> mu;
  std::vector<std::vector<Eigen::MatrixXd>> lambda; // model-shaped
  std::vector<Eigen::MatrixXd> sigma2;              // model-shaped
  std::vector<int> alive_count;
  std::vector<std::vector<int>> alive_set;          // zero-based, sorted
  /// Observed-data log-likelihood over the alive components with weights
  /// renormalized over the alive set.
  std::vector<double> loglik;
  /// Alive counts of every chain at each retained cycle.
  std::vector<std::vector<int>> alive_all_chains;

  [[nodiscard]] std::size_t size() const { return z.size(); }
  /// Throws EmptyTrace / InvalidConfig on inconsistent lengths.
  void validate() const;
};

/// Alive components of an allocation vector (sorted, zero-based).
[[nodiscard]] std::vector<int> alive_components(const std::vector<int> &z,
                                                int k_max);

} // namespace bmfa
