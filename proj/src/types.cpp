#include "bmfa/types.hpp"

#include <cmath>
#include <sstream>

namespace bmfa {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::QTooLarge: return "QTooLarge";
  case ErrorCode::KMaxTooSmall: return "KMaxTooSmall";
  case ErrorCode::GammaViolatesEmptying: return "GammaViolatesEmptying";
  case ErrorCode::InvalidConfig: return "InvalidConfig";
  case ErrorCode::DirectoryExists: return "DirectoryExists";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::LengthMismatch: return "LengthMismatch";
  case ErrorCode::ZeroVarianceColumn: return "ZeroVarianceColumn";
  case ErrorCode::RaggedRows: return "RaggedRows";
  case ErrorCode::NonNumericCell: return "NonNumericCell";
  case ErrorCode::FileNotFound: return "FileNotFound";
  case ErrorCode::IoFailure: return "IoFailure";
  case ErrorCode::NonFiniteInput: return "NonFiniteInput";
  case ErrorCode::CholeskyFailure: return "CholeskyFailure";
  case ErrorCode::NonPositiveAlpha: return "NonPositiveAlpha";
  case ErrorCode::NonPositiveParam: return "NonPositiveParam";
  case ErrorCode::AllWeightsZero: return "AllWeightsZero";
  case ErrorCode::NonFiniteLoglik: return "NonFiniteLoglik";
  case ErrorCode::EmptyTrace: return "EmptyTrace";
  case ErrorCode::NoIterationsAtKMap: return "NoIterationsAtKMap";
  case ErrorCode::AllModelsFailed: return "AllModelsFailed";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::QTooLarge:
  case ErrorCode::KMaxTooSmall:
  case ErrorCode::GammaViolatesEmptying:
  case ErrorCode::InvalidConfig:
  case ErrorCode::DirectoryExists:
    return ErrorCategory::Config;
  case ErrorCode::DimensionMismatch:
  case ErrorCode::LengthMismatch:
  case ErrorCode::ZeroVarianceColumn:
  case ErrorCode::RaggedRows:
  case ErrorCode::NonNumericCell:
  case ErrorCode::FileNotFound:
  case ErrorCode::IoFailure:
    return ErrorCategory::Data;
  default:
    return ErrorCategory::Numerical;
  }
}

int exit_status(ErrorCategory category) noexcept {
  switch (category) {
  case ErrorCategory::Config: return 2;
  case ErrorCategory::Data: return 3;
  case ErrorCategory::Numerical: return 4;
  }
  return 1;
}

// ---------------------------------------------------------------------------

Parameterization Parameterization::from_code(std::string_view code) {
  auto letter = [&](char c) {
    if (c == 'C') return true;
    if (c == 'U') return false;
    throw Error(ErrorCode::InvalidConfig,
                "unknown parameterization '" + std::string(code) + "'");
  };
  if (code.size() != 3)
    throw Error(ErrorCode::InvalidConfig,
                "unknown parameterization '" + std::string(code) + "'");
  return {letter(code[0]), letter(code[1]), letter(code[2])};
}

const std::array<Parameterization, 8> &Parameterization::all() {
  static const std::array<Parameterization, 8> codes = {
      from_code("UUU"), from_code("CUU"), from_code("UCU"), from_code("CCU"),
      from_code("UCC"), from_code("UUC"), from_code("CUC"), from_code("CCC")};
  return codes;
}

std::string Parameterization::code() const {
  std::string s(3, 'U');
  if (lambda_shared_) s[0] = 'C';
  if (sigma_shared_) s[1] = 'C';
  if (isotropic_) s[2] = 'C';
  return s;
}

int Parameterization::index() const {
  const auto &codes = all();
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (codes[i] == *this) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------

void Dataset::validate() const {
  if (x.rows() < 2 || x.cols() < 2)
    throw Error(ErrorCode::DimensionMismatch,
                "need at least 2 observations and 2 variables");
  if (!x.allFinite())
    throw Error(ErrorCode::NonFiniteInput, "data contains non-finite values");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != x.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "variable names do not match column count");
  if (normalized) {
    if (col_means.size() != x.cols() || col_sds.size() != x.cols())
      throw Error(ErrorCode::DimensionMismatch,
                  "normalization metadata does not match column count");
    for (Eigen::Index r = 0; r < col_sds.size(); ++r)
      if (!(col_sds[r] > 0))
        throw Error(ErrorCode::ZeroVarianceColumn,
                    "column " + std::to_string(r + 1) + " has zero variance");
  }
}

Eigen::VectorXd PriorConfig::xi_or_default(Eigen::Index p) const {
  if (xi.size() == 0) return Eigen::VectorXd::Zero(p);
  if (xi.size() != p)
    throw Error(ErrorCode::DimensionMismatch, "prior mean has wrong length");
  return xi;
}

Eigen::VectorXd PriorConfig::psi_or_default(Eigen::Index p) const {
  if (psi_diag.size() == 0) return Eigen::VectorXd::Ones(p);
  if (psi_diag.size() != p)
    throw Error(ErrorCode::DimensionMismatch,
                "prior covariance diagonal has wrong length");
  return psi_diag;
}

int ledermann_bound(int p) {
  const double root = (2.0 * p + 1.0 - std::sqrt(8.0 * p + 1.0)) / 2.0;
  // guard against 4.9999999 when the root is an exact integer
  return static_cast<int>(std::floor(root + 1e-9));
}

long component_dimension(int p, int q) {
  return 2L * p + static_cast<long>(p) * q - static_cast<long>(q) * (q - 1) / 2;
}

long free_parameter_count(const Parameterization &spec, int k, int q, int p) {
  const long loadings = static_cast<long>(p) * q - static_cast<long>(q) * (q - 1) / 2;
  const long lambda_part = spec.lambda_shared() ? loadings : k * loadings;
  long sigma_part = 0;
  if (!spec.sigma_shared() && !spec.isotropic()) sigma_part = static_cast<long>(k) * p;
  else if (spec.sigma_shared() && !spec.isotropic()) sigma_part = p;
  else if (!spec.sigma_shared() && spec.isotropic()) sigma_part = k;
  else sigma_part = 1;
  return (k - 1) + static_cast<long>(k) * p + lambda_part + sigma_part;
}

CheckedConfig validate_spec(const Parameterization &spec,
                            const PriorConfig &prior, int q,
                            const Dataset &data) {
  const int p = static_cast<int>(data.p());
  const int bound = ledermann_bound(p);
  if (q < 1 || q > bound) {
    std::ostringstream msg;
    msg << "q = " << q << " outside [1, " << bound
        << "] (Ledermann bound for p = " << p << ")";
    throw Error(ErrorCode::QTooLarge, msg.str());
  }
  if (prior.k_max < 2)
    throw Error(ErrorCode::KMaxTooSmall,
                "k_max = " + std::to_string(prior.k_max) + " must be >= 2");
  const long d = component_dimension(p, q);
  const double target_mass = prior.dirichlet_masses.empty()
                                 ? prior.gamma
                                 : prior.dirichlet_masses.front();
  const double per_component = target_mass / prior.k_max;
  if (!(per_component > 0) || !(per_component < d / 2.0)) {
    std::ostringstream msg;
    msg << "gamma / k_max = " << per_component << " must lie in (0, d/2 = "
        << d / 2.0 << ")";
    throw Error(ErrorCode::GammaViolatesEmptying, msg.str());
  }
  return {spec, q, p, d};
}

// ---------------------------------------------------------------------------

Eigen::VectorXd ChainState::error_variances(int k, Eigen::Index p) const {
  Eigen::VectorXd out(p);
  for (Eigen::Index r = 0; r < p; ++r) out[r] = error_variance(k, r);
  return out;
}

std::pair<Eigen::Index, Eigen::Index>
sigma_shape(const Parameterization &spec, int k_max, Eigen::Index p) {
  return {spec.sigma_shared() ? 1 : k_max, spec.isotropic() ? 1 : p};
}

bool has_structural_zeros(const Eigen::MatrixXd &lambda) {
  const Eigen::Index q = lambda.cols();
  for (Eigen::Index r = 0; r < std::min(q, lambda.rows()); ++r)
    for (Eigen::Index j = r + 1; j < q; ++j)
      if (lambda(r, j) != 0.0) return false;
  return true;
}

void ChainState::validate(const Parameterization &spec, Eigen::Index n,
                          Eigen::Index p) const {
  auto fail = [](const std::string &what) {
    throw Error(ErrorCode::InvalidConfig, "invalid chain state: " + what);
  };
  const int k = k_max();
  const Eigen::Index nq = omega2.size();
  if (k < 1) fail("no components");
  if ((w.array() < 0).any() || std::abs(w.sum() - 1.0) > 1e-9)
    fail("weights are not on the simplex");
  if (mu.rows() != k || mu.cols() != p) fail("mean matrix shape");
  const std::size_t n_lambda = spec.lambda_shared() ? 1 : static_cast<std::size_t>(k);
  if (lambda.size() != n_lambda) fail("number of loading matrices");
  for (const auto &l : lambda) {
    if (l.rows() != p || l.cols() != nq) fail("loading matrix shape");
    if (!has_structural_zeros(l))
      fail("nonzero loading above the diagonal of the leading q x q block");
  }
  const auto [rows, cols] = sigma_shape(spec, k, p);
  if (sigma2.rows() != rows || sigma2.cols() != cols)
    fail("error variance shape does not match " + spec.code());
  if (!(sigma2.array() > 0).all()) fail("non-positive error variance");
  if (!(omega2.array() > 0).all()) fail("non-positive loading prior variance");
  if (y.rows() != n || y.cols() != nq) fail("factor matrix shape");
  if (static_cast<Eigen::Index>(z.size()) != n) fail("allocation length");
  for (int zi : z)
    if (zi < 0 || zi >= k) fail("allocation out of range");
  if (!(dirichlet_mass > 0)) fail("non-positive Dirichlet mass");
}

Eigen::MatrixXd SuffStats::delta(int k, Eigen::Index r,
                                 double sigma2_kr) const {
  const Eigen::Index nu = free_row_length(r, yy[k].rows());
  return yy[k].topLeftCorner(nu, nu) / sigma2_kr;
}

void PosteriorTrace::validate() const {
  const std::size_t t = z.size();
  if (t == 0) throw Error(ErrorCode::EmptyTrace, "posterior trace is empty");
  if (w.size() != t || mu.size() != t || lambda.size() != t ||
      sigma2.size() != t || alive_count.size() != t || alive_set.size() != t ||
      loglik.size() != t)
    throw Error(ErrorCode::LengthMismatch, "trace fields differ in length");
}

std::vector<int> alive_components(const std::vector<int> &z, int k_max) {
  std::vector<char> seen(static_cast<std::size_t>(k_max), 0);
  for (int zi : z) seen[static_cast<std::size_t>(zi)] = 1;
  std::vector<int> alive;
  for (int k = 0; k < k_max; ++k)
    if (seen[static_cast<std::size_t>(k)]) alive.push_back(k);
  return alive;
}

} // namespace bmfa
