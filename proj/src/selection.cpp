#include "bmfa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "bmfa/errors.hpp"
#include "bmfa/linalg.hpp"
#include "bmfa/postprocess.hpp"

namespace bmfa {

double observed_loglik(const Eigen::VectorXd &w, const Eigen::MatrixXd &mu,
                       const std::vector<Eigen::MatrixXd> &lambda,
                       const Eigen::MatrixXd &sigma2,
                       const std::vector<int> &alive, const Dataset &data) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (alive.empty()) throw Error(ErrorCode::NonFiniteLoglik, "no alive component");
  double w_alive = 0.0;
  for (int k : alive) w_alive += w[k];
  if (!(w_alive > 0))
    throw Error(ErrorCode::NonFiniteLoglik, "alive weights sum to zero");
  std::vector<LowRankCov> covs;
  covs.reserve(static_cast<std::size_t>(mu.rows()));
  const bool shared = lambda.size() == 1 && sigma2.rows() == 1;
  for (Eigen::Index k = 0; k < mu.rows(); ++k) {
    const bool needed =
        std::find(alive.begin(), alive.end(), static_cast<int>(k)) != alive.end();
    const Eigen::Index src = shared || !needed ? 0 : k;
    if (k > 0 && (shared || !needed)) {
      covs.push_back(covs.front());
      continue;
    }
    Eigen::VectorXd sig(p);
    for (Eigen::Index r = 0; r < p; ++r)
      sig[r] = sigma2(sigma2.rows() == 1 ? 0 : src, sigma2.cols() == 1 ? 0 : r);
    covs.emplace_back(sig, lambda.size() == 1 ? lambda.front()
                                              : lambda[static_cast<std::size_t>(src)]);
  }
  const Eigen::MatrixXd x_sq = data.x.array().square().matrix();
  Eigen::MatrixXd lp = mvn_logpdf_components(data.x, x_sq, mu, covs, alive);
  for (std::size_t c = 0; c < alive.size(); ++c)
    lp.col(static_cast<Eigen::Index>(c)).array() +=
        std::log(std::max(w[alive[c]] / w_alive, kWeightFloor));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += log_sum_exp(lp.row(i).transpose());
  if (!std::isfinite(total))
    throw Error(ErrorCode::NonFiniteLoglik, "observed log-likelihood is not finite");
  return total;
}

double observed_loglik(const ChainState &state, const Dataset &data) {
  return observed_loglik(state.w, state.mu, state.lambda, state.sigma2,
                         alive_components(state.z, state.k_max()), data);
}

double bic(double max_loglik, long nu, long n) {
  return -2.0 * max_loglik + static_cast<double>(nu) * std::log(static_cast<double>(n));
}

ModelScore score_trace(const PosteriorTrace &trace) {
  trace.validate();
  ModelScore s;
  s.spec = trace.spec;
  s.q = trace.q;
  const auto [k_map, prob] = map_alive_count(trace);
  s.k_map = k_map;
  s.k_map_prob = prob;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trace.size(); ++t)
    if (trace.alive_count[t] == k_map) best = std::max(best, trace.loglik[t]);
  s.max_loglik = best;
  s.nu = free_parameter_count(trace.spec, k_map, trace.q, static_cast<int>(trace.p));
  s.bic = bic(best, s.nu, static_cast<long>(trace.n));
  s.ok = std::isfinite(s.bic);
  if (!s.ok) s.failure = "non-finite BIC";
  return s;
}

namespace {

bool better(const ModelScore &a, const ModelScore &b) {
  if (a.bic != b.bic) return a.bic < b.bic;
  if (a.nu != b.nu) return a.nu < b.nu;
  if (a.spec.code() != b.spec.code()) return a.spec.code() < b.spec.code();
  return a.q < b.q;
}

} // namespace

std::vector<std::size_t> best_per_pattern(const std::vector<ModelScore> &grid) {
  std::map<int, std::size_t> best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid[i].ok) continue;
    const int key = grid[i].spec.index();
    auto it = best.find(key);
    if (it == best.end() || better(grid[i], grid[it->second])) best[key] = i;
  }
  std::vector<std::size_t> out;
  for (const auto &[key, idx] : best) out.push_back(idx);
  return out;
}

Selection select_model(const std::vector<ModelScore> &grid) {
  const auto winners = best_per_pattern(grid);
  if (winners.empty())
    throw Error(ErrorCode::AllModelsFailed, "no model was fitted successfully");
  std::size_t top = winners.front();
  for (std::size_t idx : winners)
    if (better(grid[idx], grid[top])) top = idx;
  const ModelScore &m = grid[top];
  return {m.spec, m.q, m.k_map, m.bic, top};
}

} // namespace bmfa
