#include "bmfa/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "bmfa/errors.hpp"

namespace bmfa {

std::pair<int, double> map_alive_count(const PosteriorTrace &trace) {
  if (trace.alive_count.empty())
    throw Error(ErrorCode::EmptyTrace, "posterior trace is empty");
  std::map<int, int> freq;
  for (int c : trace.alive_count) ++freq[c];
  int best = 0;
  int best_n = -1;
  for (const auto &[k, n] : freq) // ascending k, so ties keep the smaller
    if (n > best_n) {
      best = k;
      best_n = n;
    }
  return {best, static_cast<double>(best_n) / trace.alive_count.size()};
}

std::vector<int> solve_assignment(const Eigen::MatrixXd &weight) {
  // Hungarian method with potentials on cost = -weight (1-based arrays).
  const int n = static_cast<int>(weight.rows());
  if (weight.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "assignment matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> result(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) result[static_cast<std::size_t>(match[j] - 1)] = j - 1;
  return result;
}

RelabeledTrace ecr_relabel(const PosteriorTrace &trace, int k_map) {
  trace.validate();
  RelabeledTrace rel;
  rel.k_map = k_map;
  for (std::size_t t = 0; t < trace.size(); ++t)
    if (trace.alive_count[t] == k_map) rel.draws.push_back(t);
  if (rel.draws.empty())
    throw Error(ErrorCode::NoIterationsAtKMap,
                "no retained draw has " + std::to_string(k_map) + " alive components");
  rel.pivot_draw = rel.draws.front();
  for (std::size_t t : rel.draws)
    if (trace.loglik[t] > trace.loglik[rel.pivot_draw]) rel.pivot_draw = t;

  const std::size_t n = static_cast<std::size_t>(trace.n);
  const Eigen::Index p = trace.p;
  const auto ku = static_cast<std::size_t>(k_map);
  const auto &pivot_alive = trace.alive_set[rel.pivot_draw];
  rel.labels = k_map == 1 ? std::vector<int>{0} : pivot_alive;

  std::vector<int> position(static_cast<std::size_t>(trace.k_max), -1);
  for (std::size_t b = 0; b < ku; ++b) position[static_cast<std::size_t>(pivot_alive[b])] = static_cast<int>(b);
  rel.pivot.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    rel.pivot[i] = position[static_cast<std::size_t>(trace.z[rel.pivot_draw][i])];

  for (std::size_t t : rel.draws) {
    const auto &alive = trace.alive_set[t];
    std::vector<int> pos(static_cast<std::size_t>(trace.k_max), -1);
    for (std::size_t a = 0; a < ku; ++a) pos[static_cast<std::size_t>(alive[a])] = static_cast<int>(a);
    Eigen::MatrixXd agree = Eigen::MatrixXd::Zero(k_map, k_map);
    for (std::size_t i = 0; i < n; ++i)
      agree(pos[static_cast<std::size_t>(trace.z[t][i])], rel.pivot[i]) += 1.0;
    const std::vector<int> perm = solve_assignment(agree);

    std::vector<int> src(ku);
    for (std::size_t a = 0; a < ku; ++a) src[static_cast<std::size_t>(perm[a])] = alive[a];
    std::vector<int> z(n);
    for (std::size_t i = 0; i < n; ++i)
      z[i] = perm[static_cast<std::size_t>(pos[static_cast<std::size_t>(trace.z[t][i])])];

    const Eigen::VectorXd &w = trace.w[t];
    Eigen::VectorXd wr(k_map);
    Eigen::MatrixXd mu(k_map, p);
    Eigen::MatrixXd sig(k_map, p);
    std::vector<Eigen::MatrixXd> lam;
    const Eigen::MatrixXd &s2 = trace.sigma2[t];
    for (std::size_t b = 0; b < ku; ++b) {
      const int k = src[b];
      const auto bi = static_cast<Eigen::Index>(b);
      wr[bi] = w[k];
      mu.row(bi) = trace.mu[t].row(k);
      for (Eigen::Index r = 0; r < p; ++r)
        sig(bi, r) = s2(s2.rows() == 1 ? 0 : k, s2.cols() == 1 ? 0 : r);
      const auto &lt = trace.lambda[t];
      lam.push_back(lt.size() == 1 ? lt.front() : lt[static_cast<std::size_t>(k)]);
    }
    wr /= wr.sum();
    rel.source.push_back(std::move(src));
    rel.z.push_back(std::move(z));
    rel.w.push_back(std::move(wr));
    rel.mu.push_back(std::move(mu));
    rel.sigma2.push_back(std::move(sig));
    rel.lambda.push_back(std::move(lam));
    rel.loglik.push_back(trace.loglik[t]);
  }
  return rel;
}

Clustering single_best_clustering(const RelabeledTrace &relabeled) {
  if (relabeled.size() == 0)
    throw Error(ErrorCode::EmptyTrace, "relabeled trace is empty");
  const std::size_t n = relabeled.pivot.size();
  const auto ku = static_cast<std::size_t>(relabeled.k_map);
  Clustering out;
  out.label.resize(n);
  out.prob.resize(n);
  std::vector<int> counts(ku);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto &z : relabeled.z) ++counts[static_cast<std::size_t>(z[i])];
    const auto top = std::max_element(counts.begin(), counts.end());
    out.label[i] = relabeled.labels[static_cast<std::size_t>(top - counts.begin())];
    out.prob[i] = static_cast<double>(*top) / relabeled.size();
  }
  return out;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::EmptyTrace, "no values for a quantile");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

QuantileRow make_row(const std::string &name, int cluster, int row, int col,
                     const std::vector<double> &values) {
  QuantileRow out;
  out.parameter = name;
  out.cluster = cluster;
  out.row = row;
  out.col = col;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  for (std::size_t j = 0; j < kSummaryProbs.size(); ++j)
    out.q[j] = quantile(values, kSummaryProbs[j]);
  return out;
}

} // namespace

Summary summarize(const RelabeledTrace &relabeled, Eigen::Index p) {
  const std::size_t t_max = relabeled.size();
  if (t_max == 0) throw Error(ErrorCode::EmptyTrace, "relabeled trace is empty");
  const int k_map = relabeled.k_map;
  Summary s;
  s.labels = relabeled.labels;
  s.w_mean = Eigen::VectorXd::Zero(k_map);
  s.mu_mean = Eigen::MatrixXd::Zero(k_map, p);
  std::vector<double> buf(t_max);

  for (int b = 0; b < k_map; ++b) {
    const int cluster = relabeled.labels[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < t_max; ++t) buf[t] = relabeled.w[t][b];
    s.quantiles.push_back(make_row("w", cluster, -1, -1, buf));
    s.w_mean[b] = s.quantiles.back().mean;
  }
  for (int b = 0; b < k_map; ++b) {
    const int cluster = relabeled.labels[static_cast<std::size_t>(b)];
    for (Eigen::Index r = 0; r < p; ++r) {
      for (std::size_t t = 0; t < t_max; ++t) buf[t] = relabeled.mu[t](b, r);
      s.quantiles.push_back(make_row("mu", cluster, static_cast<int>(r), -1, buf));
      s.mu_mean(b, r) = s.quantiles.back().mean;
    }
  }
  for (int b = 0; b < k_map; ++b) {
    const auto bu = static_cast<std::size_t>(b);
    const int cluster = relabeled.labels[bu];
    std::vector<Eigen::MatrixXd> covs(t_max), cors(t_max);
    Eigen::MatrixXd cov_mean = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd cor_mean = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t t = 0; t < t_max; ++t) {
      const Eigen::MatrixXd &lam = relabeled.lambda[t][bu];
      Eigen::MatrixXd c = lam * lam.transpose();
      c.diagonal() += relabeled.sigma2[t].row(b).transpose();
      const Eigen::VectorXd inv_sd = c.diagonal().cwiseSqrt().cwiseInverse();
      cors[t] = inv_sd.asDiagonal() * c * inv_sd.asDiagonal();
      cov_mean += c;
      cor_mean += cors[t];
      covs[t] = std::move(c);
    }
    s.cov.push_back(cov_mean / static_cast<double>(t_max));
    s.cor.push_back(cor_mean / static_cast<double>(t_max));
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> sig(p, p);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = r; c < p; ++c) {
        for (std::size_t t = 0; t < t_max; ++t) buf[t] = covs[t](r, c);
        s.quantiles.push_back(
            make_row("cov", cluster, static_cast<int>(r), static_cast<int>(c), buf));
        for (std::size_t t = 0; t < t_max; ++t) buf[t] = cors[t](r, c);
        const double lo = quantile(buf, 0.025);
        const double hi = quantile(buf, 0.975);
        sig(r, c) = sig(c, r) = r == c || lo > 0.0 || hi < 0.0;
        if (r != c)
          s.quantiles.push_back(
              make_row("cor", cluster, static_cast<int>(r), static_cast<int>(c), buf));
      }
    s.cor_significant.push_back(std::move(sig));
  }
  return s;
}

} // namespace bmfa
