#pragma once

// Joint-distribution check of the Gibbs sweep: forward draws from the prior
// and data model against a chain that alternates one sweep with a fresh data
// draw. Both target the same joint law, so every functional must agree.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bmfa/conditionals.hpp"
#include "bmfa/types.hpp"

namespace geweke {

struct Setup {
  int n = 8;
  int p = 3;
  int q = 1;
  int k = 3;
  long draws = 20000;
  int batches = 50;
  double threshold = 4.0; // standard errors
  std::uint64_t seed = 1;
};

struct Comparison {
  std::string name;
  double forward_mean = 0.0;
  double chain_mean = 0.0;
  double z = 0.0;
};

inline bmfa::PriorConfig prior() {
  bmfa::PriorConfig p;
  p.alpha_sigma = p.beta_sigma = 3.0;
  p.g = p.h = 3.0;
  p.k_max = 3;
  return p;
}

using Functional = std::function<double(const bmfa::ChainState &)>;

inline std::vector<std::pair<std::string, Functional>> functionals() {
  using S = const bmfa::ChainState &;
  return {
      {"w1", [](S s) { return s.w[0]; }},
      {"w1^2", [](S s) { return s.w[0] * s.w[0]; }},
      {"mu11", [](S s) { return s.mu(0, 0); }},
      {"mu11^2", [](S s) { return s.mu(0, 0) * s.mu(0, 0); }},
      {"1/sigma11", [](S s) { return 1.0 / s.error_variance(0, 0); }},
      {"log sigma11", [](S s) { return std::log(s.error_variance(0, 0)); }},
      {"lambda21", [](S s) { return s.loadings(0)(1, 0); }},
      {"lambda21^2", [](S s) { return s.loadings(0)(1, 0) * s.loadings(0)(1, 0); }},
      {"log omega1", [](S s) { return std::log(s.omega2[0]); }},
      {"y11", [](S s) { return s.y(0, 0); }},
      {"z1 = 1", [](S s) { return s.z[0] == 0 ? 1.0 : 0.0; }},
  };
}

inline std::vector<Comparison> run(const bmfa::Parameterization &spec, const Setup &set) {
  const bmfa::PriorConfig pr = [&] {
    bmfa::PriorConfig p = prior();
    p.k_max = set.k;
    return p;
  }();
  const auto fs = functionals();
  const std::size_t m = fs.size();
  const auto base = static_cast<std::uint64_t>(spec.index() * 100 + set.q);

  // forward draws, independent
  std::vector<double> f_sum(m, 0.0), f_sq(m, 0.0);
  bmfa::RandomStream fwd(set.seed, base * 2);
  for (long t = 0; t < set.draws; ++t) {
    const bmfa::ChainState s =
        bmfa::draw_from_prior(spec, set.q, pr, set.n, set.p, 1.0, fwd);
    for (std::size_t j = 0; j < m; ++j) {
      const double v = fs[j].second(s);
      f_sum[j] += v;
      f_sq[j] += v * v;
    }
  }

  // successive conditionals, batch means
  bmfa::RandomStream mc(set.seed, base * 2 + 1);
  bmfa::ChainState s = bmfa::draw_from_prior(spec, set.q, pr, set.n, set.p, 1.0, mc);
  bmfa::Dataset data;
  data.x = bmfa::simulate_observations(s, set.p, mc);
  const long per_batch = set.draws / set.batches;
  std::vector<std::vector<double>> batch(m, std::vector<double>(set.batches, 0.0));
  for (long t = 0; t < per_batch * set.batches; ++t) {
    bmfa::gibbs_sweep(s, data, spec, pr, mc);
    data.x = bmfa::simulate_observations(s, set.p, mc);
    for (std::size_t j = 0; j < m; ++j)
      batch[j][static_cast<std::size_t>(t / per_batch)] += fs[j].second(s) / per_batch;
  }

  std::vector<Comparison> out;
  const double nf = static_cast<double>(set.draws);
  for (std::size_t j = 0; j < m; ++j) {
    Comparison c;
    c.name = fs[j].first;
    c.forward_mean = f_sum[j] / nf;
    const double f_var = (f_sq[j] / nf - c.forward_mean * c.forward_mean) * nf / (nf - 1);
    double bm = 0.0, bv = 0.0;
    for (double b : batch[j]) bm += b;
    bm /= set.batches;
    for (double b : batch[j]) bv += (b - bm) * (b - bm);
    bv /= set.batches - 1;
    c.chain_mean = bm;
    const double se = std::sqrt(f_var / nf + bv / set.batches);
    c.z = se > 0 ? (c.chain_mean - c.forward_mean) / se : 0.0;
    out.push_back(c);
  }
  return out;
}

} // namespace geweke
