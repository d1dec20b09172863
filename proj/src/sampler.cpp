#include "bmfa/sampler.hpp"

#include <atomic>
#include <barrier>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "bmfa/conditionals.hpp"
#include "bmfa/errors.hpp"
#include "bmfa/linalg.hpp"
#include "bmfa/selection.hpp"

namespace bmfa {

TemperingLadder TemperingLadder::from_prior(const PriorConfig &prior) {
  TemperingLadder ladder;
  if (!prior.dirichlet_masses.empty()) {
    ladder.masses = prior.dirichlet_masses;
  } else {
    if (prior.n_chains < 1)
      throw Error(ErrorCode::InvalidConfig, "n_chains must be >= 1");
    for (int j = 0; j < prior.n_chains; ++j)
      ladder.masses.push_back(prior.gamma + prior.delta * j);
  }
  for (std::size_t j = 0; j < ladder.masses.size(); ++j) {
    if (!(ladder.masses[j] > 0))
      throw Error(ErrorCode::InvalidConfig, "Dirichlet masses must be positive");
    if (j > 0 && !(ladder.masses[j] > ladder.masses[j - 1]))
      throw Error(ErrorCode::InvalidConfig,
                  "Dirichlet masses must be strictly increasing");
  }
  return ladder;
}

void RunSchedule::validate() const {
  if (warm_up_overfitting < 0 || warm_up < 0)
    throw Error(ErrorCode::InvalidConfig, "warm-up lengths must be >= 0");
  if (iter_per_cycle < 1)
    throw Error(ErrorCode::InvalidConfig, "iter_per_cycle must be >= 1");
  if (m_cycles < 1) throw Error(ErrorCode::InvalidConfig, "m_cycles must be >= 1");
  if (burn_cycles < 0 || burn_cycles >= m_cycles)
    throw Error(ErrorCode::InvalidConfig,
                "burn_cycles = " + std::to_string(burn_cycles) +
                    " must lie in [0, m_cycles = " + std::to_string(m_cycles) + ")");
}

std::vector<double> overfitting_masses(long d, int n_chains) {
  const double half = static_cast<double>(d) / 2.0;
  if (n_chains == 1) return {half};
  std::vector<double> out;
  for (int j = 0; j < n_chains; ++j)
    out.push_back(half + j * static_cast<double>(d) / (2.0 * (n_chains - 1)));
  return out;
}

double log_swap_ratio(const Eigen::VectorXd &w_i, const Eigen::VectorXd &w_j,
                      double a_i, double a_j) {
  const double s_i = w_i.array().max(kWeightFloor).log().sum();
  const double s_j = w_j.array().max(kWeightFloor).log().sum();
  return (a_i - a_j) * (s_j - s_i);
}

double swap_accept_prob(const ChainState &state_i, const ChainState &state_j) {
  const double la = log_swap_ratio(state_i.w, state_j.w, state_i.dirichlet_mass,
                                   state_j.dirichlet_mass);
  return la >= 0.0 ? 1.0 : std::exp(la);
}

std::uint64_t model_stream_id(const Parameterization &spec, int q, int chain,
                              StreamPurpose purpose) {
  const auto code = static_cast<std::uint64_t>(spec.index() + 1);
  return (code << 40) | (static_cast<std::uint64_t>(q) << 24) |
         (static_cast<std::uint64_t>(chain) << 8) |
         static_cast<std::uint64_t>(purpose);
}

namespace {

ChainState init_chain(const Parameterization &spec, int q, const PriorConfig &prior,
                      const Dataset &data, double inflated_mass, double ladder_mass,
                      int sweeps, RandomStream &stream) {
  ChainState s = draw_from_prior(spec, q, prior, data.n(), data.p(),
                                 inflated_mass, stream);
  for (int t = 0; t < sweeps; ++t) gibbs_sweep(s, data, spec, prior, stream);
  s.dirichlet_mass = ladder_mass;
  return s;
}

std::string join_counts(const std::vector<int> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

} // namespace

std::vector<ChainState> overfitting_init(const Parameterization &spec, int q,
                                         const PriorConfig &prior,
                                         const Dataset &data,
                                         const TemperingLadder &ladder,
                                         int warm_up_overfitting,
                                         std::vector<RandomStream> &streams) {
  const CheckedConfig cfg = validate_spec(spec, prior, q, data);
  const auto inflated = overfitting_masses(cfg.d, ladder.size());
  std::vector<ChainState> states;
  for (int j = 0; j < ladder.size(); ++j)
    states.push_back(init_chain(spec, q, prior, data,
                                inflated[static_cast<std::size_t>(j)],
                                ladder.per_component(j, prior.k_max),
                                warm_up_overfitting,
                                streams[static_cast<std::size_t>(j)]));
  return states;
}

ModelRun run_model(const Parameterization &spec, int q, const PriorConfig &prior,
                   const Dataset &data, const RunSchedule &schedule,
                   std::uint64_t seed, const RunOptions &options) {
  schedule.validate();
  const CheckedConfig cfg = validate_spec(spec, prior, q, data);
  const TemperingLadder ladder = TemperingLadder::from_prior(prior);
  const int n_chains = ladder.size();
  const int k_max = prior.k_max;
  const auto inflated = overfitting_masses(cfg.d, n_chains);

  std::vector<RandomStream> streams;
  for (int j = 0; j < n_chains; ++j)
    streams.emplace_back(seed, model_stream_id(spec, q, j, StreamPurpose::Chain));
  RandomStream swap_stream(seed, model_stream_id(spec, q, 0, StreamPurpose::Swap));

  std::vector<ChainState> states(static_cast<std::size_t>(n_chains));
  ModelRun out;
  PosteriorTrace &trace = out.trace;
  trace.spec = spec;
  trace.q = q;
  trace.k_max = k_max;
  trace.n = data.n();
  trace.p = data.p();
  std::ostringstream log;
  log << "model " << spec.code() << " q=" << q << " chains=" << n_chains
      << " k_max=" << k_max << " cycles=" << schedule.m_cycles
      << " burn=" << schedule.burn_cycles << '\n';

  // First failure wins; later ones are dropped.
  std::mutex failure_mutex;
  std::optional<Error> failure;
  std::atomic<bool> failed{false};
  auto record_failure = [&](const std::string &where, std::exception_ptr ep) {
    std::lock_guard<std::mutex> lock(failure_mutex);
    if (failure) return;
    try {
      std::rethrow_exception(ep);
    } catch (const Error &e) {
      failure.emplace(e.code(), where + ": " + e.what());
    } catch (const std::exception &e) {
      failure.emplace(ErrorCode::NonFiniteInput, where + ": " + e.what());
    }
    failed = true;
  };

  auto prepare = [&](int j) {
    const auto ju = static_cast<std::size_t>(j);
    try {
      states[ju] = init_chain(spec, q, prior, data, inflated[ju],
                              ladder.per_component(j, k_max),
                              schedule.warm_up_overfitting, streams[ju]);
      for (int t = 0; t < schedule.warm_up && !failed; ++t)
        gibbs_sweep(states[ju], data, spec, prior, streams[ju]);
    } catch (...) {
      record_failure("warm-up, chain " + std::to_string(j + 1),
                     std::current_exception());
    }
  };

  int cycle = 0;
  auto run_cycle = [&](int j) {
    if (failed) return;
    const auto ju = static_cast<std::size_t>(j);
    try {
      for (int t = 0; t < schedule.iter_per_cycle; ++t)
        gibbs_sweep(states[ju], data, spec, prior, streams[ju]);
    } catch (...) {
      record_failure("cycle " + std::to_string(cycle + 1) + ", chain " +
                         std::to_string(j + 1),
                     std::current_exception());
    }
  };

  auto alive_counts = [&]() {
    std::vector<int> counts;
    for (const auto &s : states)
      counts.push_back(static_cast<int>(alive_components(s.z, k_max).size()));
    return counts;
  };

  auto end_of_cycle = [&]() {
    if (failed) return;
    try {
      if (n_chains > 1) {
        const int j = swap_stream.uniform_int(0, n_chains - 2);
        auto &a = states[static_cast<std::size_t>(j)];
        auto &b = states[static_cast<std::size_t>(j + 1)];
        const double log_a =
            log_swap_ratio(a.w, b.w, a.dirichlet_mass, b.dirichlet_mass);
        ++out.swaps.proposed;
        if (std::log(swap_stream.uniform()) < log_a) {
          ++out.swaps.accepted;
          std::swap(a, b);
          std::swap(a.dirichlet_mass, b.dirichlet_mass);
        }
      }
      if (cycle >= schedule.burn_cycles) {
        const ChainState &cold = states.front();
        auto alive = alive_components(cold.z, k_max);
        trace.z.push_back(cold.z);
        trace.w.push_back(cold.w);
        trace.mu.push_back(cold.mu);
        trace.lambda.push_back(cold.lambda);
        trace.sigma2.push_back(cold.sigma2);
        trace.alive_count.push_back(static_cast<int>(alive.size()));
        trace.loglik.push_back(observed_loglik(cold.w, cold.mu, cold.lambda,
                                               cold.sigma2, alive, data));
        trace.alive_set.push_back(std::move(alive));
        trace.alive_all_chains.push_back(alive_counts());
      }
      ++cycle;
      if (options.log_every > 0 &&
          (cycle % options.log_every == 0 || cycle == schedule.m_cycles)) {
        log << "cycle " << cycle << '/' << schedule.m_cycles << " alive="
            << join_counts(alive_counts()) << " swap_rate=" << out.swaps.rate()
            << '\n';
      }
    } catch (...) {
      record_failure("cycle " + std::to_string(cycle + 1) + " end",
                     std::current_exception());
    }
  };

  if (options.chain_threads && n_chains > 1) {
    bool warmed = false;
    auto completion = [&]() noexcept {
      if (!warmed) {
        warmed = true;
        if (!failed) log << "warm-up done alive=" << join_counts(alive_counts()) << '\n';
        return;
      }
      end_of_cycle();
    };
    std::barrier sync(n_chains, completion);
    std::vector<std::thread> workers;
    for (int j = 0; j < n_chains; ++j) {
      workers.emplace_back([&, j]() {
        prepare(j);
        sync.arrive_and_wait();
        for (int c = 0; c < schedule.m_cycles; ++c) {
          run_cycle(j);
          sync.arrive_and_wait();
        }
      });
    }
    for (auto &w : workers) w.join();
  } else {
    for (int j = 0; j < n_chains; ++j) prepare(j);
    if (!failed) log << "warm-up done alive=" << join_counts(alive_counts()) << '\n';
    for (int c = 0; c < schedule.m_cycles && !failed; ++c) {
      for (int j = 0; j < n_chains; ++j) run_cycle(j);
      end_of_cycle();
    }
  }

  if (failure) throw *failure;
  if (n_chains > 1) {
    const double rate = out.swaps.rate();
    if (rate < 0.02 || rate > 0.9) {
      std::ostringstream w;
      w << "swap acceptance rate " << rate
        << " is outside [0.02, 0.9]; consider tuning delta";
      out.warnings.push_back(w.str());
      log << "warning: " << w.str() << '\n';
    }
  }
  out.log = log.str();
  return out;
}

std::vector<GridCell> run_grid(const std::vector<Parameterization> &models,
                               const std::vector<int> &q_values,
                               const PriorConfig &prior, const Dataset &data,
                               const RunSchedule &schedule, int parallel_models,
                               std::uint64_t seed, const RunOptions &options) {
  if (models.empty() || q_values.empty())
    throw Error(ErrorCode::InvalidConfig, "empty model set or q range");
  std::vector<GridCell> cells;
  for (const auto &m : models)
    for (int q : q_values) {
      GridCell c;
      c.spec = m;
      c.q = q;
      cells.push_back(std::move(c));
    }
  auto fit_cell = [&](GridCell &c) {
    try {
      c.run = run_model(c.spec, c.q, prior, data, schedule, seed, options);
      c.ok = true;
    } catch (const std::exception &e) {
      c.ok = false;
      c.failure = e.what();
      c.run.log += std::string("failed: ") + e.what() + '\n';
    }
  };
  const int workers = std::max(1, std::min<int>(parallel_models,
                                                static_cast<int>(cells.size())));
  if (workers == 1) {
    for (auto &c : cells) fit_cell(c);
    return cells;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < cells.size(); i = next++) fit_cell(cells[i]);
    });
  for (auto &th : pool) th.join();
  return cells;
}

} // namespace bmfa
