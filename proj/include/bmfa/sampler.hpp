#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmfa/random.hpp"
#include "bmfa/types.hpp"

namespace bmfa {

/// Total Dirichlet masses of the heated chains; position 0 is the target.
struct TemperingLadder {
  std::vector<double> masses;

  /// gamma + delta (j - 1) for j = 1..n_chains, or the explicit masses.
  static TemperingLadder from_prior(const PriorConfig &prior);

  [[nodiscard]] int size() const { return static_cast<int>(masses.size()); }
  [[nodiscard]] double per_component(int j, int k_max) const {
    return masses[static_cast<std::size_t>(j)] / k_max;
  }
};

struct RunSchedule {
  int warm_up_overfitting = 500;
  int warm_up = 5000;
  int m_cycles = 1000;
  int burn_cycles = 100;
  int iter_per_cycle = 10;

  /// Throws InvalidConfig unless 0 <= burn_cycles < m_cycles and the
  /// iteration counts are nonnegative (iter_per_cycle positive).
  void validate() const;
  [[nodiscard]] long total_iterations() const {
    return warm_up + static_cast<long>(m_cycles) * iter_per_cycle;
  }
  [[nodiscard]] int retained() const { return m_cycles - burn_cycles; }
};

struct SwapStats {
  long proposed = 0;
  long accepted = 0;
  [[nodiscard]] double rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed;
  }
};

/// Inflated per-component masses of the initial period:
/// d/2 + (j - 1) d / (2 (J - 1)), and d/2 when J = 1.
std::vector<double> overfitting_masses(long d, int n_chains);

/// log of f_i(w_j) f_j(w_i) / (f_i(w_i) f_j(w_j)) for symmetric Dirichlet
/// densities with per-component parameters a_i and a_j.
double log_swap_ratio(const Eigen::VectorXd &w_i, const Eigen::VectorXd &w_j,
                      double a_i, double a_j);

/// min(1, A) for exchanging the states held under the masses of each chain.
double swap_accept_prob(const ChainState &state_i, const ChainState &state_j);

/// Purpose tags used to derive independent streams.
enum class StreamPurpose : std::uint64_t { Chain = 0, Swap = 1 };

/// Stream identifier of a (pattern, q, chain, purpose) combination.
[[nodiscard]] std::uint64_t model_stream_id(const Parameterization &spec, int q,
                                            int chain, StreamPurpose purpose);

/// Prior draws followed by warm_up_overfitting sweeps per chain under the
/// inflated masses; returned states carry the ladder masses.
std::vector<ChainState> overfitting_init(const Parameterization &spec, int q,
                                         const PriorConfig &prior,
                                         const Dataset &data,
                                         const TemperingLadder &ladder,
                                         int warm_up_overfitting,
                                         std::vector<RandomStream> &streams);

struct RunOptions {
  /// Run the chains of a model on their own threads.
  bool chain_threads = true;
  /// Progress line every this many cycles (0 disables).
  int log_every = 50;
};

struct ModelRun {
  PosteriorTrace trace;
  SwapStats swaps;
  std::string log;
  std::vector<std::string> warnings;
};

ModelRun run_model(const Parameterization &spec, int q, const PriorConfig &prior,
                   const Dataset &data, const RunSchedule &schedule,
                   std::uint64_t seed, const RunOptions &options = {});

struct GridCell {
  Parameterization spec;
  int q = 1;
  bool ok = false;
  std::string failure;
  ModelRun run;
};

/// Every (pattern, q) pair, fitted on up to `parallel_models` workers. A
/// failing cell is reported without stopping its siblings. Output order is
/// patterns in the given order, then q ascending.
std::vector<GridCell> run_grid(const std::vector<Parameterization> &models,
                               const std::vector<int> &q_values,
                               const PriorConfig &prior, const Dataset &data,
                               const RunSchedule &schedule, int parallel_models,
                               std::uint64_t seed, const RunOptions &options = {});

} // namespace bmfa
