#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmfa/postprocess.hpp"
#include "bmfa/sampler.hpp"
#include "bmfa/selection.hpp"
#include "bmfa/types.hpp"

namespace bmfa {

struct RunConfig {
  std::vector<Parameterization> models; // empty means all eight
  std::vector<int> q_values;            // empty means 1..min(5, bound)
  PriorConfig prior;
  RunSchedule schedule;
  bool normalize = true;
  std::uint64_t seed = 1;
  int parallel_models = 1;
  RunOptions options;

  [[nodiscard]] std::vector<Parameterization> models_or_default() const;
  [[nodiscard]] std::vector<int> q_or_default(int p) const;
};

/// Post-processed inference of the selected model.
struct Inference {
  int k_map = 0;
  double k_map_prob = 0.0;
  RelabeledTrace relabeled;
  Clustering clustering;
  Summary summary;
};

/// K_map, ECR, single best clustering and summaries of one trace.
Inference infer(const PosteriorTrace &trace);

struct FitReport {
  Dataset data; // as fitted (normalized unless disabled)
  std::vector<GridCell> cells;
  std::vector<ModelScore> scores; // aligned with cells
  Selection selected;
  Inference inference;

  [[nodiscard]] const GridCell &selected_cell() const {
    return cells[selected.index];
  }
};

/// Validates every (pattern, q) cell, runs the grid, scores it with BIC,
/// selects the winner and relabels its trace.
FitReport fit(const Dataset &raw, const RunConfig &config);

} // namespace bmfa
