#include "bmfa/pipeline.hpp"

#include <algorithm>

#include "bmfa/errors.hpp"
#include "bmfa/io.hpp"

namespace bmfa {

std::vector<Parameterization> RunConfig::models_or_default() const {
  if (!models.empty()) return models;
  const auto &all = Parameterization::all();
  return {all.begin(), all.end()};
}

std::vector<int> RunConfig::q_or_default(int p) const {
  if (!q_values.empty()) return q_values;
  std::vector<int> out;
  for (int q = 1; q <= std::min(5, ledermann_bound(p)); ++q) out.push_back(q);
  if (out.empty())
    throw Error(ErrorCode::QTooLarge,
                "no admissible q for p = " + std::to_string(p));
  return out;
}

Inference infer(const PosteriorTrace &trace) {
  Inference inf;
  const auto [k_map, prob] = map_alive_count(trace);
  inf.k_map = k_map;
  inf.k_map_prob = prob;
  inf.relabeled = ecr_relabel(trace, k_map);
  inf.clustering = single_best_clustering(inf.relabeled);
  inf.summary = summarize(inf.relabeled, trace.p);
  return inf;
}

FitReport fit(const Dataset &raw, const RunConfig &config) {
  raw.validate();
  FitReport report;
  report.data = config.normalize ? normalize(raw) : raw;
  const Dataset &data = report.data;
  const auto models = config.models_or_default();
  const auto q_values = config.q_or_default(static_cast<int>(data.p()));
  config.schedule.validate();
  for (const auto &m : models)
    for (int q : q_values) validate_spec(m, config.prior, q, data);

  report.cells = run_grid(models, q_values, config.prior, data, config.schedule,
                          config.parallel_models, config.seed, config.options);
  for (auto &cell : report.cells) {
    ModelScore s;
    s.spec = cell.spec;
    s.q = cell.q;
    if (cell.ok) {
      try {
        s = score_trace(cell.run.trace);
        s.swap_rate = cell.run.swaps.rate();
      } catch (const std::exception &e) {
        s.ok = false;
        s.failure = e.what();
      }
    } else {
      s.ok = false;
      s.failure = cell.failure;
    }
    report.scores.push_back(s);
  }
  report.selected = select_model(report.scores);
  report.inference = infer(report.selected_cell().run.trace);
  return report;
}

} // namespace bmfa
