// Command-line front end: fit, simulate, relabel, score.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bmfa/errors.hpp"
#include "bmfa/io.hpp"
#include "bmfa/pipeline.hpp"
#include "bmfa/simulate.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char *kUsage =
    "usage: bmfa <command> [options]\n"
    "commands:\n"
    "  fit       fit the model grid and write a run directory\n"
    "  simulate  generate a scenario dataset and its truth files\n"
    "  relabel   redo the relabeling from a run directory's raw trace\n"
    "  score     adjusted Rand index between two label files\n"
    "Run 'bmfa <command> --help' for the options of a command.\n";

std::vector<std::string> reversed_args(int argc, char **argv) {
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 2; --i) args.emplace_back(argv[i]);
  return args;
}

// Returns -1 when parsing succeeded and the command should run.
int parse_or_exit(CLI::App &app, int argc, char **argv) {
  auto args = reversed_args(argc, argv);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp &) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return bmfa::exit_status(bmfa::ErrorCategory::Config);
  }
  return -1;
}

int run_fit(int argc, char **argv) {
  std::vector<std::string> args;
  for (int i = 2; i < argc; ++i) args.emplace_back(argv[i]);
  bmfa::FitCommand cmd;
  try {
    cmd = bmfa::parse_run_config(args);
  } catch (const bmfa::HelpRequested &h) {
    std::cout << h.what();
    return 0;
  }
  const bmfa::Dataset raw = bmfa::ingest_csv(cmd.data_path);
  const bmfa::FitReport report = bmfa::fit(raw, cmd.run);
  bmfa::create_run_dir(cmd.out_dir);
  bmfa::emit_report(report, cmd, cmd.out_dir);
  const auto &sel = report.selected;
  std::cout << "selected " << sel.spec.code() << " q=" << sel.q
            << " K=" << report.inference.k_map
            << " BIC=" << bmfa::format_double(sel.bic) << '\n';
  for (const auto &s : report.scores)
    if (!s.ok) std::cerr << "model " << s.spec.code() << " q=" << s.q << " failed: "
                         << s.failure << '\n';
  return 0;
}

int run_simulate(int argc, char **argv) {
  CLI::App app{"Generate a synthetic mixture of factor analyzers", "bmfa simulate"};
  int scenario = 1, k = 6, p = 30, q = 2, n = 300;
  std::uint64_t seed = 1;
  bool same_sigma = false;
  std::string weights, out;
  app.add_option("--scenario", scenario, "1 (separated) or 2 (overlapping)")
      ->check(CLI::IsMember({1, 2}));
  app.add_option("--k", k, "Number of clusters");
  app.add_option("--p", p, "Number of variables");
  app.add_option("--q", q, "Number of factors");
  app.add_option("--n", n, "Number of observations");
  app.add_option("--seed", seed, "Random seed");
  app.add_flag("--same-sigma", same_sigma, "Share the error variances across clusters");
  app.add_option("--weights", weights, "Fixed weights: 'five', 'two' or a comma list");
  app.add_option("--out", out, "Output CSV; truth goes to <out>.truth.csv and .truth.txt")
      ->required();
  if (int rc = parse_or_exit(app, argc, argv); rc >= 0) return rc;

  bmfa::RandomStream stream(seed, 0);
  bmfa::SimOptions opt =
      scenario == 1 ? bmfa::scenario1_options() : bmfa::scenario2_options();
  if (weights == "five") opt.weights = bmfa::unequal_weights_five();
  else if (weights == "two") opt.weights = bmfa::unequal_weights_two();
  else if (!weights.empty()) {
    const auto cells = bmfa::split_csv_line(weights);
    opt.weights.resize(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i)
      opt.weights[static_cast<Eigen::Index>(i)] = bmfa::parse_double(cells[i]);
  }
  const Eigen::MatrixXd sinv =
      scenario == 1 ? bmfa::scenario1_sinv(k, p) : bmfa::scenario2_sinv(k, p, stream);
  const auto sim = scenario == 1
                       ? bmfa::sim_scenario1(k, p, q, n, sinv, same_sigma, stream, opt)
                       : bmfa::sim_scenario2(k, p, q, n, sinv, same_sigma, stream, opt);

  std::ostringstream data;
  for (int r = 0; r < p; ++r) data << (r ? "," : "") << 'V' << r + 1;
  data << '\n';
  for (Eigen::Index i = 0; i < sim.data.x.rows(); ++i) {
    for (Eigen::Index r = 0; r < p; ++r)
      data << (r ? "," : "") << bmfa::format_double(sim.data.x(i, r));
    data << '\n';
  }
  bmfa::write_text(out, data.str());

  std::ostringstream truth;
  truth << "id,z\n";
  for (std::size_t i = 0; i < sim.z.size(); ++i) truth << i + 1 << ',' << sim.z[i] + 1 << '\n';
  bmfa::write_text(out + ".truth.csv", truth.str());

  const auto oracle = bmfa::map_oracle_clustering(sim.truth, sim.data.x);
  std::ostringstream meta;
  meta << "scenario=" << scenario << "\nk=" << k << "\np=" << p << "\nq=" << q << "\nn=" << n
       << "\nseed=" << seed << "\nsame_sigma=" << (same_sigma ? 1 : 0) << "\nw=";
  for (Eigen::Index c = 0; c < sim.truth.w.size(); ++c)
    meta << (c ? "," : "") << bmfa::format_double(sim.truth.w[c]);
  meta << "\noracle_ari=" << bmfa::format_double(bmfa::adjusted_rand_index(oracle, sim.z))
       << '\n';
  bmfa::write_text(out + ".truth.txt", meta.str());
  return 0;
}

int run_relabel(int argc, char **argv) {
  CLI::App app{"Relabel the raw trace stored in a run directory", "bmfa relabel"};
  std::string run_dir, out_dir;
  app.add_option("--run-dir", run_dir, "Run directory written by 'bmfa fit'")->required();
  app.add_option("--out-dir", out_dir, "New directory for the relabeled output")->required();
  if (int rc = parse_or_exit(app, argc, argv); rc >= 0) return rc;
  const auto raw = bmfa::read_raw_trace(fs::path(run_dir) / "mcmc" / "raw");
  const auto inf = bmfa::infer(raw.trace);
  bmfa::create_run_dir(out_dir);
  bmfa::emit_inference(inf, raw.scaling, out_dir);
  std::cout << "K=" << inf.k_map << " prob=" << bmfa::format_double(inf.k_map_prob) << '\n';
  return 0;
}

int run_score(int argc, char **argv) {
  CLI::App app{"Adjusted Rand index between two label files", "bmfa score"};
  std::string a, b, col_a, col_b;
  app.add_option("a", a, "First CSV with header")->required();
  app.add_option("b", b, "Second CSV with header")->required();
  app.add_option("--column-a", col_a, "Label column of the first file (default: last)");
  app.add_option("--column-b", col_b, "Label column of the second file (default: last)");
  if (int rc = parse_or_exit(app, argc, argv); rc >= 0) return rc;
  const auto la = bmfa::read_labels(a, col_a);
  const auto lb = bmfa::read_labels(b, col_b);
  std::cout << bmfa::format_double(bmfa::adjusted_rand_index(la, lb)) << '\n';
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return bmfa::exit_status(bmfa::ErrorCategory::Config);
  }
  const std::string command = argv[1];
  try {
    if (command == "fit") return run_fit(argc, argv);
    if (command == "simulate") return run_simulate(argc, argv);
    if (command == "relabel") return run_relabel(argc, argv);
    if (command == "score") return run_score(argc, argv);
    if (command == "--help" || command == "-h" || command == "help") {
      std::cout << kUsage;
      return 0;
    }
    std::cerr << "unknown command '" << command << "'\n" << kUsage;
    return bmfa::exit_status(bmfa::ErrorCategory::Config);
  } catch (const bmfa::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return bmfa::exit_status(e.category());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return bmfa::exit_status(bmfa::ErrorCategory::Numerical);
  }
}
