#include "bmfa/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "bmfa/errors.hpp"

namespace fs = std::filesystem;

namespace bmfa {

namespace {

constexpr const char *kVersion = "1.0.0";

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

bool try_parse_double(const std::string &cell, double &out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char *first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index r = 0; r < p; ++r) names.push_back("V" + std::to_string(r + 1));
  return names;
}

std::vector<std::string> names_of(const Dataset &d) {
  return d.names.empty() ? default_names(d.p() > 0 ? d.p() : d.col_means.size())
                         : d.names;
}

std::string join(const std::vector<std::string> &parts, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string label_name(int raw) { return std::to_string(raw + 1); }

std::map<std::string, std::string> read_key_values(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

const std::string &require_key(const std::map<std::string, std::string> &kv,
                               const std::string &key, const fs::path &path) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw Error(ErrorCode::IoFailure, path.string() + " lacks key '" + key + "'");
  return it->second;
}

} // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string &cell) {
  double v = 0.0;
  if (!try_parse_double(cell, v))
    throw Error(ErrorCode::NonNumericCell, "not a number: '" + cell + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

Dataset normalize(const Dataset &raw) {
  const Eigen::Index n = raw.n();
  const Eigen::Index p = raw.p();
  if (n < 2) throw Error(ErrorCode::DimensionMismatch, "need at least 2 observations");
  const auto names = names_of(raw);
  Dataset out;
  out.names = raw.names;
  out.col_means = raw.x.colwise().mean().transpose();
  out.col_sds.resize(p);
  out.x.resize(n, p);
  for (Eigen::Index r = 0; r < p; ++r) {
    const Eigen::ArrayXd centered = raw.x.col(r).array() - out.col_means[r];
    const double var = centered.square().sum() / static_cast<double>(n - 1);
    if (!(var > 0) || !std::isfinite(var))
      throw Error(ErrorCode::ZeroVarianceColumn,
                  "column '" + names[static_cast<std::size_t>(r)] + "' has zero variance");
    out.col_sds[r] = std::sqrt(var);
    out.x.col(r) = (centered / out.col_sds[r]).matrix();
  }
  out.normalized = true;
  return out;
}

Dataset ingest_csv(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (width == 0) {
      width = cells.size();
      bool numeric = true;
      double tmp = 0.0;
      for (const auto &c : cells) numeric = numeric && try_parse_double(c, tmp);
      if (!numeric) {
        header = cells;
        continue;
      }
    }
    if (cells.size() != width)
      throw Error(ErrorCode::RaggedRows,
                  path.string() + " line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(width));
    std::vector<double> vals(width);
    for (std::size_t c = 0; c < width; ++c)
      if (!try_parse_double(cells[c], vals[c]))
        throw Error(ErrorCode::NonNumericCell,
                    path.string() + " line " + std::to_string(line_no) + " column " +
                        std::to_string(c + 1) + ": '" + cells[c] + "'");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(ErrorCode::DimensionMismatch, path.string() + " has no data rows");
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < width; ++c)
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  d.names = header;
  return d;
}

CsvTable read_table(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw Error(ErrorCode::IoFailure, path.string() + " is empty");
  return t;
}

void write_text(const fs::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

std::vector<int> parse_q_list(const std::string &text) {
  std::vector<int> out;
  auto to_int = [&](const std::string &s) {
    int v = 0;
    const std::string t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
      throw Error(ErrorCode::InvalidConfig, "bad q specification '" + text + "'");
    return v;
  };
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      out.push_back(to_int(part));
    } else {
      const int lo = to_int(part.substr(0, colon));
      const int hi = to_int(part.substr(colon + 1));
      if (hi < lo) throw Error(ErrorCode::InvalidConfig, "empty q range '" + part + "'");
      for (int q = lo; q <= hi; ++q) out.push_back(q);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty() || out.front() < 1)
    throw Error(ErrorCode::InvalidConfig, "q values must be positive: '" + text + "'");
  return out;
}

std::vector<Parameterization> parse_model_list(const std::string &text) {
  if (trim(text) == "all" || trim(text).empty()) {
    const auto &all = Parameterization::all();
    return {all.begin(), all.end()};
  }
  std::vector<Parameterization> out;
  for (const auto &code : split_csv_line(text)) {
    const auto m = Parameterization::from_code(code);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  // canonical order keeps grids independent of how the list was typed
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    return a.index() < b.index();
  });
  return out;
}

FitCommand parse_run_config(const std::vector<std::string> &args) {
  FitCommand cmd;
  RunConfig &rc = cmd.run;
  PriorConfig &pr = rc.prior;
  RunSchedule &sc = rc.schedule;
  sc.m_cycles = 700;
  sc.burn_cycles = 100;
  std::string models = "all";
  std::string q_text;
  std::string masses;
  bool no_normalize = false;
  bool no_chain_threads = false;

  CLI::App app{"Fit overfitting Bayesian mixtures of factor analyzers", "bmfa fit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.add_option("--data", cmd.data_path, "CSV file, rows are observations")->required();
  app.add_option("--out-dir", cmd.out_dir, "Output directory (must not exist)")->required();
  app.add_option("--models", models, "Comma-separated codes or 'all'");
  app.add_option("--q", q_text, "Factor counts, e.g. 1:5 or 1,2,4 (default 1:5)");
  app.add_option("--kmax", pr.k_max, "Components of the overfitted mixture");
  app.add_option("--n-chains", pr.n_chains, "Heated chains");
  app.add_option("--dirichlet-masses", masses,
                 "Increasing total Dirichlet masses per chain, comma-separated");
  app.add_option("--gamma", pr.gamma, "Total Dirichlet mass of the target chain");
  app.add_option("--delta", pr.delta, "Ladder increment of the Dirichlet masses");
  app.add_option("--m-cycles", sc.m_cycles, "MCMC cycles");
  app.add_option("--burn-cycles", sc.burn_cycles, "Cycles discarded as burn-in");
  app.add_option("--iter-per-cycle", sc.iter_per_cycle, "Gibbs sweeps per cycle");
  app.add_option("--warm-up", sc.warm_up, "Sweeps before swaps are proposed");
  app.add_option("--warm-up-overfitting", sc.warm_up_overfitting,
                 "Sweeps of the overfitting initialization");
  app.add_option("--g", pr.g, "Gamma shape of the loading precisions");
  app.add_option("--h", pr.h, "Gamma rate of the loading precisions");
  app.add_option("--alpha", pr.alpha_sigma, "Gamma shape of the error precisions");
  app.add_option("--beta", pr.beta_sigma, "Gamma rate of the error precisions");
  app.add_flag("--no-normalize", no_normalize, "Fit the data on its original scale");
  app.add_flag("--rm-dir", cmd.rm_dir, "Delete logs and the raw trace after the run");
  app.add_option("--parallel-models", rc.parallel_models, "Models fitted concurrently");
  app.add_option("--seed", rc.seed, "Random seed");
  app.add_option("--log-every", rc.options.log_every, "Cycles between progress lines");
  app.add_flag("--no-chain-threads", no_chain_threads,
               "Run the chains of a model sequentially");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError &e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }

  rc.models = parse_model_list(models);
  if (!q_text.empty()) rc.q_values = parse_q_list(q_text);
  if (!masses.empty()) {
    for (const auto &m : split_csv_line(masses)) pr.dirichlet_masses.push_back(parse_double(m));
    pr.n_chains = static_cast<int>(pr.dirichlet_masses.size());
  }
  rc.normalize = !no_normalize;
  rc.options.chain_threads = !no_chain_threads;
  auto positive = [](double v, const char *name) {
    if (!(v > 0) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be positive");
  };
  positive(pr.gamma, "--gamma");
  positive(pr.delta, "--delta");
  positive(pr.g, "--g");
  positive(pr.h, "--h");
  positive(pr.alpha_sigma, "--alpha");
  positive(pr.beta_sigma, "--beta");
  if (pr.k_max < 2)
    throw Error(ErrorCode::KMaxTooSmall, "--kmax must be >= 2");
  if (pr.n_chains < 1) throw Error(ErrorCode::InvalidConfig, "--n-chains must be >= 1");
  if (rc.parallel_models < 1)
    throw Error(ErrorCode::InvalidConfig, "--parallel-models must be >= 1");
  sc.validate();
  (void)TemperingLadder::from_prior(pr);
  if (fs::exists(cmd.out_dir))
    throw Error(ErrorCode::DirectoryExists, "output directory '" + cmd.out_dir +
                                                "' already exists");
  return cmd;
}

void create_run_dir(const fs::path &dir) {
  if (fs::exists(dir))
    throw Error(ErrorCode::DirectoryExists,
                "output directory '" + dir.string() + "' already exists");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

namespace {

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::string matrix_csv(const Eigen::MatrixXd &m, const std::vector<std::string> &header,
                       const std::vector<std::string> &row_names,
                       const std::string &corner) {
  std::ostringstream os;
  os << corner << ',' << join(header) << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << row_names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << format_double(m(r, c));
    os << '\n';
  }
  return os.str();
}

std::string quantile_csv(const std::vector<QuantileRow> &rows,
                         const std::vector<std::string> &names, const Dataset *scale) {
  std::ostringstream os;
  os << "parameter,cluster,row,col,mean,q2.5,q25,q50,q75,q97.5\n";
  for (const auto &q : rows) {
    double a = 1.0, b = 0.0;
    if (scale) {
      if (q.parameter == "mu") {
        a = scale->col_sds[q.row];
        b = scale->col_means[q.row];
      } else if (q.parameter == "cov") {
        a = scale->col_sds[q.row] * scale->col_sds[q.col];
      }
    }
    os << q.parameter << ',' << label_name(q.cluster) << ','
       << (q.row >= 0 ? names[static_cast<std::size_t>(q.row)] : "") << ','
       << (q.col >= 0 ? names[static_cast<std::size_t>(q.col)] : "") << ','
       << format_double(a * q.mean + b);
    for (double v : q.q) os << ',' << format_double(a * v + b);
    os << '\n';
  }
  return os.str();
}

template <typename F>
std::string flat_trace_csv(std::size_t draws, const std::vector<std::string> &header,
                           F value) {
  std::ostringstream os;
  os << join(header) << '\n';
  for (std::size_t t = 0; t < draws; ++t) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) os << ',';
      os << value(t, c);
    }
    os << '\n';
  }
  return os.str();
}

} // namespace

void emit_inference(const Inference &inf, const Dataset &data, const fs::path &out) {
  ensure_dir(out);
  const auto names = names_of(data);
  const Eigen::Index p = static_cast<Eigen::Index>(names.size());
  const auto &s = inf.summary;
  const auto &rel = inf.relabeled;
  std::vector<std::string> cluster_names;
  for (int l : s.labels) cluster_names.push_back(label_name(l));
  const bool scaled = data.normalized;

  {
    std::ostringstream os;
    os << "id,label,probability\n";
    for (std::size_t i = 0; i < inf.clustering.label.size(); ++i)
      os << i + 1 << ',' << label_name(inf.clustering.label[i]) << ','
         << format_double(inf.clustering.prob[i]) << '\n';
    write_text(out / "class.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "cluster,weight\n";
    for (Eigen::Index b = 0; b < s.w_mean.size(); ++b)
      os << cluster_names[static_cast<std::size_t>(b)] << ',' << format_double(s.w_mean[b])
         << '\n';
    write_text(out / "weights.csv", os.str());
  }
  write_text(out / "mu.csv", matrix_csv(s.mu_mean, names, cluster_names, "cluster"));
  if (scaled) {
    Eigen::MatrixXd mo = s.mu_mean * data.col_sds.asDiagonal();
    mo.rowwise() += data.col_means.transpose();
    write_text(out / "mu_original.csv", matrix_csv(mo, names, cluster_names, "cluster"));
  }
  for (std::size_t b = 0; b < s.cov.size(); ++b) {
    const std::string tag = cluster_names[b];
    write_text(out / ("covariance_" + tag + ".csv"),
               matrix_csv(s.cov[b], names, names, "variable"));
    if (scaled) {
      const Eigen::MatrixXd co =
          data.col_sds.asDiagonal() * s.cov[b] * data.col_sds.asDiagonal();
      write_text(out / ("covariance_original_" + tag + ".csv"),
                 matrix_csv(co, names, names, "variable"));
    }
    std::ostringstream os;
    os << "row,col,correlation,q2.5,q97.5,significant\n";
    for (const auto &q : s.quantiles) {
      if (q.parameter != "cor" || q.cluster != s.labels[b]) continue;
      os << names[static_cast<std::size_t>(q.row)] << ','
         << names[static_cast<std::size_t>(q.col)] << ',' << format_double(q.mean) << ','
         << format_double(q.q[0]) << ',' << format_double(q.q[4]) << ','
         << (s.cor_significant[b](q.row, q.col) ? 1 : 0) << '\n';
    }
    write_text(out / ("correlation_" + tag + ".csv"), os.str());
    // loadings of the pivot draw; identified only up to column signs
    const std::size_t pivot_pos = static_cast<std::size_t>(
        std::find(rel.draws.begin(), rel.draws.end(), rel.pivot_draw) - rel.draws.begin());
    const Eigen::MatrixXd &lam = rel.lambda[pivot_pos][b];
    std::vector<std::string> fac;
    for (Eigen::Index j = 0; j < lam.cols(); ++j) fac.push_back("factor" + std::to_string(j + 1));
    write_text(out / ("loadings_map_" + tag + ".csv"), matrix_csv(lam, fac, names, "variable"));
  }
  write_text(out / "quantiles.csv", quantile_csv(s.quantiles, names, nullptr));
  if (scaled)
    write_text(out / "quantiles_original.csv", quantile_csv(s.quantiles, names, &data));

  const fs::path mc = out / "mcmc";
  ensure_dir(mc);
  const std::size_t t_max = rel.size();
  const auto k = static_cast<std::size_t>(rel.k_map);
  {
    std::vector<std::string> h;
    for (const auto &c : cluster_names) h.push_back("w_" + c);
    write_text(mc / "w.csv", flat_trace_csv(t_max, h, [&](std::size_t t, std::size_t c) {
                 return format_double(rel.w[t][static_cast<Eigen::Index>(c)]);
               }));
  }
  {
    std::vector<std::string> h;
    for (const auto &c : cluster_names)
      for (const auto &v : names) h.push_back("mu_" + c + "_" + v);
    write_text(mc / "mu.csv", flat_trace_csv(t_max, h, [&](std::size_t t, std::size_t c) {
                 return format_double(rel.mu[t](static_cast<Eigen::Index>(c) / p,
                                                static_cast<Eigen::Index>(c) % p));
               }));
    std::vector<std::string> hs;
    for (const auto &c : cluster_names)
      for (const auto &v : names) hs.push_back("sigma2_" + c + "_" + v);
    write_text(mc / "sigma2.csv", flat_trace_csv(t_max, hs, [&](std::size_t t, std::size_t c) {
                 return format_double(rel.sigma2[t](static_cast<Eigen::Index>(c) / p,
                                                    static_cast<Eigen::Index>(c) % p));
               }));
  }
  if (t_max > 0) {
    const Eigen::Index q = rel.lambda.front().front().cols();
    std::vector<std::string> h;
    for (const auto &c : cluster_names)
      for (const auto &v : names)
        for (Eigen::Index j = 0; j < q; ++j)
          h.push_back("lambda_" + c + "_" + v + "_" + std::to_string(j + 1));
    const std::size_t per = static_cast<std::size_t>(p * q);
    write_text(mc / "lambda.csv", flat_trace_csv(t_max, h, [&](std::size_t t, std::size_t c) {
                 const std::size_t b = c / per;
                 const std::size_t rem = c % per;
                 return format_double(
                     rel.lambda[t][b](static_cast<Eigen::Index>(rem) / q,
                                      static_cast<Eigen::Index>(rem) % q));
               }));
  }
  {
    std::vector<std::string> h;
    for (std::size_t i = 0; i < rel.pivot.size(); ++i) h.push_back("z" + std::to_string(i + 1));
    write_text(mc / "z.csv", flat_trace_csv(t_max, h, [&](std::size_t t, std::size_t i) {
                 return cluster_names[static_cast<std::size_t>(rel.z[t][i])];
               }));
  }
  {
    std::ostringstream os;
    os << "draw,loglik\n";
    for (std::size_t t = 0; t < t_max; ++t)
      os << rel.draws[t] + 1 << ',' << format_double(rel.loglik[t]) << '\n';
    write_text(mc / "loglik.csv", os.str());
  }
  (void)k;
}

void write_raw_trace(const PosteriorTrace &trace, const Dataset &data, const fs::path &dir) {
  ensure_dir(dir);
  const std::size_t t_max = trace.size();
  const auto k = static_cast<std::size_t>(trace.k_max);
  const auto p = static_cast<std::size_t>(trace.p);
  const auto q = static_cast<std::size_t>(trace.q);
  const std::size_t n_lambda = trace.spec.lambda_shared() ? 1 : k;
  const auto [s_rows, s_cols] = sigma_shape(trace.spec, trace.k_max, trace.p);
  {
    std::ostringstream os;
    os << "code=" << trace.spec.code() << "\nq=" << trace.q << "\nk_max=" << trace.k_max
       << "\nn=" << trace.n << "\np=" << trace.p << "\ndraws=" << t_max
       << "\nnormalized=" << (data.normalized ? 1 : 0) << '\n';
    write_text(dir / "meta.txt", os.str());
  }
  {
    const auto names = names_of(data);
    std::ostringstream os;
    os << "variable,mean,sd\n";
    for (std::size_t r = 0; r < p; ++r) {
      const bool has = data.normalized;
      os << names[r] << ','
         << format_double(has ? data.col_means[static_cast<Eigen::Index>(r)] : 0.0) << ','
         << format_double(has ? data.col_sds[static_cast<Eigen::Index>(r)] : 1.0) << '\n';
    }
    write_text(dir / "scaling.csv", os.str());
  }
  auto numbered = [](const std::string &prefix, std::size_t count) {
    std::vector<std::string> h;
    for (std::size_t c = 0; c < count; ++c) h.push_back(prefix + std::to_string(c + 1));
    return h;
  };
  write_text(dir / "z.csv", flat_trace_csv(t_max, numbered("z", static_cast<std::size_t>(trace.n)),
                                           [&](std::size_t t, std::size_t i) {
                                             return std::to_string(trace.z[t][i] + 1);
                                           }));
  write_text(dir / "w.csv", flat_trace_csv(t_max, numbered("w", k), [&](std::size_t t, std::size_t c) {
               return format_double(trace.w[t][static_cast<Eigen::Index>(c)]);
             }));
  write_text(dir / "mu.csv", flat_trace_csv(t_max, numbered("mu", k * p), [&](std::size_t t, std::size_t c) {
               return format_double(trace.mu[t](static_cast<Eigen::Index>(c / p),
                                                static_cast<Eigen::Index>(c % p)));
             }));
  write_text(dir / "lambda.csv",
             flat_trace_csv(t_max, numbered("lambda", n_lambda * p * q), [&](std::size_t t, std::size_t c) {
               const std::size_t m = c / (p * q);
               const std::size_t rem = c % (p * q);
               return format_double(trace.lambda[t][m](static_cast<Eigen::Index>(rem / q),
                                                       static_cast<Eigen::Index>(rem % q)));
             }));
  const auto sc = static_cast<std::size_t>(s_cols);
  write_text(dir / "sigma2.csv",
             flat_trace_csv(t_max, numbered("sigma2", static_cast<std::size_t>(s_rows) * sc),
                            [&](std::size_t t, std::size_t c) {
                              return format_double(trace.sigma2[t](static_cast<Eigen::Index>(c / sc),
                                                                   static_cast<Eigen::Index>(c % sc)));
                            }));
  {
    std::ostringstream os;
    os << "draw,alive_count,loglik\n";
    for (std::size_t t = 0; t < t_max; ++t)
      os << t + 1 << ',' << trace.alive_count[t] << ',' << format_double(trace.loglik[t]) << '\n';
    write_text(dir / "loglik.csv", os.str());
  }
  if (t_max > 0) {
    const std::size_t chains = trace.alive_all_chains.front().size();
    write_text(dir / "alive_chains.csv",
               flat_trace_csv(t_max, numbered("chain", chains), [&](std::size_t t, std::size_t c) {
                 return std::to_string(trace.alive_all_chains[t][c]);
               }));
  }
}

RawTrace read_raw_trace(const fs::path &dir) {
  const fs::path meta_path = dir / "meta.txt";
  const auto kv = read_key_values(meta_path);
  RawTrace raw;
  PosteriorTrace &tr = raw.trace;
  auto as_int = [&](const std::string &key) {
    return static_cast<int>(parse_double(require_key(kv, key, meta_path)));
  };
  tr.spec = Parameterization::from_code(require_key(kv, "code", meta_path));
  tr.q = as_int("q");
  tr.k_max = as_int("k_max");
  tr.n = as_int("n");
  tr.p = as_int("p");
  const auto draws = static_cast<std::size_t>(as_int("draws"));
  const auto k = static_cast<std::size_t>(tr.k_max);
  const auto p = static_cast<std::size_t>(tr.p);
  const auto q = static_cast<std::size_t>(tr.q);
  const std::size_t n_lambda = tr.spec.lambda_shared() ? 1 : k;
  const auto [s_rows, s_cols] = sigma_shape(tr.spec, tr.k_max, tr.p);

  auto load = [&](const std::string &file, std::size_t width) {
    CsvTable t = read_table(dir / file);
    if (t.rows.size() != draws)
      throw Error(ErrorCode::LengthMismatch, file + " has " + std::to_string(t.rows.size()) +
                                                 " draws, expected " + std::to_string(draws));
    for (const auto &row : t.rows)
      if (row.size() != width)
        throw Error(ErrorCode::RaggedRows, file + " has a row of the wrong width");
    return t;
  };
  const CsvTable z = load("z.csv", static_cast<std::size_t>(tr.n));
  const CsvTable w = load("w.csv", k);
  const CsvTable mu = load("mu.csv", k * p);
  const CsvTable lam = load("lambda.csv", n_lambda * p * q);
  const CsvTable sig = load("sigma2.csv", static_cast<std::size_t>(s_rows * s_cols));
  const CsvTable ll = load("loglik.csv", 3);
  for (std::size_t t = 0; t < draws; ++t) {
    std::vector<int> zt;
    for (const auto &c : z.rows[t]) zt.push_back(static_cast<int>(parse_double(c)) - 1);
    for (int zi : zt)
      if (zi < 0 || zi >= tr.k_max)
        throw Error(ErrorCode::IoFailure, "allocation out of range in z.csv");
    Eigen::VectorXd wt(tr.k_max);
    for (std::size_t c = 0; c < k; ++c) wt[static_cast<Eigen::Index>(c)] = parse_double(w.rows[t][c]);
    Eigen::MatrixXd mt(tr.k_max, tr.p);
    for (std::size_t c = 0; c < k * p; ++c)
      mt(static_cast<Eigen::Index>(c / p), static_cast<Eigen::Index>(c % p)) = parse_double(mu.rows[t][c]);
    std::vector<Eigen::MatrixXd> lt(n_lambda, Eigen::MatrixXd::Zero(tr.p, tr.q));
    for (std::size_t c = 0; c < n_lambda * p * q; ++c) {
      const std::size_t rem = c % (p * q);
      lt[c / (p * q)](static_cast<Eigen::Index>(rem / q), static_cast<Eigen::Index>(rem % q)) =
          parse_double(lam.rows[t][c]);
    }
    Eigen::MatrixXd st(s_rows, s_cols);
    for (Eigen::Index c = 0; c < s_rows * s_cols; ++c)
      st(c / s_cols, c % s_cols) = parse_double(sig.rows[t][static_cast<std::size_t>(c)]);
    auto alive = alive_components(zt, tr.k_max);
    tr.alive_count.push_back(static_cast<int>(alive.size()));
    tr.alive_set.push_back(std::move(alive));
    tr.loglik.push_back(parse_double(ll.rows[t][2]));
    tr.z.push_back(std::move(zt));
    tr.w.push_back(std::move(wt));
    tr.mu.push_back(std::move(mt));
    tr.lambda.push_back(std::move(lt));
    tr.sigma2.push_back(std::move(st));
  }
  if (fs::exists(dir / "alive_chains.csv")) {
    const CsvTable ac = read_table(dir / "alive_chains.csv");
    for (const auto &row : ac.rows) {
      std::vector<int> v;
      for (const auto &c : row) v.push_back(static_cast<int>(parse_double(c)));
      tr.alive_all_chains.push_back(std::move(v));
    }
  }
  const CsvTable scaling = read_table(dir / "scaling.csv");
  Dataset &d = raw.scaling;
  d.normalized = as_int("normalized") == 1;
  d.col_means.resize(tr.p);
  d.col_sds.resize(tr.p);
  if (scaling.rows.size() != p)
    throw Error(ErrorCode::LengthMismatch, "scaling.csv does not list every variable");
  for (std::size_t r = 0; r < p; ++r) {
    d.names.push_back(scaling.rows[r].at(0));
    d.col_means[static_cast<Eigen::Index>(r)] = parse_double(scaling.rows[r].at(1));
    d.col_sds[static_cast<Eigen::Index>(r)] = parse_double(scaling.rows[r].at(2));
  }
  tr.validate();
  return raw;
}

void emit_report(const FitReport &report, const FitCommand &command, const fs::path &out) {
  ensure_dir(out);
  const auto &cfg = command.run;
  const auto models = cfg.models_or_default();
  const auto q_values = cfg.q_or_default(static_cast<int>(report.data.p()));

  // One row per pattern with its BIC per q and the best q.
  {
    std::ostringstream os;
    os << "model";
    for (int q : q_values) os << ",BIC_q" << q;
    os << ",q,BIC_q,K_MAP,K_MAP_prob,chain_swap,status\n";
    const auto best = best_per_pattern(report.scores);
    for (const auto &m : models) {
      os << m.code();
      for (int q : q_values) {
        std::string cell = "NA";
        for (const auto &s : report.scores)
          if (s.spec == m && s.q == q && s.ok) cell = format_double(s.bic);
        os << ',' << cell;
      }
      const ModelScore *top = nullptr;
      for (std::size_t idx : best)
        if (report.scores[idx].spec == m) top = &report.scores[idx];
      if (top)
        os << ',' << top->q << ',' << format_double(top->bic) << ',' << top->k_map << ','
           << format_double(top->k_map_prob) << ',' << format_double(top->swap_rate) << ",ok\n";
      else
        os << ",NA,NA,NA,NA,NA,failed\n";
    }
    write_text(out / "bic.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "model,q,status,K_MAP,K_MAP_prob,max_loglik,nu,BIC,chain_swap,failure\n";
    for (const auto &s : report.scores) {
      os << s.spec.code() << ',' << s.q << ',' << (s.ok ? "ok" : "failed") << ',';
      if (s.ok)
        os << s.k_map << ',' << format_double(s.k_map_prob) << ',' << format_double(s.max_loglik)
           << ',' << s.nu << ',' << format_double(s.bic) << ',' << format_double(s.swap_rate)
           << ",\n";
      else {
        std::string msg = s.failure;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << "NA,NA,NA,NA,NA,NA,\"" << msg << "\"\n";
      }
    }
    write_text(out / "bic_long.csv", os.str());
  }
  const auto &sel = report.selected;
  const auto &inf = report.inference;
  {
    std::ostringstream os;
    os << "model=" << sel.spec.code() << "\nq=" << sel.q << "\nK=" << inf.k_map
       << "\nK_prob=" << format_double(inf.k_map_prob) << "\nBIC=" << format_double(sel.bic)
       << "\nchain_swap=" << format_double(report.selected_cell().run.swaps.rate())
       << "\nclusters=";
    std::vector<std::string> labels;
    for (int l : inf.summary.labels) labels.push_back(label_name(l));
    os << join(labels) << "\ncluster_sizes=";
    std::vector<std::string> sizes;
    for (int l : inf.summary.labels)
      sizes.push_back(std::to_string(
          std::count(inf.clustering.label.begin(), inf.clustering.label.end(), l)));
    os << join(sizes) << '\n';
    write_text(out / "selected_model.txt", os.str());
  }
  emit_inference(inf, report.data, out);
  write_raw_trace(report.selected_cell().run.trace, report.data, out / "mcmc" / "raw");

  const fs::path logs = out / "logs";
  ensure_dir(logs);
  for (const auto &cell : report.cells) {
    std::string text = cell.run.log;
    if (!cell.ok && text.empty()) text = "failed: " + cell.failure + '\n';
    write_text(logs / (cell.spec.code() + "_q" + std::to_string(cell.q) + ".log"), text);
  }
  {
    const auto &pr = cfg.prior;
    const auto &sc = cfg.schedule;
    const auto ladder = TemperingLadder::from_prior(pr);
    std::vector<std::string> codes, qs, masses;
    for (const auto &m : models) codes.push_back(m.code());
    for (int q : q_values) qs.push_back(std::to_string(q));
    for (double m : ladder.masses) masses.push_back(format_double(m));
    std::ostringstream os;
    os << "version=" << kVersion << "\nseed=" << cfg.seed << "\ndata=" << command.data_path
       << "\nn=" << report.data.n() << "\np=" << report.data.p() << "\nmodels=" << join(codes)
       << "\nq=" << join(qs) << "\nkmax=" << pr.k_max << "\nn_chains=" << ladder.size()
       << "\ndirichlet_masses=" << join(masses) << "\nalpha=" << format_double(pr.alpha_sigma)
       << "\nbeta=" << format_double(pr.beta_sigma) << "\ng=" << format_double(pr.g)
       << "\nh=" << format_double(pr.h) << "\nm_cycles=" << sc.m_cycles
       << "\nburn_cycles=" << sc.burn_cycles << "\niter_per_cycle=" << sc.iter_per_cycle
       << "\nwarm_up=" << sc.warm_up << "\nwarm_up_overfitting=" << sc.warm_up_overfitting
       << "\nnormalize=" << (cfg.normalize ? 1 : 0) << "\nrm_dir=" << (command.rm_dir ? 1 : 0)
       << "\nselected=" << sel.spec.code() << "_q" << sel.q << '\n';
    for (const auto &cell : report.cells)
      for (const auto &w : cell.run.warnings)
        os << "warning_" << cell.spec.code() << "_q" << cell.q << '=' << w << '\n';
    write_text(out / "manifest.txt", os.str());
  }
  if (command.rm_dir) {
    std::error_code ec;
    fs::remove_all(logs, ec);
    fs::remove_all(out / "mcmc" / "raw", ec);
  }
}

std::vector<int> read_labels(const fs::path &path, const std::string &column) {
  const CsvTable t = read_table(path);
  std::size_t col = t.header.size() - 1;
  if (!column.empty()) {
    const auto it = std::find(t.header.begin(), t.header.end(), column);
    if (it == t.header.end())
      throw Error(ErrorCode::IoFailure, path.string() + " has no column '" + column + "'");
    col = static_cast<std::size_t>(it - t.header.begin());
  }
  std::vector<int> labels;
  for (const auto &row : t.rows) {
    if (col >= row.size()) throw Error(ErrorCode::RaggedRows, path.string() + " is ragged");
    labels.push_back(static_cast<int>(parse_double(row[col])));
  }
  return labels;
}

} // namespace bmfa
