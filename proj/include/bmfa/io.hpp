#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bmfa/pipeline.hpp"
#include "bmfa/types.hpp"

namespace bmfa {

/// z-scores every column with the n - 1 divisor and keeps the column means
/// and standard deviations.
Dataset normalize(const Dataset &raw);

/// Rectangular numeric CSV; a first row with any non-numeric cell is taken
/// as the header.
Dataset ingest_csv(const std::filesystem::path &path);

/// Shortest-safe decimal form with 17 significant digits.
std::string format_double(double v);
double parse_double(const std::string &cell);

std::vector<std::string> split_csv_line(const std::string &line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
/// Comma-separated table whose first line is always a header.
CsvTable read_table(const std::filesystem::path &path);

void write_text(const std::filesystem::path &path, const std::string &content);

/// "1:5", "1,3,4" or mixtures such as "1:3,5".
std::vector<int> parse_q_list(const std::string &text);
/// Comma-separated codes, e.g. "UUU,UUC"; "all" means every pattern.
std::vector<Parameterization> parse_model_list(const std::string &text);

struct FitCommand {
  RunConfig run;
  std::string data_path;
  std::string out_dir;
  bool rm_dir = false;
};

/// Raised by parse_run_config when --help was given; what() is the help text.
class HelpRequested : public std::runtime_error {
public:
  explicit HelpRequested(const std::string &text) : std::runtime_error(text) {}
};

/// Parses the arguments of the fit subcommand (without the subcommand name).
FitCommand parse_run_config(const std::vector<std::string> &args);

/// Creates a fresh directory; DirectoryExists when the path is taken.
void create_run_dir(const std::filesystem::path &dir);

/// Writes bic tables, selection, summaries, traces, logs and the manifest.
void emit_report(const FitReport &report, const FitCommand &command,
                 const std::filesystem::path &out_dir);

/// Class labels, weights, means, covariances, correlations and quantiles of
/// an inference, on the fitted and on the original scale.
void emit_inference(const Inference &inference, const Dataset &data,
                    const std::filesystem::path &out_dir);

/// Unrelabeled trace plus the data scaling needed to redo the inference.
void write_raw_trace(const PosteriorTrace &trace, const Dataset &data,
                     const std::filesystem::path &dir);

struct RawTrace {
  PosteriorTrace trace;
  Dataset scaling; // names, col_means, col_sds and flag; x is empty
};
RawTrace read_raw_trace(const std::filesystem::path &dir);

/// Integer labels from a column (by name, or the last column when empty) of
/// a CSV with header.
std::vector<int> read_labels(const std::filesystem::path &path,
                             const std::string &column = "");

} // namespace bmfa
