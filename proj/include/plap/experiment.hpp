#pragma once

#include "plap/driver.hpp"
#include "plap/mesh.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace plap
{

// Config -------------------------------------------------------------------------
//
// Flat text, one "key = value" per line; '#' starts a comment.  Lists are
// comma-separated.  p may be given as a list ("p = 2, 3") or as a range
// ("p_range = 1.6:5.0:0.1", both ends included).  See README.md for the key
// reference; write_config emits every key, and parse_config(write_config(s))
// reproduces s.

struct MeshSpec
{
  enum class Kind
  {
    rect,
    interval
  };

  Kind kind = Kind::rect;
  int nx = 64;
  int ny = 64;
  double width = 1.;
  double height = 1.;
  DiagonalPattern pattern = DiagonalPattern::fixed;
};

struct GuessSpec
{
  GuessKind kind = GuessKind::midline;
  int m = 2;
  int n = 1;
  /// custom_nodal only: whitespace-separated values, one per mesh node.
  std::string values_file;
};

struct SolverSpec
{
  double newton_tol = 1e-10;
  int max_newton = 60;
  double eps_first = 1e-2;
  double eps_last = 1e-10;
  int eps_levels = 9;
  int quad_degree = default_quadrature_degree;

  PPoissonConfig to_config(double p) const;
};

struct OutputSpec
{
  std::string dir = ".";
  /// "{p}" is replaced by the p value.
  std::string trace_csv = "trace_p{p}.csv";
  std::string json = "summary_p{p}.json";
  std::string summary = "summary.csv";
  /// Nodal dumps of every dump_every-th iterate and the last; 0 disables.
  int dump_every = 0;
};

struct ExperimentSpec
{
  MeshSpec mesh;
  std::vector<double> p_values;
  BetaMap::Kind beta = BetaMap::Kind::linear;
  std::optional<GuessSpec> u0;
  int iters = 5;
  SolverSpec solver;
  RootConfig root;
  double rq_stop_tol = 1e-8;
  double diff_stop_tol = 1e-7;
  bool check_invariants = true;
  double invariant_tol = 1e-4;
  double noise = 0.;
  std::uint64_t noise_seed = 0x5eed;
  int workers = 1;
  OutputSpec outputs;

  /// Throws ValidationError.
  void validate() const;
  RunConfig run_config(double p) const;
};

/// Throws ParseError (with the line number) or ValidationError.
ExperimentSpec parse_config(std::string const &text);
ExperimentSpec load_config(std::string const &path);
std::string write_config(ExperimentSpec const &spec);

std::shared_ptr<Mesh const> build_mesh(MeshSpec const &spec);

// Runs ---------------------------------------------------------------------------

enum ExitCode : int
{
  exit_ok = 0,
  exit_invariant_violations = 2,
  exit_solver_failure = 3,
  exit_config_error = 4
};

inline constexpr char const *summary_csv_header =
    "p,iterations,R_last,alpha_last,invariant_violations,stop_reason,"
    "wall_time_s";

struct SummaryRow
{
  double p = 0.;
  int iterations = 0;
  double R_last = 0.;
  std::optional<double> alpha_last;
  int invariant_violations = 0;
  std::string stop_reason;
  double wall_time_s = 0.;
  std::string error;
};

struct ExperimentResult
{
  std::vector<SummaryRow> rows; ///< in p_values order
  int exit_code = exit_ok;
};

/// One Algorithm A run per p, concurrently on up to spec.workers threads.
/// Writes per-p traces, JSON summaries and dumps under outputs.dir, then the
/// summary CSV.  Failed runs keep their partial artifacts.
ExperimentResult run_experiment(ExperimentSpec const &spec,
                                std::ostream *log = nullptr);

std::string format_p(double p);

// Reference comparison ---------------------------------------------------------------

enum class ReferenceTable
{
  table1, ///< midline guess
  table2  ///< diagonal guess
};

ReferenceTable parse_reference_table(std::string const &name);

struct ReferenceRow
{
  double p;
  double R;
};

/// Reference R[u_5] values for p = 1.6, 1.7, ..., 5.0.
std::vector<ReferenceRow> const &reference_rows(ReferenceTable table);

/// Throws MissingRow when the table has no entry for p.
double reference_value(ReferenceTable table, double p);

/// 2% at p = 2, 5% elsewhere.
double reference_tolerance(double p);

struct ComparisonRow
{
  double p = 0.;
  double R = 0.;
  double reference = 0.;
  double rel_dev = 0.; ///< |R - reference| / reference
  double tolerance = 0.;
  bool flagged = false;
};

struct ComparisonReport
{
  std::vector<ComparisonRow> rows;
  std::vector<std::string> notes; ///< rows skipped and why
  int flagged() const;
};

std::vector<SummaryRow> read_summary_csv(std::istream &in);

/// Throws MissingRow when no summary row has a reference value.
ComparisonReport compare_to_reference(std::vector<SummaryRow> const &summary,
                                      ReferenceTable table);
ComparisonReport compare_to_reference(std::string const &summary_path,
                                      ReferenceTable table);

void write_comparison(std::ostream &out, ComparisonReport const &report);

} // namespace plap
