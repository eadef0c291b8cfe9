// Command-line front end: run, sweep, compare, oracle, counterexample.

#include "plap/errors.hpp"
#include "plap/experiment.hpp"
#include "plap/oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace
{

std::optional<std::string> env(char const *name)
{
  char const *v = std::getenv(name);
  if (!v || !*v)
    return std::nullopt;
  return std::string(v);
}

int run_config_file(std::string const &path, bool sweep)
{
  plap::ExperimentSpec spec = plap::load_config(path);
  if (!sweep && spec.p_values.size() != 1)
    throw plap::ValidationError(
        "'run' takes a single p value; use 'sweep' for a list");
  if (auto dir = env("PLAP_OUTPUT_DIR"))
    spec.outputs.dir = *dir;
  if (sweep)
  {
    if (auto workers = env("PLAP_WORKERS"))
    {
      try
      {
        spec.workers = std::stoi(*workers);
      }
      catch (std::exception const &)
      {
        throw plap::ValidationError("PLAP_WORKERS is not an integer");
      }
    }
  }
  else
    spec.workers = 1;
  spec.validate();
  plap::ExperimentResult const result = plap::run_experiment(spec, &std::cout);
  std::cout << "summary: " << spec.outputs.dir << '/' << spec.outputs.summary
            << '\n';
  return result.exit_code;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Higher Dirichlet eigenpairs of the p-Laplacian by the "
               "balanced inverse iteration"};
  app.require_subcommand(1);

  std::string config;
  auto *run = app.add_subcommand("run", "run one experiment from a config");
  run->add_option("config", config, "config file")->required();
  auto *sweep =
      app.add_subcommand("sweep", "run every p of a config, in parallel");
  sweep->add_option("config", config, "config file")->required();

  std::string summary;
  std::string table;
  auto *compare = app.add_subcommand(
      "compare", "compare a summary CSV with a reference table");
  compare->add_option("summary", summary, "summary CSV")->required();
  compare->add_option("table", table, "table1 (midline) or table2 (diagonal)")
      ->required()
      ->check(CLI::IsMember({"table1", "table2"}));

  auto *oracle = app.add_subcommand("oracle", "reference eigenvalues");
  oracle->require_subcommand(1);
  double p = 2.;
  int k = 2;
  double length = 1.;
  double tol = 1e-10;
  auto *oracle_1d =
      oracle->add_subcommand("1d", "interval: closed form and shooting");
  oracle_1d->add_option("--p", p, "exponent")->check(CLI::PositiveNumber);
  oracle_1d->add_option("--k", k, "eigenvalue index")->check(CLI::PositiveNumber);
  oracle_1d->add_option("--length", length, "interval length")
      ->check(CLI::PositiveNumber);
  oracle_1d->add_option("--tol", tol, "shooting bisection tolerance")
      ->check(CLI::PositiveNumber);
  int m_max = 4;
  auto *oracle_square =
      oracle->add_subcommand("square", "unit square spectrum at p = 2");
  oracle_square->add_option("--m-max", m_max, "largest mode index")
      ->check(CLI::PositiveNumber);

  int n_terms = 7501;
  auto *counter = app.add_subcommand(
      "counterexample", "bounded non-convergent sequence, one term per line");
  counter->add_option("n", n_terms, "number of terms")
      ->check(CLI::PositiveNumber);

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::ParseError const &e)
  {
    int const code = app.exit(e);
    return code == 0 ? 0 : plap::exit_config_error;
  }

  try
  {
    if (*run)
      return run_config_file(config, false);
    if (*sweep)
      return run_config_file(config, true);
    if (*compare)
    {
      plap::ComparisonReport const report = plap::compare_to_reference(
          summary, plap::parse_reference_table(table));
      plap::write_comparison(std::cout, report);
      return report.flagged() ? 1 : 0;
    }
    if (*oracle_1d)
    {
      plap::EigenOracle1D const o(p, length);
      double const formula = plap::lambda_k_1d(k, o);
      double const shot = plap::shoot_1d(k, p, length, tol);
      std::printf("p = %.10g, k = %d, length = %.10g\n", p, k, length);
      std::printf("pi_p      %.15g\n", o.pi_p);
      std::printf("formula   %.15g\n", formula);
      std::printf("shooting  %.15g\n", shot);
      std::printf("rel diff  %.3e\n", std::abs(shot / formula - 1.));
      return 0;
    }
    if (*oracle_square)
    {
      std::printf("value,multiplicity\n");
      for (auto const &e : plap::square_eigs_p2(m_max))
        std::printf("%.10f,%d\n", e.value, e.multiplicity);
      return 0;
    }
    if (*counter)
    {
      auto const x = plap::counterexample_sequence(n_terms);
      for (std::size_t i = 0; i < x.size(); ++i)
        std::printf("%zu %.17g\n", i, x[i]);
      return 0;
    }
  }
  catch (plap::ParseError const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return plap::exit_config_error;
  }
  catch (plap::ValidationError const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return plap::exit_config_error;
  }
  catch (plap::UnknownGuess const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return plap::exit_config_error;
  }
  catch (plap::MissingRow const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  catch (plap::NonConvergence const &e)
  {
    std::cerr << "solver failure: " << e.what() << '\n';
    return plap::exit_solver_failure;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
