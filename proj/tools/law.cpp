#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "cli_util.hpp"

using namespace cohesive;

int main(int argc, char** argv) {
  CLI::App app{"material law spot checks"};
  app.require_subcommand(1);

  auto* eval = app.add_subcommand("eval", "evaluate psi, its recession and the yield cap");
  std::string psi_name = "euclidean", xi_text;
  double ell = 1.0;
  int m = 1, n = 1;
  eval->add_option("--psi", psi_name, "euclidean | dist_sq_rotations");
  eval->add_option("--ell", ell, "yield threshold")->check(CLI::PositiveNumber);
  eval->add_option("--m", m, "rows of the gradient argument");
  eval->add_option("--n", n, "columns of the gradient argument");
  eval->add_option("--xi", xi_text, "matrix entries, comma separated row-major")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    MaterialLaw law = cli::make_law(psi_name, ell, m, n);
    std::vector<double> entries = cli::parse_values(xi_text);
    if (int(entries.size()) != law.m * law.n)
      throw cli::CliError("expected " + std::to_string(law.m * law.n) + " entries");
    Matrix xi(law.m, law.n);
    for (int i = 0; i < law.m; ++i)
      for (int j = 0; j < law.n; ++j) xi(i, j) = entries[i * law.n + j];
    std::printf("psi            %.17g\n", law.psi(xi));
    std::printf("psi_recession  %.17g\n", law.psi_recession(xi));
    std::printf("h              %.17g\n", law.h(xi));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
