#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include <cohesive/envelopes.hpp>

#include "cli_util.hpp"

using namespace cohesive;

namespace {

AxisSpec parse_axis(const std::string& text) {
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw cli::CliError("grid needs lo:hi:count, got " + text);
  AxisSpec ax;
  ax.lo = std::stod(text.substr(0, c1));
  ax.hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
  ax.count = std::stoi(text.substr(c2 + 1));
  if (!(ax.lo < ax.hi) || ax.count < 2) throw cli::CliError("bad grid axis " + text);
  return ax;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convex and lamination envelope tables"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build", "sample an envelope on a tensor grid");
  std::string law_name = "euclidean", kind = "convex", grid_text, out_path;
  double ell = 1.0;
  int m = 1, n = 1, depth = 3, split_budget = 8;
  build->add_option("--law", law_name, "euclidean | dist_sq_rotations");
  build->add_option("--ell", ell)->check(CLI::PositiveNumber);
  build->add_option("--m", m);
  build->add_option("--n", n);
  build->add_option("--kind", kind, "convex | lamination");
  build->add_option("--depth", depth, "lamination depth");
  build->add_option("--split", split_budget, "lamination split search budget");
  build->add_option("--grid", grid_text, "lo:hi:count, applied to every axis")
      ->required();
  build->add_option("--out", out_path)->required();

  auto* query = app.add_subcommand("query", "interpolate a stored table");
  std::string table_path, at_text;
  query->add_option("--table", table_path)->required();
  query->add_option("--at", at_text, "point entries, comma separated row-major")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      MaterialLaw law = cli::make_law(law_name, ell, m, n);
      std::vector<AxisSpec> axes(std::size_t(law.m) * law.n, parse_axis(grid_text));
      EnvelopeTable table;
      if (kind == "convex")
        table = convex_envelope_grid(law, axes);
      else if (kind == "lamination")
        table = lamination_table(law, axes, depth, split_budget);
      else
        throw cli::CliError("unknown kind '" + kind + "'");
      table.law_name = law_name;
      save_table(table, out_path);
      std::printf("wrote %s (%zu nodes)\n", out_path.c_str(), table.values.size());
    } else {
      EnvelopeTable table = load_table(table_path);
      std::vector<double> pt = cli::parse_values(at_text);
      if (pt.size() != table.axes.size())
        throw cli::CliError("expected " + std::to_string(table.axes.size()) +
                            " coordinates");
      if (!table.covers(pt)) throw cli::CliError("point outside the table range");
      std::printf("value    %.17g\n", table.interp(pt));
      std::printf("interior %s\n", table.interior(pt) ? "yes" : "no");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
