#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <cohesive/gamma_harness.hpp>
#include <cohesive/io_util.hpp>
#include <cohesive/phasefield.hpp>

#include "cli_util.hpp"

using namespace cohesive;
using nlohmann::json;

namespace {

Vector to_vector(const json& j) {
  Vector out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out[int(i)] = j[i].get<double>();
  return out;
}

GridSpec parse_grid(const json& j) {
  GridSpec grid;
  grid.dim = j.at("dim").get<int>();
  const auto& ext = j.at("extent");
  const auto& nds = j.at("nodes");
  for (std::size_t a = 0; a < ext.size() && a < 2; ++a) {
    grid.extent[a] = ext[a].get<double>();
    grid.nodes[a] = nds.at(a).get<int>();
  }
  return grid;
}

// constant: same row at every node; affine: a + <b, x>; file: CSV of rows
Matrix parse_fidelity_target(const json& j, const GridSpec& grid, int m) {
  const std::string kind = j.at("kind").get<std::string>();
  Matrix w(grid.node_count(), m);
  if (kind == "constant") {
    const Vector row = to_vector(j.at("value"));
    if (row.size() != m) throw cli::CliError("fidelity value needs m entries");
    w.rowwise() = row.transpose();
    return w;
  }
  if (kind == "affine") {
    const Vector a = to_vector(j.at("a"));
    const Vector bx = to_vector(j.at("b"));  // per-axis slope, shared by components
    if (a.size() != m || bx.size() != grid.dim)
      throw cli::CliError("affine fidelity needs a (m) and b (dim)");
    for (int ix = 0; ix < grid.nodes[0]; ++ix)
      for (int iy = 0; iy < (grid.dim == 2 ? grid.nodes[1] : 1); ++iy) {
        const double s =
            bx[0] * ix * grid.spacing(0) +
            (grid.dim == 2 ? bx[1] * iy * grid.spacing(1) : 0.0);
        for (int c = 0; c < m; ++c) w(grid.index(ix, iy), c) = a[c] + s;
      }
    return w;
  }
  if (kind == "file") {
    std::ifstream in(j.at("path").get<std::string>());
    if (!in) throw cli::CliError("cannot open fidelity file");
    for (int i = 0; i < grid.node_count(); ++i)
      for (int c = 0; c < m; ++c)
        if (!(in >> w(i, c))) throw cli::CliError("fidelity file too short");
    return w;
  }
  throw cli::CliError("fidelity kind must be constant, affine, or file");
}

json parts_json(const EnergyParts& p) {
  return json{{"elastic", p.elastic},
              {"damage_local", p.damage_local},
              {"damage_gradient", p.damage_gradient},
              {"regularization", p.regularization},
              {"fidelity", p.fidelity},
              {"total", p.total()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alternate-minimize one phase field state from a JSON config"};
  std::string config_path, out_path;
  app.add_option("--config", config_path, "run description (grid, law, eps, clamps)")
      ->required();
  app.add_option("--out", out_path, "state CSV; a .json sidecar gets the trace")
      ->required();
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    if (!in) throw cli::CliError("cannot open " + config_path);
    json j = json::parse(in);

    const json& jl = j.at("law");
    MaterialLaw law = cli::make_law(jl.at("psi").get<std::string>(),
                                    jl.at("ell").get<double>(),
                                    jl.value("m", 1), jl.value("n", 1));
    GridSpec grid = parse_grid(j.at("grid"));
    const double eps = j.at("eps").get<double>();

    SolveConfig cfg;
    if (j.contains("eta_rule"))
      cfg.eta_rule = parse_eta_rule(j["eta_rule"].get<std::string>());
    cfg.max_rounds = j.value("max_rounds", 200);
    cfg.tol_energy = j.value("tol_energy", 1e-9);
    for (const auto& jc : j.value("clamps", json::array())) {
      FaceClamp c;
      c.axis = jc.at("axis").get<int>();
      c.upper = jc.at("upper").get<bool>();
      if (jc.contains("u")) c.u = to_vector(jc["u"]);
      if (jc.contains("v")) c.v = jc["v"].get<double>();
      cfg.clamps.push_back(std::move(c));
    }
    if (j.contains("fidelity")) {
      cfg.fidelity_w = parse_fidelity_target(j["fidelity"], grid, law.m);
      cfg.fidelity_q = j["fidelity"].value("q", 2.0);
    }

    PhaseFieldState state = make_initial_state(law, grid, cfg, eps);
    AlternateTrace trace = alternate_minimize(state, law, grid, cfg);

    std::ostringstream csv;
    csv << (grid.dim == 2 ? "x,y" : "x");
    for (int c = 0; c < law.m; ++c) csv << ",u_" << c;
    csv << ",v\n";
    char buf[64];
    for (int ix = 0; ix < grid.nodes[0]; ++ix)
      for (int iy = 0; iy < (grid.dim == 2 ? grid.nodes[1] : 1); ++iy) {
        const int i = grid.index(ix, iy);
        std::snprintf(buf, sizeof buf, "%.17g", ix * grid.spacing(0));
        csv << buf;
        if (grid.dim == 2) {
          std::snprintf(buf, sizeof buf, ",%.17g", iy * grid.spacing(1));
          csv << buf;
        }
        for (int c = 0; c < law.m; ++c) {
          std::snprintf(buf, sizeof buf, ",%.17g", state.u(i, c));
          csv << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", state.v[i]);
        csv << buf;
      }
    write_file_atomic(out_path, csv.str());

    json side;
    side["energy_parts"] = parts_json(state.parts);
    side["eps"] = eps;
    side["eta"] = cfg.eta(eps);
    side["round_count"] = trace.round_count;
    side["converged"] = trace.converged;
    side["rounds"] = json::array();
    for (const auto& p : trace.rounds) side["rounds"].push_back(parts_json(p));
    write_file_atomic(out_path + ".json", side.dump(2) + "\n");

    std::printf("%s: %d rounds, %s, total %.10g (min v %.6g)\n", out_path.c_str(),
                trace.round_count, trace.converged ? "converged" : "round cap",
                state.parts.total(), state.v.minCoeff());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
