#pragma once

// small shared pieces for the command line tools; not part of the library

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <cohesive/io_util.hpp>
#include <cohesive/material_law.hpp>
#include <cohesive/surface_density.hpp>

namespace cli {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline cohesive::MaterialLaw make_law(const std::string& psi, double ell, int m, int n) {
  if (psi == "euclidean") return cohesive::MaterialLaw::euclidean(ell, m, n);
  if (psi == "dist_sq_rotations") return cohesive::MaterialLaw::dist_sq_rotations(ell, n);
  throw CliError("unknown psi '" + psi + "' (euclidean | dist_sq_rotations)");
}

// comma separated doubles; "a:step:b" expands to an inclusive lattice
inline std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(std::stod(item));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) throw CliError("range needs lo:step:hi, got " + item);
    const double lo = std::stod(item.substr(0, c1));
    const double step = std::stod(item.substr(c1 + 1, c2 - c1 - 1));
    const double hi = std::stod(item.substr(c2 + 1));
    if (!(step > 0)) throw CliError("range step must be positive");
    for (double x = lo; x <= hi + 1e-12 * (1.0 + std::abs(hi)); x += step)
      out.push_back(x);
  }
  if (out.empty()) throw CliError("empty value list");
  return out;
}

inline void save_curve(const cohesive::SurfaceDensityCurve& curve,
                       const std::string& path) {
  nlohmann::json j;
  j["ell"] = curve.ell;
  j["T_used"] = curve.T_used;
  j["amplitudes"] = curve.amplitudes;
  j["g_values"] = curve.g_values;
  nlohmann::json meta = nlohmann::json::array();
  for (const auto& m : curve.meta)
    meta.push_back({{"g_prev", m.g_prev},
                    {"g_last", m.g_last},
                    {"richardson", m.richardson},
                    {"rel_change", m.rel_change},
                    {"converged", m.converged}});
  j["meta"] = meta;
  cohesive::write_file_atomic(path, j.dump(2) + "\n");
}

inline cohesive::SurfaceDensityCurve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("cannot open curve file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CliError(std::string("bad curve file: ") + e.what());
  }
  cohesive::SurfaceDensityCurve curve;
  try {
    curve.ell = j.at("ell").get<double>();
    curve.T_used = j.at("T_used").get<double>();
    curve.amplitudes = j.at("amplitudes").get<std::vector<double>>();
    curve.g_values = j.at("g_values").get<std::vector<double>>();
    for (const auto& m : j.at("meta"))
      curve.meta.push_back({m.at("g_prev").get<double>(), m.at("g_last").get<double>(),
                            m.at("richardson").get<double>(),
                            m.at("rel_change").get<double>(),
                            m.at("converged").get<bool>()});
  } catch (const nlohmann::json::exception& e) {
    throw CliError(std::string("curve file missing fields: ") + e.what());
  }
  return curve;
}

}  // namespace cli
