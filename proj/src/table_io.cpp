#include <fstream>
#include <json.hpp>

#include "cohesive/envelopes.hpp"
#include "cohesive/io_util.hpp"

namespace cohesive {

namespace {
const char* kind_name(TableKind k) {
  switch (k) {
    case TableKind::Convex: return "convex";
    case TableKind::Lamination: return "lamination";
    case TableKind::Recession: return "recession";
  }
  return "convex";
}

TableKind kind_from(const std::string& s) {
  if (s == "convex") return TableKind::Convex;
  if (s == "lamination") return TableKind::Lamination;
  if (s == "recession") return TableKind::Recession;
  throw EnvelopeError("unknown table kind: " + s);
}
}  // namespace

void save_table(const EnvelopeTable& table, const std::string& path) {
  nlohmann::json j;
  j["kind"] = kind_name(table.kind);
  j["depth"] = table.depth;
  j["m"] = table.m;
  j["n"] = table.n;
  j["ell"] = table.ell;
  j["law"] = table.law_name;
  j["certified"] = table.certified;
  j["interior_fraction"] = table.interior_fraction;
  auto& ax = j["axes"] = nlohmann::json::array();
  for (const auto& a : table.axes)
    ax.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
  j["values"] = table.values;
  write_file_atomic(path, j.dump());
}

EnvelopeTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EnvelopeError("cannot open table file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw EnvelopeError("malformed table file: " + std::string(e.what()));
  }
  EnvelopeTable table;
  try {
    table.kind = kind_from(j.at("kind").get<std::string>());
    table.depth = j.at("depth").get<int>();
    table.m = j.at("m").get<int>();
    table.n = j.at("n").get<int>();
    table.ell = j.at("ell").get<double>();
    table.law_name = j.at("law").get<std::string>();
    table.certified = j.at("certified").get<bool>();
    table.interior_fraction = j.at("interior_fraction").get<double>();
    for (const auto& a : j.at("axes"))
      table.axes.push_back(
          {a.at("lo").get<double>(), a.at("hi").get<double>(), a.at("count").get<int>()});
    table.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw EnvelopeError("table file missing fields: " + std::string(e.what()));
  }
  if (table.values.size() != table.size())
    throw EnvelopeError("table value count does not match axes");
  return table;
}

}  // namespace cohesive
