#include "partrace/coupling_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace partrace {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw std::invalid_argument("coupling file: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T required(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw std::invalid_argument("coupling file: missing '" + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("coupling file: bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

}  // namespace

CouplingSpec parse_coupling_spec(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("coupling file: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("coupling file: top level must be an object");
  reject_unknown(doc, {"sites", "field_h", "couplings"}, "top level");

  CouplingSpec spec;
  spec.n_sites = required<int>(doc, "sites", "top level");
  spec.field_h = doc.contains("field_h") ? required<double>(doc, "field_h", "top level") : 0.0;
  if (doc.contains("couplings")) {
    const json& list = doc.at("couplings");
    if (!list.is_array()) throw std::invalid_argument("coupling file: 'couplings' must be an array");
    for (std::size_t n = 0; n < list.size(); ++n) {
      const std::string where = "couplings[" + std::to_string(n) + "]";
      const json& entry = list[n];
      if (!entry.is_object()) throw std::invalid_argument("coupling file: " + where + " must be an object");
      reject_unknown(entry, {"axis", "i", "j", "value"}, where);
      const auto axis = required<std::string>(entry, "axis", where);
      Coupling c{required<int>(entry, "i", where) - 1, required<int>(entry, "j", where) - 1,
                 required<double>(entry, "value", where)};
      if (c.i > c.j) std::swap(c.i, c.j);
      if (axis == "x") {
        spec.jx.push_back(c);
      } else if (axis == "y") {
        spec.jy.push_back(c);
      } else if (axis == "z") {
        spec.jz.push_back(c);
      } else {
        throw std::invalid_argument("coupling file: " + where + " has axis '" + axis +
                                    "' (expected x, y or z)");
      }
    }
  }
  spec.validate();
  return spec;
}

std::string format_coupling_spec(const CouplingSpec& spec) {
  json doc;
  doc["sites"] = spec.n_sites;
  doc["field_h"] = spec.field_h;
  json list = json::array();
  const std::pair<Axis, const char*> axes[] = {{Axis::kX, "x"}, {Axis::kY, "y"}, {Axis::kZ, "z"}};
  for (const auto& [axis, name] : axes) {
    for (const Coupling& c : spec.axis(axis)) {
      list.push_back({{"axis", name}, {"i", c.i + 1}, {"j", c.j + 1}, {"value", c.value}});
    }
  }
  doc["couplings"] = std::move(list);
  return doc.dump(2) + "\n";
}

CouplingSpec read_coupling_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("coupling file: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_coupling_spec(buffer.str());
}

void write_coupling_file(const CouplingSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_coupling_spec(spec);
}

}  // namespace partrace
