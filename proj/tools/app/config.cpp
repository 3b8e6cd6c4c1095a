#include "config.hpp"

#include "partrace/coupling_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace partrace::app {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + what);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  std::string at(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key, double fallback, bool allow_inf = false) {
    const json* v = find(key);
    return v ? to_number(*v, at(key), allow_inf) : fallback;
  }
  template <class Int>
  Int integer(const std::string& key, Int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(at(key), "expected an integer");
    return v->get<Int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

  static double to_number(const json& v, const std::string& path, bool allow_inf) {
    if (allow_inf && v.is_string() && v.get<std::string>() == "inf") return kInf;
    if (!v.is_number()) fail(path, allow_inf ? "expected a number or \"inf\"" : "expected a number");
    return v.get<double>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& path, bool allow_inf) {
  if (!v.is_array()) ObjectReader::fail(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(ObjectReader::to_number(v[i], path + "/" + std::to_string(i), allow_inf));
  }
  return out;
}

std::vector<Eigen::Index> index_list(const json& v, const std::string& path) {
  if (!v.is_array()) ObjectReader::fail(path, "expected an array");
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer()) ObjectReader::fail(path + "/" + std::to_string(i), "expected an integer");
    out.push_back(v[i].get<Eigen::Index>());
  }
  return out;
}

// {"min", "max", "count", "spacing": "linear" | "log"}
std::vector<double> grid(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  const double lo = r.number("min", 0.0);
  const double hi = r.number("max", 1.0);
  const int count = r.integer<int>("count", 10);
  const std::string spacing = r.string("spacing", "linear");
  r.reject_unknown();
  if (count < 1) ObjectReader::fail(r.at("count"), "must be at least 1");
  if (!(hi >= lo)) ObjectReader::fail(r.at("max"), "must not be below min");
  if (spacing != "linear" && spacing != "log") ObjectReader::fail(r.at("spacing"), "expected \"linear\" or \"log\"");
  if (spacing == "log" && !(lo > 0)) ObjectReader::fail(r.at("min"), "log spacing needs a positive min");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(spacing == "log" ? lo * std::pow(hi / lo, f) : lo + f * (hi - lo));
  }
  return out;
}

SystemConfig parse_system(const json& v, const std::filesystem::path& base_dir) {
  ObjectReader r(v, "/system");
  SystemConfig s;
  s.kind = r.string("kind", s.kind);
  if (s.kind == "chain_xx") {
    s.n_sites = r.integer<int>("n_sites", s.n_sites);
    s.j = r.number("j", s.j);
    s.periodic = r.boolean("periodic", s.periodic);
  } else if (s.kind == "long_range_xx") {
    s.n_sites = r.integer<int>("n_sites", s.n_sites);
    s.alpha = r.number("alpha", s.alpha, true);
    if (!(s.alpha > 0)) ObjectReader::fail(r.at("alpha"), "must be positive or \"inf\"");
  } else if (s.kind == "kagome_strip") {
    s.n_cells = r.integer<int>("n_cells", s.n_cells);
    s.j0 = r.number("j0", s.j0);
    s.j1 = r.number("j1", s.j1);
    s.j2 = r.number("j2", s.j2);
    s.periodic = r.boolean("periodic", s.periodic);
    if (s.n_cells < 1) ObjectReader::fail(r.at("n_cells"), "must be at least 1");
    s.n_sites = 5 * s.n_cells;
  } else if (s.kind == "custom") {
    const std::string file = r.string("coupling_file", "");
    if (file.empty()) ObjectReader::fail(r.at("coupling_file"), "required for kind \"custom\"");
    s.coupling_file = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file) : base_dir / file;
    try {
      s.n_sites = read_coupling_file(s.coupling_file).n_sites;
    } catch (const std::exception& e) {
      ObjectReader::fail(r.at("coupling_file"), e.what());
    }
  } else {
    ObjectReader::fail(r.at("kind"), "unknown system kind \"" + s.kind +
                                         "\" (expected chain_xx, long_range_xx, kagome_strip or custom)");
  }
  r.reject_unknown();
  if (s.kind != "kagome_strip" && s.n_sites < 2) ObjectReader::fail(r.at("n_sites"), "must be at least 2");
  return s;
}

}  // namespace

int Config::n_sites() const { return system.n_sites; }

std::vector<double> Config::finite_betas() const {
  std::vector<double> out;
  for (double b : betas) {
    if (std::isfinite(b)) out.push_back(b);
  }
  return out;
}

bool Config::has_infinite_beta() const {
  for (double b : betas) {
    if (std::isinf(b)) return true;
  }
  return false;
}

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: syntax error: ") + e.what());
  }
  ObjectReader r(doc, "");
  Config c;
  if (const json* s = r.find("system")) c.system = parse_system(*s, base_dir);
  c.n_sys_sites = r.integer<int>("n_sys_sites", c.n_sys_sites);
  if (const json* b = r.find("betas")) {
    c.betas = b->is_object() ? grid(*b, "/betas") : number_list(*b, "/betas", true);
  }
  const json* hv = r.find("h_values");
  const json* hg = r.find("h_grid");
  if (hv && hg) ObjectReader::fail("/h_grid", "give either h_values or h_grid, not both");
  if (hv) c.h_values = number_list(*hv, "/h_values", false);
  if (hg) c.h_values = grid(*hg, "/h_grid");
  c.k = r.integer<Eigen::Index>("k", c.k);
  c.m = r.integer<Eigen::Index>("m", c.m);
  c.seed = r.integer<std::uint64_t>("seed", c.seed);
  try {
    c.distribution = parse_distribution(r.string("distribution", to_string(c.distribution)));
  } catch (const std::invalid_argument& e) {
    ObjectReader::fail("/distribution", e.what());
  }
  c.rel_tol = r.number("rel_tol", c.rel_tol);
  c.max_depth = r.integer<Eigen::Index>("max_depth", c.max_depth);
  c.eig_tol = r.number("eig_tol", c.eig_tol);
  c.reorthogonalize = r.boolean("reorthogonalize", c.reorthogonalize);
  c.threads = r.integer<int>("threads", c.threads);
  c.out_dir = r.string("out_dir", c.out_dir.string());
  if (const json* v = r.find("ks")) c.ks = index_list(*v, "/ks");
  if (const json* v = r.find("ms")) c.ms = index_list(*v, "/ms");
  c.runs = r.integer<int>("runs", c.runs);
  c.h_min = r.number("h_min", c.h_min);
  c.h_max = r.number("h_max", c.h_max);
  c.coarse_points = r.integer<int>("coarse_points", c.coarse_points);
  c.bisect_tol = r.number("bisect_tol", c.bisect_tol);
  c.jump_tol = r.number("jump_tol", c.jump_tol);
  c.nodes_per_interval = r.integer<int>("nodes_per_interval", c.nodes_per_interval);
  c.max_bisect_depth = r.integer<int>("max_bisect_depth", c.max_bisect_depth);
  c.fault_injection = r.string("fault_injection", "");
  r.reject_unknown();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void validate(const Config& c) {
  auto fail = [](const std::string& path, const std::string& what) { ObjectReader::fail(path, what); };
  if (c.n_sites() > c.max_n) {
    fail("/system", "system has " + std::to_string(c.n_sites()) + " sites, above the limit of " +
                        std::to_string(c.max_n));
  }
  if (c.n_sys_sites < 1 || c.n_sys_sites >= c.n_sites()) fail("/n_sys_sites", "must lie in [1, n_sites)");
  if (c.betas.empty()) fail("/betas", "must not be empty");
  for (std::size_t i = 0; i < c.betas.size(); ++i) {
    if (std::isnan(c.betas[i]) || c.betas[i] < 0) fail("/betas/" + std::to_string(i), "must be non-negative");
  }
  if (c.h_values.empty()) fail("/h_values", "must not be empty");
  const Eigen::Index d_t = Eigen::Index{1} << c.n_sites();
  if (c.k < 0 || c.k > d_t) fail("/k", "must lie in [0, 2^n_sites]");
  if (c.has_infinite_beta() && c.k < 1) fail("/k", "an infinite beta needs k >= 1");
  if (c.m < 1) fail("/m", "must be at least 1");
  if (!(c.rel_tol > 0)) fail("/rel_tol", "must be positive");
  if (c.max_depth < 1) fail("/max_depth", "must be at least 1");
  if (!(c.eig_tol > 0)) fail("/eig_tol", "must be positive");
  if (c.threads < 1) fail("/threads", "must be at least 1");
  for (std::size_t i = 0; i < c.ks.size(); ++i) {
    if (c.ks[i] < 0 || c.ks[i] > d_t) fail("/ks/" + std::to_string(i), "must lie in [0, 2^n_sites]");
  }
  for (std::size_t i = 0; i < c.ms.size(); ++i) {
    if (c.ms[i] < 1) fail("/ms/" + std::to_string(i), "must be at least 1");
  }
  if (c.runs < 1) fail("/runs", "must be at least 1");
  if (!(c.h_max > c.h_min)) fail("/h_max", "must exceed h_min");
  if (c.coarse_points < 2) fail("/coarse_points", "must be at least 2");
  if (!(c.bisect_tol > 0)) fail("/bisect_tol", "must be positive");
  if (!(c.jump_tol > 0)) fail("/jump_tol", "must be positive");
  if (c.nodes_per_interval < 1) fail("/nodes_per_interval", "must be at least 1");
  if (c.max_bisect_depth < 1) fail("/max_bisect_depth", "must be at least 1");
  if (!c.fault_injection.empty() && c.fault_injection != "corrupt_basis") {
    fail("/fault_injection", "unknown fault \"" + c.fault_injection + "\"");
  }
}

CouplingSpec build_spec(const Config& c, double h) {
  const SystemConfig& s = c.system;
  CouplingSpec spec;
  if (s.kind == "chain_xx") {
    spec = chain_xx(s.n_sites, s.j, s.periodic);
  } else if (s.kind == "long_range_xx") {
    spec = long_range_xx(s.n_sites, s.alpha);
  } else if (s.kind == "kagome_strip") {
    spec = kagome_strip(s.n_cells, s.j0, s.j1, s.j2, s.periodic);
  } else {
    spec = read_coupling_file(s.coupling_file);
  }
  return with_field(std::move(spec), h);
}

}  // namespace partrace::app
