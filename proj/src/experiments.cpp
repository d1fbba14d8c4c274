#include "spinlab/experiments.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "spinlab/angle.hpp"
#include "spinlab/interaction.hpp"
#include "spinlab/layer_measure.hpp"
#include "spinlab/longrange_walk.hpp"
#include "spinlab/percolation.hpp"
#include "spinlab/rng.hpp"
#include "spinlab/sampler.hpp"
#include "spinlab/spinwave.hpp"

namespace spinlab {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_top(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> to_long(const std::string& s) {
  const std::string t = trim(s);
  long v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::string key_of(const std::string& section, const std::string& key) { return section + "." + key; }

}  // namespace

void config_fail(const std::string& section, const std::string& key, const std::string& why) {
  throw ConfigError(key_of(section, key) + ": " + why);
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section + ": key outside of a section");
    for (const auto& [key, value] : body) cfg.values_[section][key] = trim(value.data());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
  auto it = values_.find(section);
  return it != values_.end() && it->second.count(key) > 0;
}

std::string ExperimentConfig::get_string(const std::string& section, const std::string& key,
                                         const std::string& def) const {
  used_.insert(key_of(section, key));
  if (!has(section, key)) return def;
  return values_.at(section).at(key);
}

double ExperimentConfig::get_double(const std::string& section, const std::string& key, double def) const {
  if (!has(section, key)) {
    used_.insert(key_of(section, key));
    return def;
  }
  const std::string raw = get_string(section, key, "");
  auto v = to_double(raw);
  if (!v) config_fail(section, key, "expected a finite number, got '" + raw + "'");
  return *v;
}

long ExperimentConfig::get_int(const std::string& section, const std::string& key, long def) const {
  if (!has(section, key)) {
    used_.insert(key_of(section, key));
    return def;
  }
  const std::string raw = get_string(section, key, "");
  auto v = to_long(raw);
  if (!v) config_fail(section, key, "expected an integer, got '" + raw + "'");
  return *v;
}

bool ExperimentConfig::get_bool(const std::string& section, const std::string& key, bool def) const {
  if (!has(section, key)) {
    used_.insert(key_of(section, key));
    return def;
  }
  const std::string raw = get_string(section, key, "");
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  config_fail(section, key, "expected true or false, got '" + raw + "'");
}

std::vector<std::string> ExperimentConfig::get_list(const std::string& section, const std::string& key,
                                                    const std::vector<std::string>& def) const {
  if (!has(section, key)) {
    used_.insert(key_of(section, key));
    return def;
  }
  auto items = split_top(get_string(section, key, ""));
  for (const auto& s : items)
    if (s.empty()) config_fail(section, key, "empty list entry");
  if (items.empty()) config_fail(section, key, "empty list");
  return items;
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& section, const std::string& key,
                                                  const std::vector<double>& def) const {
  if (!has(section, key)) {
    used_.insert(key_of(section, key));
    return def;
  }
  std::vector<double> out;
  for (const auto& s : get_list(section, key, {})) {
    auto v = to_double(s);
    if (!v) config_fail(section, key, "expected finite numbers, got '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<long> ExperimentConfig::get_ints(const std::string& section, const std::string& key,
                                             const std::vector<long>& def) const {
  if (!has(section, key)) {
    used_.insert(key_of(section, key));
    return def;
  }
  std::vector<long> out;
  for (const auto& s : get_list(section, key, {})) {
    auto v = to_long(s);
    if (!v) config_fail(section, key, "expected integers, got '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

std::string ExperimentConfig::experiment() const {
  const std::string e = get_string("run", "experiment", "");
  if (e.empty()) config_fail("run", "experiment", "missing; one of the names listed by `presets`");
  return e;
}

std::uint64_t ExperimentConfig::seed() const {
  const std::string raw = get_string("run", "seed", "1");
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc() || p != raw.data() + raw.size() || raw.empty())
    config_fail("run", "seed", "expected an unsigned 64-bit integer, got '" + raw + "'");
  return v;
}

void ExperimentConfig::set_seed(std::uint64_t seed) { values_["run"]["seed"] = std::to_string(seed); }

std::optional<std::string> ExperimentConfig::out() const {
  if (!has("run", "out")) {
    used_.insert("run.out");
    return std::nullopt;
  }
  return get_string("run", "out", "");
}

void ExperimentConfig::check_unused() const {
  std::string unknown;
  for (const auto& [section, body] : values_)
    for (const auto& [key, value] : body)
      if (!used_.count(key_of(section, key))) unknown += (unknown.empty() ? "" : ", ") + key_of(section, key);
  if (!unknown.empty()) throw ConfigError("unknown field(s): " + unknown);
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  for (const auto& [section, body] : values_)
    for (const auto& [key, value] : body) {
      if (section == "run" && key == "out") continue;
      s += key_of(section, key) + " = " + value + "\n";
    }
  return s;
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

// ---------------------------------------------------------------------------
// Formatting, hashing, files

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(long v) { return std::to_string(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

bool Atom::holds() const {
  if (!std::isfinite(lhs) || !std::isfinite(rhs)) return false;
  if (op == "<=") return lhs <= rhs;
  if (op == "<") return lhs < rhs;
  if (op == ">=") return lhs >= rhs;
  if (op == ">") return lhs > rhs;
  if (op == "==") return lhs == rhs;
  return false;
}

bool CriterionResult::pass() const {
  if (atoms.empty()) return false;
  return std::all_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.holds(); });
}

std::string CriterionResult::detail() const {
  auto show = [](const Atom& a) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: %.6g %s %.6g", a.label.c_str(), a.lhs, a.op.c_str(), a.rhs);
    return std::string(buf);
  };
  std::string s;
  const bool ok = pass();
  for (const auto& a : atoms)
    if (ok || !a.holds()) s += (s.empty() ? "" : "; ") + show(a);
  return s;
}

nlohmann::ordered_json ExperimentResult::summary() const {
  nlohmann::ordered_json j;
  j["schema"] = kSchemaVersion;
  j["experiment"] = experiment;
  j["code_version"] = kCodeVersion;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["task_seeds"] = task_seeds;
  j["parameters"] = parameters;
  j["results"] = results;
  auto crit = nlohmann::ordered_json::array();
  for (const auto& c : criteria) {
    nlohmann::ordered_json cj;
    cj["id"] = c.id;
    cj["name"] = c.name;
    cj["pass"] = c.pass();
    auto atoms = nlohmann::ordered_json::array();
    for (const auto& a : c.atoms)
      atoms.push_back({{"label", a.label}, {"lhs", a.lhs}, {"op", a.op}, {"rhs", a.rhs}, {"holds", a.holds()}});
    cj["atoms"] = atoms;
    crit.push_back(cj);
  }
  j["criteria"] = crit;
  auto names = nlohmann::ordered_json::array();
  for (const auto& t : tables) names.push_back(t.name + ".csv");
  j["tables"] = names;
  return j;
}

std::vector<CriterionResult> criteria_from_summary(const nlohmann::json& summary) {
  std::vector<CriterionResult> out;
  if (!summary.contains("criteria") || !summary["criteria"].is_array()) return out;
  for (const auto& cj : summary["criteria"]) {
    CriterionResult c;
    c.id = cj.value("id", 0);
    c.name = cj.value("name", "");
    for (const auto& aj : cj.value("atoms", nlohmann::json::array())) {
      Atom a;
      a.label = aj.value("label", "");
      a.op = aj.value("op", "");
      // null marks a non-finite stored value
      a.lhs = aj.contains("lhs") && aj["lhs"].is_number() ? aj["lhs"].get<double>() : std::nan("");
      a.rhs = aj.contains("rhs") && aj["rhs"].is_number() ? aj["rhs"].get<double>() : std::nan("");
      c.atoms.push_back(a);
    }
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> write_outputs(const ExperimentResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  const std::string prefix = r.experiment + "," + r.config_hash.substr(0, 16) + "," + std::to_string(r.seed);
  try {
    for (const auto& t : r.tables) {
      std::string s = "experiment,config,seed";
      for (const auto& h : t.header) s += "," + h;
      s += "\n";
      for (const auto& row : t.rows) {
        if (row.size() != t.header.size())
          throw std::logic_error("table " + t.name + ": row width does not match the header");
        s += prefix;
        for (const auto& c : row) s += "," + c;
        s += "\n";
      }
      const std::string name = t.name + ".csv";
      atomic_write(dir / name, s);
      written.push_back(name);
    }
    atomic_write(dir / "summary.json", r.summary().dump(2) + "\n");
    written.push_back("summary.json");
  } catch (...) {
    for (const auto& f : written) fs::remove(dir / f);
    throw;
  }
  return written;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

using Defaults = std::vector<std::pair<std::string, std::string>>;

const std::map<std::string, Defaults>& defaults_table() {
  static const std::map<std::string, Defaults> t{
      {"layers",
       {{"potential", "xy(1)"}, {"n", "32"}, {"orbits", "50"}, {"k_max", "4"}, {"ladder", "8,16,32"},
        {"grid", "4096"}}},
      {"extremal", {{"C", "2,1"}, {"s", "1"}, {"grid", "4096"}}},
      {"decompose51",
       {{"potentials", "absval"}, {"eps", "0.1"}, {"c", "0.01,0.05"}, {"states", "8"}, {"side", "3"},
        {"quad_points", "2048"}, {"search_points", "32"}}},
      {"sparseness",
       {{"eps", "0.01"}, {"alpha", "0.1"}, {"rho", "0.5"}, {"samples", "200"}, {"n", "16,32,64"},
        {"instances", "20"}, {"instance_density", "0.25"}}},
      {"recurrence", {{"kernels", "nn,powerlaw(3.5),logcorr(2)"}, {"radius", "8192"}, {"y_kernels", "nn"},
                      {"y_eps", "0.2"}}},
      {"spinwave",
       {{"kernel", "nn"}, {"eps", "0.2"}, {"R", "2"}, {"psi", "0.78539816339744831"}, {"n", "16,32,64,128"},
        {"spots", "5"}, {"walks", "100000"}, {"mc_n", "32"}, {"entropy_n", "16,64"}, {"entropy_samples", "100"}}},
      {"entropy",
       {{"kernel", "nn"}, {"eps", "0.2"}, {"R", "2"}, {"psi", "0.78539816339744831"}, {"n", "16,64"},
        {"samples", "100"}}},
      {"rotation",
       {{"potential", "xy(1)"}, {"bc", "fixed(0)"}, {"psi", "1.5707963267948966"}, {"n", "8,16,32"},
        {"sweeps", "150000,250000,400000"}, {"burn_in", "2000"}, {"batches", "32"}}},
      {"twopoint",
       {{"potential", "xy(2)"}, {"bc", "free"}, {"n", "32"}, {"distances", "1,2,4,8,16"}, {"sweeps", "4000"},
        {"burn_in", "1000"}, {"batches", "32"}}},
      {"aizenman",
       {{"k", "12"}, {"delta", "0.05"}, {"sigma", "auto"}, {"n", "16"}, {"restarts", "16"},
        {"boundary_sweeps", "20"}, {"burn_in", "500"}, {"sweeps", "2000"}, {"free_restarts", "4"},
        {"free_sweeps", "4000"}}},
  };
  return t;
}

// Typed access to one experiment section with defaults from the table above.
class Section {
 public:
  Section(const ExperimentConfig& cfg, std::string name) : cfg_(cfg), name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  std::string str(const std::string& key) const { return cfg_.get_string(name_, key, def(key)); }
  double num(const std::string& key) const { return cfg_.get_double(name_, key, *to_double(def(key))); }
  long integer(const std::string& key) const { return cfg_.get_int(name_, key, *to_long(def(key))); }
  std::vector<std::string> list(const std::string& key) const {
    return cfg_.get_list(name_, key, split_top(def(key)));
  }
  std::vector<double> nums(const std::string& key) const {
    std::vector<double> d;
    for (const auto& s : split_top(def(key))) d.push_back(*to_double(s));
    return cfg_.get_doubles(name_, key, d);
  }
  std::vector<long> ints(const std::string& key) const {
    std::vector<long> d;
    for (const auto& s : split_top(def(key))) d.push_back(*to_long(s));
    return cfg_.get_ints(name_, key, d);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const { config_fail(name_, key, why); }

  double in_range(const std::string& key, double lo, double hi, bool open_lo = true, bool open_hi = true) const {
    const double v = num(key);
    const bool ok = (open_lo ? v > lo : v >= lo) && (open_hi ? v < hi : v <= hi);
    if (!ok)
      fail(key, "must lie in " + std::string(open_lo ? "(" : "[") + fmt(lo) + ", " + fmt(hi) +
                    (open_hi ? ")" : "]") + ", got " + fmt(v));
    return v;
  }
  long at_least(const std::string& key, long lo, long hi = 1L << 40) const {
    const long v = integer(key);
    if (v < lo || v > hi) fail(key, "must lie in [" + fmt(lo) + ", " + fmt(hi) + "], got " + fmt(v));
    return v;
  }
  std::vector<long> ints_at_least(const std::string& key, long lo, long hi = 1L << 40) const {
    auto v = ints(key);
    for (long x : v)
      if (x < lo || x > hi) fail(key, "entries must lie in [" + fmt(lo) + ", " + fmt(hi) + "], got " + fmt(x));
    return v;
  }
  PairPotential potential(const std::string& key) const {
    const std::string s = str(key);
    try {
      return parse_potential(s);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }
  CouplingKernel kernel(const std::string& key, const std::string& spec, int radius) const {
    try {
      return parse_kernel(spec, radius);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

 private:
  std::string def(const std::string& key) const {
    for (const auto& [k, v] : defaults_table().at(name_))
      if (k == key) return v;
    throw std::logic_error("no default for " + name_ + "." + key);
  }

  const ExperimentConfig& cfg_;
  std::string name_;
};

// "fixed(v)", "free", "staircase(k[,sigma])", "smeared(k,delta[,sigma])".
BoundaryCondition parse_bc(const Section& sec, const std::string& key) {
  const std::string s = sec.str(key);
  const auto open = s.find('(');
  const std::string head = trim(s.substr(0, open));
  std::vector<double> args;
  if (open != std::string::npos) {
    if (s.back() != ')') sec.fail(key, "unbalanced parentheses in '" + s + "'");
    for (const auto& a : split_top(s.substr(open + 1, s.size() - open - 2))) {
      auto v = to_double(a);
      if (!v) sec.fail(key, "bad argument '" + a + "'");
      args.push_back(*v);
    }
  }
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) sec.fail(key, "wrong number of arguments in '" + s + "'");
  };
  if (head == "free") {
    need(0, 0);
    return BoundaryCondition::free();
  }
  if (head == "fixed") {
    need(1, 1);
    return BoundaryCondition::fixed(args[0]);
  }
  if (head == "staircase" || head == "smeared") {
    const bool sm = head == "smeared";
    need(sm ? 2 : 1, sm ? 3 : 2);
    if (args[0] < 4 || args[0] != std::floor(args[0])) sec.fail(key, "k must be an integer >= 4");
    const int k = static_cast<int>(args[0]);
    if (sm) {
      if (args[1] < 0) sec.fail(key, "delta must be nonnegative");
      return BoundaryCondition::smeared(k, args[1], args.size() > 2 ? args[2] : 2.0);
    }
    return BoundaryCondition::staircase(k, args.size() > 1 ? args[1] : 2.0);
  }
  sec.fail(key, "unknown boundary condition '" + s + "' (fixed(v), free, staircase(k,sigma), smeared(k,delta,sigma))");
}

// short form for labels
std::string lbl(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Atom atom(std::string label, double lhs, std::string op, double rhs) {
  return Atom{std::move(label), lhs, std::move(op), rhs};
}

Atom truth(std::string label, bool v) { return atom(std::move(label), v ? 1.0 : 0.0, "==", 1.0); }

std::vector<std::uint64_t> seeds_for(std::uint64_t master, std::size_t count) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < count; ++i) s.push_back(split_seed(master, i));
  return s;
}

using Runner = std::function<void(ExperimentResult&)>;

// -- layers -----------------------------------------------------------------

Runner prepare_layers(const ExperimentConfig& cfg) {
  Section sec(cfg, "layers");
  const PairPotential pot = sec.potential("potential");
  if (!pot.curvature_bound) sec.fail("potential", "needs a potential with a known curvature bound");
  if (pot.hard_core) sec.fail("potential", "hard-core potentials have no density cap");
  const int n = static_cast<int>(sec.at_least("n", 2, 512));
  const std::size_t orbits = static_cast<std::size_t>(sec.at_least("orbits", 1, 100000));
  const int k_max = static_cast<int>(sec.at_least("k_max", 0, 512));
  if (k_max > n - 1) sec.fail("k_max", "must be below n");
  const auto ladder = sec.ints_at_least("ladder", 1, 512);
  const int grid = static_cast<int>(sec.at_least("grid", 16, 1 << 20));
  if ((grid & (grid - 1)) != 0) sec.fail("grid", "must be a power of two");

  return [=](ExperimentResult& r) {
    const double c_bar = *pot.curvature_bound;
    const double c1 = sup_density_bound(0, c_bar).c1;
    r.parameters = {{"potential", pot.name}, {"c_bar", c_bar}, {"c1", c1}, {"n", n}, {"orbits", orbits},
                    {"k_max", k_max}, {"ladder", ladder}, {"grid", grid}};
    r.task_seeds = seeds_for(r.seed, ladder.size() + 1);

    Table pipe{"uniformity", {"orbit", "k", "r", "sup_deviation", "bound", "ratio"}, {}};
    double worst_ratio = 0.0;
    std::size_t checks = 0;
    for (std::size_t o = 0; o < orbits; ++o) {
      Rng rng = make_rng(split_seed(r.task_seeds[0], o));
      const auto orbit = random_orbit(n, rng);
      std::vector<CircleDensity> q;
      for (int k = 0; k <= n; ++k) q.push_back(chi_density(layer_potential(k, orbit, pot, grid)));
      for (int k = 0; k <= k_max; ++k) {
        CircleDensity acc = q[static_cast<std::size_t>(k)];
        for (int rr = k + 1; rr <= n; ++rr) {
          acc = convolve(acc, q[static_cast<std::size_t>(rr)]);
          const double dev = acc.sup_deviation(), bound = uniformity_bound(k, rr, c1);
          worst_ratio = std::max(worst_ratio, dev / bound);
          ++checks;
          pipe.add({fmt(o), fmt(k), fmt(rr), fmt(dev), fmt(bound), fmt(dev / bound)});
        }
      }
    }

    Table p0{"p0_ladder", {"n", "orbit", "sup_deviation"}, {}};
    Table p0s{"p0_summary", {"n", "mean", "max"}, {}};
    std::vector<double> means;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const int m = static_cast<int>(ladder[i]);
      double sum = 0.0, mx = 0.0;
      for (std::size_t o = 0; o < orbits; ++o) {
        Rng rng = make_rng(split_seed(r.task_seeds[i + 1], o));
        const auto orbit = random_orbit(m, rng);
        std::vector<CircleDensity> q;
        for (int k = 0; k <= m; ++k) q.push_back(chi_density(layer_potential(k, orbit, pot, grid)));
        const double dev = convolve(q).sup_deviation();
        sum += dev;
        mx = std::max(mx, dev);
        p0.add({fmt(m), fmt(o), fmt(dev)});
      }
      means.push_back(sum / static_cast<double>(orbits));
      p0s.add({fmt(m), fmt(means.back()), fmt(mx)});
    }
    r.tables = {pipe, p0, p0s};
    r.results = {{"checks", checks}, {"worst_ratio", worst_ratio}, {"p0_mean", means}};

    CriterionResult c{1, "layer uniformity pipeline", {}};
    c.atoms.push_back(atom("max sup|p_kr - 1| / bound over k <= " + std::to_string(k_max), worst_ratio, "<=", 1.0));
    for (std::size_t i = 1; i < means.size(); ++i)
      c.atoms.push_back(atom("mean sup|p_0 - 1| at n=" + std::to_string(ladder[i]) + " vs n=" +
                                 std::to_string(ladder[i - 1]),
                             means[i], "<", means[i - 1]));
    r.criteria.push_back(c);
  };
}

// -- extremal ---------------------------------------------------------------

Runner prepare_extremal(const ExperimentConfig& cfg) {
  Section sec(cfg, "extremal");
  const auto Cs = sec.nums("C");
  for (double C : Cs)
    if (C < 1.0) sec.fail("C", "entries must be at least 1, got " + fmt(C));
  const int s = static_cast<int>(sec.at_least("s", 1, 1 << 20));
  const int grid = static_cast<int>(sec.at_least("grid", 16, 1 << 24));
  if ((grid & (grid - 1)) != 0) sec.fail("grid", "must be a power of two");
  if (2 * s >= grid) sec.fail("s", "must be below grid / 2");

  return [=](ExperimentResult& r) {
    r.parameters = {{"C", Cs}, {"s", s}, {"grid", grid}};
    Table t{"extremal", {"C", "s", "value", "lemma_bound", "sharp"}, {}};
    CriterionResult c{2, "extremal Fourier lemma", {}};
    for (double C : Cs) {
      const double v = extremal_fourier_oracle(C, s, grid).value;
      const auto b = fourier_max_bound(C);
      t.add({fmt(C), fmt(s), fmt(v), fmt(b.lemma), fmt(b.sharp)});
      r.results[fmt(C)] = {{"value", v}, {"lemma_bound", b.lemma}, {"sharp", b.sharp}};
      if (C == 2.0 && s == 1) {
        c.atoms.push_back(atom("|value - 2/pi| at C=2", std::abs(v - 2.0 / kPi), "<=", 1e-3));
        c.atoms.push_back(atom("value vs 1 - 1/144 at C=2", v, "<=", 1.0 - 1.0 / 144.0));
      }
      if (C == 1.0) c.atoms.push_back(atom("|value| at C=1", std::abs(v), "<=", 1e-6));
      c.atoms.push_back(atom("value vs lemma bound at C=" + lbl(C), v, "<=", b.lemma));
    }
    r.tables = {t};
    r.criteria.push_back(c);
  };
}

// -- decompose51 ------------------------------------------------------------

Runner prepare_decompose51(const ExperimentConfig& cfg) {
  Section sec(cfg, "decompose51");
  std::vector<PairPotential> pots;
  for (const auto& s : sec.list("potentials")) {
    try {
      pots.push_back(parse_potential(s));
    } catch (const std::invalid_argument& e) {
      sec.fail("potentials", e.what());
    }
  }
  const double eps = sec.in_range("eps", 0.0, 1.0);
  const auto cs = sec.nums("c");
  for (double c : cs)
    if (!(c > 0.0 && c < 1.0)) sec.fail("c", "entries must lie in (0, 1), got " + fmt(c));
  const int states = static_cast<int>(sec.at_least("states", 2, 16));
  const int side = static_cast<int>(sec.at_least("side", 2, 3));
  const int quad = static_cast<int>(sec.at_least("quad_points", 16, 1 << 16));
  const int search = static_cast<int>(sec.at_least("search_points", 2, 256));

  return [=](ExperimentResult& r) {
    std::vector<std::string> names;
    for (const auto& p : pots) names.push_back(p.name);
    r.parameters = {{"potentials", names}, {"eps", eps}, {"c", cs}, {"states", states}, {"side", side},
                    {"quad_points", quad}, {"search_points", search}};
    Table dec{"decomposition",
              {"potential", "eps", "method", "degree", "c_bar", "max_upsilon", "ratio", "domination_eps"},
              {}};
    for (const auto& p : pots) {
      const auto d = decompose(p, eps);
      const auto c51 = verify_condition_51(d, quad, search);
      const auto de = domination_epsilon(c51.ratio);
      dec.add({p.name, fmt(eps), d.method, fmt(d.smooth.degree()), fmt(d.c_bar), fmt(d.max_upsilon),
               fmt(c51.ratio), fmt(de.epsilon)});
      r.results["decomposition"][p.name] = {{"degree", d.smooth.degree()}, {"ratio", c51.ratio},
                                             {"domination_eps", de.epsilon}};
    }
    Table toy{"toy_domination",
              {"c", "states", "side", "bonds", "conditionings", "max_conditional", "min_conditional", "bound"},
              {}};
    CriterionResult c{3, "domination on enumerable systems", {}};
    for (double cv : cs) {
      const auto d = make_decomposition(TrigPolynomial{{cv, -1.0}}, xy_potential(1.0));
      const auto t = enumerate_domination(d, states, side);
      const double bound = std::exp(4.0 * cv) - 1.0;
      toy.add({fmt(cv), fmt(states), fmt(side), fmt(t.bonds), fmt(t.conditionings), fmt(t.max_conditional),
               fmt(t.min_conditional), fmt(bound)});
      c.atoms.push_back(atom("max conditional open probability at c=" + lbl(cv), t.max_conditional, "<=", bound));
      r.results["toy"][fmt(cv)] = {{"max_conditional", t.max_conditional}, {"bound", bound},
                                   {"conditionings", t.conditionings}};
    }
    r.tables = {dec, toy};
    r.criteria.push_back(c);
  };
}

// -- sparseness -------------------------------------------------------------

Runner prepare_sparseness(const ExperimentConfig& cfg) {
  Section sec(cfg, "sparseness");
  const double eps = sec.in_range("eps", 0.0, 1.0, false, true);
  const double alpha = sec.in_range("alpha", 0.0, 0.5);
  const double rho = sec.in_range("rho", 0.0, 1.0);
  const std::size_t samples = static_cast<std::size_t>(sec.at_least("samples", 1, 1000000));
  const auto ns = sec.ints_at_least("n", 4, 4096);
  const std::size_t instances = static_cast<std::size_t>(sec.at_least("instances", 0, 10000));
  const double density = sec.in_range("instance_density", 0.0, 1.0, false, false);

  return [=](ExperimentResult& r) {
    r.parameters = {{"eps", eps}, {"alpha", alpha}, {"rho", rho}, {"samples", samples}, {"n", ns},
                    {"instances", instances}, {"instance_density", density}};
    r.task_seeds = seeds_for(r.seed, ns.size() + 1);
    Table t{"sparseness", {"n", "samples", "failures", "frequency", "ci_lo", "ci_hi", "invalid"}, {}};
    std::vector<double> freq;
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto e = estimate_sparseness_failure(eps, static_cast<int>(ns[i]), samples, alpha, rho, r.task_seeds[i]);
      freq.push_back(e.frequency());
      invalid += e.invalid;
      t.add({fmt(ns[i]), fmt(e.samples), fmt(e.failures), fmt(e.frequency()), fmt(e.ci.lo), fmt(e.ci.hi),
             fmt(e.invalid)});
    }

    // small rectangles where the exhaustive packing is feasible
    Table mf{"maxflow_check", {"instance", "width", "height", "open_bonds", "max_flow", "brute_force"}, {}};
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < instances; ++i) {
      const int W = 3 + static_cast<int>(i % 3), H = 2 + static_cast<int>(i % 2);
      ShellRectangle rect;
      rect.scale = 2;
      rect.side = Side::North;
      rect.x_lo = -2;
      rect.x_hi = -2 + W;
      rect.y_lo = 1;
      rect.y_hi = 1 + H;
      BondSet A;
      Rng rng = make_rng(split_seed(r.task_seeds.back(), i));
      std::uniform_real_distribution<double> U(0.0, 1.0);
      for (Bond b : cut_bonds(rect))
        if (U(rng) < density) A.insert(b);
      const std::size_t flow = disjoint_good_crossings(rect, A).paths.size();
      const std::size_t brute = brute_force_disjoint_crossings(rect, A);
      if (flow != brute) ++mismatches;
      mf.add({fmt(i), fmt(W), fmt(H), fmt(A.size()), fmt(flow), fmt(brute)});
    }
    r.tables = {t, mf};
    r.results = {{"frequency", freq}, {"invalid", invalid}, {"maxflow_mismatches", mismatches}};

    CriterionResult c{4, "sparseness Monte Carlo", {}};
    for (std::size_t i = 1; i < ns.size(); ++i)
      c.atoms.push_back(atom("failure frequency at n=" + fmt(ns[i]) + " vs n=" + fmt(ns[i - 1]), freq[i], "<=",
                             freq[i - 1]));
    if (!ns.empty()) c.atoms.push_back(atom("failure frequency at n=" + fmt(ns.back()), freq.back(), "<=", 0.05));
    c.atoms.push_back(atom("certificates failing validation", static_cast<double>(invalid), "==", 0.0));
    if (instances > 0)
      c.atoms.push_back(atom("max-flow vs brute-force mismatches", static_cast<double>(mismatches), "==", 0.0));
    r.criteria.push_back(c);
  };
}

// -- recurrence -------------------------------------------------------------

Runner prepare_recurrence(const ExperimentConfig& cfg) {
  Section sec(cfg, "recurrence");
  const int radius = static_cast<int>(sec.at_least("radius", 8, 1 << 16));
  const auto specs = sec.list("kernels");
  const auto yspecs = sec.list("y_kernels");
  const double y_eps = sec.in_range("y_eps", 0.0, 1.0);
  // parse up front so that a bad preset is a config error
  for (const auto& s : specs) (void)sec.kernel("kernels", s, 8);
  for (const auto& s : yspecs) (void)sec.kernel("y_kernels", s, 8);

  return [=](ExperimentResult& r) {
    r.parameters = {{"kernels", specs}, {"radius", radius}, {"y_kernels", yspecs}, {"y_eps", y_eps}};
    Table ladder{"ladder", {"kernel", "rho", "integral"}, {}};
    Table verdicts{"verdicts",
                   {"kernel", "verdict", "fit_slope", "slope_error", "fit_residual", "last_increment", "note"},
                   {}};
    CriterionResult c{5, "recurrence classification", {}};
    auto classify = [&](const CouplingKernel& k) {
      const auto rep = recurrence_classify(k);
      for (std::size_t i = 0; i < rep.rho.size(); ++i) ladder.add({k.name(), fmt(rep.rho[i]), fmt(rep.integral[i])});
      std::string note = rep.note;
      std::replace(note.begin(), note.end(), ',', ';');
      verdicts.add({k.name(), verdict_name(rep.verdict), fmt(rep.fit_slope), fmt(rep.slope_error),
                    fmt(rep.fit_residual), fmt(rep.last_increment), note});
      r.results[k.name()] = {{"verdict", verdict_name(rep.verdict)}, {"fit_residual", rep.fit_residual},
                             {"last_increment", rep.last_increment}};
      return rep;
    };
    for (const auto& s : specs) {
      const auto k = parse_kernel(s, radius);
      const auto rep = classify(k);
      const std::string nm = k.name();
      if (nm == "nn") {
        c.atoms.push_back(truth("nn verdict recurrent", rep.verdict == Verdict::Recurrent));
        c.atoms.push_back(atom("nn log-fit residual", rep.fit_residual, "<", 0.02));
      } else if (nm == "powerlaw(3.5)") {
        c.atoms.push_back(truth("powerlaw(3.5) verdict transient", rep.verdict == Verdict::Transient));
        c.atoms.push_back(atom("powerlaw(3.5) tail increment", rep.last_increment, "<", 0.005));
      } else if (nm == "logcorr(2)") {
        c.atoms.push_back(truth("logcorr(2) verdict recurrent", rep.verdict == Verdict::Recurrent));
      }
    }
    for (const auto& s : yspecs) {
      const auto base = parse_kernel(s, radius);
      const auto rep = classify(y_kernel(base, y_eps));
      if (base.name() == "nn" && std::abs(y_eps - 0.2) < 1e-12)
        c.atoms.push_back(truth("Y-walk of nn at eps=0.2 recurrent", rep.verdict == Verdict::Recurrent));
    }
    r.tables = {ladder, verdicts};
    if (!c.atoms.empty()) r.criteria.push_back(c);
  };
}

// -- spinwave / entropy -----------------------------------------------------

struct EntropyPart {
  std::vector<long> ns;
  std::size_t samples = 0;
};

void entropy_rows(ExperimentResult& r, const CouplingKernel& J, double eps, int R, double psi, const EntropyPart& e,
                  std::uint64_t seed, CriterionResult& c) {
  Table t{"entropy", {"n", "samples", "gated", "mean", "error", "ci_lo", "ci_hi", "energy", "smooth"}, {}};
  std::vector<Estimate> est;
  for (std::size_t i = 0; i < e.ns.size(); ++i) {
    const auto rep = expected_entropy(J, eps, static_cast<int>(e.ns[i]), R, psi, e.samples, split_seed(seed, i));
    est.push_back(rep.value);
    t.add({fmt(e.ns[i]), fmt(rep.samples), fmt(rep.gated), fmt(rep.value.mean), fmt(rep.value.error),
           fmt(rep.value.lo()), fmt(rep.value.hi()), fmt(rep.energy), fmt(rep.smooth)});
  }
  r.tables.push_back(t);
  if (est.size() >= 2) {
    c.atoms.push_back(atom("entropy CI upper end at n=" + fmt(e.ns.back()) + " vs lower end at n=" + fmt(e.ns.front()),
                           est.back().hi(), "<", est.front().lo()));
    r.results["entropy_mean"] = {est.front().mean, est.back().mean};
  }
}

Runner prepare_spinwave(const ExperimentConfig& cfg, bool entropy_only) {
  Section sec(cfg, entropy_only ? "entropy" : "spinwave");
  const std::string kspec = sec.str("kernel");
  (void)sec.kernel("kernel", kspec, 8);
  const double eps = sec.in_range("eps", 0.0, 1.0);
  const int R = static_cast<int>(sec.at_least("R", 0, 1024));
  const double psi = sec.in_range("psi", -kTwoPi, kTwoPi, false, false);
  EntropyPart ent;
  std::vector<long> ns;
  std::size_t spots = 0, walks = 0;
  int mc_n = 0;
  if (entropy_only) {
    ent.ns = sec.ints_at_least("n", R + 1, 2048);
    ent.samples = static_cast<std::size_t>(sec.at_least("samples", 2, 1000000));
  } else {
    ns = sec.ints_at_least("n", R + 1, 2048);
    spots = static_cast<std::size_t>(sec.at_least("spots", 0, 1000));
    walks = static_cast<std::size_t>(sec.at_least("walks", 2, 100000000));
    mc_n = static_cast<int>(sec.at_least("mc_n", R + 1, 2048));
    ent.ns = sec.ints_at_least("entropy_n", R + 1, 2048);
    ent.samples = static_cast<std::size_t>(sec.at_least("entropy_samples", 0, 1000000));
    if (ent.samples == 1) sec.fail("entropy_samples", "needs 0 (skip) or at least 2 samples");
  }
  const int radius = 64;

  return [=](ExperimentResult& r) {
    const auto J = parse_kernel(kspec, radius);
    r.parameters = {{"kernel", J.name()}, {"eps", eps}, {"R", R}, {"psi", psi}};
    CriterionResult c{6, entropy_only ? "entropy decrease" : "spin-wave energy vanishing", {}};
    r.task_seeds = seeds_for(r.seed, 3);
    if (entropy_only) {
      r.parameters["n"] = ent.ns;
      r.parameters["samples"] = ent.samples;
      entropy_rows(r, J, eps, R, psi, ent, r.task_seeds[0], c);
      r.criteria.push_back(c);
      return;
    }
    r.parameters["n"] = ns;
    r.parameters["spots"] = spots;
    r.parameters["walks"] = walks;
    r.parameters["mc_n"] = mc_n;
    r.parameters["entropy_n"] = ent.ns;
    r.parameters["entropy_samples"] = ent.samples;

    const auto cond = surrogate_conductances(J, eps);
    Table en{"energies", {"n", "energy", "iterations", "residual"}, {}};
    std::vector<double> E;
    for (long n : ns) {
      const auto f = solve_spinwave(cond, static_cast<int>(n), R, psi);
      E.push_back(dirichlet_energy(f));
      en.add({fmt(n), fmt(E.back()), fmt(f.iterations), fmt(f.residual)});
    }
    r.tables.push_back(en);
    for (std::size_t i = 1; i < E.size(); ++i)
      c.atoms.push_back(atom("energy at n=" + fmt(ns[i]) + " vs n=" + fmt(ns[i - 1]), E[i], "<", E[i - 1]));
    if (E.size() >= 2 && ns.front() == 16 && ns.back() == 128)
      c.atoms.push_back(atom("energy ratio E_128/E_16", E.back() / E.front(), "<=", 0.7));
    r.results["energy"] = E;

    if (spots > 0) {
      const auto f = solve_spinwave(cond, mc_n, R, psi);
      std::ostringstream fs_;
      Table field{"field", {"x1", "x2", "psi"}, {}};
      for (int a = -mc_n; a <= mc_n; ++a)
        for (int b = -mc_n; b <= mc_n; ++b) field.add({fmt(a), fmt(b), fmt(f.at({a, b}))});
      r.tables.push_back(field);
      Table sp{"spots", {"x1", "x2", "field", "hitting", "hitting_error", "z"}, {}};
      Rng rng = make_rng(r.task_seeds[1]);
      std::uniform_int_distribution<int> coord(-mc_n, mc_n);
      for (std::size_t i = 0; i < spots; ++i) {
        Site x{0, 0};
        while (sup_norm(x) <= R) x = {coord(rng), coord(rng)};
        const auto mc = monte_carlo_hitting(J, eps, mc_n, R, x, walks, split_seed(r.task_seeds[1], 1000 + i));
        const double v = psi != 0.0 ? f.at(x) / psi : 0.0;
        const double z = mc.error > 0.0 ? (v - mc.mean) / mc.error : (v == mc.mean ? 0.0 : INFINITY);
        sp.add({fmt(x.x1), fmt(x.x2), fmt(v), fmt(mc.mean), fmt(mc.error), fmt(z)});
        c.atoms.push_back(atom("|z| at spot (" + fmt(x.x1) + ";" + fmt(x.x2) + ")", std::abs(z), "<=", 3.0));
      }
      r.tables.push_back(sp);
    }
    if (ent.samples > 0) entropy_rows(r, J, eps, R, psi, ent, r.task_seeds[2], c);
    r.criteria.push_back(c);
  };
}

// -- rotation / twopoint ----------------------------------------------------

Runner prepare_rotation(const ExperimentConfig& cfg) {
  Section sec(cfg, "rotation");
  const PairPotential pot = sec.potential("potential");
  const BoundaryCondition bc = parse_bc(sec, "bc");
  const double psi = sec.in_range("psi", -kTwoPi, kTwoPi, false, false);
  const auto ns = sec.ints_at_least("n", 1, 1024);
  auto sweeps = sec.ints_at_least("sweeps", 1, 1L << 32);
  if (sweeps.size() == 1) sweeps.assign(ns.size(), sweeps[0]);
  if (sweeps.size() != ns.size()) sec.fail("sweeps", "needs one entry or one per n");
  const std::size_t burn = static_cast<std::size_t>(sec.at_least("burn_in", 0, 1L << 32));
  const std::size_t batches = static_cast<std::size_t>(sec.at_least("batches", 16, 4096));
  for (long s : sweeps)
    if (static_cast<std::size_t>(s) < batches) sec.fail("sweeps", "each entry must be at least batches");

  return [=](ExperimentResult& r) {
    r.parameters = {{"potential", pot.name}, {"bc", bc.describe()}, {"psi", psi}, {"n", ns}, {"sweeps", sweeps},
                    {"burn_in", burn}, {"batches", batches}};
    r.task_seeds = seeds_for(r.seed, ns.size());
    Table t{"rotation",
            {"n", "sweeps", "discrepancy", "error", "plain", "shifted", "acceptance", "width", "violations"},
            {}};
    std::vector<Estimate> d;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      SpinSystem sys;
      sys.n = static_cast<int>(ns[i]);
      sys.pot = pot;
      sys.bc = bc;
      ChainOptions opt;
      opt.burn_in = burn;
      opt.sweeps = static_cast<std::size_t>(sweeps[i]);
      opt.batches = batches;
      const auto f = [](const SpinConfiguration& c, double s) { return std::cos(c.at({0, 0}) + s); };
      const auto res = rotation_discrepancy(sys, f, psi, opt, r.task_seeds[i]);
      d.push_back({res.value, res.difference.error, res.difference.count});
      t.add({fmt(ns[i]), fmt(sweeps[i]), fmt(res.value), fmt(res.difference.error), fmt(res.plain.mean),
             fmt(res.shifted.mean), fmt(res.chain.acceptance), fmt(res.chain.width), fmt(res.chain.violations)});
    }
    r.tables = {t};
    std::vector<double> vals;
    for (const auto& e : d) vals.push_back(e.mean);
    r.results = {{"discrepancy", vals}};
    CriterionResult c{7, "rotation discrepancy decay", {}};
    for (std::size_t i = 1; i < d.size(); ++i)
      c.atoms.push_back(
          atom("discrepancy at n=" + fmt(ns[i]) + " vs n=" + fmt(ns[i - 1]), d[i].mean, "<", d[i - 1].mean));
    if (d.size() >= 2)
      c.atoms.push_back(atom("upper 95% end at n=" + fmt(ns.back()) + " vs lower end at n=" + fmt(ns.front()),
                             d.back().hi(), "<", d.front().lo()));
    r.criteria.push_back(c);
  };
}

Runner prepare_twopoint(const ExperimentConfig& cfg) {
  Section sec(cfg, "twopoint");
  const PairPotential pot = sec.potential("potential");
  const BoundaryCondition bc = parse_bc(sec, "bc");
  const int n = static_cast<int>(sec.at_least("n", 1, 1024));
  const auto ds = sec.ints_at_least("distances", 1, 1024);
  for (long r : ds)
    if (r > n) sec.fail("distances", "entries must not exceed n");
  const std::size_t sweeps = static_cast<std::size_t>(sec.at_least("sweeps", 1, 1L << 32));
  const std::size_t burn = static_cast<std::size_t>(sec.at_least("burn_in", 0, 1L << 32));
  const std::size_t batches = static_cast<std::size_t>(sec.at_least("batches", 16, 4096));
  if (sweeps < batches) sec.fail("sweeps", "must be at least batches");

  return [=](ExperimentResult& r) {
    r.parameters = {{"potential", pot.name}, {"bc", bc.describe()}, {"n", n}, {"distances", ds},
                    {"sweeps", sweeps}, {"burn_in", burn}, {"batches", batches}};
    r.task_seeds = seeds_for(r.seed, ds.size());
    SpinSystem sys;
    sys.n = n;
    sys.pot = pot;
    sys.bc = bc;
    ChainOptions opt;
    opt.burn_in = burn;
    opt.sweeps = sweeps;
    opt.batches = batches;
    Table t{"correlations", {"distance", "value", "error"}, {}};
    std::vector<CorrelationRow> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      // a pair centred on the origin
      const int d = static_cast<int>(ds[i]);
      const Site x{-d / 2, 0}, y{d - d / 2, 0};
      const auto e = two_point(sys, x, y, opt, r.task_seeds[i]);
      rows.push_back({static_cast<double>(d), e.mean, e.error});
      t.add({fmt(d), fmt(e.mean), fmt(e.error)});
    }
    r.tables = {t};
    try {
      const auto fit = power_law_fit(rows);
      r.results["fit"] = {{"exponent", fit.exponent},
                          {"exponent_error", fit.exponent_error},
                          {"ci", {fit.ci_lo, fit.ci_hi}},
                          {"amplitude", fit.amplitude},
                          {"chi2_power", fit.chi2_power},
                          {"chi2_exponential", fit.chi2_exponential},
                          {"correlation_length", fit.correlation_length},
                          {"loglik_difference", fit.loglik_difference},
                          {"preferred", fit.power_preferred() ? "power" : "exponential"}};
    } catch (const std::invalid_argument& e) {
      r.results["fit"] = {{"error", e.what()}};
    }
  };
}

// -- aizenman ---------------------------------------------------------------

Runner prepare_aizenman(const ExperimentConfig& cfg) {
  Section sec(cfg, "aizenman");
  const int k = static_cast<int>(sec.at_least("k", 9, 10000));
  const double delta = sec.in_range("delta", 0.0, BoundaryCondition::staircase(k).theta_k(), false, true);
  const std::string sigma_s = sec.str("sigma");
  std::optional<double> sigma;
  if (sigma_s != "auto") {
    auto v = to_double(sigma_s);
    if (!v) sec.fail("sigma", "expected 'auto' or a number, got '" + sigma_s + "'");
    sigma = *v;
  }
  const int n = static_cast<int>(sec.at_least("n", 1, 512));
  const std::size_t restarts = static_cast<std::size_t>(sec.at_least("restarts", 1, 100000));
  const std::size_t bsweeps = static_cast<std::size_t>(sec.at_least("boundary_sweeps", 0, 1L << 32));
  const std::size_t burn = static_cast<std::size_t>(sec.at_least("burn_in", 0, 1L << 32));
  const std::size_t sweeps = static_cast<std::size_t>(sec.at_least("sweeps", 32, 1L << 32));
  const std::size_t free_restarts = static_cast<std::size_t>(sec.at_least("free_restarts", 0, 100000));
  const std::size_t free_sweeps = static_cast<std::size_t>(sec.at_least("free_sweeps", 32, 1L << 32));

  return [=](ExperimentResult& r) {
    const double theta = BoundaryCondition::staircase(k).theta_k();
    Table feas{"feasibility", {"sigma", "verdict", "max_width", "reason"}, {}};
    double chosen = sigma.value_or(0.0);
    bool found = sigma.has_value();
    // auto: the steepest slope the checker certifies rigid
    for (double s : {2.0, 1.0}) {
      const auto cert = feasibility(BoundaryCondition::staircase(k, s), theta, n);
      std::string why = cert.reason;
      std::replace(why.begin(), why.end(), ',', ';');
      feas.add({fmt(s), feasibility_name(cert.verdict), fmt(cert.max_width), why});
      if (!found && cert.verdict == Feasibility::Rigid) {
        chosen = s;
        found = true;
      }
    }
    if (!found) throw std::runtime_error("no staircase slope certified feasible and rigid at this k and n");
    r.parameters = {{"k", k}, {"delta", delta}, {"sigma", sigma_s}, {"sigma_used", chosen}, {"n", n},
                    {"restarts", restarts}, {"boundary_sweeps", bsweeps}, {"burn_in", burn}, {"sweeps", sweeps},
                    {"free_restarts", free_restarts}, {"free_sweeps", free_sweeps}};
    r.task_seeds = seeds_for(r.seed, 2);

    AizenmanOptions opt;
    opt.k = k;
    opt.delta = delta;
    opt.sigma = chosen;
    opt.n = n;
    opt.restarts = restarts;
    opt.boundary_sweeps = bsweeps;
    opt.chain.burn_in = burn;
    opt.chain.sweeps = sweeps;
    const auto st = aizenman_state(opt, r.task_seeds[0]);

    Table mag{"magnetization", {"x1", "x2", "re", "im", "abs"}, {}};
    for (const auto& row : st.rows)
      mag.add({fmt(row.x.x1), fmt(row.x.x2), fmt(row.m.real()), fmt(row.m.imag()), fmt(std::abs(row.m))});
    Table runs{"chains", {"state", "restart", "acceptance", "width", "violations", "re0", "im0"}, {}};
    for (std::size_t i = 0; i < st.chains.size(); ++i) {
      const auto& ch = st.chains[i];
      runs.add({"staircase", fmt(i), fmt(ch.acceptance), fmt(ch.width), fmt(ch.violations),
                fmt(ch.estimate("re0").mean), fmt(ch.estimate("im0").mean)});
    }

    CriterionResult c{8, "symmetry breaking", {}};
    c.atoms.push_back(atom("staircase |m| lower 3 sigma end", st.modulus.mean - 3 * st.modulus.error, ">=", 0.9));
    const double res = std::abs(st.covariance_residual);
    c.atoms.push_back(atom("covariance residual in units of sigma", st.covariance_error > 0 ? res / st.covariance_error
                                                                                             : (res == 0 ? 0 : INFINITY),
                           "<=", 3.0));
    c.atoms.push_back(atom("hard-core violations in the staircase traces", static_cast<double>(st.violations), "==", 0.0));
    r.results["staircase"] = {{"modulus", st.modulus.mean},
                              {"modulus_error", st.modulus.error},
                              {"m", {st.m_re.mean, st.m_im.mean}},
                              {"covariance_residual", {st.covariance_residual.real(), st.covariance_residual.imag()}},
                              {"covariance_error", st.covariance_error},
                              {"boundary_acceptance", st.boundary_acceptance},
                              {"violations", st.violations}};

    if (free_restarts > 0) {
      AizenmanOptions fo = opt;
      fo.restarts = free_restarts;
      fo.chain.sweeps = free_sweeps;
      const auto fr = free_state(fo, r.task_seeds[1]);
      for (std::size_t i = 0; i < fr.chains.size(); ++i) {
        const auto& ch = fr.chains[i];
        runs.add({"free", fmt(i), fmt(ch.acceptance), fmt(ch.width), fmt(ch.violations),
                  fmt(ch.estimate("re0").mean), fmt(ch.estimate("im0").mean)});
      }
      c.atoms.push_back(atom("free |m| upper 3 sigma end", fr.modulus.mean + 3 * fr.modulus.error, "<=", 0.1));
      c.atoms.push_back(atom("hard-core violations in the free traces", static_cast<double>(fr.violations), "==", 0.0));
      r.results["free"] = {{"modulus", fr.modulus.mean}, {"modulus_error", fr.modulus.error},
                           {"violations", fr.violations}};
    }
    r.tables = {feas, mag, runs};
    r.criteria.push_back(c);
  };
}

using Preparer = std::function<Runner(const ExperimentConfig&)>;

const std::map<std::string, Preparer>& registry() {
  static const std::map<std::string, Preparer> m{
      {"layers", prepare_layers},
      {"extremal", prepare_extremal},
      {"decompose51", prepare_decompose51},
      {"sparseness", prepare_sparseness},
      {"recurrence", prepare_recurrence},
      {"spinwave", [](const ExperimentConfig& c) { return prepare_spinwave(c, false); }},
      {"entropy", [](const ExperimentConfig& c) { return prepare_spinwave(c, true); }},
      {"rotation", prepare_rotation},
      {"twopoint", prepare_twopoint},
      {"aizenman", prepare_aizenman},
  };
  return m;
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> v;
  for (const auto& [k, f] : registry()) v.push_back(k);
  return v;
}

std::string experiment_defaults(const std::string& name) {
  auto it = defaults_table().find(name);
  if (it == defaults_table().end()) throw std::invalid_argument("unknown experiment " + name);
  std::string s;
  for (const auto& [k, v] : it->second) s += k + " = " + v + "\n";
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const std::string name = cfg.experiment();
  auto it = registry().find(name);
  if (it == registry().end()) config_fail("run", "experiment", "unknown experiment '" + name + "'");
  ExperimentResult r;
  r.experiment = name;
  r.seed = cfg.seed();
  (void)cfg.out();
  Runner run = it->second(cfg);
  cfg.check_unused();
  r.config_hash = cfg.hash();
  run(r);
  return r;
}

}  // namespace spinlab
