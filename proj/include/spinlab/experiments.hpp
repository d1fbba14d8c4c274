#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace spinlab {

inline constexpr const char* kCodeVersion = "spinlab 1.0.0";
inline constexpr int kSchemaVersion = 1;

// Invalid or unknown configuration fields; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// INI configuration: a [run] section (experiment, seed, out) and one section
// per experiment. Every key read is recorded so that leftovers can be
// reported as unknown fields.
class ExperimentConfig {
 public:
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_string(const std::string& text);

  std::string experiment() const;
  std::uint64_t seed() const;
  void set_seed(std::uint64_t seed);
  std::optional<std::string> out() const;

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& def) const;
  double get_double(const std::string& section, const std::string& key, double def) const;
  long get_int(const std::string& section, const std::string& key, long def) const;
  bool get_bool(const std::string& section, const std::string& key, bool def) const;
  // Comma separated at parenthesis depth zero.
  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& def) const;
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& def) const;
  std::vector<long> get_ints(const std::string& section, const std::string& key, const std::vector<long>& def) const;

  // Throws ConfigError naming every key that was never read.
  void check_unused() const;

  // Sorted "section.key = value" lines, run.out excluded.
  std::string canonical() const;
  std::string hash() const;  // sha256 of canonical()

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::set<std::string> used_;
};

[[noreturn]] void config_fail(const std::string& section, const std::string& key, const std::string& why);

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

std::string fmt(double v);  // %.17g
std::string fmt(long v);
std::string fmt(std::size_t v);
std::string fmt(int v);

// One comparison of a criterion: lhs op rhs with op in <=, <, >=, >, ==.
struct Atom {
  std::string label;
  double lhs = 0.0;
  std::string op = "<=";
  double rhs = 0.0;

  bool holds() const;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Atom> atoms;

  bool pass() const;
  std::string detail() const;  // failing atoms, or all atoms if none fail
};

struct ExperimentResult {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> task_seeds;
  std::vector<Table> tables;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  std::vector<CriterionResult> criteria;

  nlohmann::ordered_json summary() const;
};

std::vector<std::string> experiment_names();
// Default parameters per experiment as "key = value" lines.
std::string experiment_defaults(const std::string& name);

// Validates the whole configuration first (ConfigError), then runs.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes every table (experiment, config, seed columns prepended) plus
// summary.json; returns the file names relative to dir.
std::vector<std::string> write_outputs(const ExperimentResult& r, const std::filesystem::path& dir);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Writes through a temporary file in the same directory and renames.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Criteria re-evaluated from a summary's stored atoms.
std::vector<CriterionResult> criteria_from_summary(const nlohmann::json& summary);

}  // namespace spinlab
