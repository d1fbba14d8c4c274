#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spinlab/experiments.hpp"
#include "spinlab/interaction.hpp"
#include "spinlab/longrange_walk.hpp"

namespace fs = std::filesystem;
using namespace spinlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;
constexpr int kCriteria = 9;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out_opt) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  ExperimentResult result;
  try {
    cfg = ExperimentConfig::from_file(config_path);
    if (seed) cfg.set_seed(*seed);
    result = run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }

  fs::path dir = out_opt ? fs::path(*out_opt)
                         : fs::path(cfg.out().value_or("out/" + result.experiment + "-" + std::to_string(result.seed)));
  const bool existed = fs::exists(dir);
  std::vector<std::string> files;
  try {
    files = write_outputs(result, dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::ordered_json m;
    m["schema"] = kSchemaVersion;
    m["tool"] = "spinlab";
    m["code_version"] = kCodeVersion;
    m["experiment"] = result.experiment;
    m["config_hash"] = result.config_hash;
    m["config"] = cfg.canonical();
    m["seed"] = result.seed;
    m["task_seeds"] = result.task_seeds;
    m["wall_clock_seconds"] = wall;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& f : files)
      outs.push_back({{"file", f}, {"sha256", sha256_file(dir / f)}, {"bytes", fs::file_size(dir / f)}});
    m["outputs"] = outs;
    atomic_write(dir / "manifest.json", m.dump(2) + "\n");
  } catch (const std::exception& e) {
    for (const auto& f : files) fs::remove(dir / f);
    std::error_code ec;
    if (!existed) fs::remove(dir, ec);  // only succeeds when empty
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }

  for (const auto& c : result.criteria)
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (c.pass() ? "PASS" : "FAIL") << "  "
              << c.detail() << "\n";
  std::cout << "wrote " << files.size() << " files and manifest.json to " << dir.string() << "\n";
  return kExitOk;
}

struct Verdict {
  std::string status = "missing";
  std::string detail;
};

int cmd_verify(const std::string& manifest_path, bool as_json) {
  nlohmann::json m = nlohmann::json::object();
  {
    std::ifstream in(manifest_path);
    if (!in) {
      std::cerr << "config error: cannot read manifest " << manifest_path << "\n";
      return kExitConfig;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        m = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: manifest is not valid JSON: " << e.what() << "\n";
        return kExitConfig;
      }
    }
  }
  const fs::path dir = fs::path(manifest_path).parent_path();
  bool ok = true;
  std::vector<std::pair<std::string, std::string>> out_status;
  if (!m.is_object()) {
    m = nlohmann::json::object();
    ok = false;
  }
  if (m.contains("schema") && m["schema"] != kSchemaVersion) {
    out_status.push_back({"manifest", "unsupported schema"});
    ok = false;
  }

  nlohmann::json summary;
  for (const auto& o : m.value("outputs", nlohmann::json::array())) {
    const std::string file = o.value("file", "");
    const fs::path p = dir / file;
    if (!fs::exists(p)) {
      out_status.push_back({file, "missing"});
      ok = false;
      continue;
    }
    if (sha256_file(p) != o.value("sha256", "")) {
      out_status.push_back({file, "hash mismatch"});
      ok = false;
      continue;
    }
    out_status.push_back({file, "ok"});
    if (file == "summary.json") {
      std::ifstream in(p);
      try {
        summary = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception&) {
        out_status.back().second = "unparsable";
        ok = false;
      }
    }
  }
  if (summary.is_object() && summary.value("config_hash", "") != m.value("config_hash", "")) {
    out_status.push_back({"summary.json", "config hash differs from the manifest"});
    ok = false;
  }

  std::vector<Verdict> verdicts(kCriteria + 1);
  bool any = false;
  if (summary.is_object()) {
    // stored pass flags must agree with a fresh evaluation of the atoms
    std::map<int, bool> stored;
    for (const auto& cj : summary.value("criteria", nlohmann::json::array()))
      stored[cj.value("id", 0)] = cj.value("pass", false);
    for (const auto& c : criteria_from_summary(summary)) {
      if (c.id < 1 || c.id > kCriteria) continue;
      any = true;
      const bool pass = c.pass();
      auto& v = verdicts[static_cast<std::size_t>(c.id)];
      const bool prior_fail = v.status == "FAIL";
      v.status = pass && !prior_fail ? "PASS" : "FAIL";
      v.detail = c.detail();
      if (stored[c.id] != pass) {
        v.status = "FAIL";
        v.detail = "stored verdict disagrees with re-evaluation; " + v.detail;
      }
      if (!pass) ok = false;
    }
  }
  if (!any) ok = false;

  if (as_json) {
    nlohmann::ordered_json j;
    j["schema"] = kSchemaVersion;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& [f, s] : out_status) outs.push_back({{"file", f}, {"status", s}});
    j["outputs"] = outs;
    auto cs = nlohmann::ordered_json::array();
    for (int i = 1; i <= kCriteria; ++i)
      cs.push_back({{"criterion", i}, {"status", verdicts[static_cast<std::size_t>(i)].status},
                    {"detail", verdicts[static_cast<std::size_t>(i)].detail}});
    j["criteria"] = cs;
    j["pass"] = ok;
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& [f, s] : out_status) std::cout << "output " << f << ": " << s << "\n";
    for (int i = 1; i <= kCriteria; ++i) {
      const auto& v = verdicts[static_cast<std::size_t>(i)];
      std::cout << "criterion " << i << ": " << v.status;
      if (!v.detail.empty()) std::cout << "  " << v.detail;
      std::cout << "\n";
    }
    std::cout << (ok ? "verify: PASS" : "verify: FAIL") << "\n";
  }
  return ok ? kExitOk : kExitVerify;
}

int cmd_presets() {
  std::cout << "experiments (section name = experiment name, defaults shown):\n";
  for (const auto& e : experiment_names()) {
    std::cout << "\n[" << e << "]\n" << experiment_defaults(e);
  }
  std::cout << "\npotentials:";
  for (const auto& p : potential_preset_names()) std::cout << " " << p;
  std::cout << "\nkernels:";
  for (const auto& k : kernel_preset_names()) std::cout << " " << k;
  std::cout << "\nboundary conditions: fixed(v) free staircase(k,sigma) smeared(k,delta,sigma)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinlab: experiments on two-dimensional spin systems"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  run->add_option("--config", config, "INI config file")->required();
  run->add_option("--seed", seed, "master seed, overrides [run] seed");
  run->add_option("--out", out, "output directory, overrides [run] out");

  auto* verify = app.add_subcommand("verify", "re-evaluate the criteria of a finished run");
  std::string manifest;
  bool as_json = false;
  verify->add_option("--manifest", manifest, "manifest.json of a run")->required();
  verify->add_flag("--json", as_json, "machine-readable verdict list");

  auto* presets = app.add_subcommand("presets", "list experiments and presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, seed, out);
    if (*verify) return cmd_verify(manifest, as_json);
    if (*presets) return cmd_presets();
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
