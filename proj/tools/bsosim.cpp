// bsosim: run driven two-level / lambda / composite scenarios from JSON.
//
//   bsosim run config.json [--out DIR]
//   bsosim sweep config.json --param phi --values 0,0.5,1 [--jobs 4]
//   bsosim validate config.json
//
// Exit codes: 0 ok, 2 configuration error, 3 numeric failure.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>

#include "bsosim/config.hpp"
#include "bsosim/csv.hpp"
#include "bsosim/scenarios.hpp"

#ifndef BSOSIM_VERSION
#define BSOSIM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using bsosim::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (f) {
    f.read(buf, sizeof buf);
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

json file_entries(const fs::path& dir, const std::vector<std::string>& names) {
  json files = json::array();
  for (const auto& n : names)
    files.push_back({{"name", n},
                     {"bytes", fs::file_size(dir / n)},
                     {"sha256", sha256_file(dir / n)}});
  return files;
}

void write_manifest(const fs::path& dir, const json& config,
                    const bsosim::RunResult& r) {
  json m;
  m["tool"] = "bsosim";
  m["version"] = BSOSIM_VERSION;
  m["config"] = config;
  m["summary"] = r.summary;
  m["warnings"] = r.warnings;
  m["files"] = file_entries(dir, r.files);
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

std::string output_root(const bsosim::ScenarioConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BSOSIM_OUT"); env && *env) return env;
  return c.output_dir;
}

// The config as it was actually run: output_dir resolved.
json resolved_config(const bsosim::ScenarioConfig& c, const fs::path& out) {
  json j = c.raw;
  j["output_dir"] = out.string();
  return j;
}

bsosim::RunResult run_one(const json& raw, const fs::path& out) {
  const auto cfg = bsosim::parse_config(raw);
  auto r = bsosim::run_scenario(cfg, out);
  write_manifest(out, resolved_config(cfg, out), r);
  return r;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw bsosim::ConfigError("values", "not a number: '" + item + "'");
    v.push_back(x);
  }
  return v;
}

// "lo:hi:n" -> n points in [lo, hi), hi excluded.
std::vector<double> parse_linspace(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw bsosim::ConfigError("linspace", "expected lo:hi:n");
  const double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
  const int n = std::stoi(parts[2]);
  if (n < 0) throw bsosim::ConfigError("linspace", "n must be >= 0");
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / n);
  return v;
}

int do_run(const std::string& path, const std::string& out_flag) {
  const json raw = bsosim::load_json(path);
  const auto cfg = bsosim::parse_config(raw);
  const fs::path out = output_root(cfg, out_flag);
  const auto r = run_one(raw, out);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << json{{"output_dir", out.string()}, {"summary", r.summary}}.dump(2) << '\n';
  return 0;
}

int do_validate(const std::string& path) {
  const auto cfg = bsosim::parse_config(bsosim::load_json(path));
  bsosim::preflight(cfg);
  std::cout << json{{"valid", true}, {"scenario", bsosim::to_string(cfg.scenario)}}.dump()
            << '\n';
  return 0;
}

int do_sweep(const std::string& path, const std::string& param,
             std::vector<double> values, unsigned jobs,
             const std::string& out_flag) {
  const json raw = bsosim::load_json(path);
  const auto base = bsosim::parse_config(raw);
  const auto ptr = bsosim::numeric_leaf(raw, param);
  if (values.empty()) return 0;
  const fs::path root = output_root(base, out_flag);
  fs::create_directories(root);

  // Validate every variant before running any of them.
  std::vector<json> variants;
  std::vector<std::string> dirs;
  for (double v : values) {
    json j = raw;
    j[ptr] = v;
    bsosim::preflight(bsosim::parse_config(j));
    variants.push_back(j);
    dirs.push_back(param + "=" + bsosim::csv::num(v));
  }

  std::vector<bsosim::RunResult> results(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        results[i] = run_one(variants[i], root / dirs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::set<std::string> keys;
  for (const auto& r : results)
    for (const auto& [k, v] : r.summary) keys.insert(k);
  {
    std::ofstream os(root / "summary.csv", std::ios::binary);
    bsosim::csv::Writer w(os);
    std::vector<std::string> header{param};
    header.insert(header.end(), keys.begin(), keys.end());
    w.header(header);
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::vector<double> row{values[i]};
      for (const auto& k : keys) {
        auto it = results[i].summary.find(k);
        row.push_back(it == results[i].summary.end()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : it->second);
      }
      w.row(row);
    }
  }
  json m;
  m["tool"] = "bsosim";
  m["version"] = BSOSIM_VERSION;
  m["config"] = raw;
  m["sweep"] = {{"param", param}, {"values", values}, {"runs", dirs}};
  std::vector<std::string> files{"summary.csv"};
  for (const auto& d : dirs) files.push_back(d + "/manifest.json");
  m["files"] = file_entries(root, files);
  std::ofstream(root / "manifest.json") << m.dump(2) << '\n';
  std::cout << json{{"output_dir", root.string()}, {"runs", values.size()}}.dump() << '\n';
  return 0;
}

int fail(int code, const json& err) {
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloch-Siegert oscillation simulator"};
  app.set_version_flag("--version", std::string(BSOSIM_VERSION));
  app.require_subcommand(1);

  std::string config_path, out_flag, param, values_text, linspace_text;
  unsigned jobs = 1;

  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("config", config_path, "scenario JSON")->required();
  run->add_option("--out", out_flag, "output directory (overrides config and BSOSIM_OUT)");

  auto* sweep = app.add_subcommand("sweep", "run a scenario for each value of one parameter");
  sweep->add_option("config", config_path, "scenario JSON")->required();
  sweep->add_option("--param", param, "dotted path of a numeric config entry")->required();
  auto* vals = sweep->add_option("--values", values_text, "comma-separated values");
  auto* lin = sweep->add_option("--linspace", linspace_text, "lo:hi:n, hi excluded");
  vals->excludes(lin);
  sweep->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_flag, "output directory");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "scenario JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(config_path, out_flag);
    if (*validate) return do_validate(config_path);
    if (*sweep) {
      std::vector<double> values;
      if (!linspace_text.empty()) values = parse_linspace(linspace_text);
      else values = parse_values(values_text);
      return do_sweep(config_path, param, values, jobs, out_flag);
    }
  } catch (const bsosim::ConfigError& e) {
    return fail(kExitConfig, e.to_json());
  } catch (const bsosim::CoarseStepError& e) {
    return fail(kExitConfig, {{"error", "config"}, {"field", "dt"}, {"message", e.what()}});
  } catch (const bsosim::NumericFailure& e) {
    return fail(kExitNumeric, {{"error", "numeric"}, {"message", e.what()}});
  } catch (const std::domain_error& e) {
    return fail(kExitConfig, {{"error", "config"}, {"field", ""}, {"message", e.what()}});
  } catch (const std::exception& e) {
    return fail(1, {{"error", "internal"}, {"message", e.what()}});
  }
  return 0;
}
