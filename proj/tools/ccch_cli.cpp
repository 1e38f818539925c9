#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "ccch/ccch.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ccch::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_text(const std::string& text) {
  ccch::ScenarioConfig cfg;
  try {
    cfg = ccch::parse_config(text);
  } catch (const ccch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ccch::kConfigError;
  }
  const auto summary = ccch::run_scenario(cfg, std::cerr);
  ccch::print_summary(std::cout, cfg, summary);
  return summary.exit_code;
}

struct Vary {
  std::string key;
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

Vary parse_vary(const std::string& spec) {
  const auto eq = spec.find('=');
  Vary v;
  char c1 = 0;
  char c2 = 0;
  if (eq == std::string::npos) throw ccch::ConfigError("--vary expects key=a:b:n, got '" + spec + "'");
  v.key = spec.substr(0, eq);
  std::istringstream in(spec.substr(eq + 1));
  if (!(in >> v.lo >> c1 >> v.hi >> c2 >> v.count) || c1 != ':' || c2 != ':' || v.count < 1 || !in.eof()) {
    throw ccch::ConfigError("--vary expects key=a:b:n, got '" + spec + "'");
  }
  return v;
}

std::string indexed_path(const std::string& path, int i) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "_" + std::to_string(i) + p.extension().string())).string();
}

unsigned worker_count(int jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CCCH_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::min<unsigned>(n, static_cast<unsigned>(std::max(1, jobs)));
}

int sweep(const std::string& text, const Vary& vary) {
  struct Job {
    double value = 0.0;
    ccch::ScenarioConfig cfg;
    ccch::RunSummary summary;
    std::string log;
  };
  std::vector<Job> jobs(static_cast<std::size_t>(vary.count));
  const ccch::ScenarioConfig base = ccch::parse_config(text);
  for (int i = 0; i < vary.count; ++i) {
    auto& job = jobs[static_cast<std::size_t>(i)];
    job.value = vary.count == 1 ? vary.lo : vary.lo + (vary.hi - vary.lo) * i / (vary.count - 1);
    std::string t = ccch::with_override(text, vary.key, ccch::detail::format_double(job.value));
    t = ccch::with_override(t, "output", indexed_path(base.output, i));
    if (!base.snapshots.empty()) t = ccch::with_override(t, "snapshots", indexed_path(base.snapshots, i));
    job.cfg = ccch::parse_config(t);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      std::ostringstream log;
      jobs[i].summary = ccch::run_scenario(jobs[i].cfg, log);
      jobs[i].log = log.str();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < worker_count(vary.count); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int status = 0;
  std::cout << "sweep over " << vary.key << " (" << jobs.size() << " runs)\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::cout << "\n[" << i << "] " << vary.key << " = " << ccch::detail::format_double(jobs[i].value)
              << "  exit " << jobs[i].summary.exit_code << '\n';
    std::cerr << jobs[i].log;
    ccch::print_summary(std::cout, jobs[i].cfg, jobs[i].summary);
    status = std::max(status, jobs[i].summary.exit_code);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-coupled Camassa-Holm numerical lab"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("config", config_path, "scenario file")->required();

  auto* check = app.add_subcommand("check", "validate a scenario file");
  check->add_option("config", config_path, "scenario file")->required();

  double m1 = 10.0, n1 = 1.0, q0 = 0.0, r0 = 5.0, t_end = 20.0, dt = 1e-3;
  std::string out = "peakons.csv";
  auto* peakons = app.add_subcommand("peakons", "one peakon of each family");
  peakons->add_option("--m1", m1, "amplitude of the m peakon")->capture_default_str();
  peakons->add_option("--n1", n1, "amplitude of the n peakon")->capture_default_str();
  peakons->add_option("--q0", q0, "initial position of the m peakon")->capture_default_str();
  peakons->add_option("--r0", r0, "initial position of the n peakon")->capture_default_str();
  peakons->add_option("--t-end", t_end, "final time")->capture_default_str();
  peakons->add_option("--dt", dt, "time step")->capture_default_str();
  peakons->add_option("--out", out, "CSV path")->capture_default_str();

  std::string vary;
  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep, runs in parallel");
  sweep_cmd->add_option("config", config_path, "scenario file")->required();
  sweep_cmd->add_option("--vary", vary, "key=a:b:n")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_text(read_file(config_path));
    if (*check) {
      const auto cfg = ccch::parse_config(read_file(config_path));
      std::cout << "ok: kind=" << ccch::to_string(cfg.kind) << '\n' << ccch::serialize(cfg);
      return 0;
    }
    if (*peakons) {
      ccch::ScenarioConfig cfg;
      cfg.kind = ccch::Kind::peakon;
      cfg.m_amps = {m1};
      cfg.n_amps = {n1};
      cfg.q = {q0};
      cfg.r = {r0};
      cfg.t_end = t_end;
      cfg.dt = dt;
      cfg.output = out;
      return run_text(ccch::serialize(cfg));
    }
    if (*sweep_cmd) return sweep(read_file(config_path), parse_vary(vary));
  } catch (const ccch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ccch::kConfigError;
  }
  return 0;
}
