// vibctl: config-driven Krotov optimization runs.
//
//   vibctl validate <config>
//   vibctl run <config> [--output-dir D] [--max-iterations N] [--seed S]
//   vibctl resume <checkpoint> [--max-iterations N]
//   vibctl batch <config>... [--jobs J]
//
// VIBCTL_SPILL_DIR overrides where backward trajectories spill to disk.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vibctl/pipeline.hpp"

namespace {

int report(const std::exception& e) {
  using namespace vibctl;
  if (dynamic_cast<const InvalidInput*>(&e)) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  if (dynamic_cast<const IoFailure*>(&e)) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  }
  if (dynamic_cast<const NumericalFailure*>(&e)) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  }
  if (dynamic_cast<const AlgorithmFault*>(&e)) {
    std::cerr << "algorithm fault: " << e.what() << '\n';
    return 5;
  }
  std::cerr << "error: " << e.what() << '\n';
  return 1;
}

vibctl::RunOverrides overrides(const std::string& out, int max_it, long long seed) {
  vibctl::RunOverrides o;
  if (!out.empty()) o.output_dir = out;
  if (max_it >= 0) o.max_iterations = max_it;
  if (seed >= 0) o.seed = static_cast<std::uint64_t>(seed);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krotov optimal control of vibrational state transfer"};
  app.require_subcommand(1);

  std::string config, checkpoint, output_dir;
  int max_iterations = -1;
  long long seed = -1;
  int jobs = 1;
  std::vector<std::string> batch_configs;

  auto* validate = app.add_subcommand("validate", "parse a config and print the resolved parameters");
  validate->add_option("config", config, "configuration file")->required();

  auto* run = app.add_subcommand("run", "run the configured pipeline");
  run->add_option("config", config, "configuration file")->required();

  auto* resume = app.add_subcommand("resume", "continue a run from its checkpoint file");
  resume->add_option("checkpoint", checkpoint, "checkpoint.dat written by a previous run")->required();

  auto* batch = app.add_subcommand("batch", "run several configs, each into its own output directory");
  batch->add_option("configs", batch_configs, "configuration files")->required();
  batch->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  for (auto* sub : {run, resume, batch}) {
    sub->add_option("--max-iterations", max_iterations, "override the iteration limit");
  }
  for (auto* sub : {run, batch}) {
    sub->add_option("--output-dir", output_dir, "override the output directory");
    sub->add_option("--seed", seed, "override the seed recorded with the run");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto cfg = vibctl::load_config(config);
      const auto model = vibctl::build_model(cfg);
      vibctl::write_report(std::cout, cfg, model);
      for (const auto& w : model.warnings) std::cerr << "warning: " << w << '\n';
      return 0;
    }
    if (*run) {
      auto cfg = vibctl::load_config(config);
      vibctl::apply_overrides(cfg, overrides(output_dir, max_iterations, seed));
      vibctl::run_pipeline(cfg, std::cout);
      return 0;
    }
    if (*resume) {
      vibctl::resume_pipeline(checkpoint, overrides("", max_iterations, -1), std::cout);
      return 0;
    }
    if (*batch) {
      std::vector<vibctl::RunConfig> cfgs;
      for (const auto& path : batch_configs) {
        auto cfg = vibctl::load_config(path);
        auto o = overrides("", max_iterations, seed);
        if (!output_dir.empty()) o.output_dir = (std::filesystem::path(output_dir) / std::filesystem::path(path).stem()).string();
        vibctl::apply_overrides(cfg, o);
        cfgs.push_back(std::move(cfg));
      }
      for (std::size_t i = 0; i < cfgs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          if (std::filesystem::absolute(cfgs[i].output_dir) == std::filesystem::absolute(cfgs[j].output_dir)) {
            throw vibctl::InvalidInput("batch: " + cfgs[i].source + " and " + cfgs[j].source +
                                       " share the output directory " + cfgs[i].output_dir);
          }
        }
      }
      std::atomic<std::size_t> next{0};
      std::atomic<int> failures{0};
      std::mutex io;
      auto worker = [&] {
        for (std::size_t i = next++; i < cfgs.size(); i = next++) {
          std::ostringstream log;
          int code = 0;
          try {
            vibctl::run_pipeline(cfgs[i], log);
          } catch (const std::exception& e) {
            std::lock_guard lock(io);
            code = report(e);
          }
          if (code != 0) ++failures;
          std::lock_guard lock(io);
          std::cout << "[" << cfgs[i].source << "]\n" << log.str() << (code ? "failed\n" : "");
        }
      };
      std::vector<std::thread> pool;
      for (int t = 0; t < std::min<int>(jobs, static_cast<int>(cfgs.size())); ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      return failures ? 1 : 0;
    }
  } catch (const std::exception& e) {
    return report(e);
  }
  return 0;
}
