// Command-line front end for the parameter sweeps.
//
//   advdiff_sweep cost_sweep --config configs/cost_sweep.cfg --out runs/cost --workers 4 --plot
//
// Exit status: 0 when every point ran and every enabled assertion passed,
// 1 otherwise, 2 for configuration errors.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advdiff/sweep.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  int workers = 0;  // 0: keep the config value
  bool plot = false;
  bool no_assert = false;
  std::vector<std::string> overrides;
};

int run(const std::string& experiment, const CommonOptions& opt) {
  using namespace advdiff;
  KeyValueConfig kv = opt.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(opt.config_path);
  if (kv.has("experiment") && kv.get_string("experiment", "") != experiment)
    throw ConfigError("config file is for experiment '" + kv.get_string("experiment", "") +
                      "', not '" + experiment + "'");
  kv.set("experiment", experiment);
  for (const auto& o : opt.overrides) kv.set_assignment(o, "--set " + o);
  if (!opt.out_dir.empty()) kv.set("out", opt.out_dir);
  if (opt.workers > 0) kv.set("workers", std::to_string(opt.workers));
  if (opt.plot) kv.set("plot", "true");
  if (opt.no_assert) kv.set("assertions", "false");

  const SweepConfig cfg = SweepConfig::from(kv);
  const SweepReport rep = run_sweep(cfg);

  int failed_points = 0;
  for (const auto& p : rep.points) {
    if (p.ok) continue;
    ++failed_points;
    std::cerr << "point " << p.point.index << " failed: " << p.error << '\n';
  }
  for (const auto& a : rep.assertions)
    std::cout << (a.passed ? "ok   " : "FAIL ") << a.name
              << (a.detail.empty() ? "" : " (" + a.detail + ")") << '\n';
  std::cout << rep.points.size() - failed_points << "/" << rep.points.size() << " points ok; outputs in "
            << cfg.out_dir << '\n';
  return rep.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sweeps for the advection-diffusion control experiments"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string chosen;
  for (const auto& [kind, name] : advdiff::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("-c,--config", opt.config_path, "flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out_dir, "output directory");
    sub->add_option("-w,--workers", opt.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--plot", opt.plot, "also write an SVG chart");
    sub->add_flag("--no-assert", opt.no_assert, "skip the trend and invariant assertions");
    sub->add_option("-s,--set", opt.overrides, "override a config entry, key=value (repeatable)");
    sub->callback([&chosen, n = name] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    return run(chosen, opt);
  } catch (const advdiff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
