// Experiment runner CLI: `sqn run <spec>`, `sqn sweep <spec> --etas ...`,
// `sqn summarize <dir>`.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "sqn/harness.hpp"

namespace fs = std::filesystem;
using namespace sqn;

namespace {

harness::RunOptions make_options(const std::string& out, int jobs,
                                 const std::string& seeds, long stride) {
  harness::RunOptions opts;
  opts.out_dir = out;
  opts.jobs = jobs;
  if (!seeds.empty()) {
    harness::ExperimentSpec tmp;
    // reuse the spec seed syntax: "0:19" or "0,1,2"
    tmp = harness::parse_spec("seeds = " + seeds + "\n[config x]\n");
    opts.seeds_override = tmp.seeds;
  }
  if (stride > 0) opts.stride_override = stride;
  return opts;
}

void report(const harness::ExperimentResult& result) {
  int ok = 0, diverged = 0, failed = 0;
  for (const auto& cell : result.cells) {
    if (!cell.error.empty()) {
      ++failed;
      std::cerr << "cell " << cell.config << " seed " << cell.seed
                << " failed: " << cell.error << '\n';
    } else if (cell.diverged) {
      ++diverged;
    } else {
      ++ok;
    }
  }
  std::cout << result.cells.size() << " cells: " << ok << " ok, " << diverged
            << " diverged, " << failed << " failed\n"
            << "manifest: " << result.manifest_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic quasi-Newton experiment harness"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "out", seeds;
  int jobs = 0;
  long stride = 0;
  std::vector<double> etas;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--jobs", jobs, "Parallel workers (0 = all cores)");
    cmd->add_option("--seeds", seeds, "Seed list/range override, e.g. 0:19 or 1,2,3");
    cmd->add_option("--stride", stride, "Metric sampling stride override");
  };

  auto* cmd_run = app.add_subcommand("run", "Run an experiment spec (or a manifest.json)");
  cmd_run->add_option("spec", spec_path, "Spec file or manifest.json")->required();
  add_common(cmd_run);

  auto* cmd_sweep = app.add_subcommand("sweep", "Step-size sweep over an experiment spec");
  cmd_sweep->add_option("spec", spec_path, "Spec file or manifest.json")->required();
  cmd_sweep->add_option("--etas", etas, "Step sizes to sweep")->required()->expected(2, -1);
  add_common(cmd_sweep);

  std::string dir;
  auto* cmd_sum = app.add_subcommand("summarize", "Summarize run CSVs in a directory");
  cmd_sum->add_option("dir", dir, "Directory of run CSVs")->required();
  cmd_sum->add_option("--out", out_dir, "Output summary CSV path")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      const auto spec = harness::load_spec_file(spec_path);
      report(harness::run_experiment(spec, make_options(out_dir, jobs, seeds, stride)));
    } else if (cmd_sweep->parsed()) {
      const auto spec = harness::load_spec_file(spec_path);
      report(harness::sweep_step_sizes(spec, etas,
                                       make_options(out_dir, jobs, seeds, stride)));
    } else if (cmd_sum->parsed()) {
      std::vector<std::string> paths;
      for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".csv" && name.rfind("summary_", 0) != 0 &&
            name != "stability.csv")
          paths.push_back(entry.path().string());
      }
      std::sort(paths.begin(), paths.end());
      const auto table = harness::summarize(paths);
      const auto out_path = out_dir == "out" ? dir + "/summary.csv" : out_dir;
      harness::write_summary_csv(out_path, table);
      std::cout << "summary written to " << out_path << " (" << table.size()
                << " rows over " << paths.size() << " runs)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
