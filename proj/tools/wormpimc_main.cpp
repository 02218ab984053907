#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wormpimc/config.hpp"
#include "wormpimc/csv.hpp"
#include "wormpimc/recipes.hpp"
#include "wormpimc/runner.hpp"

namespace {

using namespace wormpimc;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> chains;
  std::optional<long> checkpoint_every;
};

void add_common(CLI::App* sub, std::string& config_path, Overrides& ov) {
  sub->add_option("--config", config_path, "run configuration file")->required();
  sub->add_option("--seed", ov.seed, "override schedule seed");
  sub->add_option("--out", ov.out, "override output directory");
  sub->add_option("--chains", ov.chains, "override chain count");
  sub->add_option("--checkpoint-every", ov.checkpoint_every,
                  "override sweeps between checkpoints");
}

RunConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  RunConfig cfg = load_config_file(path);
  if (ov.seed) cfg.schedule.seed = *ov.seed;
  if (ov.out) cfg.output.directory = *ov.out;
  if (ov.chains) cfg.schedule.n_chains = *ov.chains;
  if (ov.checkpoint_every) cfg.output.checkpoint_every = *ov.checkpoint_every;
  cfg.validate();
  return cfg;
}

void print_summary(const RunConfig& cfg) {
  std::ifstream in(std::filesystem::path(cfg.output.directory) / "summary.csv");
  if (!in) return;
  for (const SummaryRow& r : read_summary_csv(in))
    std::printf("%-14s %14.8g +- %-12.6g (%ld blocks)\n", r.observable.c_str(), r.mean,
                r.stderr_, r.blocks);
  std::printf("artifacts in %s\n", cfg.output.directory.c_str());
}

int do_run(const std::string& path, const Overrides& ov, bool resume) {
  const RunConfig cfg = load_with_overrides(path, ov);
  run_chains(cfg, resume);
  print_summary(cfg);
  return 0;
}

int do_ed_diff(const std::string& path, const Overrides& ov, const std::string& oracle_path,
               double max_z) {
  const RunConfig cfg = load_with_overrides(path, ov);
  const RunOutputs out = run_chains(cfg);
  std::vector<EdDiffRow> rows;
  if (oracle_path.empty()) {
    rows = ed_diff(cfg, out);
  } else {
    std::ofstream os(oracle_path);
    if (!os) throw std::runtime_error("cannot write " + oracle_path);
    rows = ed_diff(cfg, out, &os);
  }
  std::printf("%-14s %14s %12s %14s %8s\n", "observable", "mc", "err", "ed", "z");
  bool bad = false;
  for (const EdDiffRow& r : rows) {
    std::printf("%-14s %14.8g %12.4g %14.8g %8.2f\n", r.observable.c_str(), r.mc, r.err, r.ed,
                r.z);
    if (max_z > 0.0 && std::abs(r.z) > max_z) bad = true;
  }
  if (bad) {
    std::printf("FAIL: at least one |z| exceeds %g\n", max_z);
    return 2;
  }
  return 0;
}

int do_recipe(const std::string& figure, const std::string& emit_dir, bool run_all,
              const std::string& out_base, const std::string& post_csv,
              std::vector<std::string> dirs) {
  namespace fs = std::filesystem;
  if (!post_csv.empty()) {
    if (dirs.empty()) {
      for (const RecipeEntry& e : recipe_figures(figure))
        dirs.push_back((fs::path(out_base) / e.name).string());
    }
    std::ofstream os(post_csv);
    if (!os) throw std::runtime_error("cannot write " + post_csv);
    recipe_postprocess(figure, dirs, os);
    std::printf("wrote %s from %zu runs\n", post_csv.c_str(), dirs.size());
    return 0;
  }
  std::vector<RecipeEntry> entries = recipe_figures(figure);
  if (!emit_dir.empty()) {
    fs::create_directories(emit_dir);
    for (RecipeEntry& e : entries) {
      e.config.output.directory = (fs::path(out_base) / e.name).string();
      std::ofstream os(fs::path(emit_dir) / (e.name + ".ini"));
      if (!os) throw std::runtime_error("cannot write config for " + e.name);
      os << e.config.echo();
    }
    std::printf("wrote %zu configs to %s\n", entries.size(), emit_dir.c_str());
  }
  if (run_all) {
    for (RecipeEntry& e : entries) {
      e.config.output.directory = (fs::path(out_base) / e.name).string();
      std::printf("running %s ...\n", e.name.c_str());
      std::fflush(stdout);
      run_chains(e.config);
    }
    std::printf("done; assemble with --post\n");
  }
  if (emit_dir.empty() && !run_all)
    for (const RecipeEntry& e : entries) std::printf("%s\n", e.name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time worm-algorithm Monte Carlo for coupled Bose-Hubbard layers"};
  app.set_version_flag("--version", "wormpimc 1.0");
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;

  CLI::App* run = app.add_subcommand("run", "run chains and write artifacts");
  add_common(run, config_path, ov);

  CLI::App* resume = app.add_subcommand("resume", "continue from per-chain checkpoints");
  add_common(resume, config_path, ov);

  CLI::App* ed = app.add_subcommand("ed-diff", "run, then compare against exact diagonalization");
  std::string oracle_path;
  double max_z = 0.0;
  add_common(ed, config_path, ov);
  ed->add_option("--oracle-csv", oracle_path, "also write the oracle-side summary csv");
  ed->add_option("--max-z", max_z, "exit nonzero when any |z| exceeds this");

  CLI::App* recipe = app.add_subcommand("recipe", "figure reproduction grids at reduced scale");
  std::string figure, emit_dir, post_csv, out_base = "recipe_out";
  std::vector<std::string> dirs;
  bool run_all = false;
  recipe->add_option("--figure", figure, "fig6a, fig6b, fig7, or fig8")->required();
  recipe->add_option("--emit", emit_dir, "write one config file per grid point");
  recipe->add_flag("--run", run_all, "run every grid point now");
  recipe->add_option("--out", out_base, "base directory for grid-point runs");
  recipe->add_option("--post", post_csv, "assemble run directories into a figure table");
  recipe->add_option("--dirs", dirs, "run directories for --post (default: --out/<name>)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return do_run(config_path, ov, false);
    if (resume->parsed()) return do_run(config_path, ov, true);
    if (ed->parsed()) return do_ed_diff(config_path, ov, oracle_path, max_z);
    return do_recipe(figure, emit_dir, run_all, out_base, post_csv, dirs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
