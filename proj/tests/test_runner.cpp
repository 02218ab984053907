#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "wormpimc/checkpoint.hpp"
#include "wormpimc/config.hpp"
#include "wormpimc/csv.hpp"
#include "wormpimc/engine.hpp"
#include "wormpimc/estimators.hpp"
#include "wormpimc/runner.hpp"

using namespace wormpimc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string without_timestamps(const std::string& manifest) {
  std::istringstream is(manifest);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("started ", 0) != 0 && line.rfind("finished ", 0) != 0 &&
        line.rfind("resumed ", 0) != 0 && line.rfind("dir = ", 0) != 0)
      os << line << "\n";
  return os.str();
}

// checkpoints embed the config echo, whose dir line is the one legitimate
// difference between runs that only differ in output directory; the dir names
// compared this way must have equal lengths so the config_bytes field agrees
std::string without_dir_line(const std::string& text) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("dir = ", 0) != 0) os << line << "\n";
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = name;
  fs::remove_all(p);
  return p;
}

RunConfig base_cfg() {
  return parse_config(
      "[model]\nlayers = 2\nsites = 3\nj_inter = 0\nv_inter = 1.2\nmu = 0.4\nbeta = 1.2\n"
      "[engine]\nworms = per_layer\ngamma = 0.8\n"
      "[schedule]\ntherm_sweeps = 300\nmeasure_sweeps = 1200\nseed = 77\n"
      "[output]\nstructure_every = 0\n");
}

double row(const std::vector<SummaryRow>& rows, const std::string& name, double* err = nullptr) {
  for (const SummaryRow& r : rows)
    if (r.observable == name) {
      if (err) *err = r.stderr_;
      return r.mean;
    }
  FAIL("no summary row named ", name);
  return 0.0;
}

}  // namespace

TEST_CASE("a run writes the expected artifact set") {
  RunConfig cfg = base_cfg();
  cfg.output.directory = fresh_dir("tmp_runner_artifacts").string();
  cfg.output.structure_every = 4;
  cfg.output.stream = true;
  const RunOutputs out = run_chains(cfg);
  CHECK(out.sweeps_done == 1500);
  const fs::path d = cfg.output.directory;
  for (const char* f : {"summary.csv", "manifest.txt", "sep_heads.csv", "sep_tails.csv",
                        "structure_intra.csv", "structure_inter.csv", "measurements.txt",
                        "chain_0.ckpt"})
    CHECK_MESSAGE(fs::exists(d / f), f);

  std::istringstream is(slurp(d / "summary.csv"));
  const auto rows = read_summary_csv(is);
  CHECK(row(rows, "total_n") > 0.0);
  CHECK(row(rows, "g_fraction") > 0.0);
  CHECK(row(rows, "d_heads") >= 0.0);
  const std::string manifest = slurp(d / "manifest.txt");
  CHECK(manifest.find("wormpimc manifest v1") == 0);
  CHECK(manifest.find("chain 0: seed 77") != std::string::npos);
  CHECK(manifest.find("config:\n[model]") != std::string::npos);

  const std::string stream = slurp(d / "measurements.txt");
  CHECK(stream.find("# wormpimc stream v1\n") == 0);
  CHECK(stream.find(" total_n ") != std::string::npos);
}

TEST_CASE("the same config and seed reproduce the outputs byte for byte") {
  RunConfig a = base_cfg();
  a.output.directory = fresh_dir("tmp_runner_rep_a").string();
  RunConfig b = a;
  b.output.directory = fresh_dir("tmp_runner_rep_b").string();
  run_chains(a);
  run_chains(b);
  for (const char* f : {"summary.csv", "sep_heads.csv", "sep_tails.csv"})
    CHECK_MESSAGE(slurp(fs::path(a.output.directory) / f) ==
                      slurp(fs::path(b.output.directory) / f),
                  f);
  CHECK(without_dir_line(slurp(fs::path(a.output.directory) / "chain_0.ckpt")) ==
        without_dir_line(slurp(fs::path(b.output.directory) / "chain_0.ckpt")));
  CHECK(without_timestamps(slurp(fs::path(a.output.directory) / "manifest.txt")) ==
        without_timestamps(slurp(fs::path(b.output.directory) / "manifest.txt")));

  // a different seed must not reproduce the sample stream
  RunConfig c = a;
  c.output.directory = fresh_dir("tmp_runner_rep_c").string();
  c.schedule.seed = 78;
  run_chains(c);
  CHECK(slurp(fs::path(a.output.directory) / "summary.csv") !=
        slurp(fs::path(c.output.directory) / "summary.csv"));
}

TEST_CASE("resume from a mid-run checkpoint matches the uninterrupted run") {
  RunConfig cfg = base_cfg();
  cfg.output.checkpoint_every = 500;
  cfg.output.directory = fresh_dir("tmp_runner_res_a").string();
  run_chains(cfg);

  // reproduce a kill at sweep 1000: replay the runner's measurement hook up to
  // the checkpoint boundary and drop its checkpoint file into a fresh dir
  RunConfig half = cfg;
  half.output.directory = fresh_dir("tmp_runner_res_b").string();
  fs::create_directories(half.output.directory);
  {
    const LatticeGraph g = half.graph();
    Engine eng(g, half.model, half.engine, half.schedule.seed, 0);
    DiagonalAccumulator diag(g, half.model);
    std::optional<DnHistogram> hist(std::in_place, DnMode::displacements, g, half.engine.worms,
                                    half.model.beta, half.engine.gamma, half.engine.xi_space,
                                    eng.xi_time());
    long done = 0;
    eng.run_sweeps(1000, [&](const Engine& e) {
      ++done;
      if (done <= half.schedule.therm_sweeps) return;
      if (e.sector() == Sector::Z) {
        diag.record(e.worldlines());
        hist->record_z();
      } else {
        hist->record(e.worldlines());
      }
    });
    CheckpointMeta meta;
    meta.chain = 0;
    meta.sweeps_done = 1000;
    std::ofstream os(fs::path(half.output.directory) / "chain_0.ckpt", std::ios::binary);
    save_checkpoint(os, meta, half.echo(), eng, diag, &*hist);
  }
  run_chains(half, true);

  for (const char* f : {"summary.csv", "sep_heads.csv", "sep_tails.csv"})
    CHECK_MESSAGE(slurp(fs::path(cfg.output.directory) / f) ==
                      slurp(fs::path(half.output.directory) / f),
                  f);
  CHECK(without_dir_line(slurp(fs::path(cfg.output.directory) / "chain_0.ckpt")) ==
        without_dir_line(slurp(fs::path(half.output.directory) / "chain_0.ckpt")));
  CHECK(without_timestamps(slurp(fs::path(cfg.output.directory) / "manifest.txt")) ==
        without_timestamps(slurp(fs::path(half.output.directory) / "manifest.txt")));

  // resuming under a different config is refused
  RunConfig other = half;
  other.model.mu = {0.5, 0.5};
  CHECK_THROWS_AS(run_chains(other, true), std::runtime_error);
}

TEST_CASE("chains are merged exactly as independent streams") {
  RunConfig cfg = parse_config(
      "[model]\nsites = 4\nmu = 0.3\nbeta = 1.1\n"
      "[schedule]\ntherm_sweeps = 200\nmeasure_sweeps = 2000\nmeasure_every = 2\nchains = 2\n"
      "seed = 99\n[output]\nstructure_every = 4\n");
  cfg.output.directory = fresh_dir("tmp_runner_merge").string();
  const RunOutputs out = run_chains(cfg);

  const LatticeGraph g = cfg.graph();
  DiagonalAccumulator merged(g, cfg.model);
  std::optional<DnHistogram> mh;
  for (int chain = 0; chain < 2; ++chain) {
    Engine eng(g, cfg.model, cfg.engine, cfg.schedule.seed, (std::uint64_t)chain);
    DiagonalAccumulator diag(g, cfg.model);
    DnHistogram hist(DnMode::displacements, g, cfg.engine.worms, cfg.model.beta,
                     cfg.engine.gamma, cfg.engine.xi_space, eng.xi_time());
    long done = 0;
    eng.run_sweeps(2200, [&](const Engine& e) {
      ++done;
      if (done <= 200) return;
      const long midx = done - 200;
      if (midx % 2 != 0) return;
      if (e.sector() == Sector::Z) {
        diag.record(e.worldlines());
        hist.record_z();
        if ((midx / 2) % 4 == 0) diag.record_structure(e.worldlines());
      } else {
        hist.record(e.worldlines());
      }
    });
    if (chain == 0) {
      merged = std::move(diag);
      mh.emplace(std::move(hist));
    } else {
      merged.merge(diag);
      mh->merge(hist);
    }
  }
  CHECK(out.diag.n_samples() == merged.n_samples());
  CHECK(out.diag.total_n().mean == merged.total_n().mean);
  CHECK(out.diag.total_n().stderr_ == merged.total_n().stderr_);
  CHECK(out.diag.kinetic_energy().mean == merged.kinetic_energy().mean);
  REQUIRE(out.hist.has_value());
  REQUIRE(out.hist->n_records() == mh->n_records());
  const Curve cr = out.hist->signed_profile(2, 0), cm = mh->signed_profile(2, 0);
  REQUIRE(cr.value.size() == cm.value.size());
  for (std::size_t i = 0; i < cr.value.size(); ++i) CHECK(cr.value[i] == cm.value[i]);
  CHECK(fs::exists(fs::path(cfg.output.directory) / "green_profile.csv"));
}

TEST_CASE("two chains agree with one longer chain within errors") {
  RunConfig one = parse_config(
      "[model]\nsites = 3\nmu = 0.4\nbeta = 1.3\n"
      "[schedule]\ntherm_sweeps = 500\nmeasure_sweeps = 40000\nseed = 11\n");
  one.output.directory = fresh_dir("tmp_runner_one").string();
  RunConfig two = one;
  two.schedule.measure_sweeps = 20000;
  two.schedule.n_chains = 2;
  two.schedule.seed = 12;
  two.output.directory = fresh_dir("tmp_runner_two").string();
  const RunOutputs o1 = run_chains(one);
  const RunOutputs o2 = run_chains(two);
  const BlockedStats n1 = o1.diag.total_n(), n2 = o2.diag.total_n();
  const double sigma = std::hypot(n1.stderr_, n2.stderr_);
  CHECK(std::abs(n1.mean - n2.mean) < 4.0 * sigma);
  const BlockedStats e1 = o1.diag.diag_energy(), e2 = o2.diag.diag_energy();
  CHECK(std::abs(e1.mean - e2.mean) < 4.0 * std::hypot(e1.stderr_, e2.stderr_));
}

TEST_CASE("ed-diff z-scores stay sane on a micro system") {
  RunConfig cfg = parse_config(
      "[model]\nsites = 2\nmu = 0.3\nbeta = 1.2\n[engine]\ngamma = 0.7\n"
      "[schedule]\ntherm_sweeps = 1000\nmeasure_sweeps = 60000\nseed = 4242\n"
      "[output]\nhistogram = green_table\n");
  cfg.output.directory = fresh_dir("tmp_runner_ed").string();
  const RunOutputs out = run_chains(cfg);
  CHECK(fs::exists(fs::path(cfg.output.directory) / "table.csv"));

  std::ostringstream oracle;
  const std::vector<EdDiffRow> rows = ed_diff(cfg, out, &oracle);
  REQUIRE(rows.size() >= 8);  // 4 diagonal observables + 4 table entries
  int table_rows = 0;
  for (const EdDiffRow& r : rows) {
    INFO(r.observable, ": mc=", r.mc, " ed=", r.ed, " z=", r.z);
    CHECK(std::abs(r.z) < 5.0);
    if (r.observable.rfind("g_", 0) == 0) {
      ++table_rows;
      CHECK(r.ed > 0.0);
    }
  }
  CHECK(table_rows == 4);
  CHECK(oracle.str().find("# wormpimc summary v1\n") == 0);
}
